"""Campaign configs, result emitters, the sweep runner and the CLI.

Determinism contracts get the strictest checks here: the per-trial seed
derivation is pinned to a frozen value, and rerunning a campaign (with any
worker count) must reproduce the results CSV byte for byte.
"""

import hashlib
import json
import logging
import math

import numpy as np
import pytest

from mmwlink.cli import main
from mmwlink.experiments.config import (
    CampaignConfig,
    ConfigError,
    CoverageParams,
    campaign_from_dict,
    load_campaign,
    to_jsonable,
)
from mmwlink.experiments.coverage import _realization, run_coverage
from mmwlink.experiments.output import (
    CSV_HEADER,
    ResultRow,
    ResultTable,
    emit_csv,
    emit_plot_script,
    parse_csv,
    write_manifest,
)
from mmwlink.experiments.runner import (
    RunningStat,
    run_angle_spread_sweep,
    run_campaign,
    run_snr_sweep,
    run_sweep,
    trial_seed,
)


def snr_dict(**overrides):
    """Small single-path SNR campaign as a config dict."""
    base = {
        "kind": "snr_sweep",
        "sweep": [0.0, 10.0],
        "trials": 6,
        "seed": 11,
        "n_users": 2,
        "arrays": {"bs_rows": 1, "bs_cols": 8, "ms_rows": 1, "ms_cols": 2},
    }
    base.update(overrides)
    return base


def spread_dict(**overrides):
    base = {
        "kind": "angle_spread_sweep",
        "sweep": [2.5, 7.5],
        "trials": 6,
        "seed": 12,
        "n_users": 2,
        "snr_db": 0.0,
        "arrays": {"bs_rows": 1, "bs_cols": 8, "ms_rows": 1, "ms_cols": 2},
        "channel": {"n_clusters": 2, "rays_per_cluster": 2},
        "codebook": {"continuous": False, "bs_az": 16, "bs_el": 1,
                     "ms_az": 8, "ms_el": 1},
    }
    base.update(overrides)
    return base


def coverage_dict(**overrides):
    base = {
        "kind": "coverage",
        "sweep": [0.5, 1.0, 2.0, 4.0, 8.0],
        "trials": 2,
        "seed": 13,
        "arrays": {"bs_rows": 1, "bs_cols": 8, "ms_rows": 1, "ms_cols": 2},
        "coverage": {"users_per_cell": 2},
    }
    base.update(overrides)
    return base


# ---------------------------------------------------------------- config


def test_config_defaults_and_roundtrip():
    cfg = campaign_from_dict(snr_dict())
    assert cfg.kind == "snr_sweep"
    assert cfg.sweep == (0.0, 10.0)
    assert cfg.arrays.spacing == 0.5
    assert cfg.codebook.continuous is True
    assert cfg.coverage is None
    assert campaign_from_dict(to_jsonable(cfg)) == cfg


def test_config_rejects_unknown_keys_at_every_level():
    with pytest.raises(ConfigError, match="unknown key"):
        campaign_from_dict(snr_dict(extra=1))
    with pytest.raises(ConfigError, match="arrays"):
        campaign_from_dict(snr_dict(arrays={"bs_rows": 1, "bs_colums": 8}))
    with pytest.raises(ConfigError, match="coverage"):
        campaign_from_dict(coverage_dict(coverage={"users_per_cell": 2, "cell_radius": 1}))


def test_config_type_checks():
    with pytest.raises(ConfigError, match="expected an integer"):
        campaign_from_dict(snr_dict(trials=True))
    with pytest.raises(ConfigError, match="expected an integer"):
        campaign_from_dict(snr_dict(trials=6.0))
    with pytest.raises(ConfigError, match="expected a number"):
        campaign_from_dict(snr_dict(sweep=[0.0, "ten"]))
    with pytest.raises(ConfigError, match="snr_db: expected a number"):
        campaign_from_dict(snr_dict(snr_db=None))
    with pytest.raises(ConfigError, match="expected a boolean"):
        campaign_from_dict(spread_dict(codebook={"continuous": 0}))
    with pytest.raises(ConfigError, match="expected an object"):
        campaign_from_dict(snr_dict(arrays=[8, 8]))
    assert campaign_from_dict(snr_dict(output=None)).output is None


def test_config_cross_field_validation():
    cases = [
        (snr_dict(kind="power_sweep"), "kind"),
        (snr_dict(trials=0), "trials"),
        (snr_dict(sweep=[]), "sweep"),
        (snr_dict(sweep=[5.0, 5.0]), "distinct"),
        (snr_dict(n_users=9), "n_users"),
        (snr_dict(arrays={"bs_rows": 0}), "arrays"),
        (snr_dict(arrays={"bs_rows": 1, "bs_cols": 8, "spacing": 0.0}), "spacing"),
        (snr_dict(channel={"n_clusters": 2, "rays_per_cluster": 1}), "single-path"),
        (snr_dict(channel={"angle_spread_deg": -1.0}), "angle_spread_deg"),
        (snr_dict(channel={"mean_gain_power": 0.0}), "mean_gain_power"),
        (snr_dict(codebook={"bs_az": 0}), "codebook"),
        (snr_dict(codebook={"bs_phase_bits": -1}), "phase bits"),
        (snr_dict(coverage={"users_per_cell": 2}), "only applies"),
        (spread_dict(codebook={"continuous": True}), "codebook mode"),
        (spread_dict(sweep=[-2.5, 5.0]), "spreads"),
        (coverage_dict(coverage=None), "section required"),
        (coverage_dict(coverage={"bs_density_per_km2": -1.0}), "densities"),
        (coverage_dict(coverage={"window_km2": 1.0, "bs_density_per_km2": 25.0}),
         "edge effects"),
        (coverage_dict(coverage={"users_per_cell": 0}), "users_per_cell"),
        (coverage_dict(coverage={"users_per_cell": 9}), "users_per_cell"),
        (coverage_dict(sweep=[-0.5, 1.0]), "thresholds"),
    ]
    for data, fragment in cases:
        with pytest.raises(ConfigError, match=fragment):
            campaign_from_dict(data)


def test_load_campaign_from_file(tmp_path):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(snr_dict()))
    cfg = load_campaign(str(path))
    assert cfg == campaign_from_dict(snr_dict())
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_campaign(str(path))
    with pytest.raises(OSError):
        load_campaign(str(tmp_path / "missing.json"))


# ---------------------------------------------------------------- output


def test_results_csv_roundtrip_is_exact(tmp_path):
    rows = (
        ResultRow(axis=0.1 + 0.2, series="hybrid", mean=1.0 / 3.0,
                  stderr=1.23456789012345678e-17, count=10000),
        ResultRow(axis=-10.0, series="lower_bound", mean=12345.6789012345678,
                  stderr=0.0, count=3),
    )
    table = ResultTable(rows=rows)
    path = tmp_path / "results.csv"
    emit_csv(table, str(path))
    again = parse_csv(str(path))
    assert again == table
    emit_csv(again, str(tmp_path / "results2.csv"))
    assert path.read_bytes() == (tmp_path / "results2.csv").read_bytes()


def test_empty_table_emits_header_only(tmp_path):
    path = tmp_path / "results.csv"
    emit_csv(ResultTable(rows=()), str(path))
    assert path.read_bytes() == b"axis,series,mean,stderr,count\r\n"
    assert parse_csv(str(path)).rows == ()
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha,beta\n")
    with pytest.raises(ValueError, match="header"):
        parse_csv(str(bad))


def test_plot_script_covers_every_series(tmp_path):
    table = ResultTable(rows=(
        ResultRow(axis=0.0, series="hybrid", mean=1.0, stderr=0.1, count=5),
        ResultRow(axis=0.0, series="beamsteering", mean=0.5, stderr=0.1, count=5),
    ))
    path = tmp_path / "plot.gp"
    emit_plot_script(table, str(path), xlabel="SNR [dB]", title="demo")
    text = path.read_text()
    assert 'set datafile separator ","' in text
    assert "'hybrid'" in text and "'beamsteering'" in text
    assert "results.csv" in text
    assert 'set xlabel "SNR [dB]"' in text


def test_manifest_records_the_resolved_campaign(tmp_path):
    cfg = campaign_from_dict(snr_dict())
    path = tmp_path / "manifest.json"
    write_manifest(cfg, str(path), workers=3, version="1.2.3")
    manifest = json.loads(path.read_text())
    assert manifest["tool"] == "mmwlink"
    assert manifest["version"] == "1.2.3"
    assert manifest["kind"] == "snr_sweep"
    assert manifest["seed"] == 11
    assert manifest["workers"] == 3
    assert manifest["config"]["sweep"] == [0.0, 10.0]
    assert manifest["config"]["arrays"]["bs_cols"] == 8


# ---------------------------------------------------------------- runner


def test_trial_seed_is_frozen_and_collision_free():
    # pinned: changing the derivation would silently re-randomize every
    # published campaign, so this exact value is part of the contract
    assert trial_seed(0, "snr_sweep", 0, 0) == 12920956995959150084
    digest = hashlib.blake2b(b"42:coverage:0:3", digest_size=8).digest()
    assert trial_seed(42, "coverage", 0, 3) == int.from_bytes(digest, "big")
    seeds = {
        trial_seed(m, k, p, t)
        for m in (0, 1)
        for k in ("snr_sweep", "angle_spread_sweep")
        for p in range(4)
        for t in range(64)
    }
    assert len(seeds) == 2 * 2 * 4 * 64


def test_running_stat_matches_batch_formulas():
    rng = np.random.default_rng(20)
    values = rng.standard_normal((400, 3))
    stat = RunningStat(3)
    for v in values:
        stat.add(v)
    assert stat.count == 400
    np.testing.assert_allclose(stat.mean, values.mean(axis=0), atol=1e-12)
    expected_err = values.std(axis=0, ddof=1) / math.sqrt(400)
    np.testing.assert_allclose(stat.stderr(), expected_err, atol=1e-12)

    # splitting into chunks and merging must agree with sequential order
    merged = RunningStat(3)
    for lo, hi in ((0, 100), (100, 130), (130, 400)):
        part = RunningStat(3)
        for v in values[lo:hi]:
            part.add(v)
        merged.merge(part)
    np.testing.assert_allclose(merged.mean, stat.mean, atol=1e-12)
    np.testing.assert_allclose(merged.m2, stat.m2, rtol=1e-10)
    assert merged.count == stat.count

    fresh = RunningStat(3)
    fresh.merge(RunningStat(3))  # merging empties is a no-op
    assert fresh.count == 0
    assert np.all(fresh.stderr() == 0.0)


def test_run_sweep_row_layout_and_orderings():
    cfg = campaign_from_dict(snr_dict(sweep=[0.0, 10.0, 20.0], trials=40))
    table = run_sweep(cfg)
    assert len(table.rows) == 12  # 3 points x 4 series
    assert table.series_names() == ("hybrid", "single_user", "beamsteering", "lower_bound")
    for axis in (0.0, 10.0, 20.0):
        point = {r.series: r for r in table.rows if r.axis == axis}
        assert point["hybrid"].count == 40
        assert point["lower_bound"].mean <= point["hybrid"].mean + 1e-9
        assert point["hybrid"].mean <= point["single_user"].mean + 1e-9


def test_single_served_user_collapses_to_single_user_curve():
    cfg = campaign_from_dict(snr_dict(n_users=1, trials=50))
    table = run_sweep(cfg)
    hybrid = {r.axis: r.mean for r in table.rows if r.series == "hybrid"}
    single = {r.axis: r.mean for r in table.rows if r.series == "single_user"}
    for axis in hybrid:
        assert hybrid[axis] == pytest.approx(single[axis], abs=1e-9)


def test_run_sweep_reruns_and_worker_counts_are_byte_identical(tmp_path):
    cfg = campaign_from_dict(snr_dict(trials=700))  # spans two chunks
    files = []
    for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
        table = run_sweep(cfg, workers=workers)
        path = tmp_path / f"results_{tag}.csv"
        emit_csv(table, str(path))
        files.append(path.read_bytes())
    assert files[0] == files[1]
    assert files[0] == files[2]


def test_spread_sweep_runs_in_codebook_mode():
    cfg = campaign_from_dict(spread_dict(trials=30))
    table = run_angle_spread_sweep(cfg)
    assert table.series_names() == ("hybrid", "single_user", "beamsteering")
    for row in table.rows:
        assert 0 < row.count <= 30
        assert math.isfinite(row.mean) and row.mean >= 0


def test_sweep_with_hopeless_codebook_raises():
    # a single transmit beam shared by two users is always singular
    cfg = campaign_from_dict(spread_dict(
        trials=4,
        sweep=[5.0],
        codebook={"continuous": False, "bs_az": 1, "bs_el": 1, "ms_az": 4, "ms_el": 1},
    ))
    with pytest.raises(RuntimeError, match="singular effective channel"):
        run_sweep(cfg)


def test_runner_kind_guards():
    snr_cfg = campaign_from_dict(snr_dict())
    spread_cfg = campaign_from_dict(spread_dict())
    with pytest.raises(ValueError):
        run_snr_sweep(spread_cfg)
    with pytest.raises(ValueError):
        run_angle_spread_sweep(snr_cfg)
    with pytest.raises(ValueError):
        run_coverage(snr_cfg)
    bogus = CampaignConfig(kind="bogus", sweep=(1.0,), trials=1, seed=0)
    with pytest.raises(ValueError, match="not a sweep campaign"):
        run_campaign(bogus)


# ---------------------------------------------------------------- coverage


def test_coverage_ccdf_shape_and_bounds():
    cfg = campaign_from_dict(coverage_dict())
    table = run_campaign(cfg)
    assert table.series_names() == ("hybrid", "beamsteering")
    counts = {r.count for r in table.rows}
    assert len(counts) == 1  # one shared sample pool
    n = counts.pop()
    assert n > 0
    for name in table.series_names():
        eta, prob, err = table.series(name)
        assert np.array_equal(eta, np.asarray(cfg.sweep))
        assert np.all((prob >= 0.0) & (prob <= 1.0))
        assert np.all(np.diff(prob) <= 1e-12)  # CCDF falls with the threshold
        np.testing.assert_allclose(err, np.sqrt(prob * (1 - prob) / n), atol=1e-15)


def test_coverage_rerun_is_byte_identical(tmp_path):
    cfg = campaign_from_dict(coverage_dict())
    blobs = []
    for tag, workers in (("a", 1), ("b", 2)):
        path = tmp_path / f"coverage_{tag}.csv"
        emit_csv(run_coverage(cfg, workers=workers), str(path))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_coverage_empty_realizations_are_discarded(caplog):
    # a window this small almost never contains a BS; built directly since
    # the loader rejects such windows
    cov = CoverageParams(bs_density_per_km2=2.5, window_km2=0.0004)
    cfg = CampaignConfig(kind="coverage", sweep=(1.0,), trials=3, seed=1,
                         n_users=2, coverage=cov)
    etas = np.array([1.0])
    hits_hy, hits_an, samples, skipped, discarded = _realization(
        cfg, np.random.default_rng(0), etas
    )
    assert samples == 0 and discarded == 1
    assert np.all(hits_hy == 0) and np.all(hits_an == 0) and skipped == 0
    with caplog.at_level(logging.WARNING):
        with pytest.raises(RuntimeError, match="no user samples"):
            run_coverage(cfg)
    assert "discarded" in caplog.text


# ---------------------------------------------------------------- CLI


def test_cli_validate(tmp_path, capsys):
    path = tmp_path / "ok.json"
    path.write_text(json.dumps(snr_dict()))
    assert main(["validate", str(path)]) == 0
    assert "valid snr_sweep campaign" in capsys.readouterr().out

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(snr_dict(trials=0)))
    assert main(["validate", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err

    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_cli_simulate_writes_all_outputs(tmp_path, capsys):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(snr_dict()))
    out = tmp_path / "run1"
    assert main(["simulate", str(path), "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    table = parse_csv(str(out / "results.csv"))
    assert len(table.rows) == 8
    assert (out / "plot.gp").read_text().startswith("# gnuplot")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert manifest["workers"] == 1


def test_cli_simulate_overrides(tmp_path, capsys):
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(snr_dict()))
    out = tmp_path / "run2"
    assert main(["simulate", str(path), "--out", str(out),
                 "--seed", "7", "--trials", "9"]) == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["config"]["trials"] == 9
    table = parse_csv(str(out / "results.csv"))
    assert all(r.count == 9 for r in table.rows)

    assert main(["simulate", str(path), "--out", str(out), "--trials", "0"]) == 2
    assert main(["simulate", str(path), "--out", str(out), "--workers", "0"]) == 2
    capsys.readouterr()
