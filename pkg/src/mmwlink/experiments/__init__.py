"""Monte Carlo campaigns: configs, runners, coverage, result emission."""

from .config import (
    ArrayParams,
    CampaignConfig,
    ChannelParams,
    CodebookParams,
    ConfigError,
    CoverageParams,
    campaign_from_dict,
    load_campaign,
    to_jsonable,
    validate_campaign,
)
from .coverage import run_coverage
from .output import (
    ResultRow,
    ResultTable,
    emit_csv,
    emit_plot_script,
    parse_csv,
    write_manifest,
)
from .runner import (
    RunningStat,
    run_angle_spread_sweep,
    run_campaign,
    run_snr_sweep,
    run_sweep,
    trial_seed,
)

__all__ = [
    "ArrayParams",
    "CampaignConfig",
    "ChannelParams",
    "CodebookParams",
    "ConfigError",
    "CoverageParams",
    "ResultRow",
    "ResultTable",
    "RunningStat",
    "campaign_from_dict",
    "emit_csv",
    "emit_plot_script",
    "load_campaign",
    "parse_csv",
    "run_angle_spread_sweep",
    "run_campaign",
    "run_coverage",
    "run_snr_sweep",
    "run_sweep",
    "to_jsonable",
    "trial_seed",
    "validate_campaign",
    "write_manifest",
]
