"""Link-level Monte Carlo simulator for downlink multi-user mmWave MIMO.

Builds geometric channels over planar antenna arrays, designs two-stage
hybrid precoders (per-user analog beam selection, then baseband
zero-forcing), evaluates closed-form rates and a deterministic lower bound,
and runs reproducible simulation campaigns (SNR sweeps, angle-spread
sweeps, random-network coverage) from JSON configs.
"""

__version__ = "0.1.0"

from .arrays import (
    ArrayGeometry,
    Direction,
    steering_matrix,
    steering_vector,
    steering_vectors,
    ula_geometry,
    upa_geometry,
)
from .channel import (
    ChannelEnsemble,
    ChannelMatrix,
    PathComponent,
    assemble_channel,
    clustered_ensemble,
    draw_clustered,
    draw_single_path,
    dump_paths_csv,
    single_path_ensemble,
)
from .codebook import Codebook, build_beamsteering_codebook, export_csv, quantize_phases
from .metrics import (
    AsymptoticGapDiagnostics,
    KantorovichResult,
    RateReport,
    SystemConfig,
    asymptotic_gap_diagnostics,
    beamsteering_rate,
    closed_form_zf_rate,
    gram_matrix,
    kantorovich_check,
    per_user_rate,
    rate_lower_bound,
    single_user_rate,
    trial_rate_report,
    user_rates,
)
from .precoding import (
    BasebandPrecoder,
    CombinerSet,
    EffectiveChannel,
    RfPrecoder,
    SingularEffectiveChannelError,
    analog_only_precoder,
    design_hybrid_precoders,
    dump_precoders_csv,
    effective_channel,
    stage1_continuous,
    stage1_select,
    zf_baseband,
)

__all__ = [
    "ArrayGeometry",
    "AsymptoticGapDiagnostics",
    "BasebandPrecoder",
    "ChannelEnsemble",
    "ChannelMatrix",
    "Codebook",
    "CombinerSet",
    "Direction",
    "EffectiveChannel",
    "KantorovichResult",
    "PathComponent",
    "RateReport",
    "RfPrecoder",
    "SingularEffectiveChannelError",
    "SystemConfig",
    "__version__",
    "analog_only_precoder",
    "assemble_channel",
    "asymptotic_gap_diagnostics",
    "beamsteering_rate",
    "build_beamsteering_codebook",
    "closed_form_zf_rate",
    "clustered_ensemble",
    "design_hybrid_precoders",
    "draw_clustered",
    "draw_single_path",
    "dump_paths_csv",
    "dump_precoders_csv",
    "effective_channel",
    "export_csv",
    "gram_matrix",
    "kantorovich_check",
    "per_user_rate",
    "quantize_phases",
    "rate_lower_bound",
    "single_path_ensemble",
    "single_user_rate",
    "stage1_continuous",
    "stage1_select",
    "steering_matrix",
    "steering_vector",
    "steering_vectors",
    "trial_rate_report",
    "ula_geometry",
    "upa_geometry",
    "user_rates",
    "zf_baseband",
]
