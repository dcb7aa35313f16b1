"""Blind integer timing-offset synchronization simulator for ZP-OFDM."""

from .analytic_pdf import (
    NOISE_ONLY,
    NoiseOnly,
    PdfCoefficients,
    TapRange,
    component_variance,
    log_pdf_noise,
    log_pdf_signal,
    log_pdf_v,
    pdf_coefficients,
    sample_v,
    tap_range,
)
from .config import (
    PowerDelayProfile,
    SourceModel,
    SystemConfig,
    exponential_pdp,
    load_config,
    noise_variance_from_ebn0,
    save_config,
)
from .diagnostics import (
    MomentReport,
    correlation_check,
    empirical_moments,
    ks_distance,
    pdf_comparison_table,
    sample_received,
    write_moment_reports,
    write_pdf_comparison,
)
from .errors import ConfigError, DegeneratePdpError, NumericalFailure, ZpsyncError
from .estimators import (
    EstimateResult,
    Method,
    gaussian_ml,
    is_unimodal,
    mcs_table,
    ml_exhaustive,
    ml_golden,
    transition_metric,
)
from .harness import (
    ExperimentSummary,
    PointResult,
    RaetPoint,
    SweepAxis,
    SweepSpec,
    bench_raet,
    pdp_sensitivity,
    run_sweep,
    write_raet_csv,
    write_sweep_csv,
)
from .likelihood import (
    HypothesisScores,
    PdfTable,
    TableMode,
    build_pdf_table,
    log_likelihood,
    score_all,
    write_likelihood_trace,
)
from .signal_sim import (
    ChannelRealization,
    ObservationWindow,
    dump_window,
    generate_channel,
    generate_symbols,
    load_window,
    qam_constellation,
    simulate_reception,
    subcarriers_to_time,
    tap_gains,
    zero_pad,
)

__all__ = [
    "NOISE_ONLY",
    "ChannelRealization",
    "ConfigError",
    "DegeneratePdpError",
    "EstimateResult",
    "ExperimentSummary",
    "HypothesisScores",
    "Method",
    "MomentReport",
    "NoiseOnly",
    "NumericalFailure",
    "ObservationWindow",
    "PdfCoefficients",
    "PdfTable",
    "PointResult",
    "PowerDelayProfile",
    "RaetPoint",
    "SourceModel",
    "SweepAxis",
    "SweepSpec",
    "SystemConfig",
    "TableMode",
    "TapRange",
    "ZpsyncError",
    "build_pdf_table",
    "component_variance",
    "correlation_check",
    "dump_window",
    "empirical_moments",
    "exponential_pdp",
    "gaussian_ml",
    "generate_channel",
    "generate_symbols",
    "is_unimodal",
    "ks_distance",
    "load_config",
    "load_window",
    "log_likelihood",
    "log_pdf_noise",
    "log_pdf_signal",
    "log_pdf_v",
    "mcs_table",
    "ml_exhaustive",
    "ml_golden",
    "noise_variance_from_ebn0",
    "pdf_coefficients",
    "pdf_comparison_table",
    "pdp_sensitivity",
    "qam_constellation",
    "run_sweep",
    "sample_received",
    "sample_v",
    "save_config",
    "score_all",
    "simulate_reception",
    "subcarriers_to_time",
    "tap_range",
    "transition_metric",
    "write_likelihood_trace",
    "write_moment_reports",
    "write_pdf_comparison",
    "write_raet_csv",
    "write_sweep_csv",
    "zero_pad",
]
