from ._qecdm import (
    Bath,
    BeyondThreshold,
    Experiment,
    ExperimentKind,
    NoCrossing,
    NoiseAxis,
    Parallelism,
    Protocol,
    bare_memory_crash,
    codewords,
    evaluate_point,
    fit_crash_rate,
    log_grid,
    run_cli,
    syndrome,
    synthetic_series,
    threshold_scan,
    version,
)

__version__ = version().split()[1]
