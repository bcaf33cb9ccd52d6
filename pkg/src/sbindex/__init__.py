"""Pareto tail fits and the missing-mass index for yearly firm-asset snapshots."""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DivergentTailError,
    EmptyRunError,
    InsufficientDataError,
    SbIndexError,
    SchemaError,
    SingularFitError,
)
from .ingest import FirmRecord, Snapshot, parse_dataset, total_assets, validate_snapshot
from .missingmass import (
    MissingMassEstimate,
    confidence_band,
    crossing_cutoff,
    empirical_tail_assets,
    extrapolation_cutoff,
    missing_mass,
    pareto_tail_assets,
)
from .report import TableRow, build_table_row, emit_table, run_pipeline
from .synth import SynthConfig, capped_pareto_sample, gibrat_simulate, pareto_sample, quadrature
from .tailfit import FitWindow, ParetoFit, empirical_ccdf, fit_pareto, hill_estimate, select_window

__version__ = "0.1.0"
