"""Experiment harness, diagnostics and renderers."""

from .diagnostics import (
    CriticSeries,
    DistanceBin,
    TTRField,
    critic_vs_ttr_report,
    decreasing_fraction,
    p2p_success_by_distance,
    ttr_contour,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    TrialRecord,
    check_plans,
    finish_times,
    load_config,
    parse_config_text,
    read_records,
    records_from_csv,
    records_to_csv,
    run_experiment,
    success_curve,
    summarize,
    write_records,
)
from .render import render_svg
