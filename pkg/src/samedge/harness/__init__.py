"""Experiment harness: configuration, datasets, training runs and their logs."""

from samedge.harness.config import (
    DatasetSpec,
    ExperimentConfig,
    LogSpec,
    ObjectiveSpec,
    SpectralSpec,
    config_from_mapping,
    config_to_ini,
    load_config,
)
from samedge.harness.data import Dataset, IdxFormatError, load_dataset
from samedge.harness.logs import StepRecord, read_log, write_log
from samedge.harness.runner import (
    RunEntry,
    Summary,
    build_objective,
    run_experiment,
    run_grid,
    summarize,
)
