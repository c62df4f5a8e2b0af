"""Supply network shipment and inventory forecasting."""

from ._supplycast import (
    DataError,
    Dataset,
    DegenerateDataset,
    DeviationSpec,
    HistoryOptions,
    LeadTimeModel,
    PenaltyFunction,
    ShapeError,
    Snapshot,
    SkuScaler,
    SuiteOptions,
    SupplyModel,
    TrainConfig,
    TrainingDiverged,
    TrainResult,
    bias,
    croston,
    croston_baseline,
    cumulative,
    fit_leadtime,
    generalized_smace,
    generate_suite,
    mc_predict,
    planned_passthrough,
    read_dataset,
    rollout_planned,
    smace,
    thread_count,
    train,
    wmape,
)

__version__ = "0.1.0"
