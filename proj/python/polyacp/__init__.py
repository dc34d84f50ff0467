"""Semi-supervised logistic CP decomposition of sparse binary tensors."""

from ._polyacp import (
    Checkpoint,
    CheckpointError,
    ConfigError,
    Dataset,
    Error,
    FitReport,
    Hyperparams,
    IngestError,
    IterationRecord,
    LabelSet,
    ModelState,
    NumericalError,
    Tensor,
    classification_metrics,
    dispersion,
    fit,
    lambda_weighted_norms,
    load_checkpoint,
    load_tuples,
    read_labels,
    roc_auc,
    save_checkpoint,
    score_entities,
    simulate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
