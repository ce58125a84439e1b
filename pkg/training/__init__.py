"""Package containing the optimization of the text-guided classifier: run configuration,
AdamW with a warmup-cosine schedule, AUC metrics, checkpoints and the training loop."""
from .runconfig import RunConfig, TrainConfig, load_run_config, MODEL_VERSION
from .optimizer import AdamW, AdamWState, adamw_step, lr_at
from .metrics import auc, auc_trapezoid, UndefinedMetricError
from .checkpoint import Checkpoint, CheckpointError, save_checkpoint, load_checkpoint
from .trainingdata import SplitData, TaskData, load_task_data, report_encoder
from .trainingservice import TrainingService, TrainingError, TrainingResult, train, \
    build_model, apply_frozen, predict
