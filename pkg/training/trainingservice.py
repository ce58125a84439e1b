"""Module containing the training loop of the text-guided classifier and the TrainingService
class running it as a pipeline step."""
from dataclasses import dataclass, field
from pathlib import Path
import json
import math
import numpy
import progressbar
import jsonschema

from configuration import initialize_logger, active_logging_configuration
from fusion import TextGuidedClassifier
from tensorautodiff import Tensor, backward, no_grad, functional as F

from .runconfig import load_run_config
from .optimizer import AdamW, lr_at
from .metrics import auc, UndefinedMetricError
from .checkpoint import Checkpoint, save_checkpoint
from .trainingdata import load_task_data, batch_images

METRICS_FILE = "metrics.jsonl"
CHECKPOINT_FILE = "checkpoint.npz"
RUN_CONFIG_FILE = "run_config.json"


class TrainingError(RuntimeError):
    """Raised when the optimization diverges."""


@dataclass
class TrainingResult:
    best_auc: float
    best_epoch: int
    checkpoint_path: Path
    metrics_path: Path
    history: list = field(default_factory=list)
    model: TextGuidedClassifier = None


def build_model(run, vocab_size):
    """Instantiate the classifier of a run with its seeded initial parameters."""
    return TextGuidedClassifier(run.model_config(vocab_size))


def apply_frozen(model, frozen):
    """Freeze every parameter named by a prefix of frozen ("all" freezes the whole model).

    Raises:
        ValueError: If a prefix names no parameter.
    """
    if frozen == "all":
        model.freeze()
        return
    named = list(model.named_parameters())
    for prefix in frozen:
        matches = [parameter for name, parameter in named if name.startswith(prefix)]
        if not matches:
            raise ValueError("Frozen prefix " + repr(prefix) + " names no parameter")
        for parameter in matches:
            parameter.requires_grad = False


def predict(model, split, batch_size):
    """Logits of every example of a split, computed without recording."""
    scores = []
    with no_grad():
        for start in range(0, len(split), batch_size):
            indices = numpy.arange(start, min(start + batch_size, len(split)))
            logits = model(Tensor(split.images[indices]), split.ids[indices])
            scores.append(numpy.asarray(logits.data, dtype=numpy.float64).reshape(-1))
    return numpy.concatenate(scores) if scores else numpy.zeros(0)


def mean_bce(scores, labels):
    with no_grad():
        return F.bce_with_logits(Tensor(scores), labels).item()


def safe_auc(scores, labels):
    """AUC, or None when a class is missing."""
    try:
        return auc(scores, labels)
    except UndefinedMetricError:
        return None


def metrics_line(epoch, step, split, loss, auc_value, lr, run):
    return {"epoch": epoch, "step": step, "split": split, "loss": loss, "auc": auc_value,
            "lr": lr, "seed": run["seed"], "config_hash": run.config_hash}


def train(run, logger=None, show_progress=False):
    """Train the classifier of a run, keeping the checkpoint of the best validation AUC.

    Args:
        run (RunConfig): The run.
        logger (Logger): Where epoch summaries go (silent when None).
        show_progress (bool): Draw a progress bar per epoch.

    Returns:
        TrainingResult: Best validation AUC, its epoch, the output files and the history.

    Raises:
        FileNotFoundError: If a dataset file is missing.
        ValueError: If the datasets or the configuration do not fit the run.
        TrainingError: If the loss stops being finite.
        OSError: If an output cannot be written.
    """
    data = load_task_data(run, ("train", "validation"))
    train_split, validation = data.splits["train"], data.splits["validation"]
    if len(train_split) == 0:
        raise ValueError("The training split of " + str(run.data_paths) + " is empty")

    model = build_model(run, len(data.vocabulary))
    apply_frozen(model, run["frozen"])
    optimizer = AdamW(model.trainable_parameters(), run.train)

    batch_size = run.train.batch_size
    steps_per_epoch = math.ceil(len(train_split) / batch_size)
    total_steps, warmup_steps = run.train.schedule(steps_per_epoch)

    output_dir = run.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    metrics_path, checkpoint_path = output_dir / METRICS_FILE, output_dir / CHECKPOINT_FILE
    with open(output_dir / RUN_CONFIG_FILE, "w", encoding="utf-8") as config_file:
        json.dump({"config": run.field, "config_hash": run.config_hash,
                   "datasets": data.dataset_hashes}, config_file, indent=1, sort_keys=True)
    metrics_path.write_text("")
    if logger:
        logger.info("Training %s on %s (%d train / %d validation, %d parameters, %d trainable, "
                    "hash %s).", run["aggregator"], run["task"], len(train_split),
                    len(validation), model.parameter_count(),
                    sum(parameter.size for _, parameter in optimizer.parameters),
                    run.config_hash[:12])

    history, step = [], 0
    best_auc, best_epoch = None, 0
    for epoch in range(1, run.train.epochs + 1):
        order = numpy.random.default_rng([run["seed"], epoch]).permutation(len(train_split))
        losses, scores, labels = [], [], []
        bar = None
        if show_progress:
            bar = progressbar.ProgressBar(max_value=steps_per_epoch,
                                          widgets=[progressbar.Bar('=', '[', ']'), ' ',
                                                   progressbar.Percentage(), '\n'])
            bar.start()
        for batch in range(steps_per_epoch):
            indices = order[batch * batch_size:(batch + 1) * batch_size]
            images = batch_images(train_split, indices,
                                  (run["seed"], epoch) if run["augment"] else None)
            targets = train_split.labels[indices]
            step += 1
            # Update k uses lr_at(k) during warmup and lr_at(k - 1) after it, never a zero rate
            lr = lr_at(step if step <= warmup_steps else step - 1, total_steps, warmup_steps,
                       run.train.lr_peak)

            if optimizer.parameters:
                logits = model(Tensor(images), train_split.ids[indices])
                loss = F.bce_with_logits(logits, targets)
                if not numpy.isfinite(loss.item()):
                    raise TrainingError("Loss became " + str(loss.item()) + " at epoch " +
                                        str(epoch) + ", step " + str(step) + " (lr " +
                                        format(lr, ".3g") + ", " + str(int(targets.sum())) +
                                        " positives in the batch)")
                backward(loss)
                optimizer.step(lr)
                optimizer.zero_grad()
            else:
                with no_grad():
                    logits = model(Tensor(images), train_split.ids[indices])
                    loss = F.bce_with_logits(logits, targets)

            losses.append(loss.item())
            scores.append(numpy.asarray(logits.data, dtype=numpy.float64).reshape(-1))
            labels.append(targets)
            if logger:
                logger.debug("epoch %d step %d lr %.3g loss %.5f", epoch, step, lr, loss.item())
            if bar:
                bar.update(batch + 1)
        if bar:
            bar.finish()

        train_line = metrics_line(epoch, step, "train", float(numpy.mean(losses)),
                                  safe_auc(numpy.concatenate(scores), numpy.concatenate(labels)),
                                  lr, run)
        validation_scores = predict(model, validation, batch_size)
        validation_line = metrics_line(
            epoch, step, "validation",
            mean_bce(validation_scores, validation.labels) if len(validation) else None,
            safe_auc(validation_scores, validation.labels), lr, run)
        history.extend([train_line, validation_line])
        with open(metrics_path, "a", encoding="utf-8") as metrics_file:
            for line in (train_line, validation_line):
                metrics_file.write(json.dumps(line, sort_keys=True) + "\n")

        validation_auc = validation_line["auc"]
        improved = best_epoch == 0 or (validation_auc is not None and
                                       (best_auc is None or validation_auc > best_auc))
        if improved:
            best_auc, best_epoch = validation_auc, epoch
            save_checkpoint(checkpoint_path, Checkpoint(
                model.state_dict(), optimizer.state_arrays(), step, run.field, run.config_hash,
                list(history)))
        if logger:
            logger.info("Epoch %d/%d: train loss %.4f, validation AUC %s%s", epoch,
                        run.train.epochs, train_line["loss"],
                        "undefined" if validation_auc is None else format(validation_auc, ".4f"),
                        " (checkpoint saved)" if improved else "")

    return TrainingResult(best_auc, best_epoch, checkpoint_path, metrics_path, history, model)


class TrainingService:
    """Class representing the training step of the pipeline.

    Attributes:
        _configuration_path (str): Optional RunConfig document overriding the packaged defaults.
        _overrides (dict): Keys set from the command line.
        _logger (Logger): The logger used in the module.
        result (TrainingResult): The outcome of the last successful start().
        configuration_error (bool): True when the last start() failed before training began.
    """

    def start(self):
        """Train, log the best validation AUC and keep the result.

        Returns:
            bool: True if training completed, False otherwise.
        """
        self.result = None
        self.configuration_error = False
        try:
            run = load_run_config(self._configuration_path, self._overrides)
        except (OSError, ValueError, jsonschema.ValidationError, jsonschema.SchemaError) as error:
            self._logger.error("Invalid run configuration: %s", error)
            self.configuration_error = True
            return False

        try:
            self.result = train(run, self._logger, active_logging_configuration().show_progress)
        except (FileNotFoundError, ValueError) as error:
            self._logger.error("Training could not start: %s", error)
            self.configuration_error = True
            return False
        except TrainingError as error:
            self._logger.critical("Training diverged: %s", error)
            return False
        except OSError as error:
            self._logger.error("Training outputs could not be written: %s", error)
            return False

        self._logger.info("Best validation AUC %s at epoch %d; checkpoint %s.",
                          "undefined" if self.result.best_auc is None
                          else format(self.result.best_auc, ".4f"),
                          self.result.best_epoch, self.result.checkpoint_path)
        return True

    def __init__(self, configuration_path=None, overrides=None):
        """Initializer.

        Args:
            configuration_path (str): Optional RunConfig document overriding the packaged defaults.
            overrides (dict): Keys set from the command line (seed, aggregator, task, paths).
        """
        self._configuration_path = configuration_path
        self._overrides = dict(overrides or {})
        self._logger = initialize_logger(__name__)
        self.result = None
        self.configuration_error = False
