"""Module containing the RunConfig and TrainConfig classes describing one training run."""
from dataclasses import dataclass
from pathlib import Path
import copy

from configuration import Configuration, configuration_hash, canonical_json
from fusion import ModelConfig

CONFIGURATION_DIR = Path(__file__).parent / "configuration"
CONFIGURATION_PATH = CONFIGURATION_DIR / "configuration.json"
SCHEMA_PATH = CONFIGURATION_DIR / "configuration.schema.json"

# Bumped whenever a change to the model code alters what a checkpoint's parameters mean
MODEL_VERSION = "text-guided-classifier/1"

# Locations only; the same experiment hashes alike wherever its data and outputs live
LOCATION_KEYS = ("data_path", "output_path")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings of a run."""
    lr_peak: float = 1e-3
    weight_decay: float = 1e-4
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    batch_size: int = 16
    epochs: int = 6
    warmup_epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.lr_peak <= 0:
            raise ValueError("lr_peak must be positive")
        if self.warmup_epochs > self.epochs:
            raise ValueError("warmup_epochs (" + str(self.warmup_epochs) + ") exceeds epochs (" +
                             str(self.epochs) + ")")

    def schedule(self, steps_per_epoch):
        """(total_steps, warmup_steps) of a run with steps_per_epoch batches per epoch."""
        return self.epochs * steps_per_epoch, self.warmup_epochs * steps_per_epoch


class RunConfig:
    """Validated RunConfig document.

    Attributes:
        field (dict): The merged, validated document.
    """

    def __init__(self, field):
        self.field = copy.deepcopy(dict(field))
        self.train = TrainConfig(self.field["lr_peak"], self.field["weight_decay"],
                                 (self.field["beta1"], self.field["beta2"]),
                                 self.field["adam_eps"], self.field["batch_size"],
                                 self.field["epochs"], self.field["warmup_epochs"],
                                 self.field["seed"])
        self.model_config(vocab_size=2)

    def __getitem__(self, key):
        return self.field[key]

    def __repr__(self):
        return "RunConfig(" + canonical_json(self.field) + ")"

    @property
    def config_hash(self):
        return configuration_hash(self.field, MODEL_VERSION, LOCATION_KEYS)

    def model_config(self, vocab_size):
        """Architecture of the run (raises ValueError on inconsistent sizes or kinds)."""
        model_cfg = ModelConfig.from_run_config(self.field, vocab_size)
        aggregator_cfg = model_cfg.aggregator_config
        if aggregator_cfg.resolved_depth and model_cfg.channel_dim % aggregator_cfg.resolved_heads:
            raise ValueError("channel_dim " + str(model_cfg.channel_dim) + " is not divisible "
                             "by " + str(aggregator_cfg.resolved_heads) + " heads")
        if (model_cfg.tokenizer_variant == "feature_map" and
                model_cfg.vision_channels[-1] != model_cfg.channel_dim):
            raise ValueError("channel_dim must equal the last vision channel count (" +
                             str(model_cfg.vision_channels[-1]) + ") for the feature_map "
                             "tokenizer")
        return model_cfg

    def _format(self, template):
        return template.format(task=self.field["task"], aggregator=self.field["aggregator"],
                               seed=self.field["seed"])

    @property
    def data_paths(self):
        paths = self.field["data_path"]
        paths = [paths] if isinstance(paths, str) else paths
        return [Path(self._format(path)) for path in paths]

    @property
    def output_dir(self):
        return Path(self._format(self.field["output_path"]))

    def replace(self, **changes):
        """A validated copy with some keys changed."""
        field = dict(self.field)
        field.update(changes)
        return RunConfig(Configuration(CONFIGURATION_PATH, SCHEMA_PATH, field=field).field)


def load_run_config(config_path=None, overrides=None):
    """Load the packaged RunConfig, overlay an optional user file and explicit overrides.

    Args:
        config_path (str or Path): Flat JSON document overriding some keys; unknown keys are
            schema violations.
        overrides (dict): Keys replacing the ones of the merged document (command-line flags).

    Returns:
        RunConfig: The validated configuration.

    Raises:
        OSError: If a file cannot be read.
        JSONDecodeError: If a document is not valid JSON.
        ValidationError: If the merged document violates the schema.
        ValueError: If the document is inconsistent.
    """
    configuration = Configuration(CONFIGURATION_PATH, SCHEMA_PATH, overrides_path=config_path,
                                  overrides=overrides)
    return RunConfig(configuration.field)
