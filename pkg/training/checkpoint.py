"""Module containing the checkpoint container of a trained model."""
from dataclasses import dataclass, field
from pathlib import Path
import json
import numpy

from configuration import configuration_hash
from .runconfig import MODEL_VERSION, LOCATION_KEYS

PARAMETER_PREFIX = "param/"
METADATA_KEY = "metadata"


class CheckpointError(RuntimeError):
    """Raised when a checkpoint cannot be used with the current model code."""


@dataclass
class Checkpoint:
    """Named parameters, optimizer moments and the run that produced them."""
    parameters: dict
    moments: dict
    step: int
    config: dict
    config_hash: str
    history: list = field(default_factory=list)
    model_version: str = MODEL_VERSION


def save_checkpoint(path, checkpoint):
    """Write a checkpoint as an uncompressed npz archive.

    Raises:
        OSError: If the file cannot be written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"step": checkpoint.step, "config": checkpoint.config,
                "config_hash": checkpoint.config_hash, "history": checkpoint.history,
                "model_version": checkpoint.model_version}
    arrays = {PARAMETER_PREFIX + name: value for name, value in checkpoint.parameters.items()}
    arrays.update(checkpoint.moments)
    arrays[METADATA_KEY] = numpy.array(json.dumps(metadata, sort_keys=True))
    with open(path, "wb") as checkpoint_file:
        numpy.savez(checkpoint_file, **arrays)


def load_checkpoint(path):
    """Read a checkpoint and check it against the current model code.

    Raises:
        FileNotFoundError: If the file does not exist.
        CheckpointError: If the file is not a checkpoint, or its configuration hash does not
            match the configuration and model version it claims.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError("No checkpoint at " + str(path))
    try:
        with numpy.load(path, allow_pickle=False) as archive:
            arrays = {name: archive[name] for name in archive.files}
        metadata = json.loads(str(arrays.pop(METADATA_KEY)))
    except (ValueError, KeyError, OSError) as error:
        raise CheckpointError(str(path) + " is not a readable checkpoint: " + str(error)) \
            from error

    expected = configuration_hash(metadata["config"], MODEL_VERSION, LOCATION_KEYS)
    if metadata["config_hash"] != expected:
        raise CheckpointError("Checkpoint " + str(path) + " was written by model version " +
                              repr(metadata.get("model_version")) + " with hash " +
                              metadata["config_hash"][:12] + "; the current code expects " +
                              expected[:12])

    parameters = {name[len(PARAMETER_PREFIX):]: value for name, value in arrays.items()
                  if name.startswith(PARAMETER_PREFIX)}
    moments = {name: value for name, value in arrays.items()
               if not name.startswith(PARAMETER_PREFIX)}
    return Checkpoint(parameters, moments, metadata["step"], metadata["config"],
                      metadata["config_hash"], metadata["history"], metadata["model_version"])
