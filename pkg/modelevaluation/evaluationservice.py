"""Module containing the evaluation of a trained checkpoint on a dataset split."""
from pathlib import Path
import json
import jsonschema

from configuration import Configuration, initialize_logger
from training import RunConfig, load_checkpoint, CheckpointError, build_model, predict, auc, \
    load_task_data, report_encoder, UndefinedMetricError
from training.runconfig import CONFIGURATION_PATH, SCHEMA_PATH


def restore_model(checkpoint):
    """Rebuild the run and the model stored in a checkpoint.

    Returns:
        tuple: (RunConfig, TextGuidedClassifier).

    Raises:
        CheckpointError: If the stored configuration or parameters do not fit the current code.
    """
    try:
        run = RunConfig(Configuration(CONFIGURATION_PATH, SCHEMA_PATH,
                                      field=checkpoint.config).field)
        model = build_model(run, len(report_encoder(run)[1]))
        model.load_state_dict(checkpoint.parameters)
    except (KeyError, ValueError, jsonschema.ValidationError) as error:
        raise CheckpointError("The checkpoint does not fit the current model code: " +
                              str(error)) from error
    return run, model


def evaluate(checkpoint_path, split="test", data_path=None):
    """AUC of a checkpoint on one split.

    Args:
        checkpoint_path (str or Path): The checkpoint.
        split (str): train, validation or test.
        data_path (str or list): Datasets to read instead of the ones the run was trained on.

    Returns:
        dict: {task, split, auc, n, seed, config_hash}.

    Raises:
        FileNotFoundError: If the checkpoint or a dataset file is missing.
        CheckpointError: If the checkpoint does not fit the current code.
        UndefinedMetricError: If the split holds a single class.
    """
    checkpoint = load_checkpoint(checkpoint_path)
    run, model = restore_model(checkpoint)
    data_run = run if data_path is None else run.replace(data_path=data_path)
    data = load_task_data(data_run, (split,))
    examples = data.splits[split]
    scores = predict(model, examples, run.train.batch_size)
    return {"task": run["task"], "split": split, "auc": auc(scores, examples.labels),
            "n": len(examples), "seed": run["seed"], "config_hash": checkpoint.config_hash}


class EvaluationService:
    """Class representing the evaluation step of the pipeline.

    Attributes:
        _checkpoint_path (Path): The checkpoint to evaluate.
        _split (str): The split to evaluate on.
        _data_path (str): Optional dataset replacing the one of the run.
        _output_path (Path): The JSON report, next to the checkpoint when None.
        _logger (Logger): The logger used in the module.
        report (dict): The report of the last successful start().
        configuration_error (bool): True when the last start() failed on its inputs.
    """

    def start(self):
        """Evaluate and write the JSON report.

        Returns:
            bool: True if the report was written, False otherwise.
        """
        self.report, self.configuration_error = None, False
        try:
            self.report = evaluate(self._checkpoint_path, self._split, self._data_path)
        except (FileNotFoundError, CheckpointError) as error:
            self._logger.error("Cannot evaluate: %s", error)
            self.configuration_error = True
            return False
        except UndefinedMetricError as error:
            self._logger.error("AUC undefined on the %s split: %s", self._split, error)
            return False

        output_path = self._output_path or \
            self._checkpoint_path.parent / ("eval_" + self._split + ".json")
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(output_path, "w", encoding="utf-8", newline="\n") as report_file:
                json.dump(self.report, report_file, indent=1, sort_keys=True)
                report_file.write("\n")
        except OSError as error:
            self._logger.error("The report could not be written: %s", error)
            return False

        self._logger.info("%s AUC on %d %s samples: %.4f (report %s).", self.report["task"],
                          self.report["n"], self._split, self.report["auc"], output_path)
        return True

    def __init__(self, checkpoint_path, split="test", data_path=None, output_path=None):
        self._checkpoint_path = Path(checkpoint_path)
        self._split = split
        self._data_path = data_path
        self._output_path = Path(output_path) if output_path is not None else None
        self._logger = initialize_logger(__name__)
        self.report = None
        self.configuration_error = False
