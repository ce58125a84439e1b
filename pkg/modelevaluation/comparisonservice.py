"""Module containing the comparison of aggregators (and the token ablation grid) trained
over several seeds."""
from dataclasses import dataclass
from pathlib import Path
import numpy
import pandas
import jsonschema

from configuration import initialize_logger
from fusion import KINDS
from training import load_run_config, train, predict, auc, load_checkpoint, load_task_data, \
    TrainingError, UndefinedMetricError

from .diagramgenerator import make_comparison_diagram, make_token_count_diagram

TABLE_COLUMNS = ["label", "task", "aggregator", "tokenizer_variant", "n_tokens", "pooling",
                 "seeds", "validation_auc_mean", "validation_auc_sd", "test_auc_mean",
                 "test_auc_sd", "config_hash"]
ABLATION_TOKENS = (64, 256, 512)
ABLATION_POOLINGS = ("max", "mean")
ABLATION_TOKENIZERS = ("feature_map", "embedding_linear", "embedding_mlp")
LARGE_TOKENS = 512


@dataclass(frozen=True)
class Cell:
    """One configuration of the comparison, trained once per seed."""
    task: str
    aggregator: str
    n_tokens: int
    pooling: str
    tokenizer_variant: str

    def label(self, ablation=False):
        """Row label; ablation rows mark max pooling with "+" and 512 tokens with "Large"."""
        if not ablation:
            return self.aggregator
        label = ("Large " if self.n_tokens == LARGE_TOKENS else "") + self.aggregator + \
            ("+" if self.pooling == "max" else "")
        if self.n_tokens not in (LARGE_TOKENS, 256):
            label += " N=" + str(self.n_tokens)
        if self.tokenizer_variant != "feature_map":
            label += " " + self.tokenizer_variant
        return label


def ablation_cells(task, aggregators, base):
    """Token count x pooling grid plus the tokenizer variants at the base token count."""
    cells = [Cell(task, aggregator, n_tokens, pooling, "feature_map")
             for aggregator in aggregators for n_tokens in ABLATION_TOKENS
             for pooling in ABLATION_POOLINGS]
    cells += [Cell(task, aggregator, base["n_tokens"], "max", variant)
              for aggregator in aggregators for variant in ABLATION_TOKENIZERS[1:]]
    return cells


def _mean_sd(values):
    values = [value for value in values if value is not None]
    if not values:
        return None, None
    return float(numpy.mean(values)), float(numpy.std(values, ddof=1)) if len(values) > 1 \
        else 0.0


def run_cell(base, cell, seed, output_dir, logger=None):
    """Train one (cell, seed) and measure validation and test AUC of its best checkpoint.

    Returns:
        tuple: (validation AUC, test AUC, RunConfig); an AUC is None when undefined.
    """
    name = "-".join([cell.task, cell.aggregator, cell.tokenizer_variant, str(cell.n_tokens),
                     cell.pooling, "seed" + str(seed)])
    run = base.replace(task=cell.task, aggregator=cell.aggregator, n_tokens=cell.n_tokens,
                       pooling=cell.pooling, tokenizer_variant=cell.tokenizer_variant,
                       seed=seed, output_path=str(Path(output_dir) / "cells" / name))
    result = train(run, logger)
    result.model.load_state_dict(load_checkpoint(result.checkpoint_path).parameters)
    test = load_task_data(run, ("test",)).splits["test"]
    try:
        test_auc = auc(predict(result.model, test, run.train.batch_size), test.labels)
    except UndefinedMetricError:
        test_auc = None
    return result.best_auc, test_auc, run


def compare(base, aggregators, seeds, tasks, output_dir, ablate=False, logger=None):
    """Train every cell over every seed and tabulate mean and standard deviation of the AUCs.

    Args:
        base (RunConfig): The settings shared by every cell.
        aggregators (list): Aggregator kinds (table rows).
        seeds (list): Seeds of every cell.
        tasks (list): Tasks, each trained on its own dataset (data_path may hold {task}).
        output_dir (str or Path): Folder of the CSV tables, diagrams and cell runs.
        ablate (bool): Also run the token-count, pooling and tokenizer grid.
        logger (Logger): Progress messages.

    Returns:
        tuple: (comparison DataFrame, ablation DataFrame or None).
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    def tabulate(cells, ablation):
        rows = []
        for cell in cells:
            validation, test, hashes = [], [], []
            for seed in seeds:
                validation_auc, test_auc, run = run_cell(base, cell, seed, output_dir, logger)
                validation.append(validation_auc)
                test.append(test_auc)
                hashes.append(run.config_hash)
            validation_mean, validation_sd = _mean_sd(validation)
            test_mean, test_sd = _mean_sd(test)
            rows.append({"label": cell.label(ablation), "task": cell.task,
                         "aggregator": cell.aggregator,
                         "tokenizer_variant": cell.tokenizer_variant, "n_tokens": cell.n_tokens,
                         "pooling": cell.pooling, "seeds": len(seeds),
                         "validation_auc_mean": validation_mean,
                         "validation_auc_sd": validation_sd, "test_auc_mean": test_mean,
                         "test_auc_sd": test_sd, "config_hash": hashes[0]})
            if logger:
                logger.info("%s (%s): validation AUC %s, test AUC %s.", rows[-1]["label"],
                            cell.task, validation_mean, test_mean)
        return pandas.DataFrame(rows, columns=TABLE_COLUMNS)

    cells = [Cell(task, aggregator, base["n_tokens"], base["pooling"], base["tokenizer_variant"])
             for task in tasks for aggregator in aggregators]
    comparison = tabulate(cells, False)
    comparison.to_csv(output_dir / "comparison.csv", index=False, float_format="%.6f",
                      lineterminator="\n")
    if comparison["test_auc_mean"].notna().any():
        make_comparison_diagram(comparison, "Aggregator comparison", output_dir /
                                "comparison.png")

    ablation = None
    if ablate:
        ablation = tabulate([cell for task in tasks
                             for cell in ablation_cells(task, aggregators, base)], True)
        ablation.to_csv(output_dir / "ablation.csv", index=False, float_format="%.6f",
                        lineterminator="\n")
        grid = ablation[ablation["tokenizer_variant"] == "feature_map"]
        if grid["test_auc_mean"].notna().any():
            make_token_count_diagram(grid, "Number of tokens", output_dir / "ablation.png")
    return comparison, ablation


class ComparisonService:
    """Class representing the aggregator comparison step of the pipeline.

    Attributes:
        _configuration_path (str): Optional RunConfig document shared by every cell.
        _overrides (dict): Keys set from the command line.
        _aggregators (list): Aggregator kinds to compare.
        _seeds (list): Seeds of every cell.
        _tasks (list): Tasks to compare on.
        _output_path (Path): Folder of the tables and diagrams.
        _ablate (bool): Whether to run the token ablation grid.
        _logger (Logger): The logger used in the module.
        comparison (DataFrame): The table of the last successful start().
        ablation (DataFrame): The ablation table of the last successful start().
        configuration_error (bool): True when the last start() failed on its inputs.
    """

    def start(self):
        """Run the comparison and write its tables.

        Returns:
            bool: True if every cell trained and the tables were written, False otherwise.
        """
        self.comparison, self.ablation, self.configuration_error = None, None, False
        try:
            base = load_run_config(self._configuration_path, self._overrides)
            unknown = [kind for kind in self._aggregators if kind not in KINDS]
            if unknown:
                raise ValueError("Unknown aggregators " + str(unknown))
        except (OSError, ValueError, jsonschema.ValidationError, jsonschema.SchemaError) as error:
            self._logger.error("Invalid comparison configuration: %s", error)
            self.configuration_error = True
            return False

        self._logger.info("Comparing %s on %s over seeds %s%s.", ", ".join(self._aggregators),
                          ", ".join(self._tasks), self._seeds,
                          " with the token ablation" if self._ablate else "")
        try:
            self.comparison, self.ablation = compare(base, self._aggregators, self._seeds,
                                                     self._tasks, self._output_path,
                                                     self._ablate, self._logger)
        except (FileNotFoundError, ValueError) as error:
            self._logger.error("The comparison could not start: %s", error)
            self.configuration_error = True
            return False
        except (TrainingError, OSError) as error:
            self._logger.critical("The comparison failed: %s", error)
            return False

        self._logger.info("Comparison table written to %s.", self._output_path / "comparison.csv")
        return True

    def __init__(self, output_path, aggregators=KINDS, seeds=(0, 1, 2), tasks=("malignancy",),
                 configuration_path=None, overrides=None, ablate=False):
        self._output_path = Path(output_path)
        self._aggregators = list(aggregators)
        self._seeds = [int(seed) for seed in seeds]
        self._tasks = list(tasks)
        self._configuration_path = configuration_path
        self._overrides = dict(overrides or {})
        self._ablate = ablate
        self._logger = initialize_logger(__name__)
        self.comparison = None
        self.ablation = None
        self.configuration_error = False
