"""Module containing the DataSynthesisService class writing seeded synthetic datasets."""
from multiprocessing import Pool, cpu_count
from pathlib import Path
import jsonschema

from configuration import initialize_logger
from .synthconfig import load_synth_config
from .samplegenerator import generate_sample, generate_chunk
from .bayesoracle import bayes_auc_oracle
from .datasetstore import write_dataset


def _worker_count(cfg, logger):
    """Processes to generate with, following multi_core_enable / multi_core_limit."""
    if not cfg.multi_core_enable:
        return 1
    available_cpu = cpu_count()
    if 0 < cfg.multi_core_limit < available_cpu:
        available_cpu = cfg.multi_core_limit
    if available_cpu == 1:
        logger.warning("While configured in multi-core mode, a single core was detected, "
                       "falling back to single-core mode")
    return available_cpu


def generate_samples(cfg, workers=1):
    """Generate every sample of cfg in index order, on a process pool when workers > 1.

    Samples carry their own counter-based generator, so the result does not depend on workers.
    """
    if workers <= 1:
        return [generate_sample(cfg, index) for index in range(cfg.n_samples)]
    chunk = -(-cfg.n_samples // (4 * workers))
    ranges = [(cfg, start, min(start + chunk, cfg.n_samples))
              for start in range(0, cfg.n_samples, chunk)]
    with Pool(workers) as pool:
        return [sample for part in pool.map(generate_chunk, ranges) for sample in part]


def generate_dataset(cfg, directory, workers=1):
    """Generate the samples of cfg, run the AUC oracle and write the dataset files.

    Args:
        cfg (SynthConfig): The generative model.
        directory (str or Path): The dataset folder.
        workers (int): Generating processes.

    Returns:
        OracleReport: The AUC ceilings written to the oracle report.

    Raises:
        OSError: If a file cannot be written.
    """
    samples = generate_samples(cfg, workers)
    oracle = bayes_auc_oracle(cfg)
    write_dataset(directory, cfg, samples, oracle)
    return oracle


class DataSynthesisService:
    """Class representing the dataset synthesis step of the pipeline.

    Attributes:
        _configuration_path (str): Optional JSON document overriding the packaged defaults.
        _overrides (dict): Keys set from the command line.
        _output_path (Path): The dataset folder.
        _logger (Logger): The logger used in the module.
        configuration_error (bool): True when the last start() failed on its configuration.
    """

    def start(self):
        """Generate and write the dataset.

        Returns:
            bool: True if the dataset was written, False otherwise.
        """
        self.configuration_error = False
        try:
            cfg = load_synth_config(self._configuration_path, self._overrides)
        except (OSError, ValueError, jsonschema.ValidationError, jsonschema.SchemaError) as error:
            self._logger.error("Invalid synthesis configuration: %s", error)
            self.configuration_error = True
            return False

        self._logger.info("Generating %d %s samples of %dx%d pixels (seed %d, hash %s).",
                          cfg.n_samples, cfg.task, cfg.image_size, cfg.image_size, cfg.seed,
                          cfg.config_hash[:12])
        try:
            oracle = generate_dataset(cfg, self._output_path, _worker_count(cfg, self._logger))
        except OSError as error:
            self._logger.error("The dataset could not be written: %s", error)
            return False

        self._logger.info("Bayes AUC ceilings: image only %.4f, image and report %.4f "
                          "(gap %.4f, %d Monte-Carlo exams).", oracle.auc_image_only,
                          oracle.auc_joint, oracle.gap, oracle.n_mc)
        if oracle.gap <= 0.05:
            self._logger.warning("The report carries little planted signal (gap %.4f).",
                                 oracle.gap)
        self._logger.info("Dataset written to %s.", self._output_path)
        return True

    def __init__(self, output_path, configuration_path=None, overrides=None):
        """Initializer.

        Args:
            output_path (str or Path): The dataset folder.
            configuration_path (str): Optional JSON document overriding the packaged defaults.
            overrides (dict): Keys set from the command line (seed, task).
        """
        self._output_path = Path(output_path)
        self._configuration_path = configuration_path
        self._overrides = dict(overrides or {})
        self._logger = initialize_logger(__name__)
        self.configuration_error = False
