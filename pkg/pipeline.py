"""Module containing the starting point of the pipeline."""
import sys
import json
import argparse
import jsonschema
from configuration import LoggingConfiguration, use_logging_configuration, initialize_logger
from datasynthesis import DataSynthesisService, TASKS
from fusion import KINDS
from training import TrainingService
from modelevaluation import EvaluationService, ComparisonService
from verification import VerificationService, FAULTS

EXIT_SUCCESS, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

# Packages logging through plain module loggers
LIBRARY_LOGGERS = ["tensorautodiff", "reportsynthesis", "encoders", "modalitytokenizer",
                   "fusion", "datasynthesis", "training"]


def _seeds(text):
    try:
        return [int(seed) for seed in text.split(",") if seed.strip()]
    except ValueError as error:
        raise argparse.ArgumentTypeError("seeds must be comma-separated integers") from error


def _aggregators(text):
    kinds = [kind.strip() for kind in text.split(",") if kind.strip()]
    unknown = [kind for kind in kinds if kind not in KINDS]
    if unknown:
        raise argparse.ArgumentTypeError("unknown aggregators " + ", ".join(unknown) +
                                         " (choose from " + ", ".join(KINDS) + ")")
    return kinds


def parse_arguments(argv=None):
    """Parse the command line arguments.

    Returns:
        Namespace: the object containing the command line arguments.
    """
    parser = argparse.ArgumentParser(description="Text-guided mammography classification on "
                                                 "synthetic exams")
    parser.add_argument("--log-config", dest="log_config", type=str,
                        help="JSON logging configuration replacing configuration/logging.json")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth-data", help="Generate a synthetic dataset")
    synth.add_argument("--config", type=str, help="SynthConfig JSON overriding the defaults")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--task", choices=TASKS)
    synth.add_argument("--out", type=str, required=True, help="Dataset folder")

    train = commands.add_parser("train", help="Train one classifier")
    train.add_argument("--config", type=str, help="RunConfig JSON overriding the defaults")
    train.add_argument("--seed", type=int)
    train.add_argument("--aggregator", choices=KINDS)
    train.add_argument("--task", choices=TASKS)
    train.add_argument("--data", type=str, nargs="+", help="Dataset folder(s)")
    train.add_argument("--out", type=str, help="Run folder")

    evaluate = commands.add_parser("eval", help="Evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", type=str, required=True)
    evaluate.add_argument("--split", choices=["train", "validation", "test"], default="test")
    evaluate.add_argument("--data", type=str, nargs="+", help="Dataset folder(s) to evaluate on")
    evaluate.add_argument("--out", type=str, help="JSON report")

    compare = commands.add_parser("compare", help="Compare aggregators over seeds")
    compare.add_argument("--config", type=str, help="RunConfig JSON shared by every cell")
    compare.add_argument("--aggregators", type=_aggregators, default=list(KINDS))
    compare.add_argument("--seeds", type=_seeds, default=[0, 1, 2])
    compare.add_argument("--seed", type=int, help="Single seed, shorthand for --seeds N")
    compare.add_argument("--task", choices=TASKS, nargs="+", default=list(TASKS))
    compare.add_argument("--ablate", action="store_true",
                         help="Also sweep token counts, token pooling and tokenizers")
    compare.add_argument("--data", type=str, nargs="+",
                         help="Dataset folder(s), may contain {task}")
    compare.add_argument("--out", type=str, default="comparison")

    verify = commands.add_parser("verify", help="Run the numerical self-checks")
    verify.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS)
    verify.add_argument("--out", type=str, help="JSON report")

    return parser.parse_args(argv)


def _overrides(arguments, **keys):
    """RunConfig or SynthConfig keys given on the command line."""
    overrides = {key: getattr(arguments, name) for key, name in keys.items()
                 if getattr(arguments, name, None) is not None}
    if "data_path" in overrides and len(overrides["data_path"]) == 1:
        overrides["data_path"] = overrides["data_path"][0]
    return overrides


def build_service(arguments):
    """The service answering a parsed command."""
    if arguments.command == "synth-data":
        return DataSynthesisService(arguments.out, arguments.config,
                                    _overrides(arguments, seed="seed", task="task"))
    if arguments.command == "train":
        return TrainingService(arguments.config,
                               _overrides(arguments, seed="seed", aggregator="aggregator",
                                          task="task", data_path="data", output_path="out"))
    if arguments.command == "eval":
        data = arguments.data[0] if arguments.data and len(arguments.data) == 1 else arguments.data
        return EvaluationService(arguments.checkpoint, arguments.split, data, arguments.out)
    if arguments.command == "compare":
        seeds = [arguments.seed] if arguments.seed is not None else arguments.seeds
        return ComparisonService(arguments.out, arguments.aggregators, seeds, arguments.task,
                                 arguments.config, _overrides(arguments, data_path="data"),
                                 arguments.ablate)
    return VerificationService(arguments.inject_fault, arguments.out)


def main(argv=None):
    """Run one command of the pipeline.

    Returns:
        int: 0 on success, 1 on a runtime failure, 2 on a usage or configuration error.
    """
    arguments = parse_arguments(argv)

    if arguments.log_config is not None:
        try:
            with open(arguments.log_config, encoding="utf-8") as log_config:
                use_logging_configuration(LoggingConfiguration(json.load(log_config)))
        except (OSError, ValueError, jsonschema.ValidationError) as error:
            print("Invalid logging configuration: " + str(error), file=sys.stderr)
            return EXIT_USAGE
    for name in LIBRARY_LOGGERS:
        initialize_logger(name)

    service = build_service(arguments)
    if service.start():
        return EXIT_SUCCESS
    return EXIT_USAGE if service.configuration_error else EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
