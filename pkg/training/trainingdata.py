"""Module containing the assembly of model-ready examples from synthetic datasets."""
from dataclasses import dataclass
import logging
import numpy

from datasynthesis import load_dataset, preprocess, augment, SPLITS
from reportsynthesis import ReportRenderer, report_vocabulary, encode_text

logger = logging.getLogger(__name__)


@dataclass
class SplitData:
    """Images, report ids and labels of one split (several datasets concatenated)."""
    images: numpy.ndarray
    ids: numpy.ndarray
    labels: numpy.ndarray
    reports: list

    def __len__(self):
        return self.labels.size


@dataclass
class TaskData:
    vocabulary: object
    splits: dict
    dataset_hashes: list


def report_encoder(run):
    """(renderer, vocabulary) of a run's report format."""
    renderer = ReportRenderer(include_birads=run["report_include_birads"])
    return renderer, report_vocabulary(renderer)


def load_task_data(run, splits=SPLITS):
    """Load every dataset of a run and build the requested splits.

    Args:
        run (RunConfig): The run; data_path, task, image_size, preprocess, max_text_length and
            max_train_samples are used.
        splits (tuple): Split names to build.

    Returns:
        TaskData: The examples of every split.

    Raises:
        FileNotFoundError: If a dataset file is missing.
        ValueError: If a dataset does not match the run (image size) or is malformed.
    """
    renderer, vocabulary = report_encoder(run)
    parts = {name: [] for name in splits}
    hashes = []
    for path in run.data_paths:
        dataset = load_dataset(path)
        if dataset.images.shape[-1] != run["image_size"] or \
                dataset.images.shape[-2] != run["image_size"]:
            raise ValueError("Dataset " + str(path) + " holds " +
                             str(dataset.images.shape[-2:]) + " images, the run expects " +
                             str(run["image_size"]))
        if dataset.descriptor.get("task") != run["task"]:
            logger.warning("Dataset %s was planted for %s, training on %s labels.", path,
                           dataset.descriptor.get("task"), run["task"])
        hashes.append(dataset.config_hash)
        for name in splits:
            indices = dataset.splits[name]
            images = dataset.images[indices]
            if run["preprocess"]:
                images = numpy.stack([preprocess(image) for image in images]) if len(images) \
                    else images
            reports = [renderer.render(dataset.records[index]) for index in indices]
            ids = numpy.stack([encode_text(report, vocabulary, run["max_text_length"])[0]
                               for report in reports]) if reports else \
                numpy.zeros((0, run["max_text_length"]), dtype=numpy.int64)
            parts[name].append(SplitData(images, ids, dataset.labels[run["task"]][indices],
                                         reports))

    data = {}
    for name, pieces in parts.items():
        data[name] = SplitData(numpy.concatenate([piece.images for piece in pieces]),
                               numpy.concatenate([piece.ids for piece in pieces]),
                               numpy.concatenate([piece.labels for piece in pieces]),
                               [report for piece in pieces for report in piece.reports])
    limit = run["max_train_samples"]
    if "train" in data and limit is not None and limit < len(data["train"]):
        train = data["train"]
        data["train"] = SplitData(train.images[:limit], train.ids[:limit], train.labels[:limit],
                                  train.reports[:limit])
    return TaskData(vocabulary, data, hashes)


def batch_images(split, indices, augmentation_seed=None):
    """Images of a batch, augmented per sample when a (seed, epoch) pair is given."""
    images = split.images[indices]
    if augmentation_seed is None:
        return images
    seed, epoch = augmentation_seed
    return numpy.stack([augment(image, [seed, epoch, int(index)])
                        for image, index in zip(images, indices)])
