"""Module containing the on-disk layout of a synthetic dataset and its loader."""
from dataclasses import dataclass
from pathlib import Path
import json
import numpy
from sklearn.model_selection import train_test_split

from reportsynthesis import read_metadata_csv, write_metadata_csv, records_from_frame

IMAGES_FILE = "images.f32"
DESCRIPTOR_FILE = "images.json"
METADATA_FILE = "metadata.csv"
SPLITS_FILE = "splits.json"
ORACLE_FILE = "oracle.json"
DATASET_FILES = (IMAGES_FILE, DESCRIPTOR_FILE, METADATA_FILE, SPLITS_FILE, ORACLE_FILE)
SPLITS = ("train", "validation", "test")
TASKS = ("malignancy", "calcification")
IMAGE_DTYPE = "<f4"


def write_json(path, document):
    """Write a JSON document deterministically (sorted keys, trailing newline)."""
    with open(path, "w", encoding="utf-8", newline="\n") as json_file:
        json.dump(document, json_file, indent=1, sort_keys=True)
        json_file.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as json_file:
        return json.load(json_file)


def _split(indices, labels, fraction, seed):
    """train_test_split stratified by label when every class can be represented on both sides."""
    counts = numpy.bincount(labels, minlength=2)
    try:
        if counts.min() >= 2:
            return train_test_split(indices, test_size=fraction, random_state=seed,
                                    stratify=labels)
    except ValueError:
        pass
    return train_test_split(indices, test_size=fraction, random_state=seed)


def split_indices(labels, test_fraction, validation_fraction, seed):
    """Stratified train / validation / test partition of the sample indices.

    The validation split is validation_fraction of what remains after the test split is taken.
    Splits too small to hold both classes are drawn unstratified.

    Returns:
        dict: split name -> sorted list of indices.
    """
    labels = numpy.asarray(labels, dtype=int)
    indices = numpy.arange(labels.size)
    rest, test = _split(indices, labels, test_fraction, seed)
    train, validation = _split(rest, labels[rest], validation_fraction, seed)
    return {"train": sorted(int(index) for index in train),
            "validation": sorted(int(index) for index in validation),
            "test": sorted(int(index) for index in test)}


def write_dataset(directory, cfg, samples, oracle):
    """Write the five dataset files.

    Args:
        directory (str or Path): The dataset folder, created if needed.
        cfg (SynthConfig): The configuration the samples come from.
        samples (list): The Sample objects, in index order.
        oracle (OracleReport): The AUC ceilings of the configuration.

    Raises:
        OSError: If a file cannot be written.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.config_hash

    images = numpy.stack([sample.image for sample in samples]).astype(IMAGE_DTYPE)
    images.tofile(directory / IMAGES_FILE)
    write_json(directory / DESCRIPTOR_FILE, {
        "count": len(samples), "channels": images.shape[1], "height": images.shape[2],
        "width": images.shape[3], "dtype": "float32", "task": cfg.task,
        "config": cfg.to_dict(), "config_hash": config_hash})

    rows = []
    for index, sample in enumerate(samples):
        row = {"exam_id": index, "image_id": index}
        row.update(sample.record.to_row())
        row.update({"label_malignancy": sample.label_malignancy,
                    "label_calcification": sample.label_calcification})
        rows.append(row)
    write_metadata_csv(directory / METADATA_FILE, rows)

    labels = [getattr(sample, "label_" + cfg.task) for sample in samples]
    splits = split_indices(labels, cfg.test_fraction, cfg.validation_fraction, cfg.seed)
    splits["config_hash"] = config_hash
    write_json(directory / SPLITS_FILE, splits)

    write_json(directory / ORACLE_FILE, {
        "auc_image_only": oracle.auc_image_only, "auc_joint": oracle.auc_joint,
        "gap": oracle.gap, "n_mc": oracle.n_mc, "seed": oracle.seed,
        "config_hash": config_hash})


@dataclass
class SyntheticDataset:
    """A dataset read back from disk.

    Attributes:
        path (Path): The dataset folder.
        images (ndarray): count x channels x height x width, f32.
        records (list): The MetadataRecord of every image.
        labels (dict): task -> int array of labels.
        splits (dict): split name -> index array.
        descriptor (dict): The image descriptor, including the generating configuration.
        oracle (dict): The AUC ceilings report.
    """
    path: Path
    images: numpy.ndarray
    records: list
    labels: dict
    splits: dict
    descriptor: dict
    oracle: dict

    @property
    def config_hash(self):
        return self.descriptor["config_hash"]

    def __len__(self):
        return self.images.shape[0]


def load_dataset(directory):
    """Read a dataset written by write_dataset.

    Raises:
        FileNotFoundError: If a dataset file is missing.
        ValueError: If the files disagree with each other.
    """
    directory = Path(directory)
    missing = [name for name in DATASET_FILES if not (directory / name).is_file()]
    if missing:
        raise FileNotFoundError("Dataset " + str(directory) + " lacks " + ", ".join(missing))

    descriptor = read_json(directory / DESCRIPTOR_FILE)
    shape = (descriptor["count"], descriptor["channels"], descriptor["height"],
             descriptor["width"])
    images = numpy.fromfile(directory / IMAGES_FILE, dtype=IMAGE_DTYPE)
    if images.size != numpy.prod(shape):
        raise ValueError("Images file holds " + str(images.size) + " values, the descriptor "
                         "announces " + str(shape))
    images = images.reshape(shape).astype(numpy.float32)

    frame = read_metadata_csv(directory / METADATA_FILE)
    if len(frame) != shape[0]:
        raise ValueError("Metadata file has " + str(len(frame)) + " rows for " + str(shape[0]) +
                         " images")
    labels = {task: frame["label_" + task].astype(int).to_numpy() for task in TASKS}

    splits_document = read_json(directory / SPLITS_FILE)
    if splits_document.get("config_hash") != descriptor["config_hash"]:
        raise ValueError("Split manifest of " + str(directory) + " belongs to another dataset")
    splits = {name: numpy.asarray(splits_document[name], dtype=int) for name in SPLITS}

    return SyntheticDataset(directory, images, records_from_frame(frame), labels, splits,
                            descriptor, read_json(directory / ORACLE_FILE))
