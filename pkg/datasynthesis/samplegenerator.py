"""Module containing the generative model of one synthetic exam image with its metadata."""
from dataclasses import dataclass
import numpy
from scipy.ndimage import gaussian_filter

from reportsynthesis import MetadataRecord, categorical_domains

from .synthconfig import DENSITY_CATEGORIES, EXAM_YEARS

AGE_RANGE = (35, 85)
BIRADS_GIVEN_LABEL = {0: (1, 2, 3), 1: (3, 4, 5)}
RECORD_FIELDS = ("age", "nationality", "device_manufacturer", "device_model", "institution",
                 "exam_year", "breast_density", "birads")
CLUSTER_RADIUS = 4.0


@dataclass
class Sample:
    """One image with its record and both task labels (the task not planted is 0)."""
    image: numpy.ndarray
    record: MetadataRecord
    label_malignancy: int
    label_calcification: int
    amplitude: float


def sample_rng(seed, index):
    """Counter-based generator of one sample: Philox keyed by the seed, counter set by the index,
    so that sample i is the same whatever the generation order."""
    return numpy.random.Generator(numpy.random.Philox(key=seed, counter=[0, 0, index, 0]))


def draw_amplitude(cfg, label, rng):
    """Lesion amplitude for a label, or None when a negative carries no distractor."""
    if label:
        if rng.random() < cfg.strong_probability:
            return rng.normal(cfg.strong_amplitude_mean, cfg.strong_amplitude_sd)
        return rng.normal(cfg.faint_amplitude_mean, cfg.faint_amplitude_sd)
    if rng.random() < cfg.distractor_probability:
        return rng.normal(cfg.distractor_amplitude_mean, cfg.distractor_amplitude_sd)
    return None


def _gaussian_spot(size, center, sigma):
    rows, columns = numpy.mgrid[0:size, 0:size]
    squared = (rows - center[0]) ** 2 + (columns - center[1]) ** 2
    return numpy.exp(-squared / (2.0 * sigma * sigma))


def plant_lesion(cfg, amplitude, rng):
    """Lesion image: one Gaussian blob (malignancy) or a cluster of near-pixel dots
    (calcification), all with the drawn amplitude."""
    size = cfg.image_size
    margin = min(size / 2.0, 2.0 * cfg.lesion_sigma + CLUSTER_RADIUS)
    center = rng.uniform(margin, size - margin, size=2)
    if cfg.task == "malignancy":
        return amplitude * _gaussian_spot(size, center, cfg.lesion_sigma)

    lesion = numpy.zeros((size, size))
    dots = rng.integers(cfg.calcification_min_dots, cfg.calcification_max_dots + 1)
    for offset in rng.uniform(-CLUSTER_RADIUS, CLUSTER_RADIUS, size=(dots, 2)):
        lesion = numpy.maximum(lesion, _gaussian_spot(size, center + offset,
                                                      cfg.calcification_dot_sigma))
    return amplitude * lesion


def draw_texture(cfg, rng):
    """Smooth tissue texture: filtered white noise rescaled to a standard deviation of
    texture_amplitude."""
    texture = gaussian_filter(rng.normal(size=(cfg.image_size, cfg.image_size)),
                              cfg.texture_sigma, mode="wrap")
    return texture * (cfg.texture_amplitude / max(texture.std(), 1e-12))


def draw_record(cfg, label, rng):
    """Metadata of one exam given its label; each field is missing with probability missing_rate."""
    domains = categorical_domains()
    mean, sd = cfg.age_distribution(label)
    values = {
        "age": int(numpy.clip(numpy.round(rng.normal(mean, sd)), *AGE_RANGE)),
        "nationality": _choose(cfg.pool("nationality"), rng),
        "device_manufacturer": _choose(domains["device_manufacturer"], rng),
        "device_model": _choose(domains["device_model"], rng),
        "institution": _choose(cfg.pool("institution"), rng),
        "exam_year": int(rng.integers(EXAM_YEARS[0], EXAM_YEARS[1] + 1)),
        "breast_density": DENSITY_CATEGORIES[rng.choice(4, p=cfg.density_probabilities(label))],
        "birads": int(_choose(BIRADS_GIVEN_LABEL[label], rng)),
    }
    missing = rng.random(len(RECORD_FIELDS)) < cfg.missing_rate
    if not cfg.include_birads:
        values["birads"] = None
    return MetadataRecord(**{name: None if gone else values[name]
                             for name, gone in zip(RECORD_FIELDS, missing)})


def _choose(values, rng):
    return values[rng.integers(len(values))]


def generate_sample(cfg, index):
    """Draw sample index of the dataset described by cfg.

    Args:
        cfg (SynthConfig): The generative model.
        index (int): The sample index.

    Returns:
        Sample: The sample, image as an f32 1 x H x W array in [0, 1].
    """
    rng = sample_rng(cfg.seed, index)
    label = int(rng.random() < cfg.p_pos)
    record = draw_record(cfg, label, rng)

    size = cfg.image_size
    image = cfg.background_mean + cfg.background_sigma * rng.normal(size=(size, size))
    image = image + draw_texture(cfg, rng)
    amplitude = draw_amplitude(cfg, label, rng)
    if amplitude is not None:
        image = image + plant_lesion(cfg, amplitude, rng)
    image = numpy.clip(image, 0.0, 1.0).astype(numpy.float32)[None]

    malignancy = label if cfg.task == "malignancy" else 0
    calcification = label if cfg.task == "calcification" else 0
    return Sample(image, record, malignancy, calcification,
                  0.0 if amplitude is None else float(amplitude))


def generate_chunk(arguments):
    """Generate a contiguous range of samples (process-pool entry point)."""
    cfg, start, stop = arguments
    return [generate_sample(cfg, index) for index in range(start, stop)]
