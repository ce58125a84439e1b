"""Module containing the SynthConfig class describing a synthetic multi-modal dataset."""
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import List, Optional

from configuration import Configuration, configuration_hash
from reportsynthesis import categorical_domains

CONFIGURATION_DIR = Path(__file__).parent / "configuration"
CONFIGURATION_PATH = CONFIGURATION_DIR / "configuration.json"
SCHEMA_PATH = CONFIGURATION_DIR / "configuration.schema.json"

DENSITY_CATEGORIES = ("A", "B", "C", "D")
EXAM_YEARS = (2005, 2023)


@dataclass(frozen=True)
class SynthConfig:
    """Every constant of the generative model; see datasynthesis/configuration/configuration.json
    for the defaults."""
    n_samples: int
    image_size: int
    task: str
    p_pos: float
    background_mean: float
    background_sigma: float
    texture_amplitude: float
    texture_sigma: float
    lesion_sigma: float
    strong_amplitude_mean: float
    strong_amplitude_sd: float
    strong_probability: float
    faint_amplitude_mean: float
    faint_amplitude_sd: float
    distractor_probability: float
    distractor_amplitude_mean: float
    distractor_amplitude_sd: float
    calcification_min_dots: int
    calcification_max_dots: int
    calcification_dot_sigma: float
    density_probs_positive: List[float]
    density_probs_negative: List[float]
    age_mean_positive: float
    age_sd_positive: float
    age_mean_negative: float
    age_sd_negative: float
    metadata_shift: float
    missing_rate: float
    include_birads: bool
    nationality_pool: Optional[List[str]]
    institution_pool: Optional[List[str]]
    test_fraction: float
    validation_fraction: float
    oracle_samples: int
    seed: int
    multi_core_enable: bool
    multi_core_limit: int

    def __post_init__(self):
        for name in ("density_probs_positive", "density_probs_negative"):
            if abs(sum(getattr(self, name)) - 1.0) > 1e-6:
                raise ValueError(name + " must sum to 1")
        if self.calcification_min_dots > self.calcification_max_dots:
            raise ValueError("calcification_min_dots exceeds calcification_max_dots")
        domains = categorical_domains()
        for name, domain in (("nationality_pool", "nationality"),
                             ("institution_pool", "institution")):
            pool = getattr(self, name)
            if pool is not None and not set(pool) <= set(domains[domain]):
                raise ValueError(name + " holds values outside the " + domain + " domain: " +
                                 str(sorted(set(pool) - set(domains[domain]))))

    def to_dict(self):
        return asdict(self)

    @property
    def config_hash(self):
        return configuration_hash(self.to_dict())

    def pool(self, field):
        """Values a categorical field is drawn from."""
        configured = {"nationality": self.nationality_pool,
                      "institution": self.institution_pool}.get(field)
        return list(configured) if configured is not None else categorical_domains()[field]

    def density_probabilities(self, label):
        """Density distribution given the label, interpolated towards the label-free mixture
        as metadata_shift goes to 0."""
        positive, negative = self.density_probs_positive, self.density_probs_negative
        own = positive if label else negative
        return [mixture + self.metadata_shift * (value - mixture)
                for value, mixture in zip(own, self.marginal_density_probabilities())]

    def marginal_density_probabilities(self):
        return [self.p_pos * pos + (1 - self.p_pos) * neg
                for pos, neg in zip(self.density_probs_positive, self.density_probs_negative)]

    def age_distribution(self, label):
        """(mean, sd) of the age normal given the label, interpolated like the density."""
        mean_mix = self.p_pos * self.age_mean_positive + (1 - self.p_pos) * self.age_mean_negative
        sd_mix = self.p_pos * self.age_sd_positive + (1 - self.p_pos) * self.age_sd_negative
        mean = self.age_mean_positive if label else self.age_mean_negative
        sd = self.age_sd_positive if label else self.age_sd_negative
        return (mean_mix + self.metadata_shift * (mean - mean_mix),
                sd_mix + self.metadata_shift * (sd - sd_mix))


def load_synth_config(config_path=None, overrides=None):
    """Load the packaged defaults, overlay an optional user file and explicit overrides, validate.

    Args:
        config_path (str or Path): JSON document overriding some of the defaults.
        overrides (dict): Keys replacing the ones of the merged document (command-line flags).

    Returns:
        SynthConfig: The validated configuration.

    Raises:
        OSError: If a file cannot be read.
        JSONDecodeError: If a document is not valid JSON.
        ValidationError: If the merged document violates the schema.
        ValueError: If the document is inconsistent (probabilities, dot counts, pools).
    """
    configuration = Configuration(CONFIGURATION_PATH, SCHEMA_PATH, overrides_path=config_path,
                                  overrides=overrides)
    return SynthConfig(**configuration.field)
