"""Module containing the Monte-Carlo estimate of the best achievable AUCs of a synthetic dataset.

The image evidence is summarized by the brightest lesion-scale contrast of the image: the texture
is modelled as M independent cells of N(0, texture_amplitude^2) and a planted lesion shifts one of
them by its amplitude. The metadata evidence is exact: discretized, clipped normal ages and
categorical densities (and BI-RADS when reported). Scoring with the true likelihood ratio gives the
Bayes-optimal ranking, hence the AUC ceilings of an image-only and of an image-and-report model.

The image part is a surrogate of generate_sample: it leaves out the per-pixel background noise
(background_sigma), the clipping of pixels to [0, 1] and the lesion footprint (lesion_sigma), so
both AUCs are exact for the surrogate and approximate for the rendered images. The joint minus
image-only gap is the quantity the metadata controls and is far less sensitive to the surrogate.
"""
from typing import NamedTuple
import numpy
from scipy.special import log_ndtr, logsumexp, ndtri
from scipy.stats import norm, rankdata

from .samplegenerator import AGE_RANGE, BIRADS_GIVEN_LABEL

MIN_SAMPLES = 10_000
LOG_FLOOR = 1e-12


class OracleReport(NamedTuple):
    auc_image_only: float
    auc_joint: float
    n_mc: int
    seed: int

    @property
    def gap(self):
        return self.auc_joint - self.auc_image_only


def texture_cells(cfg):
    """Number of independent lesion-sized texture cells of an image (at least 2)."""
    area = cfg.image_size * cfg.image_size
    return max(2, int(round(area / (4.0 * numpy.pi * cfg.texture_sigma ** 2))))


def amplitude_components(cfg, label):
    """(weight, mean, sd) of the normal components of the planted amplitude; a zero-sd, zero-mean
    component stands for no lesion at all."""
    if label:
        components = [(cfg.strong_probability, cfg.strong_amplitude_mean, cfg.strong_amplitude_sd),
                      (1.0 - cfg.strong_probability, cfg.faint_amplitude_mean,
                       cfg.faint_amplitude_sd)]
    else:
        components = [(cfg.distractor_probability, cfg.distractor_amplitude_mean,
                       cfg.distractor_amplitude_sd),
                      (1.0 - cfg.distractor_probability, 0.0, 0.0)]
    return [component for component in components if component[0] > 0.0]


def draw_image_evidence(cfg, labels, rng):
    """Brightest cell contrast of each simulated image."""
    sigma, cells = cfg.texture_amplitude, texture_cells(cfg)
    n_samples = labels.size
    amplitudes = numpy.zeros(n_samples)
    for label in (0, 1):
        chosen = labels == label
        components = amplitude_components(cfg, label)
        weights = numpy.array([weight for weight, _, _ in components])
        picks = rng.choice(len(components), size=n_samples, p=weights / weights.sum())
        means = numpy.array([mean for _, mean, _ in components])[picks]
        sds = numpy.array([sd for _, _, sd in components])[picks]
        draws = rng.normal(means, sds)
        amplitudes[chosen] = draws[chosen]
    others = sigma * ndtri(rng.random(n_samples) ** (1.0 / (cells - 1)))
    return numpy.maximum(others, amplitudes + sigma * rng.normal(size=n_samples))


def image_log_likelihood(cfg, evidence, label):
    """log density of the brightest cell contrast given the label."""
    sigma, cells = cfg.texture_amplitude, texture_cells(cfg)
    standard = evidence / sigma
    log_cdf_others = (cells - 1) * log_ndtr(standard)
    log_pdf_others = (numpy.log(cells - 1) + norm.logpdf(standard) - numpy.log(sigma) +
                      (cells - 2) * log_ndtr(standard))
    terms = []
    for weight, mean, sd in amplitude_components(cfg, label):
        spread = numpy.sqrt(sd * sd + sigma * sigma)
        shifted = (evidence - mean) / spread
        lesion_term = numpy.logaddexp(log_pdf_others + log_ndtr(shifted),
                                      log_cdf_others + norm.logpdf(shifted) - numpy.log(spread))
        terms.append(numpy.log(weight) + lesion_term)
    return logsumexp(numpy.stack(terms), axis=0)


def age_log_probabilities(cfg, label):
    """log P(age | label) for every age of the clipped range."""
    mean, sd = cfg.age_distribution(label)
    ages = numpy.arange(AGE_RANGE[0], AGE_RANGE[1] + 1)
    upper = norm.cdf((ages + 0.5 - mean) / sd)
    lower = norm.cdf((ages - 0.5 - mean) / sd)
    upper[-1], lower[0] = 1.0, 0.0
    return numpy.log(numpy.maximum(upper - lower, LOG_FLOOR))


def draw_metadata_evidence(cfg, labels, rng):
    """Log likelihood ratio of the simulated metadata; missing fields contribute nothing."""
    ratio = numpy.zeros(labels.size)
    present = rng.random((3, labels.size)) >= cfg.missing_rate

    ages = numpy.empty(labels.size, dtype=int)
    densities = numpy.empty(labels.size, dtype=int)
    birads = numpy.empty(labels.size, dtype=int)
    for label in (0, 1):
        chosen = labels == label
        mean, sd = cfg.age_distribution(label)
        ages[chosen] = numpy.clip(numpy.round(rng.normal(mean, sd, chosen.sum())), *AGE_RANGE)
        densities[chosen] = rng.choice(4, size=chosen.sum(), p=cfg.density_probabilities(label))
        birads[chosen] = rng.choice(BIRADS_GIVEN_LABEL[label], size=chosen.sum())

    age_ratio = age_log_probabilities(cfg, 1) - age_log_probabilities(cfg, 0)
    ratio += numpy.where(present[0], age_ratio[ages - AGE_RANGE[0]], 0.0)

    density_ratio = (numpy.log(numpy.maximum(cfg.density_probabilities(1), LOG_FLOOR)) -
                     numpy.log(numpy.maximum(cfg.density_probabilities(0), LOG_FLOOR)))
    ratio += numpy.where(present[1], density_ratio[densities], 0.0)

    if cfg.include_birads:
        def birads_probabilities(label):
            return numpy.array([1.0 / 3.0 if value in BIRADS_GIVEN_LABEL[label] else 0.0
                                for value in range(7)])
        birads_ratio = (numpy.log(numpy.maximum(birads_probabilities(1), LOG_FLOOR)) -
                        numpy.log(numpy.maximum(birads_probabilities(0), LOG_FLOOR)))
        ratio += numpy.where(present[2], birads_ratio[birads], 0.0)
    return ratio


def rank_auc(scores, labels):
    """Mann-Whitney AUC with midranks for ties."""
    ranks = rankdata(scores)
    positives = labels == 1
    n_pos, n_neg = positives.sum(), (~positives).sum()
    return float((ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def bayes_auc_oracle(cfg, n_mc=None, seed=None):
    """Estimate the AUC of the Bayes-optimal image-only and image-plus-metadata classifiers.

    Labels are drawn balanced: the AUC of a likelihood-ratio score does not depend on prevalence.

    Args:
        cfg (SynthConfig): The generative model.
        n_mc (int): Number of simulated exams, cfg.oracle_samples when None.
        seed (int): Monte-Carlo seed, cfg.seed when None.

    Returns:
        OracleReport: Both AUCs with the sample count and the seed.

    Raises:
        ValueError: If fewer than 10^4 exams are requested.
    """
    n_mc = cfg.oracle_samples if n_mc is None else int(n_mc)
    seed = cfg.seed if seed is None else int(seed)
    if n_mc < MIN_SAMPLES:
        raise ValueError("The oracle needs at least " + str(MIN_SAMPLES) + " samples, got " +
                         str(n_mc))

    rng = numpy.random.default_rng([seed, 0x0AC1E])
    labels = (numpy.arange(n_mc) < n_mc // 2).astype(int)
    evidence = draw_image_evidence(cfg, labels, rng)
    image_score = image_log_likelihood(cfg, evidence, 1) - image_log_likelihood(cfg, evidence, 0)
    joint_score = image_score + draw_metadata_evidence(cfg, labels, rng)
    return OracleReport(rank_auc(image_score, labels), rank_auc(joint_score, labels), n_mc, seed)
