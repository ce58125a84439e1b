"""Module containing the ROC-AUC computations."""
import numpy
from sklearn.metrics import roc_curve, auc as area_under_curve


class UndefinedMetricError(ValueError):
    """Raised when a metric is requested on data it is not defined for."""


def _checked(scores, labels):
    scores = numpy.asarray(scores, dtype=numpy.float64).reshape(-1)
    labels = numpy.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ValueError("Got " + str(scores.size) + " scores for " + str(labels.size) +
                         " labels")
    if not numpy.all((labels == 0) | (labels == 1)):
        raise ValueError("Labels must be 0 or 1")
    if labels.min(initial=1) == labels.max(initial=0):
        raise UndefinedMetricError("AUC needs both classes, got " + str(labels.size) +
                                   " samples of a single class")
    return scores, labels.astype(int)


def auc(scores, labels):
    """Probability that a positive outscores a negative, ties counting one half.

    Every (positive, negative) pair is counted through a binary search of the sorted negative
    scores.

    Args:
        scores (sequence): Real scores, higher meaning more likely positive.
        labels (sequence): 0 / 1 labels.

    Returns:
        float: The AUC in [0, 1].

    Raises:
        UndefinedMetricError: If a class is absent.
        ValueError: If the lengths differ or labels are not binary.
    """
    scores, labels = _checked(scores, labels)
    negatives = numpy.sort(scores[labels == 0])
    positives = scores[labels == 1]
    below = numpy.searchsorted(negatives, positives, side="left")
    tied = numpy.searchsorted(negatives, positives, side="right") - below
    return float((below.sum() + 0.5 * tied.sum()) / (positives.size * negatives.size))


def auc_trapezoid(scores, labels):
    """Area under the ROC curve by trapezoidal integration."""
    scores, labels = _checked(scores, labels)
    false_positive_rate, true_positive_rate, _ = roc_curve(labels, scores)
    return float(area_under_curve(false_positive_rate, true_positive_rate))
