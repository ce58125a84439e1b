"""Module containing the numerical self-checks of the pipeline: gradients of every layer and
of the co-attention model, attention row sums, permutation invariance of the head, the AUC
against a second implementation and idempotent preprocessing."""
from pathlib import Path
from typing import NamedTuple
import json
import time
import numpy

from configuration import initialize_logger
from tensorautodiff import Tensor, Linear, LayerNorm, FeedForward, grad_check, \
    functional as F
from tensorautodiff.functional import Softmax
from encoders import VisionEncoder
from fusion import MultiHeadAttention, CoAttentionBlock, ClassificationHead, FusionOutput, \
    ModelConfig, TextGuidedClassifier
from training import auc, auc_trapezoid
from datasynthesis import preprocess

F64 = numpy.float64
FAULTS = ("unstable-softmax",)

GRADIENT_TOLERANCE = 1e-4
ROW_SUM_TOLERANCE = 1e-6
PERMUTATION_TOLERANCE = 1e-5
AUC_TOLERANCE = 1e-9
IDEMPOTENCE_TOLERANCE = 1e-6

ATTENTION_FORWARDS = 100
PERMUTATION_CASES = 50
AUC_CASES = 1000
PREPROCESS_CASES = 20
LARGE_LOGIT_SCALE = 1e4


class CheckResult(NamedTuple):
    """Outcome of one check: the worst measured error over its cases against its tolerance."""
    name: str
    measured: float
    tolerance: float
    cases: int
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(numpy.isfinite(self.measured)) and self.measured < self.tolerance

    def to_dict(self):
        return {"name": self.name, "measured": self.measured if numpy.isfinite(self.measured)
                else str(self.measured), "tolerance": self.tolerance, "cases": self.cases,
                "passed": self.passed, "seconds": round(self.seconds, 3)}


def _rng(seed):
    return numpy.random.default_rng([seed, 0x7e51])


def _random(seed, *shape):
    return _rng(seed).normal(size=shape)


def _worst(values):
    """Largest value, with NaN counted as an infinite error."""
    values = numpy.asarray(values, dtype=F64)
    return float(numpy.inf) if numpy.any(numpy.isnan(values)) else float(numpy.max(values))


def toy_model(kind="co", **overrides):
    """The 16 x 16 image / 8 report token classifier the checks run on."""
    settings = dict(vocab_size=12, image_size=16, vision_channels=(4, 4, 4, 4), channel_dim=4,
                    text_dim=4, max_text_length=8, n_tokens=4, aggregator=kind, depth=1,
                    heads=2, fusion_hidden=8, fusion_output=6, seed=11)
    settings.update(overrides)
    return TextGuidedClassifier(ModelConfig(**settings))


def layer_gradient_cases():
    """name -> (scalar function of one input, input array) for every layer kind."""
    upstream = lambda seed, *shape: Tensor(_random(seed, *shape), dtype=F64)
    linear = Linear(5, 3, _rng(1))
    norm = LayerNorm(6)
    feed_forward = FeedForward(4, 8, _rng(2))
    attention = MultiHeadAttention(4, 2, _rng(3))
    context = upstream(4, 5, 4)
    encoder = VisionEncoder((4, 4, 4, 4), 1, seed=5)
    conv_input = upstream(6, 1, 2, 6, 6)
    return {
        "matmul": (lambda x: F.sum(F.matmul(x, upstream(10, 4, 3)) * upstream(11, 2, 3)),
                   _random(12, 2, 4)),
        "softmax": (lambda x: F.sum(F.softmax(x) * upstream(13, 3, 5)), _random(14, 3, 5)),
        "layer_norm": (lambda x: F.sum(F.layer_norm(x, upstream(15, 6), upstream(16, 6)) *
                                       upstream(17, 2, 6)), _random(18, 2, 6)),
        "gelu": (lambda x: F.sum(F.gelu(x) * upstream(19, 7)), _random(20, 7)),
        "conv2d": (lambda x: F.sum(F.conv2d(x, upstream(21, 2, 2, 3, 3), padding=1) *
                                   upstream(22, 2, 5, 5)), _random(23, 2, 5, 5)),
        "conv2d_weights": (lambda w: F.sum(F.conv2d(conv_input, w, stride=2, padding=1) *
                                           upstream(24, 1, 3, 3, 3)), _random(25, 3, 2, 3, 3)),
        "max_pool2d": (lambda x: F.sum(F.max_pool2d(x) * upstream(26, 1, 2, 2, 2)),
                       _random(27, 1, 2, 4, 4)),
        "adaptive_avg_pool_tokens": (lambda x: F.sum(F.adaptive_avg_pool_tokens(x, 3) *
                                                     upstream(28, 3, 4)), _random(29, 5, 4)),
        "max_pool_tokens": (lambda x: F.sum(F.max_pool_tokens(x) * upstream(30, 4)),
                            _random(31, 6, 4)),
        "mean_pool_tokens": (lambda x: F.sum(F.mean_pool_tokens(x) * upstream(32, 4)),
                             _random(33, 6, 4)),
        "bce_with_logits": (lambda x: F.bce_with_logits(x, [1, 0, 1]), _random(34, 3)),
        "linear": (lambda x: F.sum(linear(x) * upstream(35, 2, 3)), _random(36, 2, 5)),
        "layer_norm_module": (lambda x: F.sum(norm(x) * upstream(37, 3, 6)), _random(38, 3, 6)),
        "feed_forward": (lambda x: F.sum(feed_forward(x) * upstream(39, 2, 4)),
                         _random(40, 2, 4)),
        "attention": (lambda x: F.sum(attention(x, context) * upstream(41, 3, 4)),
                      _random(42, 3, 4)),
        "vision_encoder": (lambda x: F.sum(encoder(x) * upstream(43, 4, 1, 1)),
                           _rng(44).uniform(0.1, 0.9, size=(1, 16, 16))),
    }


def model_gradient_cases():
    """Co-attention block and the whole co model, each ending in the BCE loss."""
    block = CoAttentionBlock(4, 2, _rng(50))
    head = ClassificationHead(8, _rng(51), hidden=8, output=6)
    text = Tensor(_random(52, 3, 4), dtype=F64)

    def block_loss(vision):
        fused_vision, fused_text = block(vision, text)
        return F.bce_with_logits(head(FusionOutput(fused_vision, fused_text)), 0)

    model = toy_model("co")
    ids = _rng(53).integers(0, 12, size=8)
    return {
        "co_attention_block_bce": (block_loss, _random(54, 3, 4)),
        "co_model_bce": (lambda image: F.bce_with_logits(model(image, ids), 1),
                         _rng(55).uniform(0.1, 0.9, size=(1, 16, 16))),
    }


def check_gradients(logger=None):
    """One result per layer and model case; error is the worst relative coordinate error."""
    results = []
    cases = dict(layer_gradient_cases(), **model_gradient_cases())
    for name, (fn, point) in cases.items():
        started = time.perf_counter()
        error = grad_check(fn, point, eps=1e-5)
        results.append(CheckResult("gradient/" + name, error, GRADIENT_TOLERANCE, point.size,
                                   time.perf_counter() - started))
        if logger:
            logger.debug("Gradient check of %s: %.3e.", name, error)
    return results


def check_attention_rows():
    """Attention rows of every head sum to 1, in model forwards and on huge softmax logits."""
    started = time.perf_counter()
    model = toy_model("co")
    recorder = []
    model.record_attention(recorder)
    rng = _rng(60)
    errors = []
    for _ in range(ATTENTION_FORWARDS):
        recorder.clear()
        model(Tensor(rng.uniform(size=(1, 16, 16))), rng.integers(0, 12, size=8))
        errors.extend(numpy.abs(weights.sum(axis=-1) - 1.0).max() for weights in recorder)
    model.record_attention(None)
    results = [CheckResult("attention/row_sums", _worst(errors), ROW_SUM_TOLERANCE,
                           ATTENTION_FORWARDS, time.perf_counter() - started)]

    started = time.perf_counter()
    logits = Tensor((_random(61, 16, 32) * LARGE_LOGIT_SCALE).astype(numpy.float32))
    with numpy.errstate(over="ignore", invalid="ignore"):
        rows = F.softmax(logits).data.sum(axis=-1)
    results.append(CheckResult("attention/large_logit_row_sums", _worst(numpy.abs(rows - 1.0)),
                               ROW_SUM_TOLERANCE, rows.size, time.perf_counter() - started))
    return results


def check_permutation_invariance():
    """The logit ignores the order of the post-tokenizer tokens of both streams."""
    started = time.perf_counter()
    model = toy_model("co", n_tokens=6)
    rng = _rng(70)
    errors = []
    for _ in range(PERMUTATION_CASES):
        vision, text = model.tokens(Tensor(rng.uniform(size=(1, 16, 16))),
                                    rng.integers(0, 12, size=8))
        logit = model.classify_tokens(vision, text).item()
        permuted = model.classify_tokens(Tensor(vision.data[rng.permutation(6)]),
                                         Tensor(text.data[rng.permutation(6)]))
        errors.append(abs(logit - permuted.item()))
    return [CheckResult("permutation/logit", _worst(errors), PERMUTATION_TOLERANCE,
                        PERMUTATION_CASES, time.perf_counter() - started)]


def check_auc():
    """Pair-counting AUC against the trapezoidal ROC area on random, often tied, scores."""
    started = time.perf_counter()
    rng = _rng(80)
    errors = []
    for _ in range(AUC_CASES):
        size = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, size=size)
        labels[:2] = [0, 1]
        scores = rng.integers(0, 10, size=size) if rng.random() < 0.5 else rng.normal(size=size)
        errors.append(abs(auc(scores, labels) - auc_trapezoid(scores, labels)))
    return [CheckResult("auc/trapezoid", _worst(errors), AUC_TOLERANCE, AUC_CASES,
                        time.perf_counter() - started)]


def check_preprocessing():
    """preprocess(preprocess(x)) == preprocess(x) on bright rectangles over a black frame."""
    started = time.perf_counter()
    rng = _rng(90)
    errors = []
    for _ in range(PREPROCESS_CASES):
        image = numpy.zeros((1, 64, 64))
        top, left = rng.integers(0, 20, size=2)
        bottom, right = rng.integers(40, 64, size=2)
        image[0, top:bottom, left:right] = rng.uniform(0.3, 1.0, size=(bottom - top,
                                                                      right - left))
        once = preprocess(image)
        errors.append(numpy.abs(preprocess(once) - once).max())
    return [CheckResult("preprocess/idempotence", _worst(errors), IDEMPOTENCE_TOLERANCE,
                        PREPROCESS_CASES, time.perf_counter() - started)]


def run_checks(inject_fault=None, logger=None):
    """Run every check, optionally with a deliberately broken component.

    Args:
        inject_fault (str): None, or "unstable-softmax" (softmax without max subtraction).
        logger (Logger): Debug detail of the gradient checks.

    Returns:
        list: CheckResult of every check.

    Raises:
        ValueError: If the fault is unknown.
    """
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError("Unknown fault " + repr(inject_fault) + "; expected one of " +
                         str(FAULTS))
    subtract_max = Softmax.subtract_max
    if inject_fault == "unstable-softmax":
        Softmax.subtract_max = False
    try:
        with numpy.errstate(over="ignore", invalid="ignore"):
            return (check_gradients(logger) + check_attention_rows() +
                    check_permutation_invariance() + check_auc() + check_preprocessing())
    finally:
        Softmax.subtract_max = subtract_max


class VerificationService:
    """Class representing the self-verification step of the pipeline.

    Attributes:
        _inject_fault (str): Optional fault to inject.
        _output_path (Path): Optional JSON report.
        _logger (Logger): The logger used in the module.
        results (list): The CheckResults of the last start().
        configuration_error (bool): True when the last start() failed on its inputs.
    """

    def start(self):
        """Run the checks and log one line per check.

        Returns:
            bool: True if every check passed, False otherwise.
        """
        self.results, self.configuration_error = [], False
        if self._inject_fault is not None and self._inject_fault not in FAULTS:
            self._logger.error("Unknown fault %r, expected one of %s.", self._inject_fault,
                               ", ".join(FAULTS))
            self.configuration_error = True
            return False
        if self._inject_fault:
            self._logger.warning("Injecting fault %s.", self._inject_fault)

        self.results = run_checks(self._inject_fault, self._logger)
        for result in self.results:
            log = self._logger.info if result.passed else self._logger.error
            log("%s %-40s measured %.3e, tolerance %.0e (%d cases, %.2fs)",
                "PASS" if result.passed else "FAIL", result.name, result.measured,
                result.tolerance, result.cases, result.seconds)

        failed = [result.name for result in self.results if not result.passed]
        if self._output_path is not None:
            try:
                self._output_path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._output_path, "w", encoding="utf-8", newline="\n") as report:
                    json.dump({"inject_fault": self._inject_fault, "passed": not failed,
                               "checks": [result.to_dict() for result in self.results]},
                              report, indent=1, sort_keys=True)
                    report.write("\n")
            except OSError as error:
                self._logger.error("The verification report could not be written: %s", error)
                return False

        if failed:
            self._logger.critical("%d of %d checks failed: %s", len(failed), len(self.results),
                                  ", ".join(failed))
            return False
        self._logger.info("All %d checks passed.", len(self.results))
        return True

    def __init__(self, inject_fault=None, output_path=None):
        self._inject_fault = inject_fault
        self._output_path = Path(output_path) if output_path is not None else None
        self._logger = initialize_logger(__name__)
        self.results = []
        self.configuration_error = False
