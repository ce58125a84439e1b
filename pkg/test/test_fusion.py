"""Module containing the tests of the attention layers, aggregators and classification head"""
import math
import numpy
import numpy.testing as npt
import pytest
from tensorautodiff import Tensor, Graph, DimensionError, backward, grad_check, \
    functional as F
from fusion import MultiHeadAttention, CoAttentionBlock, AggregatorConfig, Aggregator, \
    FusionOutput, ClassificationHead, ModelConfig, TextGuidedClassifier, ContractError, mha, \
    co_attention_block, aggregate, classify, KINDS

F64 = numpy.float64


def _random(seed, *shape):
    return numpy.random.default_rng(seed).normal(size=shape)


def _rng(seed):
    return numpy.random.default_rng(seed)


def _naive_attention(query, key_value, attention):
    """Per-head loop reference of multi-head attention."""
    def project(linear, x):
        return x @ linear.weight.data.astype(F64) + linear.bias.data.astype(F64)

    q, k, v = (project(attention.query, query), project(attention.key, key_value),
               project(attention.value, key_value))
    heads = []
    for head in range(attention.heads):
        columns = slice(head * attention.head_dim, (head + 1) * attention.head_dim)
        output = numpy.zeros((query.shape[0], attention.head_dim))
        for row in range(query.shape[0]):
            scores = numpy.array([q[row, columns] @ k[key, columns]
                                  for key in range(key_value.shape[0])])
            scores = scores / math.sqrt(attention.head_dim)
            weights = numpy.exp(scores - scores.max())
            weights = weights / weights.sum()
            output[row] = sum(weights[key] * v[key, columns] for key in range(key_value.shape[0]))
        heads.append(output)
    return project(attention.output, numpy.concatenate(heads, axis=1))


@pytest.mark.parametrize("n_query, n_key, channels, heads", [
    [3, 3, 8, 2], [4, 2, 16, 4], [1, 4, 4, 1], [2, 3, 12, 3]])
def test_mha_matches_per_head_loop(n_query, n_key, channels, heads):
    attention = MultiHeadAttention(channels, heads, _rng(0))
    query, key_value = _random(1, n_query, channels), _random(2, n_key, channels)
    with Graph(dtype=F64):
        output = mha(Tensor(query, dtype=F64), Tensor(key_value, dtype=F64), attention).data
    npt.assert_allclose(output, _naive_attention(query, key_value, attention), atol=1e-6)


def test_mha_single_key_returns_value_path():
    attention = MultiHeadAttention(4, 2, _rng(3))
    key_value = _random(4, 1, 4)
    with Graph(dtype=F64):
        output = mha(Tensor(_random(5, 3, 4)), Tensor(key_value), attention).data
        value_path = attention.output(attention.value(Tensor(key_value))).data
    npt.assert_allclose(output, numpy.repeat(value_path, 3, axis=0), atol=1e-10)


def test_mha_equal_keys_attend_uniformly():
    attention = MultiHeadAttention(8, 4, _rng(6))
    attention.recorder = []
    mha(Tensor(_random(7, 2, 8)), Tensor(numpy.tile(_random(8, 1, 8), (5, 1))), attention)
    npt.assert_allclose(attention.recorder[0], 0.2, atol=1e-6)


def test_mha_rejects_indivisible_width():
    with pytest.raises(DimensionError):
        MultiHeadAttention(6, 4, _rng(0))


def _zero_residual_branches(block):
    for stream in (block.vision, block.text):
        for step in (stream.self_attention, stream.cross_attention):
            step.attention.output.weight.data[...] = 0.0
            step.attention.output.bias.data[...] = 0.0
        stream.feed_forward.mlp.output.weight.data[...] = 0.0
        stream.feed_forward.mlp.output.bias.data[...] = 0.0


def test_co_attention_with_zero_branches_only_normalizes():
    block = CoAttentionBlock(8, 4, _rng(9))
    _zero_residual_branches(block)
    vision, text = _random(10, 4, 8), _random(11, 4, 8)
    out_vision, out_text = co_attention_block(Tensor(vision), Tensor(text), block)
    ones, zeros = Tensor(numpy.ones(8)), Tensor(numpy.zeros(8))

    def normalize(x):
        for _ in range(3):
            x = F.layer_norm(x, ones, zeros)
        return x.data

    npt.assert_allclose(out_vision.data, normalize(Tensor(vision)), atol=1e-5)
    npt.assert_allclose(out_text.data, normalize(Tensor(text)), atol=1e-5)


@pytest.mark.parametrize("cross_order", ["parallel", "sequential"])
def test_co_attention_streams_interact(cross_order):
    block = CoAttentionBlock(8, 2, _rng(12), cross_order=cross_order)
    text = Tensor(_random(13, 4, 8), requires_grad=True)
    out_vision, _ = block(Tensor(_random(14, 4, 8)), text)
    backward(F.sum(out_vision * Tensor(_random(15, 4, 8))))
    assert numpy.linalg.norm(text.grad) > 0


def test_co_attention_is_symmetric_under_tied_streams():
    block = CoAttentionBlock(8, 2, _rng(16))
    block.text = block.vision
    vision, text = Tensor(_random(17, 3, 8)), Tensor(_random(18, 3, 8))
    first_vision, first_text = block(vision, text)
    second_vision, second_text = block(text, vision)
    npt.assert_array_equal(first_vision.data, second_text.data)
    npt.assert_array_equal(first_text.data, second_vision.data)


def test_co_attention_rejects_different_streams():
    with pytest.raises(DimensionError):
        CoAttentionBlock(8, 2, _rng(0))(Tensor(numpy.zeros((3, 8))), Tensor(numpy.zeros((4, 8))))


@pytest.mark.parametrize("kind", ["co", "merged", "cross", "vision_self", "vision_none"])
def test_zero_depth_aggregators_are_identity(kind):
    aggregator = Aggregator(AggregatorConfig(kind, depth=0), 8)
    vision, text = _random(19, 4, 8), _random(20, 4, 8)
    fused = aggregate(Tensor(vision), Tensor(text), aggregator)
    npt.assert_allclose(fused.vision.data, vision, rtol=1e-6)
    if kind not in ("vision_self", "vision_none"):
        npt.assert_allclose(fused.text.data, text, rtol=1e-6)


def test_merged_aggregator_runs_on_joint_tokens():
    aggregator = Aggregator(AggregatorConfig("merged", depth=1, heads=2), 8)
    fused = aggregator(Tensor(_random(21, 5, 8)), Tensor(_random(22, 5, 8)))
    assert fused.merged.shape == (10, 8)
    assert fused.vision.shape == (5, 8) and fused.text.shape == (5, 8)


def test_co_aggregator_chains_its_blocks():
    aggregator = Aggregator(AggregatorConfig("co", heads=2), 8, seed=3)
    assert len(aggregator.blocks) == 3
    vision, text = Tensor(_random(23, 4, 8)), Tensor(_random(24, 4, 8))
    fused = aggregator(vision, text)
    for block in aggregator.blocks:
        vision, text = block(vision, text)
    npt.assert_allclose(fused.vision.data, vision.data, atol=1e-6)
    npt.assert_allclose(fused.text.data, text.data, atol=1e-6)


def test_default_depths_and_heads():
    assert AggregatorConfig("co").resolved_depth == 3
    assert AggregatorConfig("co").resolved_heads == 4
    assert AggregatorConfig("vision_self").resolved_depth == 4
    assert AggregatorConfig("vision_self").resolved_heads == 8
    assert AggregatorConfig("merged").resolved_depth == 4
    assert AggregatorConfig("cross").resolved_depth == 3
    with pytest.raises(ValueError):
        AggregatorConfig("attention")


def test_naive_mlp_has_no_token_level_output():
    aggregator = Aggregator(AggregatorConfig("naive_mlp"), 4)
    fused = aggregator(Tensor(_random(25, 3, 4)), Tensor(_random(26, 3, 4)))
    assert fused.vision.shape == (4,)
    with pytest.raises(ContractError):
        fused.tokens()


def test_naive_mlp_zero_text_changes_only_the_text_half():
    aggregator = Aggregator(AggregatorConfig("naive_mlp"), 4)
    head = ClassificationHead(8, _rng(27))
    vision = Tensor(_random(28, 3, 4))
    with_text = head.features(aggregator(vision, Tensor(_random(29, 3, 4)))).data
    zero_text = head.features(aggregator(vision, Tensor(numpy.zeros((3, 4))))).data
    npt.assert_array_equal(with_text[:4], zero_text[:4])
    npt.assert_array_equal(zero_text[4:], 0.0)


def test_classify_is_invariant_to_token_permutations():
    head = ClassificationHead(8, _rng(30), hidden=16, output=8)
    vision, text = _random(31, 5, 4), _random(32, 5, 4)
    logit = classify(FusionOutput(Tensor(vision), Tensor(text)), head).data
    permuted = classify(FusionOutput(Tensor(vision[[3, 1, 4, 0, 2]]),
                                     Tensor(text[[4, 3, 2, 1, 0]])), head).data
    assert logit.shape == ()
    npt.assert_array_equal(logit, permuted)


def test_classify_zero_features_follow_bias_path():
    head = ClassificationHead(4, _rng(33), hidden=6, output=5)
    with Graph(dtype=F64):
        logit = classify(FusionOutput(Tensor(numpy.zeros((2, 2))), Tensor(numpy.zeros((2, 2)))),
                         head).item()
        hidden = F.gelu(Tensor(head.fusion_hidden.bias.data, dtype=F64))
        hidden = F.gelu(head.fusion_output(hidden))
        expected = head.classifier(hidden).item()
    assert math.isfinite(logit)
    assert abs(logit - expected) < 1e-12


def test_classify_rejects_mismatched_width():
    head = ClassificationHead(6, _rng(34))
    with pytest.raises(DimensionError):
        head(FusionOutput(Tensor(numpy.zeros((2, 4))), Tensor(numpy.zeros((2, 4)))))


def _toy_model(kind="co", **overrides):
    settings = dict(vocab_size=12, image_size=16, vision_channels=(4, 4, 4, 4), channel_dim=4,
                    text_dim=4, max_text_length=8, n_tokens=4, aggregator=kind, depth=1,
                    heads=2, fusion_hidden=8, fusion_output=6, seed=7)
    settings.update(overrides)
    return TextGuidedClassifier(ModelConfig(**settings))


@pytest.mark.parametrize("kind", KINDS)
def test_model_forward_for_every_aggregator(kind):
    model = _toy_model(kind)
    images = Tensor(_rng(35).uniform(size=(3, 1, 16, 16)))
    ids = _rng(36).integers(0, 12, size=(3, 8))
    logits = model(images, ids)
    assert logits.shape == (3,)
    assert numpy.all(numpy.isfinite(logits.data))
    assert model.vision_only == (kind in ("vision_self", "vision_none"))


def test_attention_rows_sum_to_one_in_every_head():
    model = _toy_model("co")
    recorder = []
    model.record_attention(recorder)
    model(Tensor(_rng(37).uniform(size=(2, 1, 16, 16))), _rng(38).integers(0, 12, size=(2, 8)))
    assert len(recorder) == 4
    for weights in recorder:
        assert numpy.max(numpy.abs(weights.sum(axis=-1) - 1)) < 1e-6


def test_model_logit_is_invariant_to_post_tokenizer_permutations():
    model = _toy_model("co", n_tokens=6)
    vision, text = model.tokens(Tensor(_rng(39).uniform(size=(1, 16, 16))),
                                _rng(40).integers(0, 12, size=8))
    logit = model.classify_tokens(vision, text).item()
    permuted = model.classify_tokens(Tensor(vision.data[[5, 2, 0, 1, 4, 3]]),
                                     Tensor(text.data[[1, 0, 5, 4, 3, 2]])).item()
    assert abs(logit - permuted) < 1e-5


def test_model_gradient_with_respect_to_image():
    model = _toy_model("co")
    ids = _rng(41).integers(0, 12, size=8)
    image = _rng(42).uniform(0.1, 0.9, size=(1, 16, 16))
    fn = lambda x: F.bce_with_logits(model(x, ids), 1)
    assert grad_check(fn, image) < 1e-4


def test_co_attention_block_with_bce_passes_gradient_check():
    block = CoAttentionBlock(4, 2, _rng(43))
    head = ClassificationHead(8, _rng(44), hidden=8, output=6)
    text = Tensor(_random(45, 3, 4), dtype=F64)

    def fn(vision):
        fused_vision, fused_text = block(vision, text)
        return F.bce_with_logits(head(FusionOutput(fused_vision, fused_text)), 0)

    assert grad_check(fn, _random(46, 3, 4)) < 1e-4
