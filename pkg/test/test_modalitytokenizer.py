"""Module containing the tests of the modality tokenizers"""
import numpy
import numpy.testing as npt
import pytest
from tensorautodiff import Tensor, backward, functional as F
from modalitytokenizer import TokenizerConfig, ModalityTokenizer, ContractError, \
    visual_tokens, embedding_tokens, text_tokens


def _random(seed, *shape):
    return numpy.random.default_rng(seed).normal(size=shape)


def test_visual_tokens_identity_case():
    tokenizer = ModalityTokenizer(TokenizerConfig(1, 2), feature_channels=2, feature_positions=1)
    tokenizer.visual.projection.data[...] = 1.0
    tokens = visual_tokens(Tensor([[[0.5]], [[-2.0]]]), tokenizer)
    npt.assert_allclose(tokens.data, [[0.5, -2.0]])


def test_visual_tokens_square_projection_starts_near_identity():
    tokenizer = ModalityTokenizer(TokenizerConfig(16, 8), 8, 16)
    projection = tokenizer.visual.projection.data
    assert numpy.max(numpy.abs(projection - numpy.eye(16))) < 0.1
    assert visual_tokens(Tensor(_random(0, 8, 4, 4)), tokenizer).shape == (16, 8)


def test_visual_tokens_start_from_spatial_positions():
    tokenizer = ModalityTokenizer(TokenizerConfig(64, 8), 8, 16)
    projection = tokenizer.visual.projection.data
    assert numpy.max(numpy.abs(projection - numpy.tile(numpy.eye(16), (1, 4)))) < 0.1

    features = _random(5, 8, 4, 4)
    pooled = F.max_pool_tokens(visual_tokens(Tensor(features), tokenizer)).data
    npt.assert_allclose(pooled, features.reshape(8, 16).max(axis=1), atol=0.2)


def test_visual_tokens_fewer_than_positions_start_as_window_means():
    projection = ModalityTokenizer(TokenizerConfig(4, 8), 8, 16).visual.projection.data
    expected = numpy.kron(numpy.eye(4), numpy.full((4, 1), 0.25))
    assert numpy.max(numpy.abs(projection - expected)) < 0.1


def test_visual_tokens_shape_and_gradient():
    tokenizer = ModalityTokenizer(TokenizerConfig(64, 128), 128, 16)
    tokens = visual_tokens(Tensor(_random(1, 128, 4, 4)), tokenizer)
    assert tokens.shape == (64, 128)
    backward(F.sum(tokens * Tensor(_random(2, 64, 128))))
    assert numpy.linalg.norm(tokenizer.visual.projection.grad) > 0


def test_visual_tokens_depend_on_spatial_arrangement():
    tokenizer = ModalityTokenizer(TokenizerConfig(4, 3), 3, 4, seed=3)
    features = _random(4, 3, 2, 2)
    swapped = features[:, ::-1, :].copy()
    assert not numpy.allclose(tokenizer.vision_tokens(Tensor(features)).data,
                              tokenizer.vision_tokens(Tensor(swapped)).data)


@pytest.mark.parametrize("variant", ["embedding_linear", "embedding_mlp"])
def test_embedding_variants_ignore_spatial_arrangement(variant):
    tokenizer = ModalityTokenizer(TokenizerConfig(4, 3, variant), 3, 4, seed=3)
    features = _random(5, 3, 2, 2)
    swapped = features[:, ::-1, :].copy()
    npt.assert_allclose(tokenizer.vision_tokens(Tensor(features)).data,
                        tokenizer.vision_tokens(Tensor(swapped)).data, rtol=1e-5, atol=1e-6)


def test_embedding_tokens_examples():
    linear = ModalityTokenizer(TokenizerConfig(3, 4, "embedding_linear"), 5, 1)
    linear.embedding.network.bias.data[...] = 0.0
    npt.assert_array_equal(embedding_tokens(Tensor(numpy.zeros(5)), linear).data,
                           numpy.zeros((3, 4)))

    single = ModalityTokenizer(TokenizerConfig(1, 4, "embedding_linear"), 5, 1, seed=1)
    embedding = _random(6, 5)
    network = single.embedding.network
    npt.assert_allclose(embedding_tokens(Tensor(embedding), single).data,
                        [embedding @ network.weight.data + network.bias.data], rtol=1e-5,
                        atol=1e-6)

    mlp = ModalityTokenizer(TokenizerConfig(3, 4, "embedding_mlp"), 5, 1, seed=1)
    other = ModalityTokenizer(TokenizerConfig(3, 4, "embedding_linear"), 5, 1, seed=1)
    assert not numpy.allclose(embedding_tokens(Tensor(embedding), mlp).data,
                              embedding_tokens(Tensor(embedding), other).data)


def test_variant_mismatch_is_a_contract_error():
    feature_map = ModalityTokenizer(TokenizerConfig(2, 4), 4, 4)
    with pytest.raises(ContractError):
        embedding_tokens(Tensor(numpy.zeros(4)), feature_map)
    embedding = ModalityTokenizer(TokenizerConfig(2, 4, "embedding_mlp"), 4, 4)
    with pytest.raises(ContractError):
        visual_tokens(Tensor(numpy.zeros((4, 2, 2))), embedding)


def _identity_text_tokenizer(text_len, n_tokens, width=3):
    tokenizer = ModalityTokenizer(TokenizerConfig(n_tokens, width), width, 1, text_len=text_len,
                                  text_dim=width)
    tokenizer.text.channel.weight.data[...] = numpy.eye(width)
    tokenizer.text.channel.bias.data[...] = 0.0
    return tokenizer


def test_text_tokens_equal_length_is_channel_projection_only():
    tokenizer = _identity_text_tokenizer(4, 4)
    text = _random(7, 4, 3)
    npt.assert_allclose(text_tokens(Tensor(text), tokenizer).data, text, rtol=1e-6)


def test_text_tokens_down_sampling_averages_pairs():
    tokenizer = _identity_text_tokenizer(4, 2)
    text = _random(8, 4, 3)
    npt.assert_allclose(text_tokens(Tensor(text), tokenizer).data,
                        [(text[0] + text[1]) / 2, (text[2] + text[3]) / 2], rtol=1e-5,
                        atol=1e-6)


def test_text_tokens_up_sampling_reaches_both_projections():
    tokenizer = ModalityTokenizer(TokenizerConfig(4, 3), 3, 1, text_len=2, text_dim=5, seed=2)
    tokens = text_tokens(Tensor(_random(9, 2, 5)), tokenizer)
    assert tokens.shape == (4, 3)
    backward(F.sum(tokens * Tensor(_random(10, 4, 3))))
    assert numpy.linalg.norm(tokenizer.text.up_projection.grad) > 0
    assert numpy.linalg.norm(tokenizer.text.channel.weight.grad) > 0


@pytest.mark.parametrize("text_len, n_tokens, token_axis_parameters", [
    [8, 4, 0], [4, 4, 0], [2, 4, 8]])
def test_text_tokenizer_parameter_accounting(text_len, n_tokens, token_axis_parameters):
    tokenizer = ModalityTokenizer(TokenizerConfig(n_tokens, 3), 3, 1, text_len=text_len,
                                  text_dim=5)
    assert tokenizer.text.parameter_count() == 5 * 3 + 3 + token_axis_parameters


def test_output_shape_is_always_n_by_c():
    rng = numpy.random.default_rng(11)
    for _ in range(20):
        height, width, text_len = (int(value) for value in rng.integers(1, 7, size=3))
        n_tokens = int(rng.integers(1, 9))
        tokenizer = ModalityTokenizer(TokenizerConfig(n_tokens, 4), 4, height * width,
                                      text_len=text_len, text_dim=6)
        assert tokenizer.vision_tokens(Tensor(_random(12, 4, height, width))).shape == \
            (n_tokens, 4)
        assert tokenizer.text_tokens(Tensor(_random(13, text_len, 6))).shape == (n_tokens, 4)
