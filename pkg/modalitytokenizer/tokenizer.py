"""Module containing the tokenizers mapping the vision feature map and the text token
matrix onto N tokens of width C."""
from dataclasses import dataclass
import numpy

from tensorautodiff import Module, Parameter, Linear, FeedForward, DimensionError, functional
from tensorautodiff.module import uniform_init

VARIANTS = ("feature_map", "embedding_linear", "embedding_mlp")


class ContractError(RuntimeError):
    """Raised when a component is used through an interface its configuration does not offer."""


@dataclass(frozen=True)
class TokenizerConfig:
    n_tokens: int = 256
    channel_dim: int = 128
    variant: str = "feature_map"

    def __post_init__(self):
        if self.n_tokens < 1:
            raise ValueError("n_tokens must be at least 1, got " + str(self.n_tokens))
        if self.variant not in VARIANTS:
            raise ValueError("Unknown tokenizer variant " + repr(self.variant) +
                             "; expected one of " + str(VARIANTS))


def spatial_projection(spatial_tokens, n_tokens):
    """H'W' x N matrix whose column n selects position n mod H'W' (N >= H'W') or averages the
    adaptive-pooling window n of the positions (N < H'W')."""
    if n_tokens >= spatial_tokens:
        return numpy.eye(spatial_tokens)[:, numpy.arange(n_tokens) % spatial_tokens]
    return functional.adaptive_pool_matrix(spatial_tokens, n_tokens).T


class VisualTokenizer(Module):
    """Token-axis linear projection of a flattened feature map, shared across channels.

    The C x H' x W' map is read as H'W' tokens of width C; one H'W' x N matrix (no bias) maps
    them onto N tokens. Every token starts as one spatial position (near the identity when
    H'W' == N, positions repeated cyclically when N > H'W') or as the average of a window of
    positions when N < H'W', plus small noise, so max pooling over tokens starts as a global
    max pool of the map.
    """

    def __init__(self, spatial_tokens, cfg, rng):
        self.cfg = cfg
        self.spatial_tokens = spatial_tokens
        self.projection = Parameter(spatial_projection(spatial_tokens, cfg.n_tokens) +
                                    rng.normal(0.0, 0.01, (spatial_tokens, cfg.n_tokens)))

    def forward(self, feature_map):
        channels, height, width = feature_map.shape[-3:]
        if height * width != self.spatial_tokens:
            raise DimensionError("Feature map of " + str(height * width) + " positions for a "
                                 "projection built for " + str(self.spatial_tokens))
        flat = functional.reshape(feature_map, tuple(feature_map.shape[:-2]) +
                                  (height * width,))
        return functional.swapaxes(functional.matmul(flat, self.projection), -1, -2)


class EmbeddingTokenizer(Module):
    """Linear map, or 2-layer GELU MLP of hidden width d_emb, from a pooled embedding to N·C."""

    def __init__(self, embedding_dim, cfg, rng):
        self.cfg = cfg
        width = cfg.n_tokens * cfg.channel_dim
        if cfg.variant == "embedding_mlp":
            self.network = FeedForward(embedding_dim, embedding_dim, rng, out_features=width)
        else:
            self.network = Linear(embedding_dim, width, rng)

    def forward(self, embedding):
        tokens = self.network(embedding)
        return functional.reshape(tokens, tuple(embedding.shape[:-1]) +
                                  (self.cfg.n_tokens, self.cfg.channel_dim))


class TextTokenizer(Module):
    """Channel projection d_text -> C per token, then token count L -> N.

    L > N: adaptive average pooling (no parameters). L < N: trainable L x N token-axis map.
    L == N: no token-axis operation.
    """

    def __init__(self, text_len, text_dim, cfg, rng):
        self.cfg = cfg
        self.text_len = text_len
        self.channel = Linear(text_dim, cfg.channel_dim, rng)
        self.up_projection = None
        if text_len < cfg.n_tokens:
            self.up_projection = Parameter(uniform_init(rng, text_len,
                                                        (text_len, cfg.n_tokens)))

    def forward(self, text_tokens):
        x = self.channel(text_tokens)
        length = x.shape[-2]
        if length != self.text_len:
            raise DimensionError("Text of " + str(length) + " tokens for a tokenizer built for " +
                                 str(self.text_len))
        if length > self.cfg.n_tokens:
            return functional.adaptive_avg_pool_tokens(x, self.cfg.n_tokens)
        if self.up_projection is not None:
            return functional.swapaxes(functional.matmul(functional.swapaxes(x, -1, -2),
                                                         self.up_projection), -1, -2)
        return x


class ModalityTokenizer(Module):
    """Both tokenizers of a run; the vision path follows the configured variant.

    Attributes:
        cfg (TokenizerConfig): Token count, width and variant.
        visual (VisualTokenizer): Present for the feature_map variant only.
        embedding (EmbeddingTokenizer): Present for the embedding variants only.
        text (TextTokenizer): None for vision-only models.
    """

    def __init__(self, cfg, feature_channels, feature_positions, text_len=None, text_dim=None,
                 seed=0):
        rng = numpy.random.default_rng([seed, 0x70c3])
        self.cfg = cfg
        self.visual = None
        self.embedding = None
        if cfg.variant == "feature_map":
            self.visual = VisualTokenizer(feature_positions, cfg, rng)
        else:
            self.embedding = EmbeddingTokenizer(feature_channels, cfg, rng)
        self.text = TextTokenizer(text_len, text_dim, cfg, rng) if text_len else None

    def visual_tokens(self, feature_map):
        """Tokens of a feature map (feature_map variant).

        Raises:
            ContractError: If the tokenizer was built for an embedding variant.
        """
        if self.visual is None:
            raise ContractError("visual_tokens needs the feature_map variant, configured: " +
                                self.cfg.variant)
        return self.visual(feature_map)

    def embedding_tokens(self, embedding):
        """Tokens of a pooled embedding (embedding_linear or embedding_mlp variant).

        Raises:
            ContractError: If the tokenizer was built for the feature_map variant.
        """
        if self.embedding is None:
            raise ContractError("embedding_tokens needs an embedding variant, configured: " +
                                self.cfg.variant)
        return self.embedding(embedding)

    def vision_tokens(self, feature_map):
        """Dispatch a feature map to the configured vision tokenizer."""
        if self.visual is not None:
            return self.visual_tokens(feature_map)
        return self.embedding_tokens(functional.mean(feature_map, axis=(-2, -1)))

    def text_tokens(self, text_tokens):
        if self.text is None:
            raise ContractError("This tokenizer has no text path")
        return self.text(text_tokens)


def visual_tokens(feature_map, tokenizer):
    return tokenizer.visual_tokens(feature_map)


def embedding_tokens(embedding, tokenizer):
    return tokenizer.embedding_tokens(embedding)


def text_tokens(text_matrix, tokenizer):
    return tokenizer.text_tokens(text_matrix)
