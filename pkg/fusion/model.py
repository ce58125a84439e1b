"""Module containing the complete text-guided classifier:
report ids and image -> encoders -> tokenizers -> aggregator -> classification head."""
from dataclasses import dataclass
from typing import Optional, Tuple
import numpy

from tensorautodiff import Module
from encoders import TextEncoder, VisionEncoder
from modalitytokenizer import TokenizerConfig, ModalityTokenizer

from .aggregator import AggregatorConfig, Aggregator
from .attention import MultiHeadAttention
from .classifier import ClassificationHead


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    image_size: int = 64
    input_channels: int = 1
    vision_channels: Tuple[int, ...] = (16, 32, 64, 128)
    channel_dim: int = 128
    text_dim: int = 64
    max_text_length: int = 64
    tokenizer_variant: str = "feature_map"
    n_tokens: int = 256
    aggregator: str = "co"
    depth: Optional[int] = None
    heads: Optional[int] = None
    pooling: str = "max"
    cross_order: str = "parallel"
    mlp_ratio: int = 4
    fusion_hidden: int = 1024
    fusion_output: int = 512
    seed: int = 0

    @classmethod
    def from_run_config(cls, field, vocab_size, seed=None):
        """Pick the architecture keys of a RunConfig dictionary."""
        keys = [name for name in cls.__dataclass_fields__ if name not in ("vocab_size", "seed")]
        values = {name: field[name] for name in keys if name in field}
        if "vision_channels" in values:
            values["vision_channels"] = tuple(values["vision_channels"])
        return cls(vocab_size=vocab_size, seed=field.get("seed", 0) if seed is None else seed,
                   **values)

    @property
    def aggregator_config(self):
        return AggregatorConfig(self.aggregator, self.depth, self.heads, self.pooling,
                                self.cross_order, self.mlp_ratio)

    @property
    def tokenizer_config(self):
        return TokenizerConfig(self.n_tokens, self.channel_dim, self.tokenizer_variant)


class TextGuidedClassifier(Module):
    """Image + report classifier; vision-only aggregators ignore the report entirely.

    Attributes:
        cfg (ModelConfig): The architecture.
        text_encoder (TextEncoder): Frozen text encoder, None for vision-only models.
        vision_encoder (VisionEncoder): Trainable ConvNet.
        tokenizer (ModalityTokenizer): Projections onto N x C tokens.
        aggregator (Aggregator): The fusion stack.
        head (ClassificationHead): Pooling and fusion MLP.
    """

    def __init__(self, cfg):
        """Initializer.

        Raises:
            ValueError: If the feature-map width differs from the token width of the
                feature_map tokenizer, or the image size does not suit the encoder.
        """
        self.cfg = cfg
        aggregator_cfg = cfg.aggregator_config
        tokenizer_cfg = cfg.tokenizer_config
        if cfg.tokenizer_variant == "feature_map" and cfg.vision_channels[-1] != cfg.channel_dim:
            raise ValueError("The feature_map tokenizer keeps the " +
                             str(cfg.vision_channels[-1]) + " feature channels, channel_dim is " +
                             str(cfg.channel_dim))

        self.text_encoder = None
        if not aggregator_cfg.vision_only:
            self.text_encoder = TextEncoder(cfg.vocab_size, cfg.text_dim, cfg.max_text_length,
                                            cfg.seed)
        self.vision_encoder = VisionEncoder(cfg.vision_channels, cfg.input_channels, cfg.seed)

        reduced = cfg.image_size // self.vision_encoder.reduction
        if reduced < 1 or cfg.image_size % self.vision_encoder.reduction:
            raise ValueError("image_size " + str(cfg.image_size) + " is not a multiple of " +
                             str(self.vision_encoder.reduction))
        self.tokenizer = ModalityTokenizer(
            tokenizer_cfg, cfg.vision_channels[-1], reduced * reduced,
            text_len=None if aggregator_cfg.vision_only else cfg.max_text_length,
            text_dim=cfg.text_dim, seed=cfg.seed)
        self.aggregator = Aggregator(aggregator_cfg, cfg.channel_dim, cfg.seed)

        width = cfg.channel_dim if aggregator_cfg.vision_only else 2 * cfg.channel_dim
        self.head = ClassificationHead(width, numpy.random.default_rng([cfg.seed, 0x4ead]),
                                       cfg.pooling, cfg.fusion_hidden, cfg.fusion_output)

    @property
    def vision_only(self):
        return self.text_encoder is None

    def tokens(self, images, ids=None):
        """Post-tokenizer visual and text token matrices (text None for vision-only models)."""
        vision = self.tokenizer.vision_tokens(self.vision_encoder(images))
        if self.vision_only:
            return vision, None
        text, _ = self.text_encoder(ids)
        return vision, self.tokenizer.text_tokens(text)

    def classify_tokens(self, vision, text=None):
        return self.head(self.aggregator(vision, text))

    def forward(self, images, ids=None):
        """Logits of a batch.

        Args:
            images (Tensor): B x 1 x H x W (or 1 x H x W) images in [0, 1].
            ids (ndarray): B x L (or L) report token ids; ignored by vision-only models.

        Returns:
            Tensor: B logits (a scalar for an unbatched sample).
        """
        vision, text = self.tokens(images, ids)
        return self.classify_tokens(vision, text)

    def record_attention(self, recorder):
        """Make every attention layer append its weights to recorder (None stops recording)."""
        for module in self.modules():
            if isinstance(module, MultiHeadAttention):
                module.recorder = recorder
