"""Module containing the aggregators fusing (or not) the visual and textual tokens."""
from dataclasses import dataclass, field
from typing import Optional
import numpy

from tensorautodiff import Module, functional
from modalitytokenizer import ContractError

from .blocks import SelfAttentionBlock, CoAttentionBlock, CrossAttentionBlock

KINDS = ("co", "merged", "cross", "naive_mlp", "vision_self", "vision_none")
VISION_ONLY_KINDS = ("vision_self", "vision_none")
POOLINGS = ("max", "mean")

DEFAULT_DEPTH = {"co": 3, "merged": 4, "cross": 3, "naive_mlp": 0, "vision_self": 4,
                 "vision_none": 0}
DEFAULT_HEADS = {"co": 4, "merged": 4, "cross": 4, "naive_mlp": 4, "vision_self": 8,
                 "vision_none": 4}


@dataclass(frozen=True)
class AggregatorConfig:
    """Kind of aggregation with its depth k, head count h and token pooling.

    A depth or head count of None takes the default of the kind.
    """
    kind: str = "co"
    depth: Optional[int] = None
    heads: Optional[int] = None
    pooling: str = "max"
    cross_order: str = "parallel"
    mlp_ratio: int = 4
    resolved_depth: int = field(init=False)
    resolved_heads: int = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("Unknown aggregator " + repr(self.kind) + "; expected one of " +
                             str(KINDS))
        if self.pooling not in POOLINGS:
            raise ValueError("Unknown pooling " + repr(self.pooling))
        depth = DEFAULT_DEPTH[self.kind] if self.depth is None else self.depth
        if depth < 0:
            raise ValueError("Aggregator depth must be non-negative")
        object.__setattr__(self, "resolved_depth", depth)
        object.__setattr__(self, "resolved_heads",
                           DEFAULT_HEADS[self.kind] if self.heads is None else self.heads)

    @property
    def vision_only(self):
        return self.kind in VISION_ONLY_KINDS


def pool_tokens(tokens, pooling):
    if pooling == "max":
        return functional.max_pool_tokens(tokens)
    return functional.mean_pool_tokens(tokens)


class FusionOutput:
    """What an aggregator hands to the classification head.

    Token-level outputs keep the token matrices (pooled by the head); the naive MLP
    aggregator hands over already pooled embeddings.

    Attributes:
        vision (Tensor): N x C tokens, or C pooled embedding.
        text (Tensor): Same for the text stream, None for vision-only kinds.
        token_level (bool): Whether vision/text are token matrices.
        merged (Tensor): The 2N x C joint tokens of the merged kind before the split.
    """

    def __init__(self, vision, text=None, token_level=True, merged=None):
        self.vision = vision
        self.text = text
        self.token_level = token_level
        self.merged = merged

    def tokens(self):
        """Return (vision, text) token matrices.

        Raises:
            ContractError: If the aggregator produced pooled embeddings only.
        """
        if not self.token_level:
            raise ContractError("The naive MLP aggregator has no token-level output")
        return self.vision, self.text


class Aggregator(Module):
    """The configured stack of fusion blocks."""

    def __init__(self, cfg, channels, seed=0):
        rng = numpy.random.default_rng([seed, 0xa66])
        self.cfg = cfg
        depth, heads = cfg.resolved_depth, cfg.resolved_heads
        self.blocks = []
        if cfg.kind == "co":
            self.blocks = [CoAttentionBlock(channels, heads, rng, cfg.mlp_ratio, cfg.cross_order)
                           for _ in range(depth)]
        elif cfg.kind == "cross":
            self.blocks = [CrossAttentionBlock(channels, heads, rng, cfg.mlp_ratio)
                           for _ in range(depth)]
        elif cfg.kind in ("merged", "vision_self"):
            self.blocks = [SelfAttentionBlock(channels, heads, rng, cfg.mlp_ratio)
                           for _ in range(depth)]

    def forward(self, vision, text=None):
        """Fuse the visual tokens V and textual tokens T (N x C each, optionally batched).

        Returns:
            FusionOutput: The fused streams.
        """
        kind = self.cfg.kind
        if kind == "vision_none":
            return FusionOutput(vision)
        if kind == "vision_self":
            for block in self.blocks:
                vision = block(vision)
            return FusionOutput(vision)
        if text is None:
            raise ContractError("Aggregator " + kind + " needs text tokens")

        if kind == "naive_mlp":
            return FusionOutput(pool_tokens(vision, self.cfg.pooling),
                                pool_tokens(text, self.cfg.pooling), token_level=False)
        if kind == "merged":
            count = vision.shape[-2]
            joint = functional.concat([vision, text], axis=-2)
            for block in self.blocks:
                joint = block(joint)
            split = [slice(None)] * (joint.ndim - 2)
            return FusionOutput(functional.getitem(joint, tuple(split + [slice(0, count)])),
                                functional.getitem(joint, tuple(split + [slice(count, None)])),
                                merged=joint)

        for block in self.blocks:
            vision, text = block(vision, text)
        return FusionOutput(vision, text)


def aggregate(vision, text, aggregator):
    return aggregator(vision, text)
