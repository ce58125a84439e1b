"""Module containing the post-norm transformer blocks of the aggregators."""
from tensorautodiff import Module, LayerNorm, FeedForward, DimensionError

from .attention import MultiHeadAttention

CROSS_ORDERS = ("parallel", "sequential")


class AttentionStep(Module):
    """x <- LN(x + Attention(x, context))."""

    def __init__(self, channels, heads, rng):
        self.attention = MultiHeadAttention(channels, heads, rng)
        self.norm = LayerNorm(channels)

    def forward(self, x, context):
        return self.norm(x + self.attention(x, context))


class FeedForwardStep(Module):
    """x <- LN(x + MLP(x)), MLP hidden width mlp_ratio * C with GELU."""

    def __init__(self, channels, mlp_ratio, rng):
        self.mlp = FeedForward(channels, mlp_ratio * channels, rng)
        self.norm = LayerNorm(channels)

    def forward(self, x):
        return self.norm(x + self.mlp(x))


class SelfAttentionBlock(Module):
    """Self-attention then MLP, each with residual and post-norm."""

    def __init__(self, channels, heads, rng, mlp_ratio=4):
        self.self_attention = AttentionStep(channels, heads, rng)
        self.feed_forward = FeedForwardStep(channels, mlp_ratio, rng)

    def forward(self, x):
        return self.feed_forward(self.self_attention(x, x))


class CoAttentionStream(Module):
    """One stream of a co-attention block: self-attention, cross-attention, MLP."""

    def __init__(self, channels, heads, rng, mlp_ratio=4):
        self.self_attention = AttentionStep(channels, heads, rng)
        self.cross_attention = AttentionStep(channels, heads, rng)
        self.feed_forward = FeedForwardStep(channels, mlp_ratio, rng)


class CoAttentionBlock(Module):
    """Two intertwined streams exchanging information through cross-attention.

    Each stream self-attends, then cross-attends to the other stream, then applies its MLP.
    With the parallel order both cross-attentions read the other stream's post-self-attention
    state; with the sequential order the text stream reads the vision stream after the
    vision cross-attention.
    """

    def __init__(self, channels, heads, rng, mlp_ratio=4, cross_order="parallel"):
        if cross_order not in CROSS_ORDERS:
            raise ValueError("Unknown cross_order " + repr(cross_order))
        self.vision = CoAttentionStream(channels, heads, rng, mlp_ratio)
        self.text = CoAttentionStream(channels, heads, rng, mlp_ratio)
        self.cross_order = cross_order

    def forward(self, vision, text):
        if vision.shape != text.shape:
            raise DimensionError("Co-attention streams differ: " + str(vision.shape) + " vs " +
                                 str(text.shape))
        vision = self.vision.self_attention(vision, vision)
        text = self.text.self_attention(text, text)

        crossed_vision = self.vision.cross_attention(vision, text)
        context = crossed_vision if self.cross_order == "sequential" else vision
        crossed_text = self.text.cross_attention(text, context)

        return self.vision.feed_forward(crossed_vision), self.text.feed_forward(crossed_text)


class CrossAttentionBlock(Module):
    """Cross-attention only (no self-attention) per stream, then MLP; both read the block input."""

    def __init__(self, channels, heads, rng, mlp_ratio=4):
        self.vision_cross = AttentionStep(channels, heads, rng)
        self.vision_feed_forward = FeedForwardStep(channels, mlp_ratio, rng)
        self.text_cross = AttentionStep(channels, heads, rng)
        self.text_feed_forward = FeedForwardStep(channels, mlp_ratio, rng)

    def forward(self, vision, text):
        crossed_vision = self.vision_cross(vision, text)
        crossed_text = self.text_cross(text, vision)
        return self.vision_feed_forward(crossed_vision), self.text_feed_forward(crossed_text)


def co_attention_block(vision, text, block):
    return block(vision, text)
