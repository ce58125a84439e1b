"""Module containing the multi-head scaled dot-product attention."""
import math
import numpy

from tensorautodiff import Module, Linear, DimensionError, functional


class MultiHeadAttention(Module):
    """Attention of query tokens over key/value tokens with h heads of width C/h.

    Q, K and V are affine projections of the inputs; heads are concatenated and passed
    through an output projection. Scores are scaled by 1/sqrt(C/h).

    Attributes:
        heads (int): The number of heads h.
        recorder (list): When not None, the attention weights (B x h x Nq x Nk arrays)
            of every forward are appended to it.
    """

    def __init__(self, channels, heads, rng):
        if channels % heads:
            raise DimensionError("Width " + str(channels) + " is not divisible by " +
                                 str(heads) + " heads")
        self.heads = heads
        self.head_dim = channels // heads
        self.query = Linear(channels, channels, rng)
        self.key = Linear(channels, channels, rng)
        self.value = Linear(channels, channels, rng)
        self.output = Linear(channels, channels, rng)
        self.recorder = None

    def _split_heads(self, x):
        batch, tokens = x.shape[0], x.shape[1]
        return functional.transpose(functional.reshape(x, (batch, tokens, self.heads,
                                                           self.head_dim)), (0, 2, 1, 3))

    def forward(self, query, key_value):
        """Attend.

        Args:
            query (Tensor): Nq x C (or B x Nq x C).
            key_value (Tensor): Nk x C (or B x Nk x C).

        Returns:
            Tensor: Nq x C (or B x Nq x C).
        """
        batched = query.ndim == 3
        if not batched:
            query = functional.reshape(query, (1,) + tuple(query.shape))
            key_value = functional.reshape(key_value, (1,) + tuple(key_value.shape))
        if query.shape[-1] != key_value.shape[-1] or query.shape[0] != key_value.shape[0]:
            raise DimensionError("Attention inputs do not conform: " + str(query.shape) +
                                 " and " + str(key_value.shape))

        q = self._split_heads(self.query(query))
        k = self._split_heads(self.key(key_value))
        v = self._split_heads(self.value(key_value))
        scores = functional.matmul(q, functional.swapaxes(k, -1, -2)) * \
            (1.0 / math.sqrt(self.head_dim))
        weights = functional.softmax(scores)
        if self.recorder is not None:
            self.recorder.append(numpy.array(weights.data))

        heads = functional.matmul(weights, v)
        batch, tokens = heads.shape[0], heads.shape[2]
        merged = functional.reshape(functional.transpose(heads, (0, 2, 1, 3)),
                                    (batch, tokens, self.heads * self.head_dim))
        output = self.output(merged)
        return output if batched else functional.getitem(output, 0)


def mha(query, key_value, attention):
    """Self-attention is mha(x, x, attention)."""
    return attention(query, key_value)
