"""Module containing the frozen text encoder producing per-token report representations."""
import numpy

from tensorautodiff import Module, Parameter, Tensor, functional
from reportsynthesis import PAD_ID


def sinusoidal_positions(max_len, width):
    """Fixed positional table: sin on even columns, cos on odd ones, wavelengths 10000^(2i/d)."""
    positions = numpy.arange(max_len)[:, None]
    frequencies = numpy.power(10000.0, -(2 * (numpy.arange(width) // 2)) / width)
    table = positions * frequencies[None, :]
    table[:, 0::2] = numpy.sin(table[:, 0::2])
    table[:, 1::2] = numpy.cos(table[:, 1::2])
    return table


class TextEncoder(Module):
    """Seeded Gaussian (sd 0.02) token embedding table plus sinusoidal positions, both frozen.

    Attributes:
        embedding (Parameter): vocab_size x text_dim, never trained.
        positions (ndarray): max_len x text_dim positional table.
    """

    def __init__(self, vocab_size, text_dim=64, max_len=64, seed=0):
        rng = numpy.random.default_rng([seed, 0x7e47])
        self.embedding = Parameter(rng.normal(0.0, 0.02, size=(vocab_size, text_dim)),
                                   frozen=True)
        self.positions = sinusoidal_positions(max_len, text_dim).astype(numpy.float32)
        self.max_len = max_len

    def forward(self, ids):
        """Encode token ids.

        Args:
            ids (ndarray): L or B x L integer ids, L <= max_len.

        Returns:
            Tensor: The L x d (or B x L x d) token matrix.
            ndarray: Boolean validity mask, False on PAD positions.

        Raises:
            IndexError: If an id is not smaller than the vocabulary size.
        """
        ids = numpy.asarray(ids)
        length = ids.shape[-1]
        if length > self.max_len:
            raise IndexError("Text of " + str(length) + " tokens exceeds the positional table "
                             "of " + str(self.max_len))
        tokens = functional.embedding(self.embedding, ids) + Tensor(self.positions[:length])
        return tokens, ids != PAD_ID


def text_encode(ids, encoder):
    return encoder(ids)
