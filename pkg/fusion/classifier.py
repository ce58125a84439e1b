"""Module containing the classification head shared by every aggregator."""
from tensorautodiff import Module, Linear, DimensionError, functional

from .aggregator import pool_tokens


class ClassificationHead(Module):
    """Pool each stream over its tokens, concatenate, fusion MLP (GELU after both layers),
    then a linear classification layer producing one logit per sample."""

    def __init__(self, input_width, rng, pooling="max", hidden=1024, output=512):
        self.input_width = input_width
        self.pooling = pooling
        self.fusion_hidden = Linear(input_width, hidden, rng)
        self.fusion_output = Linear(hidden, output, rng)
        self.classifier = Linear(output, 1, rng)

    def features(self, fused):
        """Concatenated pooled representation (2C, or C for vision-only aggregators)."""
        if fused.token_level:
            streams = [pool_tokens(fused.vision, self.pooling)]
            if fused.text is not None:
                streams.append(pool_tokens(fused.text, self.pooling))
        else:
            streams = [fused.vision, fused.text]
        features = streams[0] if len(streams) == 1 else functional.concat(streams, axis=-1)
        if features.shape[-1] != self.input_width:
            raise DimensionError("Head built for " + str(self.input_width) + " features, got " +
                                 str(features.shape[-1]))
        return features

    def forward(self, fused):
        hidden = functional.gelu(self.fusion_hidden(self.features(fused)))
        hidden = functional.gelu(self.fusion_output(hidden))
        logits = self.classifier(hidden)
        return functional.reshape(logits, tuple(logits.shape[:-1]))


def classify(fused, head):
    """Logit of fused streams; the training loss is bce_with_logits on it."""
    return head(fused)
