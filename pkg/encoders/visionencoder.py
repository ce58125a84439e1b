"""Module containing the convolutional vision encoder producing spatial feature maps."""
import numpy

from tensorautodiff import Module, Parameter, LayerNorm, DimensionError, functional
from tensorautodiff.module import uniform_init


class ConvStage(Module):
    """3x3 convolution (padding 1) with bias, layer norm over channels, GELU, 2x2 max-pool."""

    def __init__(self, in_channels, out_channels, rng):
        fan_in = in_channels * 9
        self.weight = Parameter(uniform_init(rng, fan_in, (out_channels, in_channels, 3, 3)))
        self.bias = Parameter(uniform_init(rng, fan_in, (out_channels,)))
        self.norm = LayerNorm(out_channels)

    def forward(self, x):
        x = functional.conv2d(x, self.weight, padding=1) + \
            functional.reshape(self.bias, (-1, 1, 1))
        # channels last for the normalization, then back
        x = functional.transpose(self.norm(functional.transpose(x, (0, 2, 3, 1))), (0, 3, 1, 2))
        return functional.max_pool2d(functional.gelu(x))


class VisionEncoder(Module):
    """Stack of ConvStage modules halving the resolution at each stage.

    With the default channels 16, 32, 64, 128 a 1 x 64 x 64 image becomes a 128 x 4 x 4
    feature map. With input_channels = 3 the grayscale image is copied onto three channels.
    """

    def __init__(self, channels=(16, 32, 64, 128), input_channels=1, seed=0):
        rng = numpy.random.default_rng([seed, 0x5151])
        self.input_channels = input_channels
        self.stages = []
        previous = input_channels
        for width in channels:
            self.stages.append(ConvStage(previous, width, rng))
            previous = width
        self.out_channels = previous

    @property
    def reduction(self):
        return 2 ** len(self.stages)

    def forward(self, image):
        """Encode 1 x H x W images (optionally batched as B x 1 x H x W) into feature maps.

        Raises:
            DimensionError: If H or W is not divisible by 2 ** number of stages.
        """
        x = image if image.ndim == 4 else functional.reshape(image, (1,) + tuple(image.shape))
        height, width = x.shape[-2], x.shape[-1]
        if height % self.reduction or width % self.reduction:
            raise DimensionError("Image extents " + str((height, width)) + " are not divisible "
                                 "by " + str(self.reduction))
        if self.input_channels == 3 and x.shape[1] == 1:
            x = functional.concat([x, x, x], axis=1)
        for stage in self.stages:
            x = stage(x)
        return x if image.ndim == 4 else functional.getitem(x, 0)


def vision_encode(image, encoder):
    return encoder(image)
