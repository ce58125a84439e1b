"""Module containing the seeded affine and elastic augmentation of training images."""
from dataclasses import dataclass, astuple
import logging
import numpy
from scipy.ndimage import affine_transform, gaussian_filter, map_coordinates

MAX_ROTATION = 20.0
MAX_TRANSLATION = 0.1
SCALE_RANGE = (0.8, 1.2)
MAX_SHEAR = 20.0
ELASTIC_ALPHA = 10.0
ELASTIC_SIGMA = 5.0

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentationParameters:
    """One draw of the augmentation.

    Attributes:
        rotation (float): Degrees, counter-clockwise.
        translation (tuple): (rows, columns) shift as fractions of the image extent.
        scale (float): Isotropic zoom factor.
        shear (float): Degrees.
        alpha (float): Elastic displacement magnitude in pixels.
        sigma (float): Smoothing of the elastic displacement field.
        elastic_seed (int): Seed of the displacement noise.
    """
    rotation: float
    translation: tuple
    scale: float
    shear: float
    alpha: float
    sigma: float
    elastic_seed: int

    @classmethod
    def identity(cls):
        return cls(0.0, (0.0, 0.0), 1.0, 0.0, 0.0, ELASTIC_SIGMA, 0)

    def within_ranges(self):
        """Tell whether the draw respects the configured augmentation ranges."""
        return (abs(self.rotation) <= MAX_ROTATION and
                all(abs(value) <= MAX_TRANSLATION for value in self.translation) and
                SCALE_RANGE[0] <= self.scale <= SCALE_RANGE[1] and
                abs(self.shear) <= MAX_SHEAR and self.alpha in (0.0, ELASTIC_ALPHA) and
                self.sigma == ELASTIC_SIGMA)


def draw_augmentation(seed):
    """Draw augmentation parameters uniformly within the configured ranges."""
    rng = numpy.random.default_rng(seed)
    return AugmentationParameters(
        rotation=float(rng.uniform(-MAX_ROTATION, MAX_ROTATION)),
        translation=tuple(float(value) for value in
                          rng.uniform(-MAX_TRANSLATION, MAX_TRANSLATION, size=2)),
        scale=float(rng.uniform(*SCALE_RANGE)),
        shear=float(rng.uniform(-MAX_SHEAR, MAX_SHEAR)),
        alpha=ELASTIC_ALPHA,
        sigma=ELASTIC_SIGMA,
        elastic_seed=int(rng.integers(2 ** 32)))


def affine_matrix(parameters):
    """Forward 2 x 2 map (rotation . shear . scale) in (row, column) coordinates."""
    angle = numpy.deg2rad(parameters.rotation)
    rotation = numpy.array([[numpy.cos(angle), -numpy.sin(angle)],
                            [numpy.sin(angle), numpy.cos(angle)]])
    shear = numpy.array([[1.0, numpy.tan(numpy.deg2rad(parameters.shear))], [0.0, 1.0]])
    return rotation @ shear @ (parameters.scale * numpy.eye(2))


def _augment_plane(plane, parameters):
    shape = numpy.array(plane.shape, dtype=numpy.float64)
    center = (shape - 1.0) / 2.0
    inverse = numpy.linalg.inv(affine_matrix(parameters))
    shift = numpy.asarray(parameters.translation) * shape
    offset = center - inverse @ (center + shift)
    warped = affine_transform(plane, inverse, offset=offset, order=1, mode="constant", cval=0.0)
    if parameters.alpha == 0.0:
        return warped

    rng = numpy.random.default_rng(parameters.elastic_seed)
    displacement = [parameters.alpha * gaussian_filter(rng.uniform(-1.0, 1.0, plane.shape),
                                                       parameters.sigma, mode="constant")
                    for _ in range(2)]
    rows, columns = numpy.meshgrid(numpy.arange(plane.shape[0]), numpy.arange(plane.shape[1]),
                                   indexing="ij")
    return map_coordinates(warped, [rows + displacement[0], columns + displacement[1]],
                           order=1, mode="constant", cval=0.0)


def apply_augmentation(image, parameters):
    """Warp an image (H x W or C x H x W) with bilinear sampling and zero fill, then clip to [0, 1].

    Every channel gets the same warp.
    """
    image = numpy.asarray(image, dtype=numpy.float64)
    planes = image.reshape((-1,) + image.shape[-2:])
    warped = numpy.stack([_augment_plane(plane, parameters) for plane in planes])
    return numpy.clip(warped.reshape(image.shape), 0.0, 1.0).astype(numpy.float32)


def augment(image, seed):
    """Draw parameters from the seed and apply them.

    Args:
        image (ndarray): H x W or C x H x W array in [0, 1].
        seed (int or sequence): Seed of the draw.

    Returns:
        ndarray: The augmented image, f32 in [0, 1].
    """
    parameters = draw_augmentation(seed)
    logger.debug("augmentation %s", astuple(parameters))
    return apply_augmentation(image, parameters)
