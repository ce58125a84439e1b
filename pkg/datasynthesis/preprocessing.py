"""Module containing the threshold-crop-resize preprocessing of exam images."""
import numpy
from scipy.ndimage import map_coordinates

DEFAULT_THRESHOLD = 40.0 / 255.0


def resize_bilinear(image, size):
    """Bilinear resize of a 2-D array with aligned corners (the corner pixels map onto each other).

    Args:
        image (ndarray): H x W array.
        size (tuple): Target (height, width).

    Returns:
        ndarray: The resized array.
    """
    rows = numpy.linspace(0.0, image.shape[0] - 1, size[0])
    columns = numpy.linspace(0.0, image.shape[1] - 1, size[1])
    grid = numpy.meshgrid(rows, columns, indexing="ij")
    return map_coordinates(image, grid, order=1, mode="nearest")


def _preprocess_plane(plane, threshold, size):
    plane = numpy.where(plane < threshold, 0.0, plane)
    rows = numpy.flatnonzero(plane.any(axis=1))
    if rows.size == 0:
        return numpy.zeros(size)
    columns = numpy.flatnonzero(plane.any(axis=0))
    crop = plane[rows[0]:rows[-1] + 1, columns[0]:columns[-1] + 1]
    resized = resize_bilinear(crop, size)
    return numpy.where(resized < threshold, 0.0, resized)


def preprocess(image, threshold=DEFAULT_THRESHOLD, size=None):
    """Zero the dark pixels, crop to the bounding box of what is left and resize back.

    A fully dark image gives an all-zero image of the target size. Interpolated values falling
    under the threshold are zeroed again after the resize.

    Args:
        image (ndarray): H x W or C x H x W array in [0, 1].
        threshold (float): Values strictly below it become 0.
        size (tuple): Target (height, width), the input size when None.

    Returns:
        ndarray: The preprocessed image, same layout as the input, f32.
    """
    image = numpy.asarray(image, dtype=numpy.float64)
    size = tuple(size) if size is not None else image.shape[-2:]
    if image.ndim == 2:
        return _preprocess_plane(image, threshold, size).astype(numpy.float32)
    planes = [_preprocess_plane(plane, threshold, size) for plane in image.reshape(
        (-1,) + image.shape[-2:])]
    return numpy.stack(planes).reshape(image.shape[:-2] + size).astype(numpy.float32)
