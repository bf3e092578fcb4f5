'''
Strided 2-D correlation and its adjoint (transposed convolution) for
kernels whose size is a multiple of the stride. A feature-map cell (m, n)
covers image rows m*stride .. m*stride+size-1 and the same for columns.
'''
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, ShapeError


def feature_shape(image_shape, size, stride):
    height, width = image_shape
    if size % stride:
        raise ConfigError(f"Stride {stride} must divide kernel size {size}")
    if height < size or width < size or (height - size) % stride or (width - size) % stride:
        raise ShapeError(
            f"Image {image_shape} does not tile with {size} px kernels at stride {stride}")
    return (height - size) // stride + 1, (width - size) // stride + 1


def image_shape(feature_shape, size, stride):
    rows, cols = feature_shape
    return (rows - 1) * stride + size, (cols - 1) * stride + size


def fit_to_grid(shape, size, stride):
    '''Largest image shape not exceeding `shape` that tiles with the kernel grid.'''
    height, width = shape
    if height < size or width < size:
        raise ShapeError(f"Image {shape} smaller than the {size} px kernel")
    return (size + (height - size) // stride * stride,
            size + (width - size) // stride * stride)


def patches(img, size, stride):
    '''M x N x size x size view of the kernel-sized windows on the stride grid.'''
    feature_shape(img.shape, size, stride)
    return sliding_window_view(img, (size, size))[::stride, ::stride]


def correlate(img, kernels, stride):
    '''K x M x N responses of K kernels (K x size x size) on the stride grid.'''
    size = kernels.shape[-1]
    responses = np.tensordot(patches(img, size, stride), kernels, axes=([2, 3], [1, 2]))
    return np.moveaxis(responses, -1, 0)


def transpose_conv(coefficients, kernels, stride):
    '''
    Sum of kernels stamped at their grid cells, weighted by the K x M x N
    coefficients. Adjoint of `correlate`.
    '''
    K, rows, cols = coefficients.shape
    size = kernels.shape[-1]
    ratio = size // stride
    stamps = np.tensordot(coefficients, kernels, axes=([0], [0]))
    stamps = stamps.reshape(rows, cols, ratio, stride, ratio, stride)
    out = np.zeros(image_shape((rows, cols), size, stride))
    for p in range(ratio):
        for q in range(ratio):
            block = stamps[:, :, p, :, q, :].transpose(0, 2, 1, 3).reshape(rows * stride, cols * stride)
            out[p * stride:p * stride + rows * stride, q * stride:q * stride + cols * stride] += block
    return out


def weight_gradient(coefficients, img, size, stride):
    '''sum_{m,n} a_{k,m,n} * window(m, n) for every kernel: K x size x size.'''
    return np.tensordot(coefficients, patches(img, size, stride), axes=([1, 2], [0, 1]))
