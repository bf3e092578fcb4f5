'''
Two-dimensional Savitzky-Golay smoothing: every output pixel is the value
at its own position of the least-squares polynomial (total degree <=
`degree`) fitted over the width x width window around it. Windows are
truncated at the borders; when a truncated window has fewer points than
the polynomial has terms the degree drops until the fit is determined.
'''
import functools

import numpy as np

from ..errors import ConfigError, ShapeError


def _terms(degree):
    return [(i, total - i) for total in range(degree + 1) for i in range(total + 1)]


def design_matrix(rows, cols, degree):
    '''Vandermonde matrix of the window offsets (rows, cols) for total degree `degree`.'''
    y, x = np.meshgrid(np.asarray(rows, dtype=np.float64), np.asarray(cols, dtype=np.float64),
                       indexing='ij')
    y, x = y.ravel(), x.ravel()
    return np.stack([y ** i * x ** j for i, j in _terms(degree)], axis=1)


@functools.lru_cache(maxsize=256)
def _window_weights(top, bottom, left, right, degree):
    '''Weights of the window [-top, bottom] x [-left, right] giving the fitted value at 0.'''
    rows = np.arange(-top, bottom + 1)
    cols = np.arange(-left, right + 1)
    points = rows.size * cols.size
    while len(_terms(degree)) > points:
        degree -= 1
    A = design_matrix(rows, cols, degree)
    # the constant term is the fitted value at the window origin
    weights = np.linalg.pinv(A)[0]
    return weights.reshape(rows.size, cols.size)


def savitzky_golay_2d(values, degree=3, width=5):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ShapeError(f"Savitzky-Golay smoothing needs a 2-D map, got {values.shape}")
    if width < 1 or width % 2 == 0:
        raise ConfigError(f"Window width must be odd, got {width}")
    if degree < 0 or degree >= width:
        raise ConfigError(f"Polynomial degree must be in [0, {width}), got {degree}")
    half = width // 2
    height, breadth = values.shape
    out = np.empty_like(values)
    for r in range(height):
        top, bottom = min(half, r), min(half, height - 1 - r)
        for c in range(breadth):
            left, right = min(half, c), min(half, breadth - 1 - c)
            weights = _window_weights(top, bottom, left, right, degree)
            window = values[r - top:r + bottom + 1, c - left:c + right + 1]
            out[r, c] = np.sum(weights * window)
    return out
