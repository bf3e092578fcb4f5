'''
Circular-circular correlation (Jammalamadaka & SenGupta).
'''
import math

import numpy as np

from ..errors import DataError, ShapeError
from ..readout.tuning import tilt_mode
from .gabor import wrap_angle


def circular_mean(angles):
    angles = np.asarray(angles, dtype=np.float64)
    return math.atan2(np.sum(np.sin(angles)), np.sum(np.cos(angles)))


def circular_correlation(angles_a, angles_b, axial=False):
    '''
    rho = sum sin(a - a_mean) sin(b - b_mean) / sqrt(sum sin^2(a - a_mean) sum sin^2(b - b_mean))

    axial=True doubles angles_b first, for axial data of period pi
    (orientations) compared with directions of period 2 pi.
    '''
    a = np.asarray(angles_a, dtype=np.float64).ravel()
    b = np.asarray(angles_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"{a.size} angles vs {b.size} angles")
    if a.size < 3:
        raise DataError("Circular correlation needs at least 3 angle pairs")
    if axial:
        b = 2.0 * b
    sa = np.sin(a - circular_mean(a))
    sb = np.sin(b - circular_mean(b))
    denominator = math.sqrt(float(np.sum(sa * sa) * np.sum(sb * sb)))
    if denominator == 0:
        raise DataError("Circular correlation of angles without spread")
    return float(np.sum(sa * sb) / denominator)


def tilt_orientation_correlation(stats, tuning, r2_min=0.93):
    '''
    Correlation between each well-fitted kernel's preferred tilt (mode of
    its central surface tuning map) and its mean fitted stripe orientation.
    Returns (rho, number of kernels used).
    '''
    tilts, orientations = [], []
    for s in stats:
        fits = [f for f in (s.left_fit, s.right_fit) if f is not None and f.r2 > r2_min]
        if not fits:
            continue
        doubled = [2 * f.orientation for f in fits]
        carrier = 0.5 * math.atan2(sum(math.sin(d) for d in doubled),
                                   sum(math.cos(d) for d in doubled))
        # stripes run perpendicular to the carrier direction
        orientations.append(wrap_angle(carrier + math.pi / 2) % math.pi)
        tilts.append(math.radians(tilt_mode(tuning, s.kernel)))
    return circular_correlation(tilts, orientations, axial=True), len(tilts)
