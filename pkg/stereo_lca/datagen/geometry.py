'''
Pinhole camera helpers and the virtual-vergence warp.

A camera rotation about its nodal point moves pixel x to K R K^-1 x. The
virtual fixation rotation follows Listing's law: the axis lies in the image
plane, perpendicular to the offset between the fixation point and the
principal point.
'''
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from ..errors import AngleBudgetError, ConfigError, ShapeError
from ..libs.imagecore import StereoPair, as_image, downscale

log = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-6

# swaps the first two coordinates: (row, column, z) <-> (x, y, z)
_SWAP = np.array([[0., 1., 0.], [1., 0., 0.], [0., 0., 1.]])


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    px: float
    py: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError(f"Focal lengths must be positive, got {self.fx}, {self.fy}")

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.px],
                         [0.0, self.fy, self.py],
                         [0.0, 0.0, 1.0]])

    @classmethod
    def centered(cls, shape, f):
        '''Square pixels, principal point in the middle of an image of `shape`.'''
        height, width = shape
        return cls(f, f, (width - 1) / 2.0, (height - 1) / 2.0)


def rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0 or angle == 0:
        return np.eye(3)
    ux, uy, uz = axis / norm
    skew = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    u = np.array([ux, uy, uz])
    return math.cos(angle) * np.eye(3) + math.sin(angle) * skew + (1 - math.cos(angle)) * np.outer(u, u)


def listing_axis(s, p):
    '''
    Rotation axis for fixating image point s, as (-(s_x - p_x), s_y - p_y, 0).

    The components are ordered (row axis, column axis, optical axis), which
    makes the axis perpendicular to the offset s - p.
    '''
    return np.array([-(s[0] - p[0]), s[1] - p[1], 0.0])


def listing_angle(s, p, f):
    if not f > 0:
        raise ConfigError(f"Focal length must be positive, got {f}")
    return math.atan(math.hypot(s[0] - p[0], s[1] - p[1]) / f)


def listing_rotation(s, p, f):
    '''Listing's-law rotation towards image point s, in (row, column, z) coordinates.'''
    theta = listing_angle(s, p, f)
    if theta == 0:
        return np.eye(3)
    u = listing_axis(s, p)
    ux, uy, _ = u / np.linalg.norm(u)
    c, sn = math.cos(theta), math.sin(theta)
    return np.array([
        [c + ux * ux * (1 - c), ux * uy * (1 - c), uy * sn],
        [ux * uy * (1 - c), c + uy * uy * (1 - c), -ux * sn],
        [-uy * sn, ux * sn, c],
    ])


def fixation_rotation(s, K):
    '''
    Rotation in (x, y, z) camera coordinates whose homography K R K^-1 moves
    image point s onto the principal point.
    '''
    # equalize pixel aspect so one focal length describes the angle
    p = (K.px, K.py)
    s_iso = (s[0], p[1] + (s[1] - p[1]) * K.fx / K.fy)
    R = listing_rotation(s_iso, p, K.fx)
    return (_SWAP @ R @ _SWAP).T


def check_rotation(R):
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ConfigError(f"Rotation must be 3x3, got {R.shape}")
    if not np.allclose(R.T @ R, np.eye(3), atol=ORTHONORMAL_TOL) or \
            abs(np.linalg.det(R) - 1) > ORTHONORMAL_TOL:
        raise ConfigError("Matrix is not a rotation")
    return R


def warp_homography(img, H, output_shape=None, fill='zero'):
    '''
    Inverse-warp img so that output pixel x' shows input pixel H^-1 x'.
    Bilinear sampling. With fill='zero' pixels falling outside the input are
    0 and unmasked; fill='mirror' extends the input by mirroring (used for
    textures that stand for an unbounded surface). Returns (warped, mask).
    '''
    img = as_image(img)
    height, width = output_shape or img.shape
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    points = np.stack([cols.ravel(), rows.ravel(), np.ones(rows.size)])
    source = np.linalg.solve(H, points)
    with np.errstate(divide='ignore', invalid='ignore'):
        sx = source[0] / source[2]
        sy = source[1] / source[2]
    mask = source[2] > 0
    if fill == 'zero':
        mask &= (sx >= -1e-9) & (sx <= img.shape[1] - 1 + 1e-9) & \
            (sy >= -1e-9) & (sy <= img.shape[0] - 1 + 1e-9)
    elif fill != 'mirror':
        raise ConfigError(f"Unknown fill mode: {fill}")
    sx = np.where(mask, sx, 0.0)
    sy = np.where(mask, sy, 0.0)
    warped = map_coordinates(img, [sy, sx], order=1, mode='nearest' if fill == 'zero' else 'mirror')
    warped = np.where(mask, warped, 0.0)
    return warped.reshape(height, width), mask.reshape(height, width)


def homography_warp(img, K, R, return_mask=False):
    '''Warp img as seen by the camera after rotating it by R about its nodal point.'''
    R = check_rotation(R)
    img = as_image(img)
    if np.array_equal(R, np.eye(3)):
        warped, mask = img.copy(), np.ones(img.shape, dtype=bool)
    else:
        Km = K.matrix
        warped, mask = warp_homography(img, Km @ R @ np.linalg.inv(Km))
    return (warped, mask) if return_mask else warped


def center_crop(img, center, size):
    height, width = size
    top = int(round(center[1] - (height - 1) / 2.0))
    left = int(round(center[0] - (width - 1) / 2.0))
    if top < 0 or left < 0 or top + height > img.shape[0] or left + width > img.shape[1]:
        raise ShapeError(f"Crop {size} around {center} leaves the {img.shape} image")
    return img[top:top + height, left:left + width]


def make_virtual_fixation(pair, fix_left, fix_right, K, max_angle=20.0, crop=(256, 256),
                          scale=1.0):
    '''
    Rotate both cameras so that fix_left / fix_right land on the principal
    points, then crop around the principal point (optionally downscaled
    with bicubic interpolation first). Raises AngleBudgetError when either
    rotation exceeds max_angle degrees.
    '''
    height, width = pair.shape
    for name, fix in (('left', fix_left), ('right', fix_right)):
        if not (0 <= fix[0] <= width - 1 and 0 <= fix[1] <= height - 1):
            raise ShapeError(f"{name} fixation {fix} outside the {pair.shape} image")
        p = (K.px, K.py)
        offset = (fix[0] - p[0], (fix[1] - p[1]) * K.fx / K.fy)
        angle = math.degrees(listing_angle((p[0] + offset[0], p[1] + offset[1]), p, K.fx))
        if angle > max_angle:
            raise AngleBudgetError(
                f"{name} rotation of {angle:.2f} deg exceeds the {max_angle} deg budget")

    halves = []
    for img, fix in ((pair.left, fix_left), (pair.right, fix_right)):
        warped, mask = homography_warp(img, K, fixation_rotation(fix, K), return_mask=True)
        center = (K.px, K.py)
        if scale != 1.0:
            warped = downscale(warped, scale, 'bicubic')
            mask = downscale(mask.astype(np.float64), scale, 'bilinear') > 0.999
            center = ((K.px + 0.5) * scale - 0.5, (K.py + 0.5) * scale - 0.5)
        window = center_crop(mask, center, crop)
        if not window.all():
            raise ShapeError("Crop reaches outside the valid warped region")
        halves.append(center_crop(warped, center, crop))
    return StereoPair(halves[0], halves[1])


def make_vergence_set(pair, fixations, K, max_angle=20.0, crop=(256, 256), scale=1.0):
    '''
    Batch of virtual fixations for one captured pair. Fixations over the
    angle budget or leaving the valid region are logged and skipped.
    Returns a list of (index, StereoPair).
    '''
    results = []
    for i, (fix_left, fix_right) in enumerate(fixations):
        try:
            results.append((i, make_virtual_fixation(
                pair, fix_left, fix_right, K, max_angle=max_angle, crop=crop, scale=scale)))
        except (AngleBudgetError, ShapeError) as e:
            log.info(f"Skip fixation {i}: {e}")
    return results
