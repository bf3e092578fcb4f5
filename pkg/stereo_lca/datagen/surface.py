'''
Textured slanted planes seen by a verged stereo rig.

World frame: x right, y down, z forward, cyclopean point at the origin.
The cameras sit at (-/+ baseline/2, 0, 0) and both point at the fixation
point F = (0, 0, distance). A surface label (tilt, slant) turns the
fronto-parallel plane through F by `slant` about the in-plane axis
perpendicular to the tilt direction, so that depth grows along
(cos tilt, sin tilt) in the image:

    Z - distance = tan(slant) * (X cos(tilt) + Y sin(tilt))

Each half-image is the exact plane-induced homography of the texture.
'''
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy.optimize import brentq

from ..errors import ConfigError, DataError
from ..libs.imagecore import StereoPair, as_image
from .geometry import CameraIntrinsics, rodrigues, warp_homography
from .grids import SurfaceLabel

CALIBRATION_ECCENTRICITY = 10.0
# rays 10 px off-centre graze the plane close to 89.5 deg
SLANT_LIMIT = 89.0


@dataclass(frozen=True)
class RigGeometry:
    baseline: float = 0.07
    distance: float = 1.0
    fov: float = 11.8
    size: int = 256

    def __post_init__(self):
        if self.baseline <= 0 or self.distance <= 0 or not 0 < self.fov < 180 or self.size < 2:
            raise ConfigError(f"Invalid rig geometry: {self}")

    @property
    def focal(self):
        return (self.size / 2.0) / math.tan(math.radians(self.fov) / 2.0)

    @property
    def intrinsics(self):
        return CameraIntrinsics.centered((self.size, self.size), self.focal)

    @property
    def texel(self):
        '''Texture pixel size in metres: one texel per image pixel at the fixation distance.'''
        return self.distance / self.focal

    def camera(self, side):
        '''(center, world-to-camera rotation) of the 'left' or 'right' camera.'''
        sign = -1.0 if side == 'left' else 1.0
        center = np.array([sign * self.baseline / 2.0, 0.0, 0.0])
        yaw = math.atan2(-center[0], self.distance)
        axis_z = np.array([math.sin(yaw), 0.0, math.cos(yaw)])
        axis_x = np.array([math.cos(yaw), 0.0, -math.sin(yaw)])
        axis_y = np.array([0.0, 1.0, 0.0])
        return center, np.stack([axis_x, axis_y, axis_z])

    @classmethod
    def from_config(cls, config):
        return cls(**{k[len('rig_'):]: v for k, v in config.items() if k.startswith('rig_')})

    def to_config(self):
        return {f'rig_{k}': v for k, v in asdict(self).items()}


def plane_frame(label, rig):
    '''Fixation point, unit normal and in-plane texture axes (e1, e2) for a label.'''
    if label.slant >= 90:
        raise ConfigError(f"Slant must stay below 90 deg, got {label.slant}")
    tilt = math.radians(label.tilt)
    slant = math.radians(label.slant)
    fixation = np.array([0.0, 0.0, rig.distance])
    turn = rodrigues([-math.sin(tilt), math.cos(tilt), 0.0], -slant)
    normal = turn @ np.array([0.0, 0.0, -1.0])
    return fixation, normal, turn @ np.array([1.0, 0.0, 0.0]), turn @ np.array([0.0, 1.0, 0.0])


def plane_homography(label, rig, side):
    '''
    3x3 map from plane coordinates (u, v, 1) in metres to homogeneous image
    pixels of one camera.
    '''
    fixation, _, e1, e2 = plane_frame(label, rig)
    center, rotation = rig.camera(side)
    basis = np.stack([e1, e2, fixation - center], axis=1)
    return rig.intrinsics.matrix @ rotation @ basis


def _ray_depths(label, rig, side, pixels):
    '''Ray parameter t at which the rays through `pixels` (2 x n, x/y) meet the plane.'''
    fixation, normal, _, _ = plane_frame(label, rig)
    center, rotation = rig.camera(side)
    homog = np.vstack([pixels, np.ones(pixels.shape[1])])
    rays = rotation.T @ np.linalg.solve(rig.intrinsics.matrix, homog)
    with np.errstate(divide='ignore'):
        return ((fixation - center) @ normal) / (normal @ rays)


def render_slanted_plane(texture, label, rig=None, return_mask=False):
    '''
    Render the textured plane for both cameras. The texture is centred on
    the fixation point with one texel per image pixel at the fixation
    distance and mirrored beyond its edges, so the plane is unbounded.
    '''
    rig = rig or RigGeometry()
    texture = as_image(texture)
    if not isinstance(label, SurfaceLabel):
        label = SurfaceLabel(*label)
    n = rig.size
    corners = np.array([[0, n - 1, 0, n - 1], [0, 0, n - 1, n - 1]], dtype=np.float64)
    tex_height, tex_width = texture.shape
    # texture pixels -> plane metres
    to_plane = np.array([[rig.texel, 0.0, -rig.texel * (tex_width - 1) / 2.0],
                         [0.0, rig.texel, -rig.texel * (tex_height - 1) / 2.0],
                         [0.0, 0.0, 1.0]])
    halves, masks = [], []
    for side in ('left', 'right'):
        depths = _ray_depths(label, rig, side, corners)
        if not np.all(np.isfinite(depths)) or np.any(depths <= 0):
            raise DataError(f"Plane {label.as_tuple()} is behind the {side} camera")
        H = plane_homography(label, rig, side) @ to_plane
        warped, mask = warp_homography(texture, H, output_shape=(n, n), fill='mirror')
        halves.append(warped)
        masks.append(mask)
    pair = StereoPair(halves[0], halves[1])
    return (pair, masks[0] & masks[1]) if return_mask else pair


def plane_disparity(label, rig, points):
    '''
    Ground-truth disparity (dx, dy) at left-image points (n x 2, x/y):
    left position minus the position of the same plane point in the right
    image. Positive dx is crossed (near) disparity.
    '''
    if not isinstance(label, SurfaceLabel):
        label = SurfaceLabel(*label)
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    H_left = plane_homography(label, rig, 'left')
    H_right = plane_homography(label, rig, 'right')
    homog = np.vstack([points.T, np.ones(len(points))])
    plane = np.linalg.solve(H_left, homog)
    right = H_right @ plane
    right = right[:2] / right[2]
    return (points.T - right).T


def eccentric_disparity(slant, rig, eccentricity=CALIBRATION_ECCENTRICITY, tilt=0.0):
    '''Horizontal disparity at `eccentricity` px from the centre along the tilt direction.'''
    c = (rig.size - 1) / 2.0
    t = math.radians(tilt)
    point = [[c + eccentricity * math.cos(t), c + eccentricity * math.sin(t)]]
    return float(plane_disparity(SurfaceLabel(tilt, slant), rig, point)[0, 0])


def calibrate_slants(rig, steps=6, eccentricity=CALIBRATION_ECCENTRICITY):
    '''
    Slant angles (deg) such that each step adds 1 px of horizontal
    disparity, relative to the fronto-parallel plane, at `eccentricity`
    px to the right of the centre for tilt 0.
    '''
    base = eccentric_disparity(0.0, rig, eccentricity)

    def excess(slant, target):
        return abs(eccentric_disparity(slant, rig, eccentricity) - base) - target

    slants = []
    for k in range(1, steps + 1):
        if excess(SLANT_LIMIT, k) < 0:
            raise ConfigError(f"Rig cannot reach {k} px of disparity at {eccentricity} px")
        slants.append(round(brentq(excess, 1e-6, SLANT_LIMIT, args=(k,), xtol=1e-10), 6))
    return slants
