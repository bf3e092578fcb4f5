'''
Virtual-vergence stimuli: captured (or synthetic) stereo scenes re-rendered
with both cameras rotated onto corresponding fixation points, so that
disparity vanishes at the centre of every output pair.
'''
import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError
from ..libs.imagecore import StereoPair
from .geometry import CameraIntrinsics, make_vergence_set
from .shifted import procedural_texture, shifted_scene

log = logging.getLogger(__name__)

# half-width of the block matched between the halves
MATCH_RADIUS = 8


@dataclass(frozen=True)
class VergenceConfig:
    focal: float = 1400.0
    max_angle: float = 20.0
    # fixations are drawn uniformly from a disc of this radius around the principal point
    radius: float = 100.0
    scale: float = 0.5
    # horizontal search range of the right-eye match, px
    search: int = 16
    # synthetic scenes only: bound on the global shift between the halves, px
    scene_disparity: int = 8

    def __post_init__(self):
        if not self.focal > 0:
            raise ConfigError(f"focal must be > 0, got {self.focal}")
        if not 0 < self.max_angle < 90:
            raise ConfigError(f"max_angle must be in (0, 90), got {self.max_angle}")
        if self.radius < 0 or self.search < 0 or self.scene_disparity < 0:
            raise ConfigError("radius, search and scene_disparity must be >= 0")
        if not 0 < self.scale <= 1:
            raise ConfigError(f"scale must be in (0, 1], got {self.scale}")

    @classmethod
    def from_config(cls, config):
        return cls(focal=float(config['vergence_focal']),
                   max_angle=float(config['vergence_max_angle']),
                   radius=float(config['vergence_radius']),
                   scale=float(config['vergence_scale']),
                   search=int(config['vergence_search']),
                   scene_disparity=int(config['vergence_scene_disparity']))

    def to_config(self):
        return {'vergence_focal': self.focal, 'vergence_max_angle': self.max_angle,
                'vergence_radius': self.radius, 'vergence_scale': self.scale,
                'vergence_search': self.search,
                'vergence_scene_disparity': self.scene_disparity}


def scene_size(crop, cfg):
    '''Side of a synthetic scene that leaves room for every fixation in the disc.'''
    return int(2 * (cfg.radius + crop + cfg.search + 2 * MATCH_RADIUS))


def synthetic_scene(size, seed, max_disparity=0):
    '''
    Procedural texture seen by both eyes with a seeded global horizontal
    shift in [-max_disparity, max_disparity]. Returns (pair, dx); the right
    half at x shows the left half at x + dx.
    '''
    rng = np.random.default_rng(seed)
    dx = int(rng.integers(-max_disparity, max_disparity + 1))
    texture = procedural_texture((size, size + abs(dx)), seed)
    return shifted_scene(texture, dx), dx


def match_fixation(pair, point, search, radius=MATCH_RADIUS):
    '''
    Right-half point corresponding to the left-half `point` (x, y): the
    best normalized cross-correlation of the surrounding block along the
    same row within +-search px. The point is returned unchanged when the
    block leaves the image or holds no texture.
    '''
    height, width = pair.shape
    x, y = int(round(point[0])), int(round(point[1]))
    if y - radius < 0 or y + radius >= height or x - radius < 0 or x + radius >= width:
        return tuple(point)
    side = 2 * radius + 1
    template = pair.left[y - radius:y + radius + 1, x - radius:x + radius + 1]
    template = template - template.mean()
    if not np.any(template):
        return tuple(point)
    lo, hi = max(radius, x - search), min(width - 1 - radius, x + search)
    strip = pair.right[y - radius:y + radius + 1, lo - radius:hi + radius + 1]
    windows = sliding_window_view(strip, (side, side))[0]
    windows = windows - windows.mean(axis=(1, 2), keepdims=True)
    norms = np.sqrt(np.sum(windows ** 2, axis=(1, 2))) * np.sqrt(np.sum(template ** 2))
    scores = np.sum(windows * template, axis=(1, 2)) / np.where(norms > 0, norms, np.inf)
    best = lo + int(np.argmax(scores))
    return (best + (point[0] - x), point[1])


def draw_fixations(pair, K, count, rng, cfg):
    '''count (left, right) fixation pairs; left points uniform in the disc around the principal point.'''
    fixations = []
    for _ in range(count):
        angle = rng.uniform(0, 2 * np.pi)
        r = cfg.radius * np.sqrt(rng.uniform())
        left = (K.px + r * np.cos(angle), K.py + r * np.sin(angle))
        fixations.append((left, match_fixation(pair, left, cfg.search)))
    return fixations


def vergence_pairs(scene, count, crop, seed, cfg):
    '''
    Up to `count` virtually fixated pairs of one scene, each cropped to
    crop * scale px around the principal point. Fixations over the angle
    budget are skipped.
    '''
    scene = scene if isinstance(scene, StereoPair) else StereoPair(*scene)
    K = CameraIntrinsics.centered(scene.shape, cfg.focal)
    rng = np.random.default_rng(seed)
    fixations = draw_fixations(scene, K, count, rng, cfg)
    side = max(1, int(round(crop * cfg.scale)))
    made = make_vergence_set(scene, fixations, K, max_angle=cfg.max_angle, crop=(side, side),
                             scale=cfg.scale)
    if len(made) < count:
        log.info(f"Kept {len(made)} of {count} fixations")
    return [pair for _, pair in made]
