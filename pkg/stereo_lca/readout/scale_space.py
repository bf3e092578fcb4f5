'''
Scale-space disparity inference for scenes whose disparities exceed the
model's label range: the scene is encoded at several scales, and every
full-resolution pixel takes the estimate of the finest scale at which its
disparity falls inside the model's range, rescaled to full-resolution
pixels.
'''
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from ..lca.convolution import fit_to_grid
from ..lca.dynamics import LcaConfig, binarize, encode
from ..libs.imagecore import (DOG_SIGMA_INNER, DOG_SIGMA_OUTER, StereoPair, downscale,
                              preprocess_pair)
from .inference import infer_map

DEFAULT_SCALES = (1.0, 0.8, 0.6, 0.4, 0.2)
DEFAULT_LIMIT = 6.0

log = logging.getLogger(__name__)


@dataclass
class ScaleEstimate:
    '''One scale's readout sampled onto the full-resolution pixel grid.'''
    scale: float
    # H x W x 2, (dx, dy) in pixels of this scale
    disparity: np.ndarray
    active: np.ndarray
    # pixels covered by a complete 2 x 2 block at this scale
    covered: np.ndarray


@dataclass
class ScaleSpaceResult:
    # H x W x 2 full-resolution (dx, dy), NaN where masked
    disparity: np.ndarray
    scale: np.ndarray
    active: np.ndarray
    predicted_error: np.ndarray
    mask: np.ndarray

    @property
    def horizontal(self):
        return self.disparity[..., 0]


def check_scales(scales):
    scales = [float(s) for s in scales]
    if not scales:
        raise ConfigError("Scale list is empty")
    if any(not 0 < s <= 1 for s in scales):
        raise ConfigError(f"Scales must lie in (0, 1], got {scales}")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ConfigError(f"Scales must be in descending order, got {scales}")
    return scales


def sample_blocks(values, block_shape, scale, stride, shape):
    '''
    Pick for every full-resolution pixel the value of the 2 x 2 block whose
    joint receptive field contains it at the given scale. Returns
    (sampled, covered).
    '''
    rows, cols = block_shape
    height, width = shape
    ys = np.floor((np.arange(height) + 0.5) * scale / stride).astype(int) - 1
    xs = np.floor((np.arange(width) + 0.5) * scale / stride).astype(int) - 1
    row_ok = (ys >= 0) & (ys < rows)
    col_ok = (xs >= 0) & (xs < cols)
    covered = row_ok[:, None] & col_ok[None, :]
    sampled = values[np.clip(ys, 0, rows - 1)[:, None], np.clip(xs, 0, cols - 1)[None, :]]
    return sampled, covered


def estimate_at_scale(scene, scale, dictionary, tuning, cfg, sigma_inner=DOG_SIGMA_INNER,
                      sigma_outer=DOG_SIGMA_OUTER):
    scaled = scene.map(lambda img: downscale(img, scale, 'bilinear'))
    height, width = fit_to_grid(scaled.shape, dictionary.size, dictionary.stride)
    cropped = StereoPair(scaled.left[:height, :width], scaled.right[:height, :width])
    pair = preprocess_pair(cropped, sigma_inner, sigma_outer)
    code = encode(pair, dictionary, cfg)
    labels = infer_map(binarize(code), tuning)
    disparity, covered = sample_blocks(labels.values(), labels.shape, scale, dictionary.stride,
                                       scene.shape)
    active, _ = sample_blocks(labels.active_count, labels.shape, scale, dictionary.stride,
                              scene.shape)
    log.debug(f"scale {scale}: {labels.shape} blocks, {int(labels.active_count.sum())} active")
    return ScaleEstimate(scale, disparity, active, covered)


def select_scales(estimates, limit=DEFAULT_LIMIT, grid_edge=None, ground_truth=None,
                  min_active=1, predictor=None, percentile=80):
    '''
    Combine per-scale estimates, finest scale first. A pixel accepts a
    scale when it is covered there, has at least min_active active
    coefficients, and its disparity lies within `limit` at that scale:
    judged from the ground-truth horizontal disparity when given,
    otherwise from the estimate itself, where estimates on the outer edge
    of the label range count as out of range.
    '''
    estimates = sorted(estimates, key=lambda e: -e.scale)
    shape = estimates[0].covered.shape
    disparity = np.full(shape + (2,), np.nan)
    scale_map = np.full(shape, np.nan)
    active = np.zeros(shape, dtype=np.int64)
    error = np.full(shape, np.nan)
    done = np.zeros(shape, dtype=bool)
    for est in estimates:
        ok = est.covered & (est.active >= min_active) & ~done
        if ground_truth is not None:
            ok &= np.abs(ground_truth) * est.scale <= limit
        else:
            magnitude = np.max(np.abs(est.disparity), axis=-1)
            ok &= magnitude <= limit
            if grid_edge is not None and grid_edge <= limit:
                ok &= magnitude < grid_edge
        disparity[ok] = est.disparity[ok] / est.scale
        scale_map[ok] = est.scale
        active[ok] = est.active[ok]
        if predictor is not None:
            predicted = predictor.predict(est.active, percentile)
            error[ok] = np.asarray(predicted, dtype=np.float64)[ok] / est.scale
        done |= ok
    return ScaleSpaceResult(disparity, scale_map, active, error, done)


def scale_space_infer(scene, dictionary, tuning, scales=DEFAULT_SCALES, cfg=None,
                      limit=DEFAULT_LIMIT, ground_truth=None, predictor=None, percentile=80,
                      min_active=1, sigma_inner=DOG_SIGMA_INNER, sigma_outer=DOG_SIGMA_OUTER):
    scales = check_scales(scales)
    cfg = cfg or LcaConfig()
    if ground_truth is not None and np.shape(ground_truth) != scene.shape:
        raise ShapeError(
            f"Ground truth {np.shape(ground_truth)} does not match the {scene.shape} scene")
    estimates = []
    for scale in scales:
        try:
            estimates.append(estimate_at_scale(scene, scale, dictionary, tuning, cfg,
                                               sigma_inner, sigma_outer))
        except ShapeError as e:
            log.info(f"Skip scale {scale}: {e}")
    if not estimates:
        raise ShapeError(f"The {scene.shape} scene is too small for every scale")
    edge = float(np.max(np.abs(tuning.grid.values())))
    result = select_scales(estimates, limit, edge, ground_truth, min_active, predictor, percentile)
    log.info(f"Scale-space inference: {int(result.mask.sum())} of {result.mask.size} pixels "
             f"assigned, finest scale {scales[0]}")
    return result
