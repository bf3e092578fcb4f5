'''
Naive Bayes readout of binarized codes. The score of label y is the sum
over code entries of log P(observed state | y); priors are uniform and
omitted. Ties go to the lowest grid index.

A pixel lies in the receptive fields of a 2 x 2 block of feature-map
cells; block (i, j) of a K x M x N map covers image pixels
[(i + 1) * stride, (i + 2) * stride) x [(j + 1) * stride, (j + 2) * stride).
'''
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from ..libs.utils import ordered_map
from .tuning import PER_LOCATION, SHARED, central_region

BLOCK = 2


@dataclass
class Posterior:
    scores: np.ndarray
    index: int
    label: object
    active_count: int


@dataclass
class LabelMap:
    '''Per-block argmax label indices and active counts, (M - 1) x (N - 1).'''
    indices: np.ndarray
    active_count: np.ndarray
    grid: object

    @property
    def shape(self):
        return self.indices.shape

    def values(self):
        '''(M - 1) x (N - 1) x 2 label coordinates.'''
        return self.grid.values()[self.indices]


def _require(tuning, mode):
    if tuning.mode != mode:
        raise ConfigError(f"Expected {mode} tuning maps, got {tuning.mode}")


def _posterior(scores, grid, active):
    index = int(np.argmax(scores))
    return Posterior(scores, index, grid[index], int(active))


def infer(block, tuning):
    '''block: binary K x 2 x 2 code entries around one pixel.'''
    _require(tuning, SHARED)
    block = np.asarray(block) != 0
    if block.ndim != 3 or block.shape[0] != tuning.kernels:
        raise ShapeError(f"Expected a {tuning.kernels} x 2 x 2 block, got {block.shape}")
    log_on, log_off = tuning.log_tables()
    on = block.sum(axis=(1, 2))
    off = block.shape[1] * block.shape[2] - on
    scores = on @ log_on + off @ log_off
    return _posterior(scores, tuning.grid, on.sum())


def _block_counts(binary):
    return (binary[:, :-1, :-1].astype(np.int64) + binary[:, 1:, :-1]
            + binary[:, :-1, 1:] + binary[:, 1:, 1:])


def score_map(code, tuning):
    '''(M - 1) x (N - 1) x L log scores of every 2 x 2 block.'''
    _require(tuning, SHARED)
    binary = np.asarray(code) != 0
    if binary.ndim != 3 or binary.shape[0] != tuning.kernels:
        raise ShapeError(f"Expected a {tuning.kernels} x M x N code, got {binary.shape}")
    if binary.shape[1] < BLOCK or binary.shape[2] < BLOCK:
        raise ShapeError(f"Feature map {binary.shape[1:]} smaller than a 2 x 2 block")
    counts = _block_counts(binary)
    log_on, log_off = tuning.log_tables()
    scores = np.einsum('kmn,kl->mnl', counts, log_on - log_off) + BLOCK * BLOCK * log_off.sum(axis=0)
    return scores, counts.sum(axis=0)


def infer_map(code, tuning):
    scores, active = score_map(code, tuning)
    return LabelMap(np.argmax(scores, axis=-1), active, tuning.grid)


def infer_surface(region_code, tuning):
    '''region_code: binary K x R x C block read with each cell's own tuning map.'''
    _require(tuning, PER_LOCATION)
    region_code = np.asarray(region_code) != 0
    expected = tuning.probabilities.shape[:3]
    if region_code.shape != expected:
        raise ShapeError(f"Expected a {expected} region, got {region_code.shape}")
    log_on, log_off = tuning.log_tables()
    scores = np.einsum('krc,krcl->l', region_code.astype(np.float64), log_on - log_off) \
        + log_off.sum(axis=(0, 1, 2))
    return _posterior(scores, tuning.grid, region_code.sum())


def central_block(code):
    '''K x 2 x 2 block at the centre of a K x M x N code.'''
    return central_region(np.asarray(code), (BLOCK, BLOCK))


def infer_codes(codes, tuning, workers=1):
    '''Posterior of the central block (shared maps) or region (per-location maps) of each code.'''
    if tuning.mode == SHARED:
        return ordered_map(lambda code: infer(central_block(code), tuning), codes, workers)
    return ordered_map(lambda code: infer_surface(central_region(np.asarray(code), tuning.region),
                                                  tuning), codes, workers)
