'''
Tuning maps: P(kernel k active | label y) estimated from binarized codes.

Shared maps pool every retained feature-map cell (translation invariance),
per-location maps keep one estimate per cell of an R x C region around
the centre of the feature map. Estimates are clamped to [eps, 1 - eps]
with eps = 1 / (2 * observations of that label) so log scores stay finite.
'''
import logging
from dataclasses import dataclass, field

import numpy as np

from ..datagen.grids import LabelGrid, SURFACE
from ..errors import ConfigError, InsufficientDataError, MetadataMismatchError, ShapeError
from ..libs import tensor_io
from ..libs.utils import ordered_map
from .savgol import savitzky_golay_2d

SHARED = 'shared'
PER_LOCATION = 'per_location'

DEFAULT_MARGIN = 1
DEFAULT_REGION = (7, 7)

log = logging.getLogger(__name__)


@dataclass
class TuningMaps:
    mode: str
    # K x L (shared) or K x R x C x L (per location)
    probabilities: np.ndarray
    grid: LabelGrid
    # per label
    epsilon: np.ndarray
    counts: np.ndarray
    margin: int = DEFAULT_MARGIN
    region: tuple = DEFAULT_REGION
    smoothed: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (SHARED, PER_LOCATION):
            raise ConfigError(f"Unknown tuning mode: {self.mode}")
        expected = 2 if self.mode == SHARED else 4
        if self.probabilities.ndim != expected or self.probabilities.shape[-1] != len(self.grid):
            raise ShapeError(
                f"{self.mode} tuning needs {expected} axes ending in {len(self.grid)} labels, "
                f"got {self.probabilities.shape}")
        self.epsilon = np.asarray(self.epsilon, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.region = tuple(self.region)
        self.probabilities = np.clip(np.asarray(self.probabilities, dtype=np.float64),
                                     self.epsilon, 1.0 - self.epsilon)

    @property
    def kernels(self):
        return self.probabilities.shape[0]

    def log_tables(self):
        '''(log P(active), log P(inactive)) with the probabilities' shape.'''
        return np.log(self.probabilities), np.log1p(-self.probabilities)

    def save(self, path, metadata=None):
        meta = dict(self.metadata)
        meta.update(metadata or {})
        meta.update({'kind': 'tuning', 'mode': self.mode, 'grid': self.grid.to_spec(),
                     'epsilon': self.epsilon.tolist(), 'counts': self.counts.tolist(),
                     'margin': self.margin, 'region': list(self.region),
                     'smoothed': self.smoothed, 'kernels': self.kernels})
        tensor_io.save_tensor(path, self.probabilities, meta, precision='f8')

    @classmethod
    def load(cls, path):
        probabilities, meta = tensor_io.load_tensor(path, with_metadata=True)
        if meta.get('kind') != 'tuning':
            raise MetadataMismatchError(f"{path} does not hold tuning maps")
        return cls(meta['mode'], probabilities.astype(np.float64),
                   LabelGrid.from_spec(meta['grid']), meta['epsilon'], meta['counts'],
                   margin=meta.get('margin', DEFAULT_MARGIN),
                   region=tuple(meta.get('region', DEFAULT_REGION)),
                   smoothed=meta.get('smoothed', False), metadata=meta)


def _check_codes(codes, count):
    if len(codes) != count:
        raise ShapeError(f"Got code sets for {len(codes)} labels, grid has {count}")


def _label_sums(label_codes, reduce):
    total, observations = None, 0
    for code in label_codes:
        code = np.asarray(code)
        if code.ndim != 3:
            raise ShapeError(f"Binary codes must be K x M x N, got {code.shape}")
        part, seen = reduce(code != 0)
        total = part if total is None else total + part
        observations += seen
    return total, observations


def _finish(mode, results, grid, **kwargs):
    '''results: (active sums, observation count) per label.'''
    missing = [i for i, (_, n) in enumerate(results) if n == 0]
    if missing:
        raise InsufficientDataError(
            f"No observations for label(s) {[grid[i].as_tuple() for i in missing[:5]]}")
    observations = np.asarray([n for _, n in results], dtype=np.int64)
    sums = [s for s, _ in results]
    if len({s.shape for s in sums}) != 1:
        raise ShapeError("Codes of different labels have different kernel counts")
    probabilities = np.stack(sums, axis=-1) / observations
    epsilon = 1.0 / (2.0 * observations)
    return TuningMaps(mode, probabilities, grid, epsilon, observations, **kwargs)


def estimate_tuning_shared(codes, grid, margin=DEFAULT_MARGIN, workers=1):
    '''
    codes: one iterable of binary K x M x N codes per grid label (grid order).
    Every cell at least `margin` cells away from the map border counts as
    one observation.
    '''
    _check_codes(codes, len(grid))
    if margin < 0:
        raise ConfigError(f"margin must be >= 0, got {margin}")

    def reduce(binary):
        _, rows, cols = binary.shape
        kept = binary[:, margin:rows - margin, margin:cols - margin]
        return kept.sum(axis=(1, 2), dtype=np.int64), kept.shape[1] * kept.shape[2]

    results = ordered_map(lambda label_codes: _label_sums(label_codes, reduce), codes, workers)
    return _finish(SHARED, results, grid, margin=margin)


def central_region(code, region=DEFAULT_REGION):
    '''R x C window of a K x M x N map around its centre.'''
    rows, cols = region
    _, height, width = code.shape
    if height < rows or width < cols:
        raise ShapeError(f"Feature map {code.shape[1:]} smaller than the {region} region")
    top, left = (height - rows) // 2, (width - cols) // 2
    return code[:, top:top + rows, left:left + cols]


def estimate_tuning_perloc(codes, grid, region=DEFAULT_REGION, workers=1):
    '''Like estimate_tuning_shared, but one estimate per cell of the central region.'''
    _check_codes(codes, len(grid))
    region = tuple(region)

    def reduce(binary):
        return central_region(binary, region).astype(np.int64), 1

    results = ordered_map(lambda label_codes: _label_sums(label_codes, reduce), codes, workers)
    return _finish(PER_LOCATION, results, grid, region=region)


def _surface_axes(grid):
    spec = grid.to_spec()
    if grid.kind != SURFACE:
        raise ConfigError("Surface smoothing needs a (tilt, slant) grid")
    offset = 1 if spec.get('frontoparallel', True) else 0
    return offset, len(spec['slants']), len(spec['tilts'])


def smooth_surface_tuning(tuning, degree=3, width=5):
    '''
    Savitzky-Golay smoothing of every per-location map over the (slant,
    tilt) plane. The tilt axis is smoothed as a truncated axis, not as a
    circle. The fronto-parallel label is left as estimated.
    '''
    if tuning.mode != PER_LOCATION:
        raise ConfigError("Only per-location tuning maps are smoothed")
    offset, slants, tilts = _surface_axes(tuning.grid)
    probabilities = tuning.probabilities.copy()
    kernels, rows, cols, _ = probabilities.shape
    for k in range(kernels):
        for r in range(rows):
            for c in range(cols):
                plane = probabilities[k, r, c, offset:].reshape(slants, tilts)
                probabilities[k, r, c, offset:] = savitzky_golay_2d(plane, degree, width).ravel()
    smoothed = TuningMaps(PER_LOCATION, probabilities, tuning.grid, tuning.epsilon,
                          tuning.counts, margin=tuning.margin, region=tuning.region,
                          smoothed=True, metadata=dict(tuning.metadata))
    log.debug(f"Smoothed {kernels * rows * cols} surface tuning maps")
    return smoothed


def tilt_mode(tuning, kernel):
    '''
    Tilt (degrees) at which the central-location map of `kernel` peaks,
    after summing over slants.
    '''
    offset, slants, tilts = _surface_axes(tuning.grid)
    probabilities = tuning.probabilities
    if tuning.mode == PER_LOCATION:
        rows, cols = probabilities.shape[1:3]
        probabilities = probabilities[:, rows // 2, cols // 2]
    plane = probabilities[kernel, offset:].reshape(slants, tilts)
    return float(tuning.grid.to_spec()['tilts'][int(np.argmax(plane.sum(axis=0)))])
