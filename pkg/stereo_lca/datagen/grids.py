'''
Label grids for the stimulus databases.

Ordering is part of the contract because inference breaks ties by the
lowest grid index:
    disparity grid -- dy outer, dx inner, both ascending
    surface grid   -- fronto-parallel label first (if included), then
                      slant outer, tilt inner, both ascending
'''
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError

DISPARITY = 'disparity'
SURFACE = 'surface'
# database of virtually fixated scenes; labelled on the single-label fixation grid
VERGENCE = 'vergence'
TILT_PERIOD = 360.0

DEFAULT_TILTS = tuple(float(t) for t in range(0, 360, 10))
# slants listed with the original surface database
TABULATED_SLANTS = (6.0, 24.3, 38.2, 48.2, 55.2)


@dataclass(frozen=True)
class DisparityLabel:
    dx: float
    dy: float

    def as_tuple(self):
        return (self.dx, self.dy)


@dataclass(frozen=True)
class SurfaceLabel:
    tilt: float
    slant: float

    def __post_init__(self):
        if not 0 <= self.tilt < 360:
            raise ConfigError(f"tilt must be in [0, 360), got {self.tilt}")
        if not 0 <= self.slant < 90:
            raise ConfigError(f"slant must be in [0, 90), got {self.slant}")

    def as_tuple(self):
        return (self.tilt, self.slant)


def _steps(low, high, step):
    count = int(round((high - low) / step)) + 1
    if count < 1 or step <= 0:
        raise ConfigError(f"Invalid grid range [{low}, {high}] step {step}")
    return [round(low + i * step, 9) for i in range(count)]


@dataclass
class LabelGrid:
    kind: str
    labels: list
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (DISPARITY, SURFACE):
            raise ConfigError(f"Unknown grid kind: {self.kind}")
        if not self.labels:
            raise ConfigError("Label grid is empty")
        tuples = [label.as_tuple() for label in self.labels]
        if len(set(tuples)) != len(tuples):
            raise ConfigError("Label grid contains duplicates")
        self._index = {t: i for i, t in enumerate(tuples)}

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i):
        return self.labels[i]

    def index(self, label):
        key = label.as_tuple() if hasattr(label, 'as_tuple') else tuple(label)
        try:
            return self._index[key]
        except KeyError:
            raise ConfigError(f"Label {key} is not on the grid")

    @property
    def periods(self):
        '''Period of each label axis; None for a linear axis.'''
        return (TILT_PERIOD, None) if self.kind == SURFACE else (None, None)

    def values(self):
        '''len x 2 array of label coordinates.'''
        return np.array([label.as_tuple() for label in self.labels], dtype=np.float64)

    def to_spec(self):
        return dict(self.spec, kind=self.kind)

    @classmethod
    def from_spec(cls, spec):
        spec = dict(spec)
        kind = spec.pop('kind', None)
        if kind == DISPARITY:
            return disparity_grid(**spec)
        if kind == SURFACE:
            return surface_grid(**spec)
        raise ConfigError(f"Unknown grid kind: {kind}")

    def is_compatible(self, other):
        return self.kind == other.kind and self.to_spec() == other.to_spec()


def disparity_grid(low=-6.0, high=6.0, step=0.5):
    '''Square (dx, dy) grid; the defaults give the 25 x 25 shifted-pair database.'''
    values = _steps(low, high, step)
    labels = [DisparityLabel(dx, dy) for dy in values for dx in values]
    spec = {'low': low, 'high': high, 'step': step}
    return LabelGrid(DISPARITY, labels, spec)


def fixation_grid():
    '''Single (0, 0) label: disparity vanishes at the fixation point of a verged pair.'''
    return disparity_grid(0.0, 0.0, 1.0)


def surface_grid(tilts=DEFAULT_TILTS, slants=None, frontoparallel=True):
    '''
    (tilt, slant) grid. Without explicit slants the rig-calibrated
    sequence from datagen.surface.calibrate_slants is used.
    '''
    if slants is None:
        from .surface import calibrate_slants, RigGeometry
        slants = calibrate_slants(RigGeometry())
    tilts = [float(t) for t in tilts]
    slants = [float(s) for s in slants]
    if any(s <= 0 for s in slants):
        raise ConfigError("Slant list must hold positive angles; use frontoparallel for 0")
    labels = [SurfaceLabel(0.0, 0.0)] if frontoparallel else []
    labels += [SurfaceLabel(t, s) for s in slants for t in tilts]
    spec = {'tilts': tilts, 'slants': slants, 'frontoparallel': frontoparallel}
    return LabelGrid(SURFACE, labels, spec)
