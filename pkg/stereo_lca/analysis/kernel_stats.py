'''
Per-kernel statistics of a binocular dictionary: Gabor fits of both
halves, ocular dominance, left/right position and phase shifts, and a
heuristic type.
'''
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, FitError
from ..libs.utils import ordered_map
from .gabor import fit_gabor, wrap_angle

MATCHED_GABOR = 'MatchedGabor'
TUNED_INHIBITORY = 'TunedInhibitory'
BLOB_LIKE = 'BlobLike'
UNCLASSIFIED = 'Unclassified'

DOMINANCE_BINS = 7
R2_MIN = 0.93

log = logging.getLogger(__name__)


@dataclass
class KernelStats:
    kernel: int
    left_fit: object
    right_fit: object
    dominance_angle: float
    dominance_bin: int
    pos_shift: object = None
    phase_shift: object = None
    displacement: object = None
    joint_r2: object = None
    kind: str = UNCLASSIFIED

    def as_record(self):
        return {
            'kernel': self.kernel,
            'left': self.left_fit.as_dict() if self.left_fit else None,
            'right': self.right_fit.as_dict() if self.right_fit else None,
            'dominance_angle': self.dominance_angle,
            'dominance_bin': self.dominance_bin,
            'pos_shift': self.pos_shift,
            'phase_shift': self.phase_shift,
            'displacement': self.displacement,
            'joint_r2': self.joint_r2,
            'type': self.kind,
        }


def ocular_dominance(left, right):
    '''
    Angle arctan(|left| / |right|) in [0, pi/2] and its bin on a 7 point
    scale: 1 for right-monocular kernels, 4 balanced, 7 left-monocular.
    '''
    left_norm = float(np.linalg.norm(left))
    right_norm = float(np.linalg.norm(right))
    if left_norm == 0 and right_norm == 0:
        raise DataError("Ocular dominance of an all-zero kernel")
    angle = math.atan2(left_norm, right_norm)
    bin_ = min(DOMINANCE_BINS, int(angle / (math.pi / 2 / DOMINANCE_BINS)) + 1)
    return angle, bin_


def _aligned(fit, reference_orientation):
    '''Orientation and phase of fit, expressed on the carrier direction closest to the reference.'''
    orientation, phase = fit.orientation, fit.phase
    if abs(wrap_angle(orientation - reference_orientation)) > math.pi / 2:
        orientation, phase = orientation + math.pi, -phase
    return orientation, phase


def shift_statistics(left_fit, right_fit, r2_min=R2_MIN):
    '''
    pos_shift: f * (displacement . carrier axis), in cycles, with the
    displacement right centre minus left centre, the carrier axis the mean
    fitted carrier direction and f the mean frequency.
    phase_shift: right phase minus left phase, wrapped to (-pi, pi].
    '''
    if left_fit is None or right_fit is None or left_fit.r2 <= r2_min or right_fit.r2 <= r2_min:
        raise FitError(f"Shift statistics need both fits above r2 {r2_min}")
    right_orientation, right_phase = _aligned(right_fit, left_fit.orientation)
    mean_orientation = math.atan2(math.sin(left_fit.orientation) + math.sin(right_orientation),
                                  math.cos(left_fit.orientation) + math.cos(right_orientation))
    frequency = 0.5 * (left_fit.frequency + right_fit.frequency)
    dx = right_fit.x0 - left_fit.x0
    dy = right_fit.y0 - left_fit.y0
    pos_shift = frequency * (dx * math.cos(mean_orientation) + dy * math.sin(mean_orientation))
    return {'pos_shift': pos_shift, 'phase_shift': wrap_angle(right_phase - left_fit.phase),
            'displacement': [dx, dy]}


def _radial_sign_change(half):
    '''True when the energy is centred and the radial profile changes sign (centre-surround).'''
    energy = half * half
    total = energy.sum()
    if total == 0:
        return False
    y, x = np.mgrid[0:half.shape[0], 0:half.shape[1]]
    cy = (energy * y).sum() / total
    cx = (energy * x).sum() / total
    radius = np.hypot(y - cy, x - cx)
    reach = min(half.shape) / 2.0
    if energy[radius <= reach * 0.75].sum() < 0.8 * total:
        return False
    centre = half[radius < 1.5].mean() if np.any(radius < 1.5) else half[np.unravel_index(
        np.argmin(radius), radius.shape)]
    ring = half[(radius >= 2.5) & (radius < reach)]
    return ring.size > 0 and np.sign(ring.mean()) == -np.sign(centre) and centre != 0


def classify_kernel(stats, left, right, tuning_row=None, zero_index=None, r2_min=R2_MIN):
    '''
    First matching rule wins:
      MatchedGabor     both fits above r2_min, dominance bin 4, |phase shift| < pi/4
      TunedInhibitory  dominance bin in {1, 2, 6, 7}, or |phase shift| > 3 pi/4 with the
                       zero-disparity tuning value below the row median
      BlobLike         both fits at or below r2_min and a compact centre-surround profile
    otherwise Unclassified.
    '''
    good = [fit is not None and fit.r2 > r2_min for fit in (stats.left_fit, stats.right_fit)]
    phase = stats.phase_shift
    if all(good) and stats.dominance_bin == 4 and phase is not None and abs(phase) < math.pi / 4:
        return MATCHED_GABOR
    if stats.dominance_bin in (1, 2, 6, 7):
        return TUNED_INHIBITORY
    if phase is not None and abs(phase) > 3 * math.pi / 4 and tuning_row is not None \
            and zero_index is not None:
        tuning_row = np.asarray(tuning_row)
        if tuning_row[zero_index] < np.median(tuning_row):
            return TUNED_INHIBITORY
    if not any(good):
        stronger = left if np.sum(left * left) >= np.sum(right * right) else right
        if _radial_sign_change(np.asarray(stronger, dtype=np.float64)):
            return BLOB_LIKE
    return UNCLASSIFIED


def _safe_fit(half, **options):
    try:
        return fit_gabor(half, **options)
    except FitError as e:
        log.debug(f"No Gabor fit: {e}")
        return None


def kernel_stats(index, left, right, tuning_row=None, zero_index=None, r2_min=R2_MIN,
                 bound_n=False, lock_envelope=False):
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    angle, bin_ = ocular_dominance(left, right)
    options = {'bound_n': bound_n, 'lock_envelope': lock_envelope}
    stats = KernelStats(index, _safe_fit(left, **options), _safe_fit(right, **options), angle, bin_)
    if stats.left_fit and stats.right_fit:
        sst = stats.left_fit.sst + stats.right_fit.sst
        stats.joint_r2 = 1.0 - (stats.left_fit.sse + stats.right_fit.sse) / sst
    try:
        shifts = shift_statistics(stats.left_fit, stats.right_fit, r2_min)
        stats.pos_shift = shifts['pos_shift']
        stats.phase_shift = shifts['phase_shift']
        stats.displacement = shifts['displacement']
    except FitError:
        pass
    stats.kind = classify_kernel(stats, left, right, tuning_row, zero_index, r2_min)
    return stats


def zero_disparity_index(grid):
    try:
        return grid.index((0.0, 0.0))
    except ValueError:
        return None


def kernel_statistics(dictionary, tuning=None, r2_min=R2_MIN, bound_n=False,
                      lock_envelope=False, workers=1):
    '''KernelStats for every kernel of the dictionary, in kernel order.'''
    rows, zero_index = None, None
    if tuning is not None and tuning.mode == 'shared':
        rows = tuning.probabilities
        zero_index = zero_disparity_index(tuning.grid)

    def one(k):
        row = rows[k] if rows is not None else None
        return kernel_stats(k, dictionary.left[k], dictionary.right[k], row, zero_index,
                            r2_min, bound_n, lock_envelope)

    stats = ordered_map(one, range(dictionary.count), workers)
    kinds = {}
    for s in stats:
        kinds[s.kind] = kinds.get(s.kind, 0) + 1
    log.info(f"Kernel types: {kinds}")
    return stats


def write_jsonl(stats, path):
    with open(path, 'w') as f:
        for s in stats:
            f.write(json.dumps(s.as_record(), sort_keys=True))
            f.write('\n')


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
