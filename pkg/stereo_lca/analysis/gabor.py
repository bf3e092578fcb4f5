'''
Gabor fits of half-kernels.

    g(x, y) = a + b * exp(-(A x'^2 + 2 B x' y' + C y'^2)) * cos(2 pi f x' + kappa)
    x' =  (x - x0) cos(phi) + (y - y0) sin(phi)
    y' = -(x - x0) sin(phi) + (y - y0) cos(phi)

with the envelope of widths sigma_x, sigma_y rotated by theta relative to
the carrier. x runs along columns, y along rows. Fits are canonicalized
to phi in [0, pi), b >= 0 and theta in [0, pi).
'''
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import least_squares

from ..errors import FitError

log = logging.getLogger(__name__)

ORIENTATION_SEEDS = 8
PHASE_SEEDS = 4
MIN_N = 0.25
# weight of the n >= MIN_N penalty residuals relative to the kernel's spread
PENALTY_WEIGHT = 10.0


@dataclass(frozen=True)
class GaborFit:
    offset: float
    scale: float
    x0: float
    y0: float
    orientation: float
    envelope: float
    sigma_x: float
    sigma_y: float
    frequency: float
    phase: float
    r2: float
    sse: float = 0.0
    sst: float = 0.0

    def params(self):
        return np.array([self.offset, self.scale, self.x0, self.y0, self.orientation,
                         self.envelope, self.sigma_x, self.sigma_y, self.frequency, self.phase])

    def render(self, shape):
        return gabor(self.params(), shape)

    def as_dict(self):
        return asdict(self)


def gabor(params, shape):
    a, b, x0, y0, phi, theta, sx, sy, f, kappa = params
    y, x = np.mgrid[0:shape[0], 0:shape[1]].astype(np.float64)
    xp = (x - x0) * math.cos(phi) + (y - y0) * math.sin(phi)
    yp = -(x - x0) * math.sin(phi) + (y - y0) * math.cos(phi)
    alpha = math.cos(theta) ** 2 / (2 * sx * sx) + math.sin(theta) ** 2 / (2 * sy * sy)
    beta = -math.sin(2 * theta) / (4 * sx * sx) + math.sin(2 * theta) / (4 * sy * sy)
    gamma = math.sin(theta) ** 2 / (2 * sx * sx) + math.cos(theta) ** 2 / (2 * sy * sy)
    envelope = np.exp(-(alpha * xp * xp + 2 * beta * xp * yp + gamma * yp * yp))
    return a + b * envelope * np.cos(2 * math.pi * f * xp + kappa)


def wrap_angle(angle):
    '''Wrap to (-pi, pi].'''
    wrapped = (angle + math.pi) % (2 * math.pi) - math.pi
    return math.pi if wrapped == -math.pi else wrapped


def canonical(params):
    a, b, x0, y0, phi, theta, sx, sy, f, kappa = [float(p) for p in params]
    if f < 0:
        f, kappa = -f, -kappa
    if b < 0:
        b, kappa = -b, kappa + math.pi
    # phi + pi mirrors x' and y', the envelope is even, the carrier flips its phase
    turns = math.floor(phi / math.pi)
    phi -= turns * math.pi
    if turns % 2:
        kappa = -kappa
    theta %= math.pi
    return [a, b, x0, y0, phi, theta, abs(sx), abs(sy), f, wrap_angle(kappa)]


def n_statistic(fit):
    '''(n_x, n_y) = f * (sigma_x, sigma_y).'''
    return fit.frequency * fit.sigma_x, fit.frequency * fit.sigma_y


def _initial(kernel):
    height, width = kernel.shape
    centered = kernel - kernel.mean()
    weight = centered ** 2
    total = weight.sum()
    y, x = np.mgrid[0:height, 0:width]
    cx = float((weight * x).sum() / total)
    cy = float((weight * y).sum() / total)
    spectrum = np.abs(np.fft.rfft2(centered))
    spectrum[0, 0] = 0
    row, col = np.unravel_index(np.argmax(spectrum), spectrum.shape)
    fy = np.fft.fftfreq(height)[row]
    fx = np.fft.rfftfreq(width)[col]
    f = max(float(np.hypot(fx, fy)), 1.0 / max(height, width))
    return cx, cy, f, float(np.abs(centered).max())


def fit_gabor(kernel, bound_n=False, lock_envelope=False, starts=None):
    '''
    Multi-start least-squares Gabor fit of a 2-D kernel. bound_n keeps
    f * sigma >= 0.25 on both axes, lock_envelope fixes theta = 0.
    Raises FitError for flat kernels or when no start converges.
    '''
    kernel = np.asarray(kernel, dtype=np.float64)
    sst = float(np.sum((kernel - kernel.mean()) ** 2))
    if not sst > 1e-24:
        raise FitError("Cannot fit a Gabor to a kernel without variance")
    height, width = kernel.shape
    cx, cy, f0, amplitude = _initial(kernel)
    spread = math.sqrt(sst)
    size = max(height, width)

    free = [i for i in range(10) if not (lock_envelope and i == 5)]

    def full(p):
        params = np.zeros(10)
        params[free] = p
        return params

    def residuals(p):
        params = full(p)
        r = (gabor(params, kernel.shape) - kernel).ravel()
        if bound_n:
            f, sx, sy = params[8], params[6], params[7]
            short = np.maximum(0.0, MIN_N - np.abs(f) * np.abs([sx, sy]))
            r = np.concatenate([r, PENALTY_WEIGHT * spread * short])
        return r

    lower = np.array([-np.inf, -np.inf, -size, -size, -np.inf, -np.inf, 0.3, 0.3, 0.0, -np.inf])
    upper = np.array([np.inf, np.inf, 2 * size, 2 * size, np.inf, np.inf, 2.0 * size,
                      2.0 * size, 0.5, np.inf])
    seeds = starts or [(math.pi * i / ORIENTATION_SEEDS, 2 * math.pi * j / PHASE_SEEDS)
                       for i in range(ORIENTATION_SEEDS) for j in range(PHASE_SEEDS)]
    best = None
    for phi, kappa in seeds:
        x0 = np.array([kernel.mean(), amplitude, cx, cy, phi, 0.0, size / 5.0, size / 5.0,
                       f0, kappa])
        x0[6:8] = np.clip(x0[6:8], lower[6] + 1e-6, upper[6] - 1e-6)
        x0[8] = min(x0[8], upper[8] - 1e-6)
        try:
            result = least_squares(residuals, x0[free], bounds=(lower[free], upper[free]),
                                   method='trf', max_nfev=2000)
        except (ValueError, FloatingPointError) as e:
            log.debug(f"Gabor start ({phi:.2f}, {kappa:.2f}) failed: {e}")
            continue
        if not np.all(np.isfinite(result.x)):
            continue
        sse = float(np.sum((gabor(full(result.x), kernel.shape) - kernel) ** 2))
        if best is None or sse < best[0]:
            best = (sse, full(result.x))
    if best is None:
        raise FitError("Gabor fit did not converge from any start")
    sse, params = best
    return GaborFit(*canonical(params), r2=1.0 - sse / sst, sse=sse, sst=sst)
