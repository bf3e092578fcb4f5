'''
Convolutional stereo LCA.

Leaky integrators u driven by the feed-forward correlation of both half
images with both half-kernels, inhibited by the overlap of the current
reconstruction, and read out through a nonnegative hard threshold:

    u <- u + step * (corr(I - recon(a)) - u + a),   a = T_lambda(u)

corr(I - recon(a)) equals b - G a, so the Gram tensor is never built.
'''
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, DivergenceError, ShapeError
from ..libs.imagecore import StereoPair
from ..libs.utils import ordered_map
from .convolution import correlate, feature_shape, transpose_conv

log = logging.getLogger(__name__)

# iterations before the stop rule may fire
MIN_ITERATIONS = 5


@dataclass(frozen=True)
class LcaConfig:
    lam: float = 0.1
    iterations: int = 400
    step: float = 0.1
    tolerance: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not 0 < self.step <= 1:
            raise ConfigError(f"step must be in (0, 1], got {self.step}")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ConfigError(f"iterations must be a positive integer, got {self.iterations}")
        if not self.tolerance >= 0:
            raise ConfigError(f"tolerance must be >= 0, got {self.tolerance}")

    @classmethod
    def from_config(cls, config):
        return cls(lam=float(config['lca_lambda']),
                   iterations=int(config['lca_iterations']),
                   step=float(config['lca_step']),
                   tolerance=float(config['lca_tolerance']),
                   seed=int(config['seed']))

    def to_config(self):
        return {'lca_lambda': self.lam, 'lca_iterations': self.iterations,
                'lca_step': self.step, 'lca_tolerance': self.tolerance, 'seed': self.seed}


@dataclass
class CodeState:
    '''Membrane potentials and activations, K x M x N. Cell (m, n) sits at pixel (m, n) * stride.'''
    u: np.ndarray
    a: np.ndarray
    lam: float
    stride: int
    iterations: int = 0
    converged: bool = False
    trace: list = field(default_factory=list)

    @property
    def shape(self):
        return self.a.shape

    @classmethod
    def zeros(cls, count, rows, cols, lam, stride):
        return cls(np.zeros((count, rows, cols)), np.zeros((count, rows, cols)), lam, stride)


@dataclass(frozen=True)
class Energy:
    residual: float
    count: int
    total: float
    objective: float

    def as_dict(self):
        return {'residual': self.residual, 'count': self.count,
                'total': self.total, 'objective': self.objective}


def threshold(u, lam):
    '''Nonnegative hard threshold: u where u > lam, else 0.'''
    u = np.asarray(u, dtype=np.float64)
    return np.where(u > lam, u, 0.0)


def _activations(code):
    return code.a if isinstance(code, CodeState) else np.asarray(code, dtype=np.float64)


def _reconstruct_halves(dictionary, a):
    if a.shape[0] != dictionary.count:
        raise ShapeError(f"Code has {a.shape[0]} maps, dictionary has {dictionary.count} kernels")
    return (transpose_conv(a, dictionary.left, dictionary.stride),
            transpose_conv(a, dictionary.right, dictionary.stride))


def reconstruct(dictionary, code):
    left, right = _reconstruct_halves(dictionary, _activations(code))
    return StereoPair(left, right)


def _check_geometry(pair, dictionary, a):
    rows, cols = feature_shape(pair.shape, dictionary.size, dictionary.stride)
    if a.shape != (dictionary.count, rows, cols):
        raise ShapeError(
            f"Code {a.shape} does not match {pair.shape} images and {dictionary.count} kernels")


def _energy_terms(left_res, right_res, a, lam):
    residual = 0.5 * float(np.sum(left_res * left_res) + np.sum(right_res * right_res))
    count = int(np.count_nonzero(a > lam))
    return Energy(residual, count, residual + lam * count, residual + 0.5 * lam * lam * count)


def energy(pair, dictionary, code, lam):
    '''
    residual: half the squared reconstruction error over both halves.
    count: strictly super-threshold activations.
    total: residual + lam * count.
    objective: residual + lam^2 / 2 * count, the quantity the dynamics descend.
    '''
    a = _activations(code)
    _check_geometry(pair, dictionary, a)
    left, right = _reconstruct_halves(dictionary, a)
    return _energy_terms(pair.left - left, pair.right - right, a, lam)


def encode(pair, dictionary, cfg=None):
    '''
    Run the dynamics from u = 0 until cfg.iterations, or until the
    objective changes by less than cfg.tolerance (relative) and u has
    settled to the same tolerance. The per-iteration Energy is kept in
    CodeState.trace.
    '''
    cfg = cfg or LcaConfig()
    rows, cols = feature_shape(pair.shape, dictionary.size, dictionary.stride)
    code = CodeState.zeros(dictionary.count, rows, cols, cfg.lam, dictionary.stride)
    u, a = code.u, code.a
    left_res, right_res = pair.left, pair.right
    previous = _energy_terms(left_res, right_res, a, cfg.lam).objective

    for iteration in range(1, cfg.iterations + 1):
        drive = (correlate(left_res, dictionary.left, dictionary.stride)
                 + correlate(right_res, dictionary.right, dictionary.stride))
        du = cfg.step * (drive - u + a)
        u = u + du
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"Non-finite potentials at iteration {iteration}", iteration)
        a = threshold(u, cfg.lam)
        left, right = _reconstruct_halves(dictionary, a)
        left_res, right_res = pair.left - left, pair.right - right
        current = _energy_terms(left_res, right_res, a, cfg.lam)
        if not np.isfinite(current.objective):
            raise DivergenceError(f"Non-finite energy at iteration {iteration}", iteration)
        code.trace.append(current)
        code.iterations = iteration

        change = abs(previous - current.objective) / max(abs(previous), 1e-12)
        settled = np.linalg.norm(du) <= cfg.tolerance * np.linalg.norm(u)
        previous = current.objective
        if iteration >= MIN_ITERATIONS and change < cfg.tolerance and settled:
            code.converged = True
            break

    code.u, code.a = u, a
    log.debug(f"encode stopped after {code.iterations} iterations, "
              f"{int(np.count_nonzero(a))} active, converged={code.converged}")
    return code


def binarize(code):
    '''uint8 K x M x N map, 1 where the activation is positive.'''
    return (_activations(code) > 0).astype(np.uint8)


def encode_batch(pairs, dictionary, cfg=None, workers=1):
    return ordered_map(lambda pair: encode(pair, dictionary, cfg), pairs, workers)


def activity_sweep(pairs, dictionary, lambdas, cfg=None, workers=1, reduce=None):
    '''
    Mean active count and mean objective of the encoded pairs for every
    lambda. reduce(lam, codes), when given, also sees each lambda's codes.
    '''
    cfg = cfg or LcaConfig()
    pairs = list(pairs)
    rows = []
    for lam in lambdas:
        sweep_cfg = replace(cfg, lam=float(lam))
        codes = encode_batch(pairs, dictionary, sweep_cfg, workers)
        if reduce is not None:
            reduce(float(lam), codes)
        active = [int(np.count_nonzero(code.a)) for code in codes]
        objective = [code.trace[-1].objective if code.trace else 0.0 for code in codes]
        rows.append({'lambda': float(lam),
                     'mean_active': float(np.mean(active)) if active else 0.0,
                     'mean_objective': float(np.mean(objective)) if objective else 0.0})
    return rows
