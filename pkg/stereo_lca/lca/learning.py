'''
Dictionary learning: encode every pair of a batch with the kernels frozen,
step the kernels along the batch-averaged gradient of the residual, then
re-project every kernel pair to joint unit norm. Kernels start as binocular
windows of the training pairs; kernels that stayed silent for a whole epoch
are re-seeded the same way.
'''
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DivergenceError, InsufficientDataError
from ..libs.utils import ordered_map
from .convolution import weight_gradient
from .dictionary import Dictionary, KERNEL_SIZE, STRIDE, kernels_for, sample_patches
from .dynamics import LcaConfig, encode, energy, reconstruct

log = logging.getLogger(__name__)

# overcompleteness ratio -> kernel count for 16 px kernels at stride 8
OVERCOMPLETENESS = {0.66: 85, 1.0: 128, 3.0: 384, 8.0: 1024, 16.0: 2048}

DIVERGENCE_RATIO = 1.10
DIVERGENCE_PATIENCE = 3

PATCHES = 'patches'
RANDOM = 'random'
INITS = (PATCHES, RANDOM)

# keeps the re-seeding stream apart from the init and epoch-order streams
REPLACE_STREAM = 1


@dataclass(frozen=True)
class LearnConfig:
    learning_rate: float = 0.5
    epochs: int = 10
    batch_size: int = 16
    overcompleteness: float = 1.0
    # explicit kernel count; 0 derives it from overcompleteness
    kernels: int = 0
    seed: int = 0
    init: str = PATCHES
    replace_unused: bool = True

    def __post_init__(self):
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}, got {self.init!r}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.kernels < 0 or (self.kernels == 0 and not self.overcompleteness > 0):
            raise ConfigError("Need a positive kernel count or overcompleteness")

    @property
    def kernel_count(self):
        if self.kernels:
            return self.kernels
        return OVERCOMPLETENESS.get(float(self.overcompleteness),
                                    kernels_for(self.overcompleteness, KERNEL_SIZE, STRIDE))

    @classmethod
    def from_config(cls, config):
        return cls(learning_rate=float(config['learn_rate']),
                   epochs=int(config['learn_epochs']),
                   batch_size=int(config['learn_batch_size']),
                   overcompleteness=float(config['learn_overcompleteness']),
                   kernels=int(config['learn_kernels']),
                   seed=int(config['seed']),
                   init=config['learn_init'],
                   replace_unused=bool(config['learn_replace_unused']))

    def to_config(self):
        return {'learn_rate': self.learning_rate, 'learn_epochs': self.epochs,
                'learn_batch_size': self.batch_size,
                'learn_overcompleteness': self.overcompleteness,
                'learn_kernels': self.kernels, 'seed': self.seed,
                'learn_init': self.init, 'learn_replace_unused': self.replace_unused}


def epoch_order(count, seed, epoch):
    '''Pair order of one epoch; depends only on (seed, epoch), so a resumed run replays it.'''
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch]))
    return rng.permutation(count)


def _pair_gradient(pair, dictionary, lca_cfg):
    code = encode(pair, dictionary, lca_cfg)
    recon = reconstruct(dictionary, code)
    grad = np.stack([
        weight_gradient(code.a, pair.left - recon.left, dictionary.size, dictionary.stride),
        weight_gradient(code.a, pair.right - recon.right, dictionary.size, dictionary.stride),
    ], axis=1)
    usage = np.count_nonzero(code.a, axis=(1, 2))
    return grad, energy(pair, dictionary, code, lca_cfg.lam), usage


def _batch_gradient(pairs, indices, dictionary, lca_cfg, workers=1):
    '''
    Batch-mean kernel gradient, per-pair energies and per-kernel active
    counts, summed in index order.
    '''
    batch = [pairs[int(i)] for i in indices]
    batch = [pair for pair in batch if not pair.degenerate]
    results = ordered_map(lambda pair: _pair_gradient(pair, dictionary, lca_cfg), batch, workers)
    grad = np.zeros_like(dictionary.kernels)
    usage = np.zeros(dictionary.count, dtype=np.int64)
    for pair_grad, _, pair_usage in results:
        grad += pair_grad
        usage += pair_usage
    if results:
        grad /= len(results)
    return grad, [e for _, e, _ in results], usage


def initial_dictionary(pairs, learn_cfg):
    if learn_cfg.init == RANDOM:
        return Dictionary.random(learn_cfg.kernel_count, learn_cfg.seed)
    return Dictionary.from_patches(pairs, learn_cfg.kernel_count, learn_cfg.seed)


def reseed_unused(dictionary, usage, pairs, seed, epoch):
    '''
    Re-seed every kernel with zero usage from fresh training windows.
    Returns (dictionary, number of replaced kernels).
    '''
    unused = np.flatnonzero(usage == 0)
    if not len(unused):
        return dictionary, 0
    rng = np.random.default_rng(np.random.SeedSequence([seed, epoch, REPLACE_STREAM]))
    kernels = dictionary.kernels.copy()
    kernels[unused] = sample_patches(pairs, len(unused), rng, dictionary.size)
    return Dictionary(kernels, dictionary.stride, dictionary.metadata).normalized(), len(unused)


def _diverging(history):
    means = [row['objective'] for row in history if row['pairs']]
    if len(means) <= DIVERGENCE_PATIENCE:
        return False
    recent = means[-DIVERGENCE_PATIENCE - 1:]
    return all(b > a * DIVERGENCE_RATIO for a, b in zip(recent, recent[1:]))


def learn(pairs, learn_cfg=None, lca_cfg=None, dictionary=None, start_epoch=0, history=None,
          checkpoint=None, workers=1):
    '''
    Train a dictionary on `pairs` (a sequence of preprocessed StereoPairs,
    indexable and sized). Returns (dictionary, history) where history holds
    one row per epoch with the mean energies measured while encoding and
    the number of silent kernels re-seeded after it.

    dictionary/start_epoch/history continue an interrupted run; checkpoint
    is called as checkpoint(epoch, dictionary, history) after every epoch.
    Raises DivergenceError after DIVERGENCE_PATIENCE consecutive epochs
    whose mean objective grew by more than 10 %.
    '''
    learn_cfg = learn_cfg or LearnConfig()
    lca_cfg = lca_cfg or LcaConfig()
    if len(pairs) == 0:
        raise InsufficientDataError("Training set is empty")
    if dictionary is None:
        dictionary = initial_dictionary(pairs, learn_cfg)
    elif not dictionary.check_norms():
        # normalized checkpoints are used unchanged
        dictionary = dictionary.normalized()
    history = list(history or [])

    for epoch in range(start_epoch, learn_cfg.epochs):
        order = epoch_order(len(pairs), learn_cfg.seed, epoch)
        energies = []
        usage = np.zeros(dictionary.count, dtype=np.int64)
        for start in range(0, len(order), learn_cfg.batch_size):
            batch = order[start:start + learn_cfg.batch_size]
            grad, batch_energies, batch_usage = _batch_gradient(
                pairs, batch, dictionary, lca_cfg, workers)
            energies += batch_energies
            usage += batch_usage
            if not batch_energies:
                continue
            kernels = dictionary.kernels + learn_cfg.learning_rate * grad
            if not np.all(np.isfinite(kernels)):
                raise DivergenceError(f"Non-finite kernels in epoch {epoch}", epoch)
            dictionary = Dictionary(kernels, dictionary.stride, dictionary.metadata).normalized()

        replaced = 0
        if learn_cfg.replace_unused and energies:
            dictionary, replaced = reseed_unused(dictionary, usage, pairs, learn_cfg.seed, epoch)
        row = {'epoch': epoch, 'pairs': len(energies)}
        for key in ('residual', 'count', 'total', 'objective'):
            row[key] = float(np.mean([getattr(e, key) for e in energies])) if energies else 0.0
        row['replaced'] = replaced
        history.append(row)
        log.info(f"epoch {epoch}: objective {row['objective']:.6f}, "
                 f"active {row['count']:.1f}, residual {row['residual']:.6f}, "
                 f"re-seeded {replaced}")
        if checkpoint is not None:
            checkpoint(epoch, dictionary, history)
        if _diverging(history):
            raise DivergenceError(
                f"Mean objective grew by more than {DIVERGENCE_RATIO - 1:.0%} for "
                f"{DIVERGENCE_PATIENCE} epochs in a row", epoch)
    return dictionary, history
