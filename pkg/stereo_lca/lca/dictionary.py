'''
Binocular dictionary: K pairs of left/right half-kernels held to joint
unit norm, |phi_L,k|^2 + |phi_R,k|^2 = 1.
'''
import numpy as np

from ..errors import ConfigError, MetadataMismatchError, ShapeError
from ..libs import tensor_io

KERNEL_SIZE = 16
STRIDE = 8
NORM_TOL = 1e-9


class Dictionary:

    def __init__(self, kernels, stride=STRIDE, metadata=None):
        '''kernels: K x 2 x size x size, left half first.'''
        kernels = np.array(kernels, dtype=np.float64)
        if kernels.ndim != 4 or kernels.shape[1] != 2 or kernels.shape[2] != kernels.shape[3]:
            raise ShapeError(f"Kernels must be K x 2 x s x s, got {kernels.shape}")
        if kernels.shape[0] < 1:
            raise ConfigError("Dictionary needs at least one kernel")
        if kernels.shape[-1] % stride:
            raise ConfigError(f"Stride {stride} must divide kernel size {kernels.shape[-1]}")
        self.kernels = kernels
        self.stride = int(stride)
        self.metadata = dict(metadata or {})

    @property
    def count(self):
        return self.kernels.shape[0]

    @property
    def size(self):
        return self.kernels.shape[-1]

    @property
    def left(self):
        return self.kernels[:, 0]

    @property
    def right(self):
        return self.kernels[:, 1]

    def norms(self):
        return np.sqrt(np.sum(self.kernels ** 2, axis=(1, 2, 3)))

    def normalized(self):
        '''Copy with every kernel pair rescaled to joint unit norm; all-zero pairs stay zero.'''
        norms = self.norms()
        scale = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
        return Dictionary(self.kernels * scale[:, None, None, None], self.stride, self.metadata)

    def check_norms(self, tol=NORM_TOL):
        deviation = np.abs(np.sum(self.kernels ** 2, axis=(1, 2, 3)) - 1.0)
        return bool(np.all(deviation <= tol))

    def copy(self):
        return Dictionary(self.kernels.copy(), self.stride, self.metadata)

    @classmethod
    def random(cls, count, seed, size=KERNEL_SIZE, stride=STRIDE):
        '''Seeded unit-variance white noise, jointly normalized.'''
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal((count, 2, size, size)), stride).normalized()

    @classmethod
    def from_patches(cls, pairs, count, seed, size=KERNEL_SIZE, stride=STRIDE):
        '''
        Kernels cut from the same window of both halves of randomly drawn
        training pairs, jointly normalized. Noise fills in when the pairs
        hold no usable window.
        '''
        rng = np.random.default_rng(seed)
        return cls(sample_patches(pairs, count, rng, size), stride).normalized()

    def save(self, path, metadata=None, precision='f4'):
        meta = dict(self.metadata)
        meta.update(metadata or {})
        meta.update({'kind': 'dictionary', 'stride': self.stride, 'count': self.count,
                     'kernel_size': self.size})
        tensor_io.save_tensor(path, self.kernels, meta, precision=precision)

    @classmethod
    def load(cls, path):
        kernels, meta = tensor_io.load_tensor(path, with_metadata=True)
        if meta.get('kind', 'dictionary') != 'dictionary':
            raise MetadataMismatchError(f"{path} is a {meta.get('kind')}, not a dictionary")
        return cls(kernels.astype(np.float64), meta.get('stride', STRIDE), meta)


def overcompleteness(count, size=KERNEL_SIZE, stride=STRIDE):
    '''
    Kernels per stride cell relative to the input dimensions one cell
    contributes (2 * stride^2); 128 kernels of 16 px at stride 8 is 1.
    '''
    return count / (2.0 * stride * stride)


def kernels_for(ratio, size=KERNEL_SIZE, stride=STRIDE):
    return int(round(ratio * 2 * stride * stride))


def sample_patches(pairs, count, rng, size=KERNEL_SIZE, attempts=20):
    '''
    count x 2 x size x size binocular windows taken at the same position in
    the left and right half of pairs drawn with `rng`. Draws from degenerate
    pairs or flat windows are retried; after `attempts` misses per slot the
    slot gets white noise.
    '''
    out = rng.standard_normal((count, 2, size, size))
    if len(pairs) == 0:
        return out
    for slot in range(count):
        for _ in range(attempts):
            pair = pairs[int(rng.integers(len(pairs)))]
            height, width = pair.left.shape
            if pair.degenerate or height < size or width < size:
                continue
            row = int(rng.integers(height - size + 1))
            col = int(rng.integers(width - size + 1))
            window = np.stack([pair.left[row:row + size, col:col + size],
                               pair.right[row:row + size, col:col + size]])
            if np.any(window):
                out[slot] = window
                break
    return out
