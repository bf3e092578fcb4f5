'''
Image plumbing shared by every other module: PNG ingestion, Gaussian and
difference-of-Gaussians filtering, joint normalization of stereo pairs and
resampling.

Images are plain 2-D float64 numpy arrays. All filters use symmetric
reflection at the borders (scipy.ndimage mode 'reflect').
'''
import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from ..errors import ConfigError, DataError, ShapeError, UnsupportedImageError
from .utils import map_value, read_json
from . import tensor_io

LUMINANCE_WEIGHTS = (0.2126, 0.7152, 0.0722)

DOG_SIGMA_INNER = 1.0
DOG_SIGMA_OUTER = 5.5

RESAMPLING = {
    'bilinear': Image.Resampling.BILINEAR,
    'bicubic': Image.Resampling.BICUBIC,
}


@dataclass(frozen=True)
class StereoPair:
    left: np.ndarray
    right: np.ndarray
    # set by normalize_pair when nothing is left after mean-centering
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        left = as_image(self.left)
        right = as_image(self.right)
        if left.shape != right.shape:
            raise ShapeError(f"Stereo halves differ in size: {left.shape} vs {right.shape}")
        object.__setattr__(self, 'left', left)
        object.__setattr__(self, 'right', right)

    @property
    def shape(self):
        return self.left.shape

    def stack(self):
        '''2 x H x W array, left first.'''
        return np.stack([self.left, self.right])

    @classmethod
    def from_stack(cls, stacked, degenerate=False):
        stacked = np.asarray(stacked)
        if stacked.ndim != 3 or stacked.shape[0] != 2:
            raise ShapeError(f"Expected a 2 x H x W stack, got {stacked.shape}")
        return cls(stacked[0], stacked[1], degenerate=degenerate)

    def map(self, func):
        return StereoPair(func(self.left), func(self.right))


def as_image(values):
    img = np.asarray(values, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeError(f"Image must be a non-empty 2-D array, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise DataError("Image contains non-finite values")
    return img


def load_grayscale(path):
    '''
    Read a PNG as luminance in [0, 1].

    8 and 16 bit grayscale pass through (scaled), RGB(A) is collapsed with
    the Rec. 709 luminance weights. Alpha is ignored.
    '''
    if not os.path.exists(path):
        raise DataError(f"No such image: {path}")
    try:
        img = Image.open(path)
        img.load()
    except OSError as e:
        raise DataError(f"Could not decode {path}: {e}")

    mode = img.mode
    if mode == 'P':
        img = img.convert('RGBA' if 'transparency' in img.info else 'RGB')
        mode = img.mode
    if mode == '1':
        return np.asarray(img, dtype=np.float64)
    if mode in ('L', 'LA'):
        return np.asarray(img.getchannel('L'), dtype=np.float64) / 255.0
    if mode in ('I;16', 'I;16B', 'I;16L', 'I'):
        values = np.asarray(img, dtype=np.float64)
        if values.min() < 0 or values.max() > 65535:
            raise UnsupportedImageError(f"Unsupported integer range in {path}")
        return values / 65535.0
    if mode in ('RGB', 'RGBA'):
        rgb = np.asarray(img.convert('RGB'), dtype=np.float64) / 255.0
        r, g, b = LUMINANCE_WEIGHTS
        return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]
    raise UnsupportedImageError(f"Unsupported PNG mode {mode} in {path}")


def gaussian_kernel(sigma):
    '''Sampled 1-D Gaussian, radius ceil(4 sigma), weights summing to one.'''
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    radius = int(math.ceil(4 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(img, sigma):
    img = as_image(img)
    kernel = gaussian_kernel(sigma)
    out = correlate1d(img, kernel, axis=0, mode='reflect')
    return correlate1d(out, kernel, axis=1, mode='reflect')


def dog_filter(img, sigma_inner=DOG_SIGMA_INNER, sigma_outer=DOG_SIGMA_OUTER):
    if not 0 < sigma_inner < sigma_outer:
        raise ConfigError(
            f"DoG needs 0 < sigma_inner < sigma_outer, got {sigma_inner}, {sigma_outer}")
    return gaussian_blur(img, sigma_inner) - gaussian_blur(img, sigma_outer)


def normalize_pair(pair):
    '''
    Mean-center each half, then scale both by one factor so that
    |left|^2 + |right|^2 = 1. A pair with no energy left after centering
    is returned centered and flagged degenerate.
    '''
    left = pair.left - pair.left.mean()
    right = pair.right - pair.right.mean()
    norm = math.sqrt(float(np.sum(left * left) + np.sum(right * right)))
    if norm < 1e-12:
        return StereoPair(np.zeros_like(left), np.zeros_like(right), degenerate=True)
    return StereoPair(left / norm, right / norm)


def preprocess_pair(pair, sigma_inner=DOG_SIGMA_INNER, sigma_outer=DOG_SIGMA_OUTER):
    '''Retina-like input path of the encoder: DoG on both halves, then joint normalization.'''
    filtered = pair.map(lambda img: dog_filter(img, sigma_inner, sigma_outer))
    return normalize_pair(filtered)


def output_shape(shape, factor):
    height, width = shape
    # round half up
    return int(np.floor(height * factor + 0.5)), int(np.floor(width * factor + 0.5))


def downscale(img, factor, method='bilinear'):
    img = as_image(img)
    if not 0 < factor <= 1:
        raise ConfigError(f"downscale factor must be in (0, 1], got {factor}")
    if method not in RESAMPLING:
        raise ConfigError(f"Unknown resampling method: {method}")
    height, width = output_shape(img.shape, factor)
    if height < 1 or width < 1:
        raise ShapeError(f"Downscaling {img.shape} by {factor} leaves nothing")
    if (height, width) == img.shape:
        return img.copy()
    resized = Image.fromarray(img.astype(np.float32)).resize(
        (width, height), RESAMPLING[method])
    return np.asarray(resized, dtype=np.float64)


def _diverging_palette():
    # blue -> white -> red
    anchors = np.array([[59, 76, 192], [255, 255, 255], [180, 4, 38]], dtype=np.float64)
    t = np.linspace(0, 1, 256)
    return np.stack([np.interp(t, [0, 0.5, 1], anchors[:, c]) for c in range(3)], axis=1)


def save_png(values, path, vmin=None, vmax=None):
    '''False-colour PNG of a scalar map. NaN cells are drawn black.'''
    values = np.asarray(values, dtype=np.float64)
    valid = np.isfinite(values)
    if vmin is None or vmax is None:
        bound = float(np.max(np.abs(values[valid]))) if valid.any() else 1.0
        bound = bound or 1.0
        vmin, vmax = -bound, bound
    index = np.clip(map_value(np.where(valid, values, vmin), vmin, vmax, 0, 255), 0, 255)
    rgb = _diverging_palette()[index.astype(int)]
    rgb[~valid] = 0
    Image.fromarray(rgb.astype(np.uint8)).save(path)


def load_disparity(path):
    '''
    Ground-truth disparity map from an LCAT file, or from a flat little-endian
    f32 file whose JSON sidecar gives `height` and `width`.
    '''
    with open(path, 'rb') as f:
        head = f.read(4)
    if head == tensor_io.MAGIC:
        values = tensor_io.load_tensor(path)
    else:
        meta_path = tensor_io.sidecar_path(path)
        if not os.path.exists(meta_path):
            raise DataError(f"Flat disparity file {path} needs a sidecar with height/width")
        meta = read_json(meta_path)
        values = np.fromfile(path, dtype='<f4')
        if values.size != meta['height'] * meta['width']:
            raise ShapeError(
                f"{path} holds {values.size} values, sidecar says {meta['height']}x{meta['width']}")
        values = values.reshape(meta['height'], meta['width'])
    if values.ndim != 2:
        raise ShapeError(f"Disparity map must be 2-D, got {values.shape}")
    return values.astype(np.float64)
