'''
Shifted-pair disparity stimuli and procedural textures.
'''
import numpy as np

from ..errors import ConfigError, ShapeError
from ..libs.imagecore import StereoPair, as_image, downscale


def procedural_texture(size, seed, exponent=1.0):
    '''
    1/f^exponent noise texture scaled to [0, 1]; stands in for natural
    images when no source pictures are supplied.
    '''
    height, width = (size, size) if np.isscalar(size) else size
    rng = np.random.default_rng(seed)
    spectrum = np.fft.fft2(rng.standard_normal((height, width)))
    fy = np.fft.fftfreq(height)[:, None]
    fx = np.fft.fftfreq(width)[None, :]
    radius = np.hypot(fx, fy)
    radius[0, 0] = 1.0
    spectrum /= radius ** exponent
    spectrum[0, 0] = 0.0
    texture = np.real(np.fft.ifft2(spectrum))
    texture -= texture.min()
    peak = texture.max()
    return texture / peak if peak > 0 else texture


def shift_offsets(label):
    '''Source-resolution offset (columns, rows) of the right crop relative to the left.'''
    ox, oy = 2 * label.dx, 2 * label.dy
    if ox != int(ox) or oy != int(oy):
        raise ConfigError(f"Disparity {label.as_tuple()} is not on the half-pixel raster")
    return int(ox), int(oy)


def make_shifted_pair(img, label, crop, seed):
    '''
    Cut two crop x crop windows from img at a seeded random position, the
    right one offset by (2 dx, 2 dy) source pixels, and halve both with
    bilinear filtering. At output scale the right half shows the content
    of the left half shifted by (-dx, -dy): positive dx is crossed (near)
    disparity.
    '''
    img = as_image(img)
    ox, oy = shift_offsets(label)
    height, width = img.shape
    span_x = crop + abs(ox)
    span_y = crop + abs(oy)
    if span_x > width or span_y > height:
        raise ShapeError(
            f"Image {img.shape} too small for {crop} px crops offset by ({ox}, {oy})")
    rng = np.random.default_rng(seed)
    x0 = int(rng.integers(0, width - span_x + 1)) + max(0, -ox)
    y0 = int(rng.integers(0, height - span_y + 1)) + max(0, -oy)
    left = img[y0:y0 + crop, x0:x0 + crop]
    right = img[y0 + oy:y0 + oy + crop, x0 + ox:x0 + ox + crop]
    return StereoPair(downscale(left, 0.5, 'bilinear'), downscale(right, 0.5, 'bilinear'))


def shifted_scene(img, dx, dy=0):
    '''
    Whole-image stereo pair with an integer global shift at native scale,
    used to exercise scale-space inference with large disparities.
    '''
    img = as_image(img)
    dx, dy = int(dx), int(dy)
    height, width = img.shape
    if abs(dx) >= width or abs(dy) >= height:
        raise ShapeError(f"Shift ({dx}, {dy}) larger than the image")
    h, w = height - abs(dy), width - abs(dx)
    x0, y0 = max(0, -dx), max(0, -dy)
    left = img[y0:y0 + h, x0:x0 + w]
    right = img[y0 + dy:y0 + dy + h, x0 + dx:x0 + dx + w]
    return StereoPair(left, right)
