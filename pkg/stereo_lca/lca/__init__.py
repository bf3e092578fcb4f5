from .convolution import correlate, transpose_conv, feature_shape, fit_to_grid
from .dictionary import Dictionary, KERNEL_SIZE, STRIDE
from .dynamics import (LcaConfig, CodeState, Energy, threshold, reconstruct, energy, encode,
                       binarize, encode_batch, activity_sweep)
from .learning import LearnConfig, learn, OVERCOMPLETENESS
