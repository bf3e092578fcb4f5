from .tuning import (TuningMaps, SHARED, PER_LOCATION, estimate_tuning_shared,
                     estimate_tuning_perloc, smooth_surface_tuning, tilt_mode, central_region)
from .savgol import savitzky_golay_2d
from .inference import Posterior, LabelMap, infer, infer_map, infer_surface, infer_codes
from .scale_space import scale_space_infer, DEFAULT_SCALES
