from .errors import ConfigError
from .libs.utils import log_error
from .datagen.grids import DEFAULT_TILTS


app_name = 'stereo_lca'

DEFAULT_CONFIG = {
    'seed': 0,
    'workers': 1,
    # retina-like preprocessing
    'dog_sigma_inner': 1.0,
    'dog_sigma_outer': 5.5,
    # sparse coding dynamics
    'lca_lambda': 0.1,
    'lca_iterations': 400,
    'lca_step': 0.1,
    'lca_tolerance': 1e-5,
    # dictionary learning
    'learn_rate': 0.5,
    'learn_epochs': 10,
    'learn_batch_size': 16,
    'learn_overcompleteness': 1.0,
    'learn_kernels': 0,  # 0: derived from learn_overcompleteness
    'learn_init': 'patches',  # 'patches' or 'random'
    'learn_replace_unused': True,
    # stimulus databases
    'gen_kind': 'disparity',  # 'disparity', 'surface' or 'vergence'
    'gen_per_label': 10,
    'gen_crop': 128,  # source pixels; pairs are halved to 64 x 64
    'gen_disparity_low': -6.0,
    'gen_disparity_high': 6.0,
    'gen_disparity_step': 0.5,
    'gen_tilts': list(DEFAULT_TILTS),
    'gen_slants': None,  # None: calibrated from the rig
    'gen_frontoparallel': True,
    'gen_sources': [],  # image paths; empty: procedural textures
    'gen_texture_size': 0,  # 0: twice the rig image size
    'gen_stereo_sources': [],  # [left, right] image paths; empty: synthetic scenes
    'gen_scenes': 8,
    # virtual vergence; gen_per_label is the fixation count per scene
    'vergence_focal': 1400.0,
    'vergence_max_angle': 20.0,
    'vergence_radius': 100.0,
    'vergence_scale': 0.5,
    'vergence_search': 16,
    'vergence_scene_disparity': 8,
    'rig_baseline': 0.07,
    'rig_distance': 1.0,
    'rig_fov': 11.8,
    'rig_size': 256,
    # tuning maps
    'tune_mode': 'shared',  # 'shared' or 'per_location'
    'tune_margin': 1,
    'tune_region': [7, 7],
    'tune_smooth': False,
    # kernel analysis
    'analysis_r2_min': 0.93,
    'analysis_bound_n': False,
    'analysis_lock_envelope': False,
    # error predictor
    'predict_min_per_bin': 100,
    'predict_percentiles': [50, 75, 80],
    # scale-space inference
    'scale_list': [1.0, 0.8, 0.6, 0.4, 0.2],
    'scale_limit': 6.0,
    'scale_percentile': 80,
    'scale_min_active': 1,
    # lambda sweep
    'sweep_lambdas': [0.3, 0.1, 0.04],
}

CHOICES = {
    'gen_kind': ('disparity', 'surface', 'vergence'),
    'tune_mode': ('shared', 'per_location'),
    'learn_init': ('patches', 'random'),
}


def check_value(key, value):
    '''Validate one config entry against the type of its default. Returns the value.'''
    if key not in DEFAULT_CONFIG:
        raise ConfigError(f"Unknown config key: {key}")
    default = DEFAULT_CONFIG[key]
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key} must be one of {CHOICES[key]}, got {value!r}")
    if default is None or value is None:
        if value is not None and not isinstance(value, list):
            raise ConfigError(f"{key} must be a list or null, got {value!r}")
        return value
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{key} must be {type(default).__name__}, got {value!r}")
    return float(value) if isinstance(default, float) else value


def merge_config(*configs):
    merged = dict(DEFAULT_CONFIG)
    for config in configs:
        for key, value in (config or {}).items():
            merged[key] = check_value(key, value)
    return merged


class StereoLCA():
    '''Runs the pipeline commands with one shared configuration.'''

    def __init__(self, config=None, get_logger=None):
        if get_logger is None:
            import logging
            get_logger = logging.getLogger
        self.get_logger = get_logger
        self.log = get_logger(__name__)
        self.config = merge_config(config)
        self.services = {}

    def service(self, command):
        if command not in self.services:
            from .services import SERVICES
            if command not in SERVICES:
                raise ConfigError(f"Unknown command: {command}")
            self.log.debug(f"Initializing {command} service")
            self.services[command] = SERVICES[command](self.config, get_logger=self.get_logger)
        return self.services[command]

    @log_error
    def set_debug_level(self, level):
        self.log.setLevel(level)
        for service in self.services.values():
            service.set_debug_level(level)

    @log_error
    def update_config(self, config):
        self.log.debug(f"Update config: {config}")
        self.config = merge_config(self.config, config)
        for service in self.services.values():
            service.update_config(config)

    @log_error
    def run(self, command, **kwargs):
        self.log.info(f"Run {command}")
        return self.service(command).run(**kwargs)
