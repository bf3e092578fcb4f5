import logging
import os

from ..datagen.dataset import MANIFEST, load_pair, read_manifest
from ..errors import ConfigError, MetadataMismatchError
from ..lca.dynamics import LcaConfig, encode
from ..libs.imagecore import preprocess_pair
from ..libs.utils import config_hash, file_sha256, log_error, ordered_map, resident_memory, format_bytes
from ..stereo_lca import DEFAULT_CONFIG, check_value
from ..version import __version__


class DatasetPairs:
    '''Indexable view of a dataset that loads and preprocesses pairs on access.'''

    def __init__(self, manifest, sigma_inner, sigma_outer):
        self.manifest = manifest
        self.rows = manifest['rows']
        self.sigma_inner = sigma_inner
        self.sigma_outer = sigma_outer

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        pair = load_pair(self.manifest, self.rows[i])
        return preprocess_pair(pair, self.sigma_inner, self.sigma_outer)


def manifest_path(dataset):
    return os.path.join(dataset, MANIFEST) if os.path.isdir(dataset) else dataset


class BaseService:
    '''
    Shared plumbing of the command services: logger injection, validated
    config updates and provenance for output sidecars.
    '''
    command = None

    def __init__(self, config=None, get_logger=None):
        if get_logger is None:
            get_logger = logging.getLogger
        self.log = get_logger(self.__class__.__module__)
        self.config = dict(DEFAULT_CONFIG)
        self.update_config(config or {})

    def set_debug_level(self, level):
        self.log.setLevel(level)

    @log_error
    def update_config(self, config):
        for key, value in config.items():
            value = check_value(key, value)
            if self.config.get(key) != value:
                self.log.debug(f"Update {key} to {value}")
            self.config[key] = value

    @property
    def workers(self):
        return max(1, int(self.config['workers']))

    @property
    def lca_config(self):
        return LcaConfig.from_config(self.config)

    @property
    def dog(self):
        return self.config['dog_sigma_inner'], self.config['dog_sigma_outer']

    def config_hash(self, exclude=()):
        # the worker count changes wall time only
        ignored = {'workers'} | set(exclude)
        return config_hash({k: v for k, v in self.config.items() if k not in ignored})

    def provenance(self, inputs=()):
        '''Sidecar fields tying an output to its config and input files.'''
        hashes = {}
        for path in inputs:
            if path and os.path.isfile(path):
                hashes[os.path.basename(path)] = file_sha256(path)
        return {'config_hash': self.config_hash(), 'inputs': hashes,
                'producer': self.command, 'version': __version__}

    def load_dataset(self, dataset):
        manifest = read_manifest(dataset)
        return manifest, DatasetPairs(manifest, *self.dog)

    def encode_dataset(self, pairs, dictionary, reduce, cfg=None):
        '''
        Encode every pair and map reduce(index, code) over the results in
        dataset order; only what reduce returns is kept. cfg defaults to the
        configured dynamics.
        '''
        cfg = cfg or self.lca_config

        def one(i):
            return reduce(i, encode(pairs[i], dictionary, cfg))

        results = ordered_map(one, range(len(pairs)), self.workers)
        self.log.info(f"Encoded {len(pairs)} pairs",
                      extra={'rss': format_bytes(resident_memory())})
        return results

    def require_dir(self, path):
        if os.path.exists(path) and not os.path.isdir(path):
            raise ConfigError(f"Output path {path} exists and is not a directory")
        os.makedirs(path, exist_ok=True)
        return path

    def check_compatible(self, dictionary, tuning=None):
        '''Refuse artifact combinations that were not built together.'''
        if tuning is None:
            return
        meta = tuning.metadata
        if tuning.kernels != dictionary.count:
            raise MetadataMismatchError(
                f"Tuning maps cover {tuning.kernels} kernels, dictionary has {dictionary.count}")
        if meta.get('stride', dictionary.stride) != dictionary.stride:
            raise MetadataMismatchError(
                f"Tuning stride {meta.get('stride')} differs from dictionary stride "
                f"{dictionary.stride}")
        lam = meta.get('lambda')
        if lam is not None and abs(lam - self.config['lca_lambda']) > 1e-12:
            raise MetadataMismatchError(
                f"Tuning maps were estimated with lambda {lam}, "
                f"lca_lambda is {self.config['lca_lambda']}")
