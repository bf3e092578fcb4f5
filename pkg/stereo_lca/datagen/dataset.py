'''
Dataset materialization: stereo pairs as LCAT tensors (2 x H x W) plus a
`manifest.json` listing (path, label, seed, scale) rows in label-major,
sample-minor order.
'''
import logging
import os

import numpy as np

from ..errors import DataError, InsufficientDataError
from ..libs import tensor_io
from ..libs.imagecore import StereoPair
from ..libs.utils import ordered_map, read_json, write_json
from .grids import DISPARITY, VERGENCE, LabelGrid, fixation_grid
from .shifted import make_shifted_pair, procedural_texture
from .surface import render_slanted_plane
from .vergence import scene_size, synthetic_scene, vergence_pairs

MANIFEST = 'manifest.json'
PAIRS_DIR = 'pairs'

log = logging.getLogger(__name__)


def sample_seed(seed, label_index, sample_index):
    '''Per-sample seed, independent of generation order and worker count.'''
    return int(np.random.SeedSequence([seed, label_index, sample_index]).generate_state(1)[0])


def _pair_path(label_index, sample_index):
    return os.path.join(PAIRS_DIR, f'{label_index:04d}_{sample_index:05d}.lcat')


def _source_for(sources, seed, shape):
    if sources:
        return sources[seed % len(sources)]
    return procedural_texture(shape, seed)


def generate_dataset(out_dir, grid, per_label, seed, sources=None, crop=64, rig=None,
                     texture_size=None, workers=1, metadata=None):
    '''
    Write per_label pairs for every label of grid into out_dir. Disparity
    grids use shifted crops of `sources` (or procedural textures), surface
    grids render textured planes with `rig`. Returns the manifest dict.
    '''
    if per_label < 1:
        raise InsufficientDataError("per_label must be at least 1")
    os.makedirs(os.path.join(out_dir, PAIRS_DIR), exist_ok=True)
    jobs = [(i, j) for i in range(len(grid)) for j in range(per_label)]

    def make(job):
        i, j = job
        s = sample_seed(seed, i, j)
        label = grid[i]
        if grid.kind == DISPARITY:
            span = crop + 2 * int(np.ceil(max(abs(label.dx), abs(label.dy)) * 2)) + 8
            source = _source_for(sources, s, (span, span))
            pair = make_shifted_pair(source, label, crop, s)
            scale = 0.5
        else:
            size = texture_size or rig.size * 2
            pair = render_slanted_plane(_source_for(sources, s, (size, size)), label, rig)
            scale = 1.0
        path = _pair_path(i, j)
        tensor_io.save_tensor(os.path.join(out_dir, path), pair.stack())
        return {'path': path, 'label': list(label.as_tuple()), 'label_index': i,
                'seed': s, 'scale': scale}

    rows = ordered_map(make, jobs, workers)
    return _write_manifest(out_dir, grid, rows, per_label, seed, metadata)


def _write_manifest(out_dir, grid, rows, per_label, seed, metadata=None, kind=None):
    manifest = dict(metadata or {})
    manifest.update({'grid': grid.to_spec(), 'rows': rows, 'per_label': per_label, 'seed': seed,
                     'kind': kind or grid.kind})
    write_json(os.path.join(out_dir, MANIFEST), manifest)
    log.info(f"Wrote {len(rows)} pairs for {len(grid)} labels to {out_dir}")
    return manifest


def generate_vergence_dataset(out_dir, per_scene, seed, vergence_cfg, scenes=None,
                              synthetic=0, crop=128, workers=1, metadata=None):
    '''
    Write up to per_scene virtually fixated pairs for every captured scene
    (a StereoPair or a (left, right) array tuple), or for `synthetic`
    procedural scenes when none are given. All rows carry the (0, 0)
    fixation label. Returns the manifest dict.
    '''
    if per_scene < 1:
        raise InsufficientDataError("per_scene must be at least 1")
    count = len(scenes) if scenes else synthetic
    if count < 1:
        raise InsufficientDataError("Vergence database needs stereo sources or synthetic scenes")
    os.makedirs(os.path.join(out_dir, PAIRS_DIR), exist_ok=True)
    grid = fixation_grid()

    def make(i):
        s = sample_seed(seed, i, 0)
        if scenes:
            scene = scenes[i]
        else:
            scene, _ = synthetic_scene(scene_size(crop, vergence_cfg), s,
                                       vergence_cfg.scene_disparity)
        rows = []
        for j, pair in enumerate(vergence_pairs(scene, per_scene, crop, s, vergence_cfg)):
            path = _pair_path(i, j)
            tensor_io.save_tensor(os.path.join(out_dir, path), pair.stack())
            rows.append({'path': path, 'label': [0.0, 0.0], 'label_index': 0, 'scene': i,
                         'seed': s, 'scale': vergence_cfg.scale})
        return rows

    rows = [row for scene_rows in ordered_map(make, range(count), workers) for row in scene_rows]
    if not rows:
        raise InsufficientDataError("Every fixation was rejected")
    return _write_manifest(out_dir, grid, rows, per_scene, seed, metadata, kind=VERGENCE)


def read_manifest(path):
    '''Accepts a dataset directory or the manifest file itself.'''
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST)
    if not os.path.exists(path):
        raise DataError(f"No dataset manifest at {path}")
    manifest = read_json(path)
    manifest['root'] = os.path.dirname(os.path.abspath(path))
    if not manifest.get('rows'):
        raise InsufficientDataError(f"Dataset {path} is empty")
    return manifest


def manifest_grid(manifest):
    return LabelGrid.from_spec(manifest['grid'])


def load_pair(manifest, row):
    return StereoPair.from_stack(tensor_io.load_tensor(os.path.join(manifest['root'], row['path'])))


def label_counts(manifest):
    counts = {}
    for row in manifest['rows']:
        key = ','.join(f'{v:g}' for v in row['label'])
        counts[key] = counts.get(key, 0) + 1
    return counts
