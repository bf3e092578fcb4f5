'''
Desk-scale runs of the whole pipeline: a 64-kernel dictionary trained on
shifted procedural-texture pairs over dx, dy in -3..3, read out through the
CLI and the library.
'''
import io
import json

import numpy as np
import pytest

from stereo_lca.analysis.accuracy import ErrorPredictor, coverage
from stereo_lca.cli import main
from stereo_lca.datagen.grids import (SURFACE, DisparityLabel, LabelGrid, SurfaceLabel,
                                      surface_grid)
from stereo_lca.datagen.shifted import make_shifted_pair, procedural_texture, shifted_scene
from stereo_lca.datagen.surface import RigGeometry, calibrate_slants, render_slanted_plane
from stereo_lca.lca.dictionary import Dictionary
from stereo_lca.lca.dynamics import LcaConfig, binarize, encode
from stereo_lca.libs.imagecore import preprocess_pair
from stereo_lca.readout.inference import infer_map, infer_surface
from stereo_lca.readout.scale_space import scale_space_infer
from stereo_lca.readout.tuning import TuningMaps, estimate_tuning_perloc

DESK = {
    'seed': 0,
    'gen_disparity_low': -3.0,
    'gen_disparity_high': 3.0,
    'gen_disparity_step': 1.0,
    'gen_crop': 128,
    'learn_kernels': 64,
    'learn_epochs': 5,
    'learn_batch_size': 16,
    'lca_lambda': 0.04,
    'lca_iterations': 100,
    'sweep_lambdas': [0.3, 0.1, 0.04],
    'predict_min_per_bin': 50,
    'predict_percentiles': [50, 75],
}
LAMBDA = 0.04
WORKERS = '4'


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    assert code == 0, f"{argv[-4:]} exited with {code}"
    return json.loads(out.getvalue())


def read(path):
    with open(path) as f:
        return json.load(f)


@pytest.fixture(scope='module')
def desk(tmp_path_factory):
    root = tmp_path_factory.mktemp('desk')
    config = root / 'config.json'
    config.write_text(json.dumps(DESK))
    base = ('--config', str(config), '--workers', WORKERS)
    paths = {name: str(root / name) for name in ('train', 'tune', 'test', 'check', 'model',
                                                 'sweep', 'predictor')}
    for name, seed, per_label in (('train', 0, 10), ('tune', 1, 20), ('test', 2, 12),
                                  ('check', 3, 12)):
        run(*base, '--seed', str(seed), '--set', f'gen_per_label={per_label}',
            'gen', '--out', paths[name])
    dictionary = run(*base, 'train', '--dataset', paths['train'],
                     '--out', paths['model'])['dictionary']
    rows = run(*base, 'sweep', '--dictionary', dictionary, '--tune-dataset', paths['tune'],
               '--dataset', paths['test'], '--out', paths['sweep'])['rows']
    chosen = next(row for row in rows if row['lambda'] == LAMBDA)
    check = run(*base, 'infer', '--dictionary', dictionary, '--tuning', chosen['tuning'],
                '--dataset', paths['check'], '--out', str(root / 'check.json'))['results']
    predictor = run(*base, 'predict-error', '--results', chosen['results'],
                    '--out', paths['predictor'])['predictor']
    return {'dictionary': Dictionary.load(dictionary), 'rows': rows,
            'tuning': TuningMaps.load(chosen['tuning']),
            'samples': read(chosen['results'])['samples'] + read(check)['samples'],
            'check': read(check)['samples'], 'predictor': ErrorPredictor.load(predictor)}


@pytest.fixture(scope='module')
def lca_cfg():
    return LcaConfig(lam=LAMBDA, iterations=DESK['lca_iterations'])


def test_held_out_disparity_error(desk):
    by_label = {}
    for sample in desk['samples']:
        by_label.setdefault(tuple(sample['label']), []).append(sample['error'])
    assert np.mean(by_label[(0.0, 0.0)]) <= 0.75
    near = [np.mean(errors) for label, errors in by_label.items() if np.hypot(*label) <= 2]
    assert len(near) == 13
    assert np.mean(near) <= 1.5


def test_lower_lambda_is_denser_and_not_worse(desk):
    rows = sorted(desk['rows'], key=lambda row: -row['lambda'])
    assert [row['lambda'] for row in rows] == [0.3, 0.1, 0.04]
    active = [row['mean_active'] for row in rows]
    assert active == sorted(active)
    # 0.1 px of slack for label noise between neighbouring lambdas
    errors = [row['mae'] for row in rows]
    assert all(b <= a + 0.1 for a, b in zip(errors, errors[1:]))


def test_error_predictor_covers_unseen_pairs(desk):
    check = desk['check']
    below, at_or_below = coverage(desk['predictor'], [s['active_count'] for s in check],
                                  [s['error'] for s in check], 75)
    assert below <= 0.80
    assert at_or_below >= 0.70


@pytest.mark.parametrize('dx,dy', [(0.0, 0.0), (2.0, -1.0), (-1.0, 2.0)])
def test_label_map_median_is_the_shift(desk, lca_cfg, dx, dy):
    texture = procedural_texture(512, seed=40)
    pair = preprocess_pair(make_shifted_pair(texture, DisparityLabel(dx, dy), 256, seed=41))
    labels = infer_map(binarize(encode(pair, desk['dictionary'], lca_cfg)), desk['tuning'])
    assert labels.shape == (14, 14)
    estimates = labels.values().reshape(-1, 2)
    np.testing.assert_array_equal(np.median(estimates, axis=0), [dx, dy])


def test_scale_space_takes_the_scale_that_fits(desk, lca_cfg):
    scene = shifted_scene(procedural_texture((256, 258), seed=42), 2)
    result = scale_space_infer(scene, desk['dictionary'], desk['tuning'], [1.0, 0.5, 0.25],
                               lca_cfg)
    assert np.mean(result.scale[result.mask] == 1.0) > 0.5
    assert np.median(result.horizontal[result.mask]) == pytest.approx(2.0, abs=0.5)


def test_scale_space_recovers_shifts_beyond_the_label_range(desk, lca_cfg):
    # 8 px is out of range at full and half scale, 2 px at quarter scale
    scene = shifted_scene(procedural_texture((256, 264), seed=43), 8)
    truth = np.full(scene.shape, 8.0)
    result = scale_space_infer(scene, desk['dictionary'], desk['tuning'], [1.0, 0.5, 0.25],
                               lca_cfg, limit=3.0, ground_truth=truth)
    assert result.mask.any()
    np.testing.assert_array_equal(result.scale[result.mask], 0.25)
    assert np.median(result.horizontal[result.mask]) == pytest.approx(8.0, abs=2.0)


@pytest.fixture(scope='module')
def surface_rig():
    return RigGeometry(size=96)


def surface_codes(desk, lca_cfg, rig, labels, seeds):
    '''Binary codes of textured planes, one list per label; every label sees the same textures.'''
    textures = [procedural_texture(2 * rig.size, seed) for seed in seeds]
    return [[binarize(encode(preprocess_pair(render_slanted_plane(texture, label, rig)),
                             desk['dictionary'], lca_cfg)) for texture in textures]
            for label in labels]


def test_surface_readout_recovers_planted_labels(desk, lca_cfg, surface_rig):
    grid = surface_grid((0, 90, 180, 270), calibrate_slants(surface_rig, steps=2))
    maps = estimate_tuning_perloc(surface_codes(desk, lca_cfg, surface_rig, grid, range(16)),
                                  grid, workers=4)
    rng = np.random.default_rng(44)
    hits, draws = 0, 0
    for index in range(len(grid)):
        for _ in range(100):
            code = rng.random(maps.probabilities.shape[:3]) < maps.probabilities[..., index]
            hits += infer_surface(code, maps).index == index
            draws += 1
    assert hits / draws > 0.9


def test_frontoparallel_planes_carry_no_tilt(desk, lca_cfg, surface_rig):
    tilts = (0.0, 90.0, 180.0, 270.0)
    steep = calibrate_slants(surface_rig, steps=2)[-1]
    labels = [SurfaceLabel(t, s) for s in (0.0, steep) for t in tilts]
    grid = LabelGrid(SURFACE, labels)
    maps = estimate_tuning_perloc(surface_codes(desk, lca_cfg, surface_rig, labels, range(16)),
                                  grid, workers=4)
    held_out = range(100, 108)
    flat = surface_codes(desk, lca_cfg, surface_rig, [SurfaceLabel(0.0, 0.0)], held_out)[0]
    slanted = [code for codes in surface_codes(desk, lca_cfg, surface_rig, labels[4:], held_out)
               for code in codes]

    def spread(codes, columns):
        scores = np.array([infer_surface(code, maps).scores[columns] for code in codes])
        return float(np.mean(scores.max(axis=1) - scores.min(axis=1)))

    assert spread(slanted, slice(4, 8)) > 0
    assert spread(flat, slice(0, 4)) < 0.05 * spread(slanted, slice(4, 8))
