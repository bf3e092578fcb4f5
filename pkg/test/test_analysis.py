import csv
import math

import numpy as np
import pytest

from stereo_lca.analysis.accuracy import (ErrorPredictor, absolute_errors, build_error_predictor,
                                          coverage, mae, mae_by_label, mae_sweep,
                                          write_scatter_csv)
from stereo_lca.analysis.circular import (circular_correlation, circular_mean,
                                          tilt_orientation_correlation)
from stereo_lca.analysis.gabor import GaborFit, gabor
from stereo_lca.analysis.kernel_stats import (BLOB_LIKE, MATCHED_GABOR, TUNED_INHIBITORY,
                                              UNCLASSIFIED, KernelStats, classify_kernel,
                                              kernel_statistics, ocular_dominance, read_jsonl,
                                              shift_statistics, write_jsonl)
from stereo_lca.datagen.grids import surface_grid
from stereo_lca.errors import (ConfigError, DataError, FitError, InsufficientDataError,
                               ShapeError)
from stereo_lca.lca.dictionary import Dictionary
from stereo_lca.readout.tuning import PER_LOCATION, TuningMaps


def make_fit(**values):
    fields = dict(offset=0.0, scale=1.0, x0=7.5, y0=7.5, orientation=0.0, envelope=0.0,
                  sigma_x=2.5, sigma_y=2.5, frequency=0.2, phase=0.0, r2=0.99)
    fields.update(values)
    return GaborFit(**fields)


def dog(shape=(16, 16), inner=1.0, outer=2.5):
    y, x = np.mgrid[0:shape[0], 0:shape[1]]
    r2 = (y - 7.5) ** 2 + (x - 7.5) ** 2
    return (np.exp(-r2 / (2 * inner ** 2)) / (2 * math.pi * inner ** 2)
            - np.exp(-r2 / (2 * outer ** 2)) / (2 * math.pi * outer ** 2))


def stats_for(left, right, left_fit=None, right_fit=None, phase_shift=None):
    angle, bin_ = ocular_dominance(left, right)
    return KernelStats(0, left_fit, right_fit, angle, bin_, phase_shift=phase_shift)


def test_ocular_dominance_bins():
    half = np.ones((4, 4))
    assert ocular_dominance(half, np.zeros((4, 4))) == (pytest.approx(math.pi / 2), 7)
    assert ocular_dominance(np.zeros((4, 4)), half) == (0.0, 1)
    assert ocular_dominance(half, half)[1] == 4
    assert ocular_dominance(half, 0.6 * half)[1] == 5
    with pytest.raises(DataError):
        ocular_dominance(np.zeros((4, 4)), np.zeros((4, 4)))


def test_shift_statistics():
    left = make_fit(x0=5.0, orientation=0.1, phase=0.3)
    right = make_fit(x0=7.0, orientation=math.pi - 0.1, phase=0.5, frequency=0.3)
    shifts = shift_statistics(left, right)
    # the right carrier is read with its direction flipped
    assert shifts['pos_shift'] == pytest.approx(0.25 * 2.0)
    assert shifts['phase_shift'] == pytest.approx(-0.5 - 0.3)
    assert shifts['displacement'] == [2.0, 0.0]
    with pytest.raises(FitError):
        shift_statistics(left, make_fit(r2=0.5))
    with pytest.raises(FitError):
        shift_statistics(left, None)


def test_classify_matched_and_inhibitory():
    half = gabor([0, 1, 7.5, 7.5, 0.3, 0, 2.5, 2.5, 0.2, 0], (16, 16))
    good = make_fit()
    matched = stats_for(half, half, good, good, phase_shift=0.1)
    assert classify_kernel(matched, half, half) == MATCHED_GABOR

    monocular = stats_for(half, 0.2 * half, good, good, phase_shift=0.1)
    assert classify_kernel(monocular, half, 0.2 * half) == TUNED_INHIBITORY

    anti = stats_for(half, half, good, good, phase_shift=3.0)
    tuning_row = np.array([0.5, 0.6, 0.1, 0.7, 0.4])
    assert classify_kernel(anti, half, half, tuning_row, zero_index=2) == TUNED_INHIBITORY
    assert classify_kernel(anti, half, half, tuning_row, zero_index=3) == UNCLASSIFIED


def test_classify_blob_and_noise():
    centre_surround = dog()
    blob = stats_for(centre_surround, 0.9 * centre_surround)
    assert blob.dominance_bin == 4
    assert classify_kernel(blob, centre_surround, 0.9 * centre_surround) == BLOB_LIKE

    rng = np.random.default_rng(0)
    left, right = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
    noise = stats_for(left, right)
    assert classify_kernel(noise, left, right) == UNCLASSIFIED


def test_kernel_statistics_of_a_matched_pair(tmp_path):
    phi = 0.5
    params = [0.0, 1.0, 7.5, 7.5, phi, 0.0, 2.5, 3.0, 0.15, 0.4]
    shifted = list(params)
    # move the centre along the stripes, which leaves the carrier phase alone
    shifted[2] -= 1.0 * math.sin(phi)
    shifted[3] += 1.0 * math.cos(phi)
    kernels = np.stack([gabor(params, (16, 16)), gabor(shifted, (16, 16))])[None]
    dictionary = Dictionary(kernels).normalized()
    stats = kernel_statistics(dictionary, lock_envelope=True)
    assert len(stats) == 1
    s = stats[0]
    assert s.left_fit.r2 > 0.99 and s.right_fit.r2 > 0.99
    assert s.joint_r2 > 0.99
    assert abs(s.pos_shift) < 0.05
    assert abs(s.phase_shift) < 0.1
    assert s.kind == MATCHED_GABOR

    path = str(tmp_path / 'stats.jsonl')
    write_jsonl(stats, path)
    records = read_jsonl(path)
    assert records[0]['type'] == MATCHED_GABOR
    assert records[0]['left']['r2'] == pytest.approx(s.left_fit.r2)


def test_absolute_errors_and_mae():
    estimates = [[3.0, 4.0], [1.0, 1.0], [0.0, 0.0]]
    truths = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]]
    np.testing.assert_allclose(absolute_errors(estimates, truths), [5.0, 0.0, 1.0])
    assert mae(estimates, truths) == pytest.approx(2.0)
    assert mae([1.0, 2.0], [2.0, 2.0]) == pytest.approx(0.5)
    with pytest.raises(ShapeError):
        mae([1.0], [1.0, 2.0])
    with pytest.raises(InsufficientDataError):
        mae(np.zeros((0, 2)), np.zeros((0, 2)))


def test_mae_by_label_and_sweep():
    truths = [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]
    estimates = [[1.0, 0.0], [2.0, 0.0], [0.0, 0.0]]
    rows = mae_by_label(estimates, truths)
    assert rows == [{'label': [0.0, 0.0], 'count': 1, 'mae': 2.0},
                    {'label': [1.0, 0.0], 'count': 2, 'mae': 0.5}]
    sweep = mae_sweep({0.3: ([1.0], [0.0]), 0.1: ([0.5], [0.0])})
    assert sweep == [{'setting': 0.1, 'mae': 0.5}, {'setting': 0.3, 'mae': 1.0}]


def test_predictor_percentiles_are_nearest_rank():
    errors = np.random.default_rng(5).permutation(np.arange(1, 11, dtype=np.float64))
    predictor = build_error_predictor([4] * 10, errors, min_per_bin=10,
                                      percentiles=[0, 50, 75, 100])
    assert predictor.predict(4, 75) == 8.0
    assert predictor.predict(4, 50) == 5.0
    assert predictor.predict(4, 100) == 10.0
    assert predictor.predict(4, 0) == 1.0
    # 7 errors fall under 8, the tie makes it 8
    assert coverage(predictor, [4] * 10, errors, 75) == (0.7, 0.8)
    with pytest.raises(InsufficientDataError):
        coverage(predictor, [], [], 75)


def test_tilt_errors_wrap_around():
    periods = surface_grid([0.0, 10.0, 350.0], [20.0]).periods
    assert periods == (360.0, None)
    estimates = [[350.0, 20.0], [10.0, 20.0], [180.0, 20.0], [90.0, 26.0]]
    truths = [[10.0, 20.0], [350.0, 20.0], [0.0, 20.0], [90.0, 20.0]]
    np.testing.assert_allclose(absolute_errors(estimates, truths, periods),
                               [20.0, 20.0, 180.0, 6.0])
    # linear axes are untouched
    np.testing.assert_allclose(absolute_errors(estimates, truths)[:2], [340.0, 340.0])
    assert mae(estimates, truths, periods) == pytest.approx(56.5)
    rows = mae_by_label(estimates, truths, periods)
    assert [row['mae'] for row in rows] == pytest.approx([180.0, 20.0, 6.0, 20.0])


def test_predictor_bins_never_split_equal_counts():
    counts = [1] * 3 + [2] * 5 + [3] * 2
    predictor = build_error_predictor(counts, np.arange(10.0), min_per_bin=4)
    assert predictor.edges == [1]
    assert predictor.sizes == [10]

    counts = [1] * 5 + [2] * 5 + [3] * 5
    errors = np.concatenate([np.arange(1.0, 6.0), np.arange(1.0, 6.0) * 2, np.zeros(5)])
    predictor = build_error_predictor(counts, errors, min_per_bin=4, percentiles=(50, 80))
    assert predictor.edges == [1, 2, 3]
    assert predictor.table['50'] == [3.0, 6.0, 0.0]
    assert predictor.table['80'] == [4.0, 8.0, 0.0]
    assert predictor.predict(0, 50) == 3.0
    assert predictor.predict(2, 80) == 8.0
    np.testing.assert_array_equal(predictor.predict(np.array([1, 3, 9]), 50), [3.0, 0.0, 0.0])
    with pytest.raises(ConfigError):
        predictor.predict(1, 75)


def test_predictor_persistence_and_errors(tmp_path):
    predictor = build_error_predictor([1, 1, 2, 2], [0.1, 0.2, 0.3, 0.4], min_per_bin=2)
    path = str(tmp_path / 'predictor.json')
    predictor.save(path, {'producer': 'test'})
    assert ErrorPredictor.load(path) == predictor
    with pytest.raises(InsufficientDataError):
        build_error_predictor([1, 2], [0.1, 0.2], min_per_bin=3)
    with pytest.raises(ShapeError):
        build_error_predictor([1, 2, 3], [0.1, 0.2], min_per_bin=1)


def test_scatter_csv(tmp_path):
    path = str(tmp_path / 'scatter.csv')
    write_scatter_csv(path, [0.5, 1.5], [0.25, 2.0], {'scale': [1.0, 0.5]})
    with open(path, newline='') as f:
        rows = list(csv.reader(f))
    assert rows == [['predicted', 'actual', 'scale'], ['0.5', '0.25', '1'], ['1.5', '2', '0.5']]


def test_circular_correlation():
    rng = np.random.default_rng(1)
    angles = rng.uniform(-math.pi, math.pi, 40)
    assert circular_correlation(angles, angles) == pytest.approx(1.0, abs=1e-12)
    assert circular_correlation(angles, -angles) == pytest.approx(-1.0, abs=1e-12)
    assert circular_correlation(angles, angles / 2.0, axial=True) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DataError):
        circular_correlation([0.1, 0.2], [0.1, 0.2])
    with pytest.raises(DataError):
        circular_correlation([0.3, 0.3, 0.3], [0.1, 0.2, 0.4])
    with pytest.raises(ShapeError):
        circular_correlation([0.1, 0.2, 0.3], [0.1, 0.2])
    assert circular_mean([0.1, -0.1]) == pytest.approx(0.0)


def test_circular_correlation_five_angles():
    a = [0.1, 1.2, 2.5, -2.8, -0.9]
    b = [0.4, 0.9, 3.0, -2.2, -1.5]
    a_mean = math.atan2(sum(math.sin(x) for x in a), sum(math.cos(x) for x in a))
    b_mean = math.atan2(sum(math.sin(y) for y in b), sum(math.cos(y) for y in b))
    num = sum(math.sin(x - a_mean) * math.sin(y - b_mean) for x, y in zip(a, b))
    den = math.sqrt(sum(math.sin(x - a_mean) ** 2 for x in a)
                    * sum(math.sin(y - b_mean) ** 2 for y in b))
    assert circular_correlation(a, b) == pytest.approx(num / den, abs=1e-12)
    assert circular_correlation(b, a) == pytest.approx(num / den, abs=1e-12)


def test_tilt_orientation_correlation():
    tilts = [0.0, 60.0, 120.0, 180.0, 240.0, 300.0]
    grid = surface_grid(tilts, [20.0])
    preferred = [0, 1, 2, 3, 4]
    probabilities = np.full((5, 1, 1, len(grid)), 0.1)
    stats = []
    for k, t in enumerate(preferred):
        probabilities[k, 0, 0, 1 + t] = 0.9
        stripes = math.radians(tilts[t]) / 2.0
        carrier = (stripes + math.pi / 2) % math.pi
        fit = make_fit(orientation=carrier)
        stats.append(KernelStats(k, fit, fit, math.pi / 4, 4))
    stats.append(KernelStats(5, make_fit(r2=0.2), None, math.pi / 4, 4))
    maps = TuningMaps(PER_LOCATION, probabilities, grid, np.full(len(grid), 0.01),
                      np.full(len(grid), 50), region=(1, 1))
    rho, used = tilt_orientation_correlation(stats, maps)
    assert used == 5
    assert rho == pytest.approx(1.0, abs=1e-9)
