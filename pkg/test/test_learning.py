import numpy as np
import pytest

from stereo_lca.errors import ConfigError, InsufficientDataError
from stereo_lca.lca.dictionary import Dictionary
from stereo_lca.lca.dynamics import LcaConfig
from stereo_lca.lca.learning import LearnConfig, _diverging, epoch_order, learn
from stereo_lca.libs.imagecore import StereoPair, normalize_pair


def random_pairs(count, seed, size=32):
    rng = np.random.default_rng(seed)
    return [normalize_pair(StereoPair(rng.standard_normal((size, size)),
                                      rng.standard_normal((size, size))))
            for _ in range(count)]


def test_learn_config():
    assert LearnConfig(overcompleteness=0.66).kernel_count == 85
    assert LearnConfig(overcompleteness=8).kernel_count == 1024
    assert LearnConfig(overcompleteness=2).kernel_count == 256
    assert LearnConfig(kernels=12).kernel_count == 12
    cfg = LearnConfig(learning_rate=0.2, epochs=4, batch_size=3, kernels=5, seed=9,
                      init='random', replace_unused=False)
    assert LearnConfig.from_config(cfg.to_config()) == cfg
    with pytest.raises(ConfigError):
        LearnConfig(batch_size=0)
    with pytest.raises(ConfigError):
        LearnConfig(learning_rate=0)
    with pytest.raises(ConfigError):
        LearnConfig(init='zeros')


def test_epoch_order_depends_on_seed_and_epoch_only():
    a = epoch_order(50, seed=3, epoch=2)
    np.testing.assert_array_equal(a, epoch_order(50, seed=3, epoch=2))
    assert sorted(a.tolist()) == list(range(50))
    assert not np.array_equal(a, epoch_order(50, seed=3, epoch=3))


def test_empty_training_set():
    with pytest.raises(InsufficientDataError):
        learn([], LearnConfig(kernels=2, epochs=1))


def test_degenerate_pairs_are_skipped():
    zero = StereoPair(np.zeros((16, 16)), np.zeros((16, 16)))
    pairs = [normalize_pair(zero)] * 4
    start = Dictionary.random(3, seed=1)
    learned, history = learn(pairs, LearnConfig(kernels=3, epochs=2, batch_size=2),
                             LcaConfig(iterations=10), dictionary=start)
    np.testing.assert_array_equal(learned.kernels, start.kernels)
    assert [row['pairs'] for row in history] == [0, 0]


def test_learning_keeps_unit_norm_and_reports_history():
    pairs = random_pairs(6, seed=2)
    checkpoints = []
    learned, history = learn(pairs, LearnConfig(kernels=4, epochs=2, batch_size=4),
                             LcaConfig(lam=0.03, iterations=20),
                             checkpoint=lambda epoch, d, h: checkpoints.append(epoch))
    assert learned.check_norms()
    assert checkpoints == [0, 1]
    assert [row['epoch'] for row in history] == [0, 1]
    assert all(row['pairs'] == 6 for row in history)
    assert set(history[0]) == {'epoch', 'pairs', 'residual', 'count', 'total', 'objective',
                               'replaced'}


def test_resume_matches_an_uninterrupted_run():
    pairs = random_pairs(6, seed=3)
    lca_cfg = LcaConfig(lam=0.03, iterations=20)
    full, full_history = learn(pairs, LearnConfig(kernels=4, epochs=3, batch_size=2, seed=5),
                               lca_cfg)
    part, part_history = learn(pairs, LearnConfig(kernels=4, epochs=2, batch_size=2, seed=5),
                               lca_cfg)
    resumed, resumed_history = learn(pairs, LearnConfig(kernels=4, epochs=3, batch_size=2, seed=5),
                                     lca_cfg, dictionary=part, start_epoch=2,
                                     history=part_history)
    np.testing.assert_array_equal(resumed.kernels, full.kernels)
    assert resumed_history == full_history


def test_results_do_not_depend_on_workers():
    pairs = random_pairs(4, seed=4)
    args = (LearnConfig(kernels=3, epochs=1, batch_size=4), LcaConfig(lam=0.03, iterations=15))
    serial, _ = learn(pairs, *args, workers=1)
    threaded, _ = learn(pairs, *args, workers=3)
    np.testing.assert_array_equal(serial.kernels, threaded.kernels)


def test_divergence_rule():
    rows = [{'pairs': 1, 'objective': v} for v in (1.0, 1.2, 1.5, 2.0)]
    assert _diverging(rows)
    rows = [{'pairs': 1, 'objective': v} for v in (1.0, 1.2, 1.25, 2.0)]
    assert not _diverging(rows)
    assert not _diverging(rows[:3])


def test_planted_atoms_are_recovered():
    rng = np.random.default_rng(20)
    atoms, _ = np.linalg.qr(rng.standard_normal((2 * 16 * 16, 8)))
    atoms = atoms.T.reshape(8, 2, 16, 16)
    pairs = []
    for _ in range(160):
        chosen = rng.choice(8, size=3, replace=False)
        values = rng.uniform(0.5, 1.0, size=3) * rng.choice([-1.0, 1.0], size=3)
        stamp = np.tensordot(values, atoms[chosen], axes=1)
        pairs.append(StereoPair(stamp[0], stamp[1]))

    learned, _ = learn(pairs, LearnConfig(learning_rate=0.5, epochs=30, batch_size=8,
                                          kernels=8, seed=21, init='random'),
                       LcaConfig(lam=0.01, iterations=60))
    flat_atoms = atoms.reshape(8, -1)
    flat_learned = learned.kernels.reshape(8, -1)
    similarity = np.abs(flat_atoms @ flat_learned.T)
    assert np.all(similarity.max(axis=1) > 0.8)


def shifted_pairs(count, seed, shift=2, size=32):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        left = rng.standard_normal((size, size))
        pairs.append(normalize_pair(StereoPair(left, np.roll(left, shift, axis=1))))
    return pairs


def test_patch_init_cuts_binocular_windows():
    pairs = shifted_pairs(5, seed=6)
    start = Dictionary.from_patches(pairs, 6, seed=1)
    assert start.kernels.shape == (6, 2, 16, 16)
    assert start.check_norms()
    # right half is the left half displaced by the pair's shift
    np.testing.assert_allclose(start.right[:, :, 2:], start.left[:, :, :-2], atol=1e-12)
    np.testing.assert_array_equal(Dictionary.from_patches(pairs, 6, seed=1).kernels,
                                  start.kernels)


def test_patch_init_falls_back_to_noise_without_usable_pairs():
    zero = normalize_pair(StereoPair(np.zeros((16, 16)), np.zeros((16, 16))))
    start = Dictionary.from_patches([zero], 3, seed=2)
    assert start.check_norms()


def test_silent_kernels_are_reseeded():
    pairs = random_pairs(6, seed=7)
    kernels = Dictionary.random(4, seed=8).kernels
    kernels[0] = 0.0
    start = Dictionary(kernels)
    lca_cfg = LcaConfig(lam=0.03, iterations=20)

    learned, history = learn(pairs, LearnConfig(kernels=4, epochs=1, batch_size=3), lca_cfg,
                             dictionary=start)
    assert history[0]['replaced'] >= 1
    assert learned.check_norms()
    assert np.any(learned.kernels[0])

    kept, history = learn(pairs, LearnConfig(kernels=4, epochs=1, batch_size=3,
                                             replace_unused=False), lca_cfg, dictionary=start)
    assert history[0]['replaced'] == 0
    assert not np.any(kept.kernels[0])


def peak_binocular_correlation(kernel, shifts=range(-4, 5)):
    '''Best normalized correlation between the halves over horizontal shifts.'''
    left, right = kernel
    best = -1.0
    for shift in shifts:
        a = left[:, max(0, shift):left.shape[1] + min(0, shift)]
        b = right[:, max(0, -shift):right.shape[1] + min(0, -shift)]
        a, b = a - a.mean(), b - b.mean()
        best = max(best, float(np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b))))
    return best


def test_learned_kernels_keep_the_training_shift():
    pairs = shifted_pairs(40, seed=9)
    learned, _ = learn(pairs, LearnConfig(kernels=8, epochs=3, batch_size=8, seed=10),
                       LcaConfig(lam=0.03, iterations=40))
    peaks = [peak_binocular_correlation(kernel) for kernel in learned.kernels]
    assert np.mean(peaks) > 0.5
