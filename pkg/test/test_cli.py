import io
import json
import os

import numpy as np
import pytest

from stereo_lca.cli import main, parse_set
from stereo_lca.errors import EXIT_CONFIG, EXIT_DATA, ConfigError
from stereo_lca.lca.dictionary import Dictionary
from stereo_lca.libs.tensor_io import load_tensor
from stereo_lca.services.encode_service import load_bits

SMALL = {
    'gen_disparity_low': -1.0,
    'gen_disparity_high': 1.0,
    'gen_disparity_step': 1.0,
    'gen_per_label': 2,
    'gen_crop': 64,
    'learn_kernels': 4,
    'learn_epochs': 1,
    'learn_batch_size': 6,
    'lca_iterations': 15,
    'lca_lambda': 0.05,
    'predict_min_per_bin': 2,
    'seed': 7,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(SMALL))
    return str(path)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, (json.loads(out.getvalue()) if code == 0 else None)


def tree(root):
    files = {}
    for folder, _, names in os.walk(root):
        for name in names:
            path = os.path.join(folder, name)
            with open(path, 'rb') as f:
                files[os.path.relpath(path, root)] = f.read()
    return files


def test_parse_set():
    assert parse_set(['lca_lambda=0.2', 'tune_mode=per_location', 'tune_region=[5, 5]']) == {
        'lca_lambda': 0.2, 'tune_mode': 'per_location', 'tune_region': [5, 5]}
    assert parse_set(None) == {}
    with pytest.raises(ConfigError):
        parse_set(['lca_lambda'])


def test_gen_is_reproducible_across_workers(tmp_path, config_file):
    a, b = str(tmp_path / 'a'), str(tmp_path / 'b')
    code, summary = run('--config', config_file, '--workers', '1', 'gen', '--out', a)
    assert code == 0
    assert summary['labels'] == 9 and summary['pairs'] == 18
    assert run('--config', config_file, '--workers', '2', 'gen', '--out', b)[0] == 0
    assert tree(a) == tree(b)


def test_pipeline(tmp_path, config_file):
    data, model = str(tmp_path / 'data'), str(tmp_path / 'model')
    base = ('--config', config_file)
    assert run(*base, 'gen', '--out', data)[0] == 0

    code, summary = run(*base, 'train', '--dataset', data, '--out', model)
    assert code == 0
    assert summary['kernels'] == 4 and summary['epochs'] == 1
    dictionary = os.path.join(model, 'dictionary.lcat')
    assert os.path.exists(dictionary) and os.path.exists(dictionary + '.json')
    with open(os.path.join(model, 'training_log.json')) as f:
        assert json.load(f)['status'] == 'done'

    codes = str(tmp_path / 'codes')
    code, summary = run(*base, 'encode', '--dictionary', dictionary, '--dataset', data,
                        '--out', codes)
    assert code == 0 and summary['codes'] == 18
    with open(os.path.join(codes, 'codes.json')) as f:
        rows = json.load(f)['rows']
    bits = load_bits(codes, rows[0])
    assert bits.shape == (4, 3, 3)
    assert int(bits.sum()) == rows[0]['active']

    code, summary = run(*base, 'tune', '--dictionary', dictionary, '--dataset', data,
                        '--out', str(tmp_path / 'tuning'))
    assert code == 0 and summary['labels'] == 9
    tuning = summary['tuning']

    code, summary = run(*base, 'infer', '--dictionary', dictionary, '--tuning', tuning,
                        '--dataset', data, '--out', str(tmp_path / 'infer'))
    assert code == 0 and summary['samples'] == 18
    results = summary['results']

    code, summary = run(*base, 'predict-error', '--results', results,
                        '--out', str(tmp_path / 'predictor'))
    assert code == 0 and summary['samples'] == 18
    assert os.path.exists(str(tmp_path / 'predictor' / 'predictor.json'))

    code, summary = run(*base, 'analyze', '--dictionary', dictionary, '--tuning', tuning,
                        '--out', str(tmp_path / 'analysis'))
    assert code == 0
    assert summary['kernels'] == 4
    assert sum(summary['dominance']) == 4
    assert os.path.exists(str(tmp_path / 'analysis' / 'kernel_stats.jsonl'))


def test_vergence_database_trains(tmp_path, config_file):
    data, model = str(tmp_path / 'data'), str(tmp_path / 'model')
    base = ('--config', config_file, '--set', 'gen_kind="vergence"', '--set', 'gen_scenes=2',
            '--set', 'gen_per_label=3', '--set', 'vergence_radius=40',
            '--set', 'vergence_search=12')
    code, summary = run(*base, 'gen', '--out', data)
    assert code == 0
    assert summary['kind'] == 'vergence'
    assert summary['labels'] == 1 and summary['scenes'] == 2 and summary['pairs'] == 6
    with open(os.path.join(data, 'manifest.json')) as f:
        manifest = json.load(f)
    assert manifest['kind'] == 'vergence'
    assert {tuple(row['label']) for row in manifest['rows']} == {(0.0, 0.0)}
    for row in manifest['rows']:
        pair = load_tensor(os.path.join(data, row['path']))
        assert pair.shape == (2, 32, 32)
        # both eyes fixate the same scene point
        assert np.corrcoef(pair[0].ravel(), pair[1].ravel())[0, 1] > 0.9

    code, summary = run(*base, 'train', '--dataset', data, '--out', model)
    assert code == 0 and summary['kernels'] == 4


def test_vergence_rejects_malformed_stereo_sources(tmp_path, config_file):
    code, _ = run('--config', config_file, '--set', 'gen_kind="vergence"',
                  '--set', 'gen_stereo_sources=["left.png"]', 'gen', '--out', str(tmp_path / 'x'))
    assert code == EXIT_CONFIG


def test_lambda_sweep(tmp_path, config_file):
    data, model, out = (str(tmp_path / name) for name in ('data', 'model', 'sweep'))
    base = ('--config', config_file, '--set', 'sweep_lambdas=[0.1, 0.05]')
    assert run(*base, 'gen', '--out', data)[0] == 0
    assert run(*base, 'train', '--dataset', data, '--out', model)[0] == 0
    code, summary = run(*base, 'sweep', '--dictionary', os.path.join(model, 'dictionary.lcat'),
                        '--tune-dataset', data, '--dataset', data, '--out', out)
    assert code == 0
    assert [row['lambda'] for row in summary['rows']] == [0.1, 0.05]
    for row in summary['rows']:
        assert 0 <= row['mae'] and row['mean_active'] >= 0
        with open(row['results']) as f:
            result = json.load(f)
        assert result['lambda'] == row['lambda'] and len(result['samples']) == 18
        assert result['mae'] == row['mae']
        assert os.path.exists(row['tuning'])
    with open(os.path.join(out, 'sweep.json')) as f:
        assert json.load(f)['rows'] == summary['rows']

    code, summary = run(*base, 'predict-error', '--results', summary['rows'][0]['results'],
                        '--out', str(tmp_path / 'predictor'))
    assert code == 0
    fractions = summary['coverage']['75']
    assert 0 <= fractions['below'] <= fractions['at_or_below'] <= 1

    assert run('--config', config_file, '--set', 'sweep_lambdas=[]', 'sweep',
               '--dictionary', os.path.join(model, 'dictionary.lcat'), '--tune-dataset', data,
               '--dataset', data, '--out', out)[0] == EXIT_CONFIG


def test_training_does_not_depend_on_workers(tmp_path, config_file):
    data = str(tmp_path / 'data')
    assert run('--config', config_file, 'gen', '--out', data)[0] == 0
    for workers in ('1', '3'):
        assert run('--config', config_file, '--workers', workers, 'train', '--dataset', data,
                   '--out', str(tmp_path / f'model{workers}'))[0] == 0
    first = tree(str(tmp_path / 'model1'))
    assert first == tree(str(tmp_path / 'model3'))


def test_zero_epochs_emit_the_initial_dictionary(tmp_path, config_file):
    data, model = str(tmp_path / 'data'), str(tmp_path / 'model')
    assert run('--config', config_file, 'gen', '--out', data)[0] == 0
    code, summary = run('--config', config_file, '--set', 'learn_epochs=0', 'train',
                        '--dataset', data, '--out', model)
    assert code == 0
    assert summary['epochs'] == 0 and summary['objective'] is None
    dictionary = Dictionary.load(os.path.join(model, 'dictionary.lcat'))
    assert dictionary.kernels.shape == (4, 2, 16, 16)
    with open(os.path.join(model, 'training_log.json')) as f:
        assert json.load(f)['epochs'] == []


def test_exit_codes(tmp_path, config_file):
    assert run('--set', 'no_such_key=1', 'gen', '--out', str(tmp_path / 'x'))[0] == EXIT_CONFIG
    assert run('--set', 'lca_lambda="high"', 'gen', '--out', str(tmp_path / 'x'))[0] == EXIT_CONFIG
    assert run('--config', str(tmp_path / 'missing.json'), 'gen',
               '--out', str(tmp_path / 'x'))[0] == EXIT_CONFIG
    assert run('--config', config_file, 'train', '--dataset', str(tmp_path / 'nothing'),
               '--out', str(tmp_path / 'model'))[0] == EXIT_DATA
