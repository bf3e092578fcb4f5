import argparse
import json
import logging
import sys

from .errors import ConfigError, StereoLCAError
from .libs.log import setup_logging
from .libs.utils import read_json
from .stereo_lca import StereoLCA
from .version import __version__


def parse_set(items):
    '''key=value pairs; values are parsed as JSON and fall back to plain strings.'''
    config = {}
    for item in items or []:
        if '=' not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split('=', 1)
        try:
            config[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            config[key.strip()] = value
    return config


def build_parser():
    parser = argparse.ArgumentParser(prog='stereo-lca',
                                     description='Convolutional stereo sparse coding')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('--config', '-c', help='JSON config file')
    parser.add_argument('--set', '-s', action='append', metavar='KEY=VALUE',
                        help='Override one config entry (repeatable)')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--workers', type=int, help='Worker threads (default from config)')
    parser.add_argument('--seed', type=int, help='Master seed')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen', help='Generate a stereo database')
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('train', help='Learn a binocular dictionary')
    p.add_argument('--dataset', '-d', required=True)
    p.add_argument('--out', '-o', required=True)
    p.add_argument('--resume', action='store_true', help='Continue from the last checkpoint')

    p = sub.add_parser('encode', help='Sparse-code a database')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--dataset', '-d', required=True)
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('tune', help='Estimate tuning maps')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--dataset', '-d', required=True)
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('infer', help='Decode labels of a database')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--tuning', required=True)
    p.add_argument('--dataset', '-d', required=True)
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('scale-infer', help='Dense disparity map of one stereo scene')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--tuning', required=True)
    p.add_argument('--left', required=True)
    p.add_argument('--right', required=True)
    p.add_argument('--out', '-o', required=True)
    p.add_argument('--ground-truth')
    p.add_argument('--predictor')

    p = sub.add_parser('analyze', help='Characterize learned kernels')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--tuning')
    p.add_argument('--surface-tuning')
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('sweep', help='Tune and decode at every lambda of sweep_lambdas')
    p.add_argument('--dictionary', required=True)
    p.add_argument('--tune-dataset', required=True)
    p.add_argument('--dataset', '-d', required=True)
    p.add_argument('--out', '-o', required=True)

    p = sub.add_parser('predict-error', help='Build an error predictor from inference results')
    p.add_argument('--results', nargs='+', required=True)
    p.add_argument('--out', '-o', required=True)
    return parser


def command_kwargs(args):
    if args.command == 'gen':
        return {'out_dir': args.out}
    if args.command == 'train':
        return {'dataset': args.dataset, 'out_dir': args.out, 'resume': args.resume}
    if args.command == 'encode':
        return {'dictionary': args.dictionary, 'dataset': args.dataset, 'out_dir': args.out}
    if args.command == 'tune':
        return {'dictionary': args.dictionary, 'dataset': args.dataset, 'out': args.out}
    if args.command == 'infer':
        return {'dictionary': args.dictionary, 'tuning': args.tuning,
                'dataset': args.dataset, 'out': args.out}
    if args.command == 'scale-infer':
        return {'dictionary': args.dictionary, 'tuning': args.tuning, 'left': args.left,
                'right': args.right, 'out_dir': args.out,
                'ground_truth': args.ground_truth, 'predictor': args.predictor}
    if args.command == 'analyze':
        return {'dictionary': args.dictionary, 'out_dir': args.out,
                'tuning': args.tuning, 'surface_tuning': args.surface_tuning}
    if args.command == 'sweep':
        return {'dictionary': args.dictionary, 'tune_dataset': args.tune_dataset,
                'dataset': args.dataset, 'out_dir': args.out}
    return {'results': args.results, 'out': args.out}


def load_config(args):
    config = {}
    if args.config:
        try:
            config.update(read_json(args.config))
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot read config {args.config}: {e}")
    config.update(parse_set(args.set))
    if args.workers is not None:
        config['workers'] = args.workers
    if args.seed is not None:
        config['seed'] = args.seed
    return config


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    log = logging.getLogger('stereo_lca.cli')
    try:
        app = StereoLCA(load_config(args))
        summary = app.run(args.command, **command_kwargs(args))
    except StereoLCAError as e:
        log.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        log.exception(f"Unexpected failure: {e}")
        return 1
    stdout.write(json.dumps(summary, sort_keys=True, default=str) + '\n')
    return 0


if __name__ == '__main__':
    sys.exit(main())
