import os

import numpy as np

from ..analysis.accuracy import absolute_errors, mae_by_label
from ..datagen.dataset import manifest_grid
from ..errors import MetadataMismatchError
from ..lca.dictionary import Dictionary
from ..lca.dynamics import binarize
from ..libs.utils import log_error, write_json
from ..readout.inference import infer_codes
from ..readout.tuning import TuningMaps
from .base_service import BaseService, manifest_path

RESULTS_FILE = 'inference.json'


def score_posteriors(rows, posteriors, periods=None):
    '''
    Per-sample records and the error summary of decoded manifest rows.
    Returns (estimates, truths, result) with result holding mae, by_label
    and samples.
    '''
    truths = np.array([row['label'] for row in rows], dtype=np.float64)
    estimates = np.array([p.label.as_tuple() for p in posteriors], dtype=np.float64)
    errors = absolute_errors(estimates, truths, periods)
    samples = [{'label': row['label'], 'estimate': list(p.label.as_tuple()),
                'active_count': p.active_count, 'error': float(e)}
               for row, p, e in zip(rows, posteriors, errors)]
    result = {'mae': float(errors.mean()), 'by_label': mae_by_label(estimates, truths, periods),
              'samples': samples}
    return estimates, truths, result


class InferService(BaseService):
    command = 'infer'

    @log_error
    def run(self, dictionary, tuning, dataset, out):
        kernels = Dictionary.load(dictionary)
        maps = TuningMaps.load(tuning)
        self.check_compatible(kernels, maps)
        manifest, pairs = self.load_dataset(dataset)
        if not manifest_grid(manifest).is_compatible(maps.grid):
            raise MetadataMismatchError("Dataset and tuning maps use different label grids")
        if os.path.isdir(out) or not out.endswith('.json'):
            out = os.path.join(self.require_dir(out), RESULTS_FILE)

        binaries = self.encode_dataset(pairs, kernels, lambda i, code: binarize(code))
        posteriors = infer_codes(binaries, maps, self.workers)
        _, _, scored = score_posteriors(manifest['rows'], posteriors, maps.grid.periods)

        result = self.provenance([dictionary, tuning, manifest_path(dataset)])
        result.update(scored)
        result['lambda'] = self.config['lca_lambda']
        write_json(out, result)
        self.log.info(f"MAE {result['mae']:.3f} over {len(result['samples'])} pairs")
        return {'command': self.command, 'results': out, 'mae': result['mae'],
                'samples': len(result['samples'])}
