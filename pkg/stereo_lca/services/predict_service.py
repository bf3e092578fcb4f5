import os

from ..analysis.accuracy import build_error_predictor, coverage
from ..errors import DataError
from ..libs.utils import log_error, read_json
from .base_service import BaseService

PREDICTOR_FILE = 'predictor.json'


class PredictService(BaseService):
    command = 'predict-error'

    @log_error
    def run(self, results, out):
        '''results: one or more inference result files holding per-sample errors.'''
        counts, errors = [], []
        for path in results:
            data = read_json(path)
            if 'samples' not in data:
                raise DataError(f"{path} holds no inference samples")
            counts += [s['active_count'] for s in data['samples']]
            errors += [s['error'] for s in data['samples']]
        if os.path.isdir(out) or not out.endswith('.json'):
            out = os.path.join(self.require_dir(out), PREDICTOR_FILE)

        percentiles = self.config['predict_percentiles']
        predictor = build_error_predictor(counts, errors, self.config['predict_min_per_bin'],
                                          percentiles)
        fractions = {}
        for p in percentiles:
            below, at_or_below = coverage(predictor, counts, errors, p)
            fractions[f'{float(p):g}'] = {'below': below, 'at_or_below': at_or_below}
        meta = self.provenance(results)
        meta['coverage'] = fractions
        predictor.save(out, meta)
        self.log.info(f"Error predictor with {len(predictor.edges)} bins from {len(counts)} samples")
        return {'command': self.command, 'predictor': out, 'bins': len(predictor.edges),
                'samples': len(counts), 'coverage': fractions}
