import os

import numpy as np

from ..analysis.accuracy import ErrorPredictor, write_scatter_csv
from ..lca.dictionary import Dictionary
from ..libs import tensor_io
from ..libs.imagecore import StereoPair, load_disparity, load_grayscale, save_png
from ..libs.utils import log_error, write_json
from ..readout.scale_space import check_scales, scale_space_infer
from ..readout.tuning import TuningMaps
from .base_service import BaseService


class ScaleInferService(BaseService):
    command = 'scale-infer'

    def _save_map(self, out_dir, name, values, meta):
        '''LCAT with masked cells stored as 0 and listed in the sidecar, plus a PNG.'''
        values = np.asarray(values, dtype=np.float64)
        valid = np.isfinite(values)
        tensor_io.save_tensor(os.path.join(out_dir, name + '.lcat'), np.where(valid, values, 0.0),
                              dict(meta, masked=int((~valid).sum())))
        save_png(values, os.path.join(out_dir, name + '.png'))

    @log_error
    def run(self, dictionary, tuning, left, right, out_dir, ground_truth=None, predictor=None):
        self.require_dir(out_dir)
        kernels = Dictionary.load(dictionary)
        maps = TuningMaps.load(tuning)
        self.check_compatible(kernels, maps)
        scene = StereoPair(load_grayscale(left), load_grayscale(right))
        truth = load_disparity(ground_truth) if ground_truth else None
        error_model = ErrorPredictor.load(predictor) if predictor else None
        scales = check_scales(self.config['scale_list'])

        result = scale_space_infer(
            scene, kernels, maps, scales, self.lca_config, limit=self.config['scale_limit'],
            ground_truth=truth, predictor=error_model,
            percentile=self.config['scale_percentile'],
            min_active=self.config['scale_min_active'],
            sigma_inner=self.dog[0], sigma_outer=self.dog[1])

        meta = self.provenance([dictionary, tuning, left, right, ground_truth, predictor])
        self._save_map(out_dir, 'disparity', result.horizontal, meta)
        self._save_map(out_dir, 'vertical', result.disparity[..., 1], meta)
        self._save_map(out_dir, 'scale', result.scale, meta)
        tensor_io.save_tensor(os.path.join(out_dir, 'mask.lcat'), result.mask, meta)
        summary = {'command': self.command, 'out': out_dir,
                   'assigned': int(result.mask.sum()), 'pixels': int(result.mask.size),
                   'scales': {f'{s:g}': int(np.sum(result.scale == s)) for s in scales}}
        if error_model is not None:
            self._save_map(out_dir, 'predicted_error', result.predicted_error, meta)
        if truth is not None:
            valid = result.mask & np.isfinite(truth)
            actual = np.abs(result.horizontal[valid] - truth[valid])
            summary['mae'] = float(actual.mean()) if actual.size else None
            if error_model is not None:
                write_scatter_csv(os.path.join(out_dir, 'error_scatter.csv'),
                                  result.predicted_error[valid], actual,
                                  {'scale': result.scale[valid]})
                summary['error_correlation'] = _correlation(result.predicted_error[valid], actual)
        write_json(os.path.join(out_dir, 'summary.json'), dict(meta, summary=summary))
        return summary


def _correlation(a, b):
    if a.size < 2 or np.std(a) == 0 or np.std(b) == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])
