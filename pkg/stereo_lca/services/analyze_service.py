import os

import numpy as np

from ..analysis.circular import tilt_orientation_correlation
from ..analysis.gabor import n_statistic
from ..analysis.kernel_stats import DOMINANCE_BINS, kernel_statistics, write_jsonl
from ..errors import DataError
from ..lca.dictionary import Dictionary
from ..libs.utils import log_error, write_json
from ..readout.tuning import PER_LOCATION, SHARED, TuningMaps
from .base_service import BaseService

STATS_FILE = 'kernel_stats.jsonl'
SUMMARY_FILE = 'analysis.json'


class AnalyzeService(BaseService):
    command = 'analyze'

    @log_error
    def run(self, dictionary, out_dir, tuning=None, surface_tuning=None):
        self.require_dir(out_dir)
        kernels = Dictionary.load(dictionary)
        disparity_maps = TuningMaps.load(tuning) if tuning else None
        surface_maps = TuningMaps.load(surface_tuning) if surface_tuning else None
        for maps, mode in ((disparity_maps, SHARED), (surface_maps, PER_LOCATION)):
            if maps is not None:
                if maps.mode != mode:
                    raise DataError(f"Expected {mode} tuning maps, got {maps.mode}")
                self.check_compatible(kernels, maps)

        r2_min = self.config['analysis_r2_min']
        stats = kernel_statistics(kernels, disparity_maps, r2_min=r2_min,
                                  bound_n=self.config['analysis_bound_n'],
                                  lock_envelope=self.config['analysis_lock_envelope'],
                                  workers=self.workers)
        write_jsonl(stats, os.path.join(out_dir, STATS_FILE))

        types = {}
        for s in stats:
            types[s.kind] = types.get(s.kind, 0) + 1
        dominance = np.bincount([s.dominance_bin for s in stats], minlength=DOMINANCE_BINS + 1)
        n_values = [n_statistic(f) for s in stats for f in (s.left_fit, s.right_fit)
                    if f is not None and f.r2 > r2_min]
        summary = {'kernels': len(stats), 'types': types,
                   'dominance': dominance[1:].tolist(),
                   'good_fits': len(n_values),
                   'n_median': np.median(n_values, axis=0).tolist() if n_values else None}
        if surface_maps is not None:
            try:
                rho, used = tilt_orientation_correlation(stats, surface_maps, r2_min)
                summary['tilt_orientation'] = {'rho': rho, 'kernels': used}
            except DataError as e:
                self.log.warning(f"No tilt/orientation correlation: {e}")
        meta = self.provenance([dictionary, tuning, surface_tuning])
        write_json(os.path.join(out_dir, SUMMARY_FILE), dict(meta, summary=summary))
        return dict(summary, command=self.command, out=out_dir)
