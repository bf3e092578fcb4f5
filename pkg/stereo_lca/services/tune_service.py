import os

from ..datagen.dataset import manifest_grid
from ..lca.dictionary import Dictionary
from ..lca.dynamics import binarize
from ..libs.utils import log_error
from ..readout.tuning import (SHARED, estimate_tuning_perloc, estimate_tuning_shared,
                              smooth_surface_tuning)
from .base_service import BaseService, manifest_path

TUNING_FILE = 'tuning.lcat'


class TuneService(BaseService):
    command = 'tune'

    @log_error
    def run(self, dictionary, dataset, out):
        kernels = Dictionary.load(dictionary)
        manifest, pairs = self.load_dataset(dataset)
        grid = manifest_grid(manifest)
        if os.path.isdir(out) or not out.endswith('.lcat'):
            out = os.path.join(self.require_dir(out), TUNING_FILE)

        binaries = self.encode_dataset(pairs, kernels, lambda i, code: binarize(code))
        by_label = [[] for _ in range(len(grid))]
        for row, binary in zip(manifest['rows'], binaries):
            by_label[row['label_index']].append(binary)

        mode = self.config['tune_mode']
        if mode == SHARED:
            tuning = estimate_tuning_shared(by_label, grid, self.config['tune_margin'],
                                            self.workers)
        else:
            tuning = estimate_tuning_perloc(by_label, grid, self.config['tune_region'],
                                            self.workers)
            if self.config['tune_smooth']:
                tuning = smooth_surface_tuning(tuning)
        meta = self.provenance([dictionary, manifest_path(dataset)])
        meta.update({'stride': kernels.stride, 'lambda': self.config['lca_lambda']})
        tuning.save(out, meta)
        self.log.info(f"Estimated {mode} tuning maps for {len(grid)} labels")
        return {'command': self.command, 'tuning': out, 'mode': mode, 'labels': len(grid),
                'kernels': tuning.kernels, 'epsilon_max': float(tuning.epsilon.max())}
