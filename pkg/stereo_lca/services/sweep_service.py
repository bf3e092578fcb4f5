import os
from dataclasses import replace

from ..analysis.accuracy import mae_sweep
from ..datagen.dataset import manifest_grid
from ..errors import ConfigError, MetadataMismatchError
from ..lca.dictionary import Dictionary
from ..lca.dynamics import activity_sweep, binarize
from ..libs.utils import log_error, write_json
from ..readout.inference import infer_codes
from ..readout.tuning import SHARED, estimate_tuning_shared
from .base_service import BaseService, manifest_path
from .infer_service import score_posteriors

SWEEP_FILE = 'sweep.json'


def sweep_name(prefix, lam, ext):
    return f'{prefix}_{lam:g}.{ext}'


class SweepService(BaseService):
    '''
    Re-tune and decode with one dictionary at every lambda of
    sweep_lambdas: tuning maps come from tune_dataset, errors and activity
    from dataset.
    '''
    command = 'sweep'

    def lambdas(self):
        lambdas = [float(lam) for lam in self.config['sweep_lambdas']]
        if not lambdas:
            raise ConfigError("sweep_lambdas is empty")
        if any(lam < 0 for lam in lambdas) or len(set(lambdas)) != len(lambdas):
            raise ConfigError(f"sweep_lambdas must be distinct and >= 0, got {lambdas}")
        return lambdas

    @log_error
    def run(self, dictionary, tune_dataset, dataset, out_dir):
        self.require_dir(out_dir)
        if self.config['tune_mode'] != SHARED:
            raise ConfigError("sweep reads out shared tuning maps only")
        lambdas = self.lambdas()
        kernels = Dictionary.load(dictionary)
        tune_manifest, tune_pairs = self.load_dataset(tune_dataset)
        manifest, pairs = self.load_dataset(dataset)
        grid = manifest_grid(tune_manifest)
        if not manifest_grid(manifest).is_compatible(grid):
            raise MetadataMismatchError("Tuning and test datasets use different label grids")
        inputs = [dictionary, manifest_path(tune_dataset), manifest_path(dataset)]
        runs, files = {}, {}

        def decode(lam, codes):
            cfg = replace(self.lca_config, lam=lam)
            binaries = self.encode_dataset(tune_pairs, kernels, lambda i, code: binarize(code), cfg)
            by_label = [[] for _ in range(len(grid))]
            for row, binary in zip(tune_manifest['rows'], binaries):
                by_label[row['label_index']].append(binary)
            tuning = estimate_tuning_shared(by_label, grid, self.config['tune_margin'],
                                            self.workers)
            tuning_path = os.path.join(out_dir, sweep_name('tuning', lam, 'lcat'))
            meta = self.provenance(inputs[:2])
            meta.update({'stride': kernels.stride, 'lambda': lam})
            tuning.save(tuning_path, meta)

            posteriors = infer_codes([binarize(code) for code in codes], tuning, self.workers)
            estimates, truths, scored = score_posteriors(manifest['rows'], posteriors,
                                                         grid.periods)
            runs[lam] = (estimates, truths)
            results_path = os.path.join(out_dir, sweep_name('inference', lam, 'json'))
            result = self.provenance(inputs)
            result.update(scored)
            result['lambda'] = lam
            write_json(results_path, result)
            files[lam] = {'tuning': tuning_path, 'results': results_path}

        activity = activity_sweep(pairs, kernels, lambdas, self.lca_config, self.workers,
                                  reduce=decode)
        errors = {row['setting']: row['mae'] for row in mae_sweep(runs, grid.periods)}
        rows = [dict(row, mae=errors[row['lambda']], **files[row['lambda']]) for row in activity]
        for row in rows:
            self.log.info(f"lambda {row['lambda']:g}: MAE {row['mae']:.3f}, "
                          f"{row['mean_active']:.1f} active")
        path = os.path.join(out_dir, SWEEP_FILE)
        write_json(path, dict(self.provenance(inputs), rows=rows))
        return {'command': self.command, 'sweep': path, 'rows': rows}
