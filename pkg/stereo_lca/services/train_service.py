import os

from ..errors import DivergenceError, MetadataMismatchError
from ..lca.dictionary import Dictionary
from ..lca.learning import LearnConfig, learn
from ..libs.utils import log_error, write_json
from .base_service import BaseService, manifest_path

DICTIONARY_FILE = 'dictionary.lcat'
LOG_FILE = 'training_log.json'
CHECKPOINT_FILE = 'checkpoint.lcat'


class TrainService(BaseService):
    command = 'train'

    def resume_key(self):
        '''Config hash without the epoch count, so a finished run can be extended.'''
        return self.config_hash(exclude=('learn_epochs',))

    def _load_checkpoint(self, path):
        dictionary = Dictionary.load(path)
        meta = dictionary.metadata
        if meta.get('resume_key') != self.resume_key():
            raise MetadataMismatchError(
                f"Checkpoint {path} was written with a different configuration")
        self.log.info(f"Resuming after epoch {meta['epoch']}")
        return dictionary, meta['epoch'] + 1, meta['history']

    def _write_log(self, out_dir, history, status):
        write_json(os.path.join(out_dir, LOG_FILE),
                   {'config_hash': self.config_hash(), 'epochs': history, 'status': status})

    @log_error
    def run(self, dataset, out_dir, resume=False):
        self.require_dir(out_dir)
        manifest, pairs = self.load_dataset(dataset)
        learn_cfg = LearnConfig.from_config(self.config)
        checkpoint_path = os.path.join(out_dir, CHECKPOINT_FILE)

        dictionary, start, history = None, 0, []
        if resume and os.path.exists(checkpoint_path):
            dictionary, start, history = self._load_checkpoint(checkpoint_path)
        elif resume:
            self.log.warning(f"No checkpoint in {out_dir}, starting from scratch")
        state = {'history': list(history)}

        def checkpoint(epoch, current, so_far):
            state['history'] = list(so_far)
            current.save(checkpoint_path, dict(self.provenance(), epoch=epoch, history=so_far,
                                               resume_key=self.resume_key()), precision='f8')

        self.log.info(f"Training {learn_cfg.kernel_count} kernels on {len(pairs)} pairs "
                      f"for {learn_cfg.epochs} epochs")
        try:
            dictionary, history = learn(pairs, learn_cfg, self.lca_config, dictionary=dictionary,
                                        start_epoch=start, history=history,
                                        checkpoint=checkpoint, workers=self.workers)
        except DivergenceError:
            self._write_log(out_dir, state['history'], 'diverged')
            raise

        path = os.path.join(out_dir, DICTIONARY_FILE)
        meta = self.provenance([manifest_path(dataset)])
        meta.update({'lambda_train': self.config['lca_lambda'], 'epochs': learn_cfg.epochs,
                     'seed': learn_cfg.seed})
        dictionary.metadata = {}
        dictionary.save(path, meta)
        self._write_log(out_dir, history, 'done')
        final = history[-1] if history else {}
        return {'command': self.command, 'dictionary': path, 'kernels': dictionary.count,
                'epochs': len(history), 'objective': final.get('objective')}
