import os

import numpy as np

from ..lca.dictionary import Dictionary
from ..lca.dynamics import binarize
from ..libs import tensor_io
from ..libs.utils import log_error, write_json
from .base_service import BaseService, manifest_path

CODES_DIR = 'codes'
INDEX_FILE = 'codes.json'


class EncodeService(BaseService):
    command = 'encode'

    @log_error
    def run(self, dictionary, dataset, out_dir):
        self.require_dir(os.path.join(out_dir, CODES_DIR))
        kernels = Dictionary.load(dictionary)
        manifest, pairs = self.load_dataset(dataset)
        meta = self.provenance([dictionary, manifest_path(dataset)])
        meta.update({'stride': kernels.stride, 'lambda': self.config['lca_lambda']})

        def store(i, code):
            row = manifest['rows'][i]
            stem = os.path.splitext(os.path.basename(row['path']))[0]
            values = os.path.join(CODES_DIR, stem + '.lcat')
            bits = os.path.join(CODES_DIR, stem + '.bits.lcat')
            tensor_io.save_tensor(os.path.join(out_dir, values), code.a)
            packed, shape = tensor_io.pack_bits(binarize(code))
            tensor_io.save_tensor(os.path.join(out_dir, bits), packed, {'shape': list(shape)})
            return {'activations': values, 'bits': bits, 'label': row['label'],
                    'label_index': row['label_index'], 'active': int(np.count_nonzero(code.a)),
                    'iterations': code.iterations, 'objective': code.trace[-1].objective
                    if code.trace else 0.0}

        rows = self.encode_dataset(pairs, kernels, store)
        write_json(os.path.join(out_dir, INDEX_FILE), dict(meta, rows=rows))
        active = [row['active'] for row in rows]
        return {'command': self.command, 'codes': len(rows),
                'mean_active': float(np.mean(active)) if active else 0.0}


def load_bits(out_dir, row):
    path = os.path.join(out_dir, row['bits'])
    packed, meta = tensor_io.load_tensor(path, with_metadata=True)
    return tensor_io.unpack_bits(packed, tuple(meta['shape']))
