from ..datagen.dataset import generate_dataset, generate_vergence_dataset, label_counts
from ..datagen.grids import DISPARITY, VERGENCE, disparity_grid, surface_grid
from ..datagen.surface import RigGeometry, calibrate_slants
from ..datagen.vergence import VergenceConfig
from ..errors import ConfigError
from ..libs.imagecore import StereoPair, load_grayscale
from ..libs.utils import log_error
from .base_service import BaseService


class GenService(BaseService):
    command = 'gen'

    def grid(self):
        if self.config['gen_kind'] == DISPARITY:
            return disparity_grid(self.config['gen_disparity_low'],
                                  self.config['gen_disparity_high'],
                                  self.config['gen_disparity_step'])
        slants = self.config['gen_slants']
        if slants is None:
            slants = calibrate_slants(self.rig())
            self.log.debug(f"Calibrated slants: {[round(s, 3) for s in slants]}")
        return surface_grid(self.config['gen_tilts'], slants, self.config['gen_frontoparallel'])

    def rig(self):
        return RigGeometry.from_config(self.config)

    def stereo_sources(self):
        scenes, paths = [], []
        for entry in self.config['gen_stereo_sources']:
            if not isinstance(entry, (list, tuple)) or len(entry) != 2:
                raise ConfigError(f"gen_stereo_sources entries must be [left, right], got {entry!r}")
            scenes.append(StereoPair(load_grayscale(entry[0]), load_grayscale(entry[1])))
            paths += list(entry)
        return scenes, paths

    def _run_vergence(self, out_dir):
        scenes, paths = self.stereo_sources()
        count = len(scenes) or self.config['gen_scenes']
        self.log.info(f"Generating up to {self.config['gen_per_label']} fixations for each of "
                      f"{count} {'captured' if scenes else 'synthetic'} scenes")
        manifest = generate_vergence_dataset(
            out_dir, self.config['gen_per_label'], self.config['seed'],
            VergenceConfig.from_config(self.config), scenes=scenes or None,
            synthetic=self.config['gen_scenes'], crop=self.config['gen_crop'],
            workers=self.workers, metadata=self.provenance(paths))
        return {'command': self.command, 'out': out_dir, 'kind': VERGENCE, 'labels': 1,
                'scenes': count, 'pairs': len(manifest['rows']),
                'counts': label_counts(manifest)}

    @log_error
    def run(self, out_dir):
        self.require_dir(out_dir)
        if self.config['gen_kind'] == VERGENCE:
            return self._run_vergence(out_dir)
        grid = self.grid()
        paths = list(self.config['gen_sources'])
        sources = [load_grayscale(path) for path in paths]
        self.log.info(f"Generating {self.config['gen_per_label']} pairs for each of "
                      f"{len(grid)} {grid.kind} labels")
        manifest = generate_dataset(
            out_dir, grid, self.config['gen_per_label'], self.config['seed'],
            sources=sources or None, crop=self.config['gen_crop'], rig=self.rig(),
            texture_size=self.config['gen_texture_size'] or None, workers=self.workers,
            metadata=self.provenance(paths))
        counts = label_counts(manifest)
        return {'command': self.command, 'out': out_dir, 'kind': grid.kind, 'labels': len(grid),
                'pairs': len(manifest['rows']), 'counts': counts}
