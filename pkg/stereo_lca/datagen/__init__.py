from .grids import (DisparityLabel, SurfaceLabel, LabelGrid, disparity_grid, surface_grid,
                    fixation_grid, DISPARITY, SURFACE, VERGENCE, TABULATED_SLANTS)
from .geometry import (CameraIntrinsics, listing_rotation, homography_warp,
                       make_virtual_fixation, make_vergence_set)
from .shifted import make_shifted_pair, procedural_texture, shifted_scene
from .surface import (RigGeometry, render_slanted_plane, plane_disparity, calibrate_slants)
from .vergence import VergenceConfig, synthetic_scene, match_fixation, vergence_pairs
