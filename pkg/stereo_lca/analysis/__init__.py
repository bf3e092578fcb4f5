from .gabor import GaborFit, fit_gabor, n_statistic
from .kernel_stats import (KernelStats, ocular_dominance, shift_statistics, classify_kernel,
                           kernel_statistics, MATCHED_GABOR, TUNED_INHIBITORY, BLOB_LIKE,
                           UNCLASSIFIED)
from .accuracy import (ErrorPredictor, mae, mae_by_label, mae_sweep, build_error_predictor,
                       coverage, write_scatter_csv)
from .circular import circular_correlation, tilt_orientation_correlation
