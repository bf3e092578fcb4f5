'''
Inference accuracy: mean absolute errors and the predictor that maps the
number of active coefficients to error percentiles.
'''
import csv
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InsufficientDataError, ShapeError
from ..libs.utils import read_json, write_json

DEFAULT_PERCENTILES = (50, 75, 80)
DEFAULT_MIN_PER_BIN = 100


def _as_points(values):
    values = np.asarray(values, dtype=np.float64)
    return values[:, None] if values.ndim == 1 else values


def absolute_errors(estimates, truths, periods=None):
    '''
    Euclidean distance between every estimate and its truth, in label units.
    periods holds one entry per label axis: None for a linear axis, or the
    period of a circular one (tilt), whose difference is wrapped to the
    shorter way round.
    '''
    estimates, truths = _as_points(estimates), _as_points(truths)
    if estimates.shape != truths.shape:
        raise ShapeError(f"{len(estimates)} estimates vs {len(truths)} truths")
    if len(estimates) == 0:
        raise InsufficientDataError("No estimates to score")
    diff = estimates - truths
    for axis, period in enumerate(periods or ()):
        if period:
            wrapped = np.mod(diff[:, axis], period)
            diff[:, axis] = np.minimum(wrapped, period - wrapped)
    return np.linalg.norm(diff, axis=1)


def mae(estimates, truths, periods=None):
    return float(absolute_errors(estimates, truths, periods).mean())


def mae_by_label(estimates, truths, periods=None):
    '''Rows {label, count, mae} per distinct truth label, in ascending label order.'''
    errors = absolute_errors(estimates, truths, periods)
    truths = _as_points(truths)
    labels, inverse = np.unique(truths, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    return [{'label': labels[i].tolist(), 'count': int(np.sum(inverse == i)),
             'mae': float(errors[inverse == i].mean())} for i in range(len(labels))]


def mae_sweep(runs, periods=None):
    '''runs: {setting: (estimates, truths)} -> rows {setting, mae} sorted by setting.'''
    return [{'setting': key, 'mae': mae(*runs[key], periods=periods)} for key in sorted(runs)]


@dataclass
class ErrorPredictor:
    # lowest active count of every bin, strictly increasing
    edges: list
    # percentile -> value per bin
    table: dict
    sizes: list
    min_per_bin: int

    def predict(self, active_count, percentile):
        key = _percentile_key(percentile)
        if key not in self.table:
            raise ConfigError(f"Predictor holds no {percentile}th percentile")
        index = np.searchsorted(np.asarray(self.edges), active_count, side='right') - 1
        index = np.clip(index, 0, len(self.edges) - 1)
        values = np.asarray(self.table[key])[index]
        return float(values) if np.ndim(values) == 0 else values

    def to_dict(self):
        return {'edges': self.edges, 'table': self.table, 'sizes': self.sizes,
                'min_per_bin': self.min_per_bin}

    @classmethod
    def from_dict(cls, data):
        return cls(list(data['edges']), dict(data['table']), list(data['sizes']),
                   int(data['min_per_bin']))

    def save(self, path, metadata=None):
        write_json(path, dict(metadata or {}, predictor=self.to_dict()))

    @classmethod
    def load(cls, path):
        data = read_json(path)
        return cls.from_dict(data.get('predictor', data))


def _percentile_key(percentile):
    return f'{float(percentile):g}'


def build_error_predictor(active_counts, errors, min_per_bin=DEFAULT_MIN_PER_BIN,
                          percentiles=DEFAULT_PERCENTILES):
    '''
    Sort samples by active count and cut greedy bins of at least
    min_per_bin samples; samples with equal counts never straddle two bins
    and a short tail joins the last bin. Percentiles are nearest-rank
    (no interpolation).
    '''
    counts = np.asarray(active_counts, dtype=np.int64).ravel()
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if counts.shape != errors.shape:
        raise ShapeError(f"{counts.size} counts vs {errors.size} errors")
    if min_per_bin < 1:
        raise ConfigError(f"min_per_bin must be >= 1, got {min_per_bin}")
    if counts.size < min_per_bin:
        raise InsufficientDataError(
            f"{counts.size} samples cannot fill a bin of {min_per_bin}")
    order = np.lexsort((errors, counts))
    counts, errors = counts[order], errors[order]

    bins, start = [], 0
    for i in range(1, counts.size + 1):
        closes = i == counts.size or counts[i] != counts[i - 1]
        if closes and i - start >= min_per_bin:
            bins.append((start, i))
            start = i
    if start < counts.size:
        bins[-1] = (bins[-1][0], counts.size)

    table = {_percentile_key(p): [] for p in percentiles}
    for lo, hi in bins:
        for p in percentiles:
            value = np.percentile(errors[lo:hi], p, method='inverted_cdf')
            table[_percentile_key(p)].append(float(value))
    return ErrorPredictor([int(counts[lo]) for lo, _ in bins], table,
                          [hi - lo for lo, hi in bins], int(min_per_bin))


def write_scatter_csv(path, predicted, actual, extra=None):
    '''Predicted vs actual error, one row per sample; extra columns are optional arrays.'''
    predicted = np.asarray(predicted, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    extra = extra or {}
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['predicted', 'actual'] + sorted(extra))
        columns = [np.asarray(extra[k]).ravel() for k in sorted(extra)]
        for i in range(predicted.size):
            writer.writerow([f'{predicted[i]:.6g}', f'{actual[i]:.6g}']
                            + [f'{c[i]:.6g}' for c in columns])


def coverage(predictor, active_counts, errors, percentile):
    '''
    (below, at_or_below): fractions of errors strictly under and not over
    the predicted percentile. Errors on a discrete label grid tie with the
    prediction, so a calibrated predictor brackets percentile / 100.
    '''
    errors = np.asarray(errors, dtype=np.float64).ravel()
    if errors.size == 0:
        raise InsufficientDataError("No samples to check coverage on")
    predicted = np.asarray(predictor.predict(np.asarray(active_counts), percentile),
                           dtype=np.float64).ravel()
    return float(np.mean(errors < predicted)), float(np.mean(errors <= predicted))
