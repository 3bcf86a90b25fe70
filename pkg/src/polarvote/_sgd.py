"""Compiled inner loops for softmax-regression SGD over CSR count features."""

import numpy as np
from numba import njit


@njit(cache=True)
def sgd_epoch(indptr, indices, values, labels, order, raw, scale, bias, lr, shrink):
    """One pass of per-document SGD in ``order``; weights are ``scale * raw``.

    Returns the updated scale. ``raw`` and ``bias`` are modified in place.
    """
    n_classes = raw.shape[0]
    z = np.empty(n_classes)
    for i in order:
        start, stop = indptr[i], indptr[i + 1]
        for c in range(n_classes):
            acc = 0.0
            for p in range(start, stop):
                acc += raw[c, indices[p]] * values[p]
            z[c] = scale * acc + bias[c]
        zmax = z.max()
        total = 0.0
        for c in range(n_classes):
            z[c] = np.exp(z[c] - zmax)
            total += z[c]
        for c in range(n_classes):
            z[c] /= total
        z[labels[i]] -= 1.0
        scale *= shrink
        step = lr / scale
        for c in range(n_classes):
            g = z[c] * step
            for p in range(start, stop):
                raw[c, indices[p]] -= g * values[p]
            bias[c] -= lr * z[c]
        if scale < 1e-6:
            raw *= scale
            scale = 1.0
    return scale


@njit(cache=True)
def mean_cross_entropy(indptr, indices, values, labels, weights, bias):
    n_docs = labels.shape[0]
    n_classes = weights.shape[0]
    z = np.empty(n_classes)
    total = 0.0
    for i in range(n_docs):
        for c in range(n_classes):
            acc = bias[c]
            for p in range(indptr[i], indptr[i + 1]):
                acc += weights[c, indices[p]] * values[p]
            z[c] = acc
        zmax = z.max()
        s = 0.0
        for c in range(n_classes):
            s += np.exp(z[c] - zmax)
        total += zmax + np.log(s) - z[labels[i]]
    return total / n_docs
