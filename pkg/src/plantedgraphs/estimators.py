"""scikit-learn style wrappers around the detection and reconstruction functions.

A "sample" is one graph, so ``X`` is a single :class:`Graph` or
:class:`Instance`, or a sequence of them. Detectors predict 1 for H1 and 0
for H0.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .detect import H1, lambda_hat, run_test
from .errors import InvalidParameterError
from .graph import Graph, Instance
from .reconstruct import reconstruct_line, reconstruct_star

_TESTS = ("components", "kpath", "star", "dary", "auto")


def check_graphs(X):
    """Return ``X`` as a list of graphs, unwrapping instances."""
    if isinstance(X, (Graph, Instance)):
        X = [X]
    try:
        items = list(X)
    except TypeError:
        raise InvalidParameterError(f"expected a Graph or a sequence of graphs, got {type(X).__name__}") from None
    out = []
    for i, x in enumerate(items):
        if isinstance(x, Instance):
            x = x.graph
        if not isinstance(x, Graph):
            raise InvalidParameterError(f"item {i} is {type(x).__name__}, not a Graph")
        out.append(x)
    if not out:
        raise InvalidParameterError("no graphs given")
    return out


def check_labels(y, n_samples):
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise InvalidParameterError(f"y must have shape ({n_samples},), got {y.shape}")
    if not np.isin(y, (0, 1)).all():
        raise InvalidParameterError("labels must be 0 (H0) or 1 (H1)")
    return y.astype(int)


def _check_positive_int(name, value, minimum, allow_none=False):
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise InvalidParameterError(f"{name} must be an integer >= {minimum}, got {value!r}")


class PlantedStructureDetector(ClassifierMixin, BaseEstimator):
    """Binary H0/H1 classifier built on one of the detection tests.

    Parameters
    ----------
    test : {"components", "kpath", "star", "dary", "auto"}
    K : int, optional
        Structure size for the component, path and star tests.
    D, h : int, optional
        Arity and height for the tree test.

    ``fit`` needs no labels. It checks the parameters and records the mean
    estimated ``lambda`` of the training graphs in ``lambda_hat_``.
    """

    def __init__(self, test="auto", K=None, D=None, h=None):
        self.test = test
        self.K = K
        self.D = D
        self.h = h

    def _validate_params(self):
        if self.test not in _TESTS:
            raise InvalidParameterError(f"test must be one of {_TESTS}, got {self.test!r}")
        if self.test == "dary":
            _check_positive_int("D", self.D, 2)
            _check_positive_int("h", self.h, 1)
        else:
            _check_positive_int("K", self.K, 1)

    def fit(self, X, y=None):
        self._validate_params()
        graphs = check_graphs(X)
        if y is not None:
            check_labels(y, len(graphs))
        self.lambda_hat_ = float(np.mean([lambda_hat(g) for g in graphs]))
        self.classes_ = np.array([0, 1])
        self.n_graphs_seen_ = len(graphs)
        return self

    def detect(self, X):
        """Full :class:`DetectionResult` per graph."""
        check_is_fitted(self, "classes_")
        return [run_test(g, self.test, K=self.K, D=self.D, h=self.h) for g in check_graphs(X)]

    def predict(self, X):
        return np.array([int(r.decision == H1) for r in self.detect(X)])


class LineReconstructor(BaseEstimator):
    """Peeling estimate of a planted ``K``-vertex path."""

    def __init__(self, K=2):
        self.K = K

    def fit(self, X=None, y=None):
        _check_positive_int("K", self.K, 2)
        self.fitted_ = True
        return self

    def reconstruct(self, X, truths=None):
        check_is_fitted(self, "fitted_")
        graphs = check_graphs(X)
        truths = truths if truths is not None else [None] * len(graphs)
        return [reconstruct_line(g, self.K, t) for g, t in zip(graphs, truths)]

    def predict(self, X):
        """Estimated vertex set per graph, as sorted tuples."""
        return [r.estimated for r in self.reconstruct(X)]


class StarReconstructor(BaseEstimator):
    """Max-degree estimate of a planted star with ``K`` leaves."""

    def __init__(self, K=1, seed=0):
        self.K = K
        self.seed = seed

    def fit(self, X=None, y=None):
        _check_positive_int("K", self.K, 1)
        _check_positive_int("seed", self.seed, 0)
        self.fitted_ = True
        return self

    def reconstruct(self, X, truths=None):
        check_is_fitted(self, "fitted_")
        graphs = check_graphs(X)
        truths = truths if truths is not None else [None] * len(graphs)
        return [reconstruct_star(g, self.K, self.seed, t) for g, t in zip(graphs, truths)]

    def predict(self, X):
        return [r.estimated for r in self.reconstruct(X)]
