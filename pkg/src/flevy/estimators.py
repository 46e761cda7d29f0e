"""scikit-learn style wrappers.

Rows of ``X`` are samples (driver paths or synthesized paths), columns are
grid cells or time nodes, so the estimators compose with ``Pipeline``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import InvalidParameter
from .levy import IncrementGrid
from .synth import KernelSpec, kernel_weight, synthesize_matrix
from .variation import tv_profile_matrix

__all__ = ["FractionalLevyTransformer", "DyadicVariation"]


class FractionalLevyTransformer(TransformerMixin, BaseEstimator):
    """Map driver increments on ``grid`` to a fractional process at ``out_times``.

    Parameters
    ----------
    grid : IncrementGrid
        Driver grid; ``X`` must have ``grid.n_cells`` columns.
    kind : str
        Kernel family ("non_anticipative", "well_balanced", "tail_part",
        "riemann_liouville" or a short alias).
    d : float
        Memory parameter in (0, 1/2).
    out_times : array-like
        Grid nodes at which the process is evaluated.

    Attributes
    ----------
    weights_ : ndarray of shape (n_times, n_cells)
        Kernel weights; ``transform(X) == X @ weights_.T``.
    """

    def __init__(self, grid: IncrementGrid | None = None, kind: str = "non_anticipative",
                 d: float = 0.25, out_times=None):
        self.grid = grid
        self.kind = kind
        self.d = d
        self.out_times = out_times

    def fit(self, X=None, y=None):
        if self.grid is None or self.out_times is None:
            raise InvalidParameter("grid and out_times are required")
        self.spec_ = KernelSpec(self.kind, self.d)
        times = np.asarray(self.out_times, dtype=float)
        # a zero probe runs the lattice and coverage checks
        synthesize_matrix(self.grid, np.zeros((1, self.grid.n_cells)), self.spec_, times)
        self.weights_ = kernel_weight(self.spec_, times[:, None], self.grid.tags[None, :])
        self.n_features_in_ = self.grid.n_cells
        if X is not None:
            check_array(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidParameter(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return synthesize_matrix(self.grid, X, self.spec_, self.out_times)


class DyadicVariation(BaseEstimator):
    """Dyadic total-variation profile of paths sampled on ``times``.

    ``fit`` stores per-depth mean variation, the growth exponent and the
    convergence flag; ``transform`` returns the per-path profile
    (one column per depth).
    """

    def __init__(self, times=None, a: float = 0.0, b: float = 1.0, max_depth: int = 8,
                 tol: float = 0.05):
        self.times = times
        self.a = a
        self.b = b
        self.max_depth = max_depth
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X)
        times = self._times(X)
        rep = tv_profile_matrix(X, times, self.a, self.b, self.max_depth, self.tol)
        self.report_ = rep
        self.tv_by_depth_ = np.array([tv for _, tv in rep.tv_by_depth])
        self.growth_exponent_ = rep.growth_exponent
        self.converged_ = rep.converged
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "report_")
        X = check_array(X)
        from .variation import _dyadic_columns, _profile

        cols = _dyadic_columns(self._times(X), self.a, self.b, self.max_depth)
        return _profile(X[:, cols], self.max_depth)

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)

    def _times(self, X) -> np.ndarray:
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        return np.linspace(self.a, self.b, X.shape[1])
