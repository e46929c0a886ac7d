"""Recover the heralded temporal mode from raw homodyne traces.

Two estimators, both scikit-learn compatible (``fit`` on a traces matrix,
fitted attributes with trailing underscores, parameters via
``get_params``/``set_params``):

* :class:`TemporalModePCA` exploits the excess variance of heralded events
  (leading eigenvector of the trace covariance).
* :class:`TemporalModeICA` exploits their non-Gaussianity (fixed-point
  search maximizing excess kurtosis in a whitened principal subspace),
  which also works when the heralded mode carries no excess variance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConvergenceError
from .temporal import TemporalMode


@dataclass(frozen=True)
class TraceEnsemble:
    """Raw traces (events x samples) with their sampling metadata."""

    traces: np.ndarray
    dt: float
    t0_index: int

    def __post_init__(self):
        traces = np.asarray(self.traces, dtype=float)
        object.__setattr__(self, "traces", traces)
        if traces.ndim != 2:
            raise ValueError("traces must be a 2-D (events x samples) array")
        if not np.all(np.isfinite(traces)):
            raise ValueError("traces contain non-finite values")
        if not 0 <= self.t0_index < traces.shape[1]:
            raise ValueError("t0_index outside the trace window")

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.traces.shape[1]) - self.t0_index) * self.dt


def _as_unit_mode(vector: np.ndarray, dt: float) -> np.ndarray:
    v = vector / np.sqrt(np.sum(vector**2) * dt)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


def _top_eigenpairs(x_centered: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    cov = (x_centered.T @ x_centered) / x_centered.shape[0]
    k = min(k, cov.shape[0] - 2)
    vals, vecs = eigsh(cov, k=k, which="LA")
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


class TemporalModePCA(BaseEstimator):
    """Leading principal component of mean-subtracted traces.

    Parameters
    ----------
    dt:
        Sampling interval of the traces (s).
    n_tracked:
        Number of leading eigenpairs to keep for diagnostics.
    gap_warn:
        Warn when the leading eigenvalue gap is below this fraction of the
        total spectrum (no variance separation; the estimate is ambiguous).
    """

    def __init__(self, dt: float = 1e-9, n_tracked: int = 8, gap_warn: float = 0.01):
        self.dt = dt
        self.n_tracked = n_tracked
        self.gap_warn = gap_warn

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[0] < 1000:
            raise ValueError(f"need at least 1000 traces, got {X.shape[0]}")
        xc = X - X.mean(axis=0)
        vals, vecs = _top_eigenpairs(xc, self.n_tracked)
        total = np.trace((xc.T @ xc) / xc.shape[0])
        gap = (vals[0] - vals[1]) / total
        if gap < self.gap_warn:
            warnings.warn(
                f"leading eigenvalue gap {gap:.2%} of the spectrum; "
                "no variance separation, mode estimate is ambiguous",
                RuntimeWarning,
            )
        self.eigenvalues_ = vals
        self.eigenvalue_gap_ = float(gap)
        self.components_ = _as_unit_mode(vecs[:, 0], self.dt)[None, :]
        return self

    def temporal_mode(self, t0_index: int | None = None) -> TemporalMode:
        check_is_fitted(self, "components_")
        n = self.components_.shape[1]
        idx = n // 2 if t0_index is None else t0_index
        grid = (np.arange(n) - idx) * self.dt
        return TemporalMode(grid, self.components_[0], 0.0, {"kind": "pca_estimate"})


def _cumulant_init_directions(y_w: np.ndarray, n_dirs: int = 8) -> list[np.ndarray]:
    """Eigenvectors of the fourth-cumulant contraction E[|y|^2 y y^T].

    For whitened data with a single non-Gaussian source the contraction is
    (d+2) I + kurt * w w^T, so its extremal eigenvectors point at the source;
    they make the fixed point robust in high-dimensional subspaces.
    """
    n, d = y_w.shape
    q = (y_w.T * np.sum(y_w**2, axis=1)) @ y_w / n
    vals, vecs = np.linalg.eigh(q)
    deviation = np.abs(vals - np.median(vals))
    order = np.argsort(deviation)[::-1][:n_dirs]
    return [vecs[:, j] for j in order]


def _kurtosis_search(
    y_w: np.ndarray, rng: np.random.Generator, n_restarts: int, max_iter: int
) -> tuple[np.ndarray | None, float, bool]:
    """Fixed-point search for the extremal-|kurtosis| direction in whitened data."""
    n_events = y_w.shape[0]
    best_kurt, best_w, converged = 0.0, None, False
    starts = _cumulant_init_directions(y_w)
    starts += [rng.normal(size=y_w.shape[1]) for _ in range(n_restarts)]
    for w in starts:
        w = w / np.linalg.norm(w)
        for _ in range(max_iter):
            proj = y_w @ w
            w_new = (y_w.T @ proj**3) / n_events - 3.0 * w
            norm = np.linalg.norm(w_new)
            if norm == 0:
                break
            w_new /= norm
            done = abs(np.dot(w_new, w)) > 1.0 - 1e-10
            w = w_new
            if done:
                converged = True
                break
        else:
            continue
        kurt = np.mean((y_w @ w) ** 4) - 3.0
        if abs(kurt) > abs(best_kurt):
            best_kurt, best_w = kurt, w.copy()
    return best_w, best_kurt, converged


class TemporalModeICA(BaseEstimator):
    """Most non-Gaussian direction in the whitened principal subspace.

    Fixed-point iteration with the cubic contrast (sample kurtosis); the
    heralded wave packet is the single non-Gaussian component, so the
    extremal-|excess kurtosis| direction is the mode.  Because the adaptive
    search inflates in-sample kurtosis, significance is judged out of
    sample: a direction found on one half of the traces must show
    significant kurtosis on the other half, otherwise the ensemble is
    declared Gaussian and the fit fails.

    Parameters
    ----------
    dt:
        Sampling interval (s).
    n_whiten:
        Dimension of the PCA subspace searched (None whitens the full
        spectrum, needed when the mode carries no excess variance).
    max_iter, n_restarts:
        Fixed-point iteration budget per restart and number of restarts.
    seed:
        Seed for the restart directions.
    kurt_sigma:
        Holdout significance threshold in units of the Gaussian kurtosis
        standard error sqrt(24/n_holdout).
    """

    def __init__(
        self,
        dt: float = 1e-9,
        n_whiten: int | None = 20,
        max_iter: int = 500,
        n_restarts: int = 5,
        seed: int = 0,
        kurt_sigma: float = 4.0,
    ):
        self.dt = dt
        self.n_whiten = n_whiten
        self.max_iter = max_iter
        self.n_restarts = n_restarts
        self.seed = seed
        self.kurt_sigma = kurt_sigma

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        n_events = X.shape[0]
        if n_events < 1000:
            raise ValueError(f"need at least 1000 traces, got {n_events}")
        if self.n_whiten is not None and self.n_whiten > 50:
            raise ValueError("whitened subspace larger than 50 is not supported")
        xc = X - X.mean(axis=0)
        rng = np.random.default_rng(self.seed)

        # out-of-sample significance: a direction found on one half (whitened
        # by its own covariance) must carry kurtosis on the raw other half
        half = n_events // 2
        perm = rng.permutation(n_events)
        a_half, b_half = xc[perm[:half]], xc[perm[half:]]
        vals_a, vecs_a = self._whiten_basis(a_half)
        w_a, _, conv_a = _kurtosis_search(
            (a_half @ vecs_a) / np.sqrt(vals_a), rng, self.n_restarts, self.max_iter
        )
        if not conv_a or w_a is None:
            raise ConvergenceError(
                f"kurtosis search did not converge in {self.n_restarts} restarts"
            )
        holdout = b_half @ (vecs_a @ (w_a / np.sqrt(vals_a)))
        holdout_kurt = np.mean((holdout / holdout.std()) ** 4) - 3.0
        threshold = self.kurt_sigma * np.sqrt(24.0 / holdout.size)
        if abs(holdout_kurt) < threshold:
            raise ConvergenceError(
                "no significant non-Gaussian component: holdout |excess kurtosis| "
                f"{abs(holdout_kurt):.3f} < {threshold:.3f}"
            )

        vals, vecs = self._whiten_basis(xc)
        best_w, best_kurt, converged = _kurtosis_search(
            (xc @ vecs) / np.sqrt(vals), rng, self.n_restarts, self.max_iter
        )
        if not converged or best_w is None:
            raise ConvergenceError(
                f"kurtosis search did not converge in {self.n_restarts} restarts"
            )
        pattern = vecs @ (np.sqrt(vals) * best_w)
        self.components_ = _as_unit_mode(pattern, self.dt)[None, :]
        self.excess_kurtosis_ = float(best_kurt)
        self.holdout_kurtosis_ = float(holdout_kurt)
        self.eigenvalues_ = vals
        return self

    def _whiten_basis(self, xc: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.n_whiten is None:
            vals, vecs = np.linalg.eigh((xc.T @ xc) / xc.shape[0])
            order = np.argsort(vals)[::-1]
            vals, vecs = vals[order], vecs[:, order]
        else:
            vals, vecs = _top_eigenpairs(xc, self.n_whiten)
        keep = vals > 1e-10 * vals[0]
        return vals[keep], vecs[:, keep]

    def temporal_mode(self, t0_index: int | None = None) -> TemporalMode:
        check_is_fitted(self, "components_")
        n = self.components_.shape[1]
        idx = n // 2 if t0_index is None else t0_index
        grid = (np.arange(n) - idx) * self.dt
        return TemporalMode(grid, self.components_[0], 0.0, {"kind": "ica_estimate"})


def pca_mode(ensemble: TraceEnsemble) -> TemporalMode:
    """Functional wrapper: leading-variance temporal mode of a trace ensemble."""
    est = TemporalModePCA(dt=ensemble.dt).fit(ensemble.traces)
    return est.temporal_mode(ensemble.t0_index)


def ica_mode(ensemble: TraceEnsemble, n_whiten: int = 20, seed: int = 0) -> TemporalMode:
    """Functional wrapper: most non-Gaussian temporal mode of a trace ensemble."""
    est = TemporalModeICA(dt=ensemble.dt, n_whiten=n_whiten, seed=seed).fit(ensemble.traces)
    return est.temporal_mode(ensemble.t0_index)
