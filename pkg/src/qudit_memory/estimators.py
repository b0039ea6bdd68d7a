"""scikit-learn style wrappers around the tomography and efficiency models.

The estimators hold hyperparameters in ``__init__`` and learned state in
trailing-underscore attributes, so ``get_params``/``set_params``/``clone``
work as usual.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .beam_optics import BeamSpec
from .eit_storage import EITParams, PulseSpec, optimal_od, overlap_table, storage_efficiency_analytic
from .exceptions import ParameterError
from .tomography import (
    CountRecord,
    linear_inversion,
    mle_reconstruct,
    project_to_physical,
    standard_projector_set,
)
from .validation import check_counts


def _as_record(X) -> CountRecord:
    if isinstance(X, CountRecord):
        return X
    return CountRecord(check_counts(np.ravel(X)), 1)


def _dimension(n_projectors: int) -> int:
    d = int(round(np.sqrt(n_projectors)))
    if d * d != n_projectors:
        raise ParameterError(f"{n_projectors} counts is not d^2 for any d")
    return d


class _TomographyBase(BaseEstimator):
    def _setup(self, X):
        record = _as_record(X)
        self.dimension_ = _dimension(record.counts.size)
        self.projectors_ = standard_projector_set(self.dimension_)
        return record

    def predict(self, X=None):
        """Outcome probabilities of the standard projectors for the fitted state."""
        check_is_fitted(self, "rho_")
        return self.projectors_.probabilities(self.rho_)

    def score(self, X, y=None) -> float:
        """Mean log-probability per count of ``X`` under the fitted state."""
        check_is_fitted(self, "rho_")
        counts = _as_record(X).counts
        p = np.clip(self.predict(), 1e-300, None)
        p = p / p.sum()
        m = counts > 0
        return float(counts[m] @ np.log(p[m]) / counts.sum())


class LinearInversionTomography(_TomographyBase):
    """Linear inversion on the standard projector set.

    ``project=True`` maps the estimate onto the closest density matrix.
    """

    def __init__(self, project: bool = False):
        self.project = project

    def fit(self, X, y=None):
        record = self._setup(X)
        res = linear_inversion(record, self.projectors_)
        self.raw_rho_ = res.matrix
        self.is_psd_ = res.is_psd
        self.normalization_ = res.normalization
        self.rho_ = project_to_physical(res.matrix) if self.project else res.matrix
        return self


class MLETomography(_TomographyBase):
    """Maximum-likelihood tomography on the standard projector set."""

    def __init__(self, max_iters: int = 5000, tol: float = 1e-10, method: str = "hybrid"):
        self.max_iters = max_iters
        self.tol = tol
        self.method = method

    def fit(self, X, y=None):
        record = self._setup(X)
        res = mle_reconstruct(record, self.projectors_, max_iters=self.max_iters, tol=self.tol, method=self.method)
        self.rho_ = res.state.matrix
        self.converged_ = res.converged
        self.n_iter_ = res.iterations
        self.log_likelihood_ = res.log_likelihood
        return self


class ModeEfficiencyModel(RegressorMixin, BaseEstimator):
    """Storage efficiency as a function of OAM charge at fixed ``k_r_index``.

    ``fit(ells, etas)`` calibrates the peak optical depth ``D0`` by least
    squares on the closed-form efficiency; ``predict(ells)`` evaluates it.
    The efficiency rises and then falls with OD, so two ``D0`` can explain
    the same data; by default the search stays on the rising branch, below
    the OD at which the best-coupled mode peaks.
    """

    def __init__(
        self,
        k_r_index: float = 5.0,
        medium: EITParams | None = None,
        pulse: PulseSpec | None = None,
        beam: BeamSpec | None = None,
        od_bounds: tuple[float, float] | None = None,
    ):
        self.k_r_index = k_r_index
        self.medium = medium
        self.pulse = pulse
        self.beam = beam
        self.od_bounds = od_bounds

    def _parts(self):
        return (
            self.medium if self.medium is not None else EITParams(),
            self.pulse if self.pulse is not None else PulseSpec(),
            self.beam if self.beam is not None else BeamSpec(),
        )

    def _overlap(self, ells) -> np.ndarray:
        p, _, beam = self._parts()
        return overlap_table(p, beam, [self.k_r_index], ells)[0]

    @staticmethod
    def _ells(X) -> list[int]:
        X = np.asarray(X)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ParameterError("X must have a single feature (the charge ell)")
            X = X[:, 0]
        if X.ndim != 1 or X.size == 0:
            raise ParameterError("X must be a nonempty sequence of charges")
        return [int(v) for v in X]

    def fit(self, X, y):
        ells = self._ells(X)
        y = np.asarray(y, dtype=float)
        if y.shape != (len(ells),):
            raise ParameterError("y must have one efficiency per charge")
        p, pulse, _ = self._parts()
        overlap = self._overlap(ells)

        def loss(d0):
            return float(np.sum((storage_efficiency_analytic(p, pulse, d0 * overlap) - y) ** 2))

        if self.od_bounds is None:
            lo, hi = 1e-3, optimal_od(p, pulse) / overlap.max()
        else:
            lo, hi = self.od_bounds
        # scan a log grid before refining the best bracket
        grid = np.geomspace(lo, hi, 400)
        k = int(np.argmin([loss(g) for g in grid]))
        res = optimize.minimize_scalar(loss, bounds=(grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]),
                                       method="bounded", options={"xatol": 1e-9})
        self.D0_ = float(res.x)
        self.residual_ = float(res.fun)
        return self

    def predict(self, X):
        check_is_fitted(self, "D0_")
        p, pulse, _ = self._parts()
        return np.atleast_1d(storage_efficiency_analytic(p, pulse, self.D0_ * self._overlap(self._ells(X))))
