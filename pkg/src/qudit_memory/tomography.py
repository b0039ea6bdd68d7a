"""Quantum state tomography for qudits.

Generalized Gell-Mann bases, an informationally complete projector set of
``d^2`` kets, Poisson count simulation, linear inversion, maximum-likelihood
reconstruction and Monte Carlo error bars.

Expansion convention: ``rho = sum_j r_j lambda_j / Tr(lambda_j^2)`` with
``r_j = Tr(rho lambda_j)``, i.e. ``rho = I/d + (1/2) sum_{j>=1} r_j lambda_j``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize

from .exceptions import CompletenessError, DegenerateInputError, ParameterError, ValidationError
from .qudit_channel import fidelity_general
from .validation import (
    PSD_TOL,
    check_counts,
    check_density_matrix,
    check_integer,
    check_nonnegative,
)

MIN_DIM, MAX_DIM = 2, 64
MLE_METHODS = ("hybrid", "rrr")


# ---------------------------------------------------------------- containers


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    labels: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = check_density_matrix(self.matrix)
        if len(self.labels) != m.shape[0]:
            raise ParameterError("labels must match the matrix dimension")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "labels", tuple(int(l) for l in self.labels))
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "re": self.matrix.real.tolist(),
            "im": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DensityMatrix":
        m = np.asarray(data["re"], float) + 1j * np.asarray(data["im"], float)
        return cls(tuple(data["labels"]), m)


@dataclass(frozen=True, eq=False)
class GeneratorBasis:
    """Identity followed by the ``d^2 - 1`` generalized Gell-Mann matrices.

    Order: identity, symmetric ``E_jk + E_kj`` (``j < k``), antisymmetric
    ``-i E_jk + i E_kj``, then the diagonal ones.
    """

    dim: int
    operators: np.ndarray

    @property
    def norms(self) -> np.ndarray:
        """``Tr(lambda_j^2)``: ``d`` for the identity and 2 otherwise."""
        out = np.full(self.dim**2, 2.0)
        out[0] = self.dim
        return out

    def coefficients(self, h) -> np.ndarray:
        """``r_j = Tr(H lambda_j)`` for Hermitian ``H``."""
        h = np.asarray(h, dtype=complex)
        return np.real(np.einsum("ab,jba->j", h, self.operators))

    def expand(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.einsum("j,jab->ab", r / self.norms, self.operators)


@lru_cache(maxsize=8)
def _gell_mann(d: int) -> np.ndarray:
    ops = np.zeros((d * d, d, d), dtype=complex)
    ops[0] = np.eye(d)
    k = 1
    pairs = [(m, n) for m in range(d) for n in range(m + 1, d)]
    for m, n in pairs:
        ops[k, m, n] = ops[k, n, m] = 1
        k += 1
    for m, n in pairs:
        ops[k, m, n], ops[k, n, m] = -1j, 1j
        k += 1
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        ops[k] = np.diag(diag * math.sqrt(2 / (l * (l + 1))))
        k += 1
    ops.setflags(write=False)
    return ops


def su_d_generators(d: int) -> GeneratorBasis:
    d = check_integer(d, "d", MIN_DIM, MAX_DIM)
    return GeneratorBasis(d, _gell_mann(d))


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """``d^2`` unit kets; projector ``i`` is ``kets[i] kets[i]^dagger``."""

    dim: int
    kets: np.ndarray
    labels: tuple[str, ...]
    condition_number: float

    @property
    def size(self) -> int:
        return self.kets.shape[0]

    def projectors(self) -> np.ndarray:
        return np.einsum("ia,ib->iab", self.kets, self.kets.conj())

    def probabilities(self, rho) -> np.ndarray:
        """``<psi_i|rho|psi_i>`` for every projector."""
        rho = np.asarray(rho, dtype=complex)
        return np.real(np.einsum("ia,ab,ib->i", self.kets.conj(), rho, self.kets))

    def gram(self) -> np.ndarray:
        """``G = sum_i mu_i``."""
        return self.kets.T @ self.kets.conj()


def overlap_map(kets: np.ndarray, basis: GeneratorBasis) -> np.ndarray:
    """``A_ij = Tr(mu_i lambda_j) / Tr(lambda_j^2)``."""
    d = basis.dim
    outer = np.einsum("ia,ib->iab", kets.conj(), kets).reshape(len(kets), d * d)
    lam = basis.operators.reshape(d * d, d * d)
    return np.real(outer @ lam.T) / basis.norms


@lru_cache(maxsize=8)
def _standard_set(d: int) -> ProjectorSet:
    kets, labels = [], []
    for m in range(d):
        v = np.zeros(d, complex)
        v[m] = 1
        kets.append(v)
        labels.append(f"|{m}>")
    s = 1 / math.sqrt(2)
    for m in range(d):
        for n in range(m + 1, d):
            for phase, tag in ((1, "+"), (1j, "+i")):
                v = np.zeros(d, complex)
                v[m], v[n] = s, s * phase
                kets.append(v)
                labels.append(f"(|{m}>{tag}|{n}>)/sqrt2")
    kets = np.array(kets)
    sv = np.linalg.svd(overlap_map(kets, su_d_generators(d)), compute_uv=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise CompletenessError(f"projector set for d={d} is not informationally complete")
    kets.setflags(write=False)
    return ProjectorSet(d, kets, tuple(labels), float(sv[0] / sv[-1]))


def standard_projector_set(d: int) -> ProjectorSet:
    """Computational kets, then ``(|m>+|n>)/sqrt2`` and ``(|m>+i|n>)/sqrt2``
    for every pair ``m < n`` in lexicographic order: exactly ``d^2`` kets."""
    d = check_integer(d, "d", MIN_DIM, MAX_DIM)
    return _standard_set(d)


@dataclass(frozen=True, eq=False)
class CountRecord:
    """Counts per projector. ``exposure`` is the number of trials per projector."""

    counts: np.ndarray
    exposure: int
    seed: int | None = None
    noise_floor: float = 0.0
    corrections: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.array(self.counts, dtype=float)
        if c.ndim != 1 or c.size == 0 or np.any(~np.isfinite(c)) or np.any(c < 0):
            raise ParameterError("counts must be a nonempty 1-D array of nonnegative numbers")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "exposure", check_integer(self.exposure, "exposure", 1))
        object.__setattr__(self, "corrections", tuple(self.corrections))

    def to_dict(self) -> dict:
        c = self.counts
        as_int = np.all(c == np.round(c))
        return {
            "counts": [int(v) for v in c] if as_int else c.tolist(),
            "exposure": self.exposure,
            "seed": self.seed,
            "noise_floor": self.noise_floor,
            "corrections": list(self.corrections),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CountRecord":
        try:
            return cls(
                np.asarray(data["counts"], float),
                data["exposure"],
                data.get("seed"),
                float(data.get("noise_floor", 0.0)),
                tuple(data.get("corrections", ())),
            )
        except KeyError as exc:
            raise ParameterError(f"count record is missing {exc}") from None


# ---------------------------------------------------------------- simulation


def simulate_counts(
    rho,
    pset: ProjectorSet,
    total_per_projector: int,
    noise_floor: float = 0.0,
    seed: int | None = None,
    noiseless: bool = False,
) -> CountRecord:
    """Poisson counts with mean ``total * (Tr(rho mu_i) + noise_floor)``.

    ``noiseless=True`` returns the expected counts themselves.
    """
    rho = check_density_matrix(rho)
    if rho.shape[0] != pset.dim:
        raise ParameterError(f"rho has dimension {rho.shape[0]}, projector set {pset.dim}")
    total = check_integer(total_per_projector, "total_per_projector", 1)
    floor = check_nonnegative(noise_floor, "noise_floor")
    probs = pset.probabilities(rho)
    if probs.min() < PSD_TOL:
        raise ValidationError("negative projection probability")
    mean = total * (np.clip(probs, 0, None) + floor)
    counts = mean if noiseless else np.random.default_rng(seed).poisson(mean).astype(float)
    return CountRecord(counts, total, seed, floor)


def background_subtract(record: CountRecord, floor: float) -> CountRecord:
    """Remove a uniform background ``floor`` (rate per trial) from every count."""
    floor = check_nonnegative(floor, "floor")
    if floor == 0:
        return record
    counts = np.maximum(0.0, record.counts - record.exposure * floor)
    note = f"background_subtract floor={floor!r}"
    return CountRecord(counts, record.exposure, record.seed, record.noise_floor, record.corrections + (note,))


# ---------------------------------------------------------------- linear inversion


@dataclass(frozen=True, eq=False)
class LinearInversionResult:
    matrix: np.ndarray
    coefficients: np.ndarray
    normalization: float
    min_eigenvalue: float

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= PSD_TOL


def _check_record(record: CountRecord, pset: ProjectorSet) -> np.ndarray:
    counts = check_counts(record.counts)
    if counts.size != pset.size:
        raise ParameterError(f"{counts.size} counts for {pset.size} projectors")
    return counts


def linear_inversion(
    record: CountRecord, pset: ProjectorSet, basis: GeneratorBasis | None = None
) -> LinearInversionResult:
    """Solve ``n = N A r`` for the expansion coefficients ``r`` (``r_0 = 1``).

    The result is Hermitian with unit trace but not necessarily PSD.
    """
    basis = su_d_generators(pset.dim) if basis is None else basis
    if basis.dim != pset.dim:
        raise ParameterError("basis and projector set dimensions differ")
    counts = _check_record(record, pset)
    a = overlap_map(pset.kets, basis)
    try:
        x = np.linalg.solve(a, counts)
    except np.linalg.LinAlgError:
        raise CompletenessError("overlap map is singular") from None
    norm = x[0]
    if not norm > 0:
        raise DegenerateInputError("fitted normalization is not positive")
    r = x / norm
    rho = basis.expand(r)
    rho = 0.5 * (rho + rho.conj().T)
    return LinearInversionResult(rho, r, float(norm), float(np.linalg.eigvalsh(rho)[0]))


def project_to_physical(h) -> np.ndarray:
    """Closest density matrix in Frobenius norm (eigenvalues projected onto the simplex)."""
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1
    k = np.nonzero(u - css / np.arange(1, len(u) + 1) > 0)[0][-1]
    lam = np.clip(w - css[k] / (k + 1), 0, None)
    return (v * lam) @ v.conj().T


# ---------------------------------------------------------------- MLE


@dataclass(frozen=True, eq=False)
class MLEResult:
    state: DensityMatrix
    converged: bool
    iterations: int
    log_likelihood: float
    gap: float
    history: np.ndarray
    method: str

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "log_likelihood": self.log_likelihood,
            "likelihood_gap_bound": self.gap,
            "method": self.method,
        }


class _Problem:
    """Likelihood in the frame ``rho~ = G^{1/2} rho G^{1/2}`` where the
    projectors resolve the identity; there ``sum_i p~_i = 1`` for every state.

    ``L(rho) = sum_i f_i log p~_i`` with ``f`` the count frequencies is the
    Poisson likelihood with the flux profiled out.
    """

    def __init__(self, counts: np.ndarray, pset: ProjectorSet):
        w, v = np.linalg.eigh(pset.gram())
        self.g_half = (v * np.sqrt(w)) @ v.conj().T
        self.g_inv_half = (v / np.sqrt(w)) @ v.conj().T
        self.kets = pset.kets @ self.g_inv_half.T
        self.kets_c = self.kets.conj()
        self.freq = counts / counts.sum()
        self.mask = self.freq > 0
        self.total = float(counts.sum())
        self.d = pset.dim

    def probs(self, rho_t):
        return np.real(np.einsum("ij,ij->i", self.kets_c @ rho_t, self.kets))

    def loglik(self, p) -> float:
        pm = p[self.mask]
        if np.any(pm <= 0):
            return -math.inf
        return float(self.freq[self.mask] @ np.log(pm))

    def r_operator(self, p):
        ratio = np.zeros_like(p)
        ratio[self.mask] = self.freq[self.mask] / p[self.mask]
        return (self.kets.T * ratio) @ self.kets_c

    def to_frame(self, rho):
        r = self.g_half @ rho @ self.g_half
        return r / np.trace(r).real

    def from_frame(self, rho_t):
        r = self.g_inv_half @ rho_t @ self.g_inv_half
        r = 0.5 * (r + r.conj().T)
        return r / np.trace(r).real


def _rrr_steps(prob: _Problem, rho_t, loglik, n_steps, tol, history, step=1.0, gap_tol=0.0):
    """Diluted R rho R iterations; the step halves until the likelihood does not drop.

    Stops after ``n_steps``, when the relative gain of an accepted step falls
    below ``tol``, or when the gap bound drops to ``gap_tol``. Returns
    ``(rho~, loglik, gap, steps, step, stalled)``.
    """
    eye = np.eye(prob.d)
    p = prob.probs(rho_t)
    for it in range(1, n_steps + 1):
        r = prob.r_operator(p)
        gap = float(np.linalg.eigvalsh(r)[-1] - 1)
        if gap <= gap_tol:
            return rho_t, loglik, gap, it - 1, step, True
        k = r - eye
        eps = step
        while True:
            m = eye + eps * k
            cand = m @ rho_t @ m.conj().T
            cand = 0.5 * (cand + cand.conj().T) / np.trace(cand).real
            p_new = prob.probs(cand)
            l_new = prob.loglik(p_new)
            if l_new >= loglik:
                break
            eps *= 0.5
            if eps < 1e-12:
                return rho_t, loglik, gap, it - 1, step, True
        gain = (l_new - loglik) / max(abs(loglik), 1e-300)
        rho_t, p, loglik = cand, p_new, l_new
        history.append(loglik)
        if gain < tol:
            return rho_t, loglik, _gap(prob, p), it, eps, True
        # grow the step after a full-length success, keep the reduced one otherwise
        step = min(eps * 1.5, 1e4) if eps == step else eps
    return rho_t, loglik, _gap(prob, p), n_steps, step, False


def _gap(prob: _Problem, p) -> float:
    return float(np.linalg.eigvalsh(prob.r_operator(p))[-1] - 1)


def _lbfgs_polish(prob: _Problem, rho_t):
    """Maximize the likelihood over ``rho~ = T T^dagger / Tr(T T^dagger)``."""
    d = prob.d
    f = prob.freq
    m = prob.mask
    kets, kets_c = prob.kets, prob.kets_c

    def fun(x):
        t = (x[: d * d] + 1j * x[d * d :]).reshape(d, d)
        a = kets_c @ t
        q = np.sum(np.abs(a) ** 2, axis=1)
        tr = float(np.sum(np.abs(t) ** 2))
        if np.any(q[m] <= 0):
            return math.inf, np.zeros_like(x)
        val = -float(f[m] @ np.log(q[m])) + math.log(tr)
        wgt = np.zeros_like(q)
        wgt[m] = f[m] / q[m]
        grad = 2 * (-(kets.T * wgt) @ a + t / tr)
        return val, np.concatenate([grad.real.ravel(), grad.imag.ravel()])

    w, v = np.linalg.eigh(rho_t)
    t0 = v * np.sqrt(np.clip(w, 0, None))
    x0 = np.concatenate([t0.real.ravel(), t0.imag.ravel()])
    res = optimize.minimize(
        fun, x0, jac=True, method="L-BFGS-B",
        options={"maxiter": 20000, "maxfun": 40000, "ftol": 1e-15, "gtol": 1e-12},
    )
    t = (res.x[: d * d] + 1j * res.x[d * d :]).reshape(d, d)
    out = t @ t.conj().T
    return 0.5 * (out + out.conj().T) / np.trace(out).real, res.nit


def _initial_state(prob: _Problem, counts, pset) -> np.ndarray:
    try:
        li = linear_inversion(CountRecord(counts, 1), pset).matrix
        rho = 0.99 * project_to_physical(li) + 0.01 * np.eye(pset.dim) / pset.dim
    except (CompletenessError, DegenerateInputError):
        rho = np.eye(pset.dim) / pset.dim
    return prob.to_frame(rho)


def mle_reconstruct(
    record: CountRecord,
    pset: ProjectorSet,
    max_iters: int = 5000,
    tol: float = 1e-10,
    method: str = "hybrid",
    init=None,
    labels: Sequence[int] | None = None,
    gap_tol: float = 1e-12,
) -> MLEResult:
    """Maximum-likelihood density matrix from projector counts.

    Iterates diluted ``R rho R`` steps from a linear-inversion start. With
    ``method="hybrid"`` the iterate is polished by L-BFGS on a Cholesky-type
    factor and handed back to ``R rho R``; polishes are kept only when they
    raise the likelihood.

    Convergence: the relative likelihood gain of an accepted step drops
    below ``tol``, or the gap bound ``lambda_max(R) - 1`` (an upper bound on
    the distance to the optimum of the frequency-normalized log-likelihood)
    drops below ``gap_tol``. The final gap bound is always reported.
    """
    if method not in MLE_METHODS:
        raise ParameterError(f"method must be one of {MLE_METHODS}, got {method!r}")
    max_iters = check_integer(max_iters, "max_iters", 1)
    tol = check_nonnegative(tol, "tol")
    counts = _check_record(record, pset)
    prob = _Problem(counts, pset)
    if init is None:
        rho_t = _initial_state(prob, counts, pset)
    else:
        rho0 = check_density_matrix(init, "init")
        rho_t = prob.to_frame(0.99 * rho0 + 0.01 * np.eye(pset.dim) / pset.dim)
    loglik = prob.loglik(prob.probs(rho_t))
    history = [loglik]
    used = 0
    step = 1.0
    if method == "hybrid":
        # a short R rho R run, then a quasi-Newton polish kept only if it helps
        rho_t, loglik, gap, used, step, _ = _rrr_steps(
            prob, rho_t, loglik, min(50, max_iters), 0.0, history, step, gap_tol
        )
        if used < max_iters and gap > gap_tol:
            cand, _ = _lbfgs_polish(prob, rho_t)
            l_new = prob.loglik(prob.probs(cand))
            if l_new >= loglik:
                rho_t, loglik = cand, l_new
                history.append(loglik)
            used += 1
    rho_t, loglik, gap, n, step, converged = _rrr_steps(
        prob, rho_t, loglik, max(max_iters - used, 0), tol, history, step, gap_tol
    )
    used += n
    rho = prob.from_frame(rho_t)
    w, v = np.linalg.eigh(rho)
    if w[0] < 0:
        rho = (v * np.clip(w, 0, None)) @ v.conj().T
        rho /= np.trace(rho).real
    labels = tuple(range(pset.dim)) if labels is None else tuple(labels)
    state = DensityMatrix(labels, rho)
    return MLEResult(
        state=state,
        converged=bool(converged),
        iterations=used,
        log_likelihood=loglik * prob.total,
        gap=gap,
        history=np.array(history),
        method=method,
    )


# ---------------------------------------------------------------- error bars


@dataclass(frozen=True, eq=False)
class ErrorBars:
    fidelity_mean: float
    fidelity_std: float
    purity_mean: float
    purity_std: float
    element_std: np.ndarray
    n_resamples: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "fidelity_mean": self.fidelity_mean,
            "fidelity_std": self.fidelity_std,
            "purity_mean": self.purity_mean,
            "purity_std": self.purity_std,
            "element_std": self.element_std.tolist(),
            "n_resamples": self.n_resamples,
            "seed": self.seed,
        }


def monte_carlo_errorbars(
    record: CountRecord,
    pset: ProjectorSet,
    basis: GeneratorBasis | None = None,
    n_resamples: int = 100,
    seed: int = 0,
    target=None,
    max_iters: int = 5000,
    tol: float = 1e-10,
) -> ErrorBars:
    """Spread of MLE reconstructions over Poisson resamples of the counts.

    Resample ``i`` draws from ``default_rng([seed, i])`` so results do not
    depend on evaluation order. Fidelities are taken to ``target`` (default:
    the MLE of the observed counts).
    """
    n_resamples = check_integer(n_resamples, "n_resamples", 10)
    seed = check_integer(seed, "seed", 0)
    counts = _check_record(record, pset)
    base = mle_reconstruct(record, pset, max_iters=max_iters, tol=tol).state.matrix
    target = base if target is None else check_density_matrix(target, "target")
    fids, purities, mats = [], [], []
    for i in range(n_resamples):
        rng = np.random.default_rng([seed, i])
        resampled = CountRecord(rng.poisson(counts).astype(float), record.exposure, seed)
        rho = mle_reconstruct(resampled, pset, max_iters=max_iters, tol=tol, init=base).state.matrix
        fids.append(fidelity_general(target, rho))
        purities.append(float(np.real(np.trace(rho @ rho))))
        mats.append(rho)
    mats = np.array(mats)
    elem = np.sqrt(np.var(mats.real, axis=0, ddof=1) + np.var(mats.imag, axis=0, ddof=1))
    return ErrorBars(
        float(np.mean(fids)),
        float(np.std(fids, ddof=1)),
        float(np.mean(purities)),
        float(np.std(purities, ddof=1)),
        elem,
        n_resamples,
        seed,
    )


# ---------------------------------------------------------------- text formats


def density_matrix_csv(rho) -> str:
    """CSV with columns ``row,col,re,im``; floats written with ``repr``."""
    m = np.asarray(rho, dtype=complex)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "re", "im"])
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            w.writerow([i, j, repr(float(m[i, j].real)), repr(float(m[i, j].imag))])
    return buf.getvalue()


def read_density_matrix_csv(text: str) -> np.ndarray:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["row", "col", "re", "im"]:
        raise ParameterError("expected header row,col,re,im")
    body = rows[1:]
    d = math.isqrt(len(body))
    if d * d != len(body) or d == 0:
        raise ParameterError(f"{len(body)} entries do not form a square matrix")
    m = np.zeros((d, d), complex)
    for r, c, re, im in body:
        m[int(r), int(c)] = float(re) + 1j * float(im)
    return m
