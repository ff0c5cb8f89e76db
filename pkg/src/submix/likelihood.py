"""Censored maximum likelihood for the Weibull proportional-hazards model.

Parameters are optimized in the unconstrained coordinates
``eta = (log lam, log k, beta1, beta2, beta3)``.  For a record with follow-up
time ``t``, event flag ``d`` and design row ``x = (trt, marker, trt*marker)``
the log-likelihood contribution is::

    d * (x @ beta + log k - k log lam + (k - 1) log t) - exp(x @ beta) (t/lam)**k
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (DomainError, NonIdentifiableError, NotConvergedError,
                     SingularInformationError)
from .survival import ModelParams

PARAM_NAMES = ("log_lam", "log_k", "beta1", "beta2", "beta3")


@dataclass(frozen=True)
class SubjectRecord:
    time: float
    event: int
    trt: int
    marker: int

    def __post_init__(self):
        if not (self.time > 0 and math.isfinite(self.time)):
            raise DomainError(f"time must be positive and finite, got {self.time!r}")
        for name in ("event", "trt", "marker"):
            if getattr(self, name) not in (0, 1):
                raise DomainError(f"{name} must be 0 or 1, got {getattr(self, name)!r}")


@dataclass(frozen=True)
class SurvivalData:
    """Column-oriented view of a sequence of :class:`SubjectRecord`."""

    time: np.ndarray
    event: np.ndarray
    trt: np.ndarray
    marker: np.ndarray

    def __post_init__(self):
        cols = [np.asarray(getattr(self, n), dtype=float)
                for n in ("time", "event", "trt", "marker")]
        n = cols[0].shape
        if any(c.shape != n or c.ndim != 1 for c in cols):
            raise DomainError("columns must be 1-d arrays of equal length")
        if np.any(~np.isfinite(cols[0])) or np.any(cols[0] <= 0):
            raise DomainError("all times must be positive and finite")
        for name, c in zip(("event", "trt", "marker"), cols[1:]):
            if np.any((c != 0) & (c != 1)):
                raise DomainError(f"{name} must be binary")
        for name, c in zip(("time", "event", "trt", "marker"), cols):
            c.setflags(write=False)
            object.__setattr__(self, name, c)

    @classmethod
    def from_records(cls, records: Iterable[SubjectRecord]) -> "SurvivalData":
        records = list(records)
        arr = np.array([(r.time, r.event, r.trt, r.marker) for r in records],
                       dtype=float).reshape(-1, 4)
        return cls(*arr.T)

    def records(self) -> list[SubjectRecord]:
        return [SubjectRecord(float(t), int(d), int(x), int(m))
                for t, d, x, m in zip(self.time, self.event, self.trt, self.marker)]

    def __len__(self):
        return len(self.time)

    @property
    def design(self) -> np.ndarray:
        return np.column_stack([self.trt, self.marker, self.trt * self.marker])

    def cell_events(self) -> dict[tuple[int, int], int]:
        out = {}
        for x in (0, 1):
            for m in (0, 1):
                mask = (self.trt == x) & (self.marker == m)
                out[(x, m)] = int(self.event[mask].sum())
        return out

    def replicate(self, times: int) -> "SurvivalData":
        return SurvivalData(*(np.tile(getattr(self, n), times)
                              for n in ("time", "event", "trt", "marker")))


def _as_data(data) -> SurvivalData:
    if isinstance(data, SurvivalData):
        return data
    return SurvivalData.from_records(data)


@dataclass(frozen=True)
class FitResult:
    params: ModelParams
    cov: np.ndarray
    loglik: float
    converged: bool
    iterations: int
    gradient_norm: float
    n: int = 0
    n_events: int = 0

    @classmethod
    def exact(cls, params: ModelParams) -> "FitResult":
        """A degenerate fit at known parameters with zero covariance."""
        return cls(params, np.zeros((5, 5)), float("nan"), True, 0, 0.0)

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def natural_cov(self) -> np.ndarray:
        """Covariance of ``(lam, k, beta1, beta2, beta3)`` via the log-scale Jacobian."""
        jac = np.diag([self.params.lam, self.params.k, 1.0, 1.0, 1.0])
        return jac @ self.cov @ jac.T

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "coordinates": list(PARAM_NAMES),
            "cov": self.cov.tolist(),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_norm": self.gradient_norm,
            "n": self.n,
            "n_events": self.n_events,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FitResult":
        return cls(ModelParams(**doc["params"]), np.array(doc["cov"], dtype=float),
                   float(doc["loglik"]), bool(doc["converged"]), int(doc["iterations"]),
                   float(doc["gradient_norm"]), int(doc.get("n", 0)),
                   int(doc.get("n_events", 0)))


def _terms(data: SurvivalData, eta: np.ndarray):
    log_lam, log_k = eta[0], eta[1]
    k = math.exp(log_k)
    lp = data.design @ eta[2:]
    z = k * (np.log(data.time) - log_lam)
    cumhaz = np.exp(lp + z)
    return k, lp, z, cumhaz


def _loglik_eta(data: SurvivalData, eta: np.ndarray) -> float:
    if len(data) == 0:
        return 0.0
    k, lp, z, cumhaz = _terms(data, eta)
    log_h = lp + eta[1] - eta[0] + (k - 1.0) / k * z
    return float(math.fsum(data.event * log_h - cumhaz))


def _score_eta(data: SurvivalData, eta: np.ndarray) -> np.ndarray:
    if len(data) == 0:
        return np.zeros(5)
    k, lp, z, cumhaz = _terms(data, eta)
    resid = data.event - cumhaz
    return np.array([
        -k * resid.sum(),
        (data.event * (1.0 + z) - cumhaz * z).sum(),
        *(data.design.T @ resid),
    ])


def log_likelihood(data, params: ModelParams) -> float:
    return _loglik_eta(_as_data(data), params.eta)


def score(data, params: ModelParams) -> np.ndarray:
    """Analytic gradient of the log-likelihood in ``eta`` coordinates."""
    return _score_eta(_as_data(data), params.eta)


def _hessian_eta(data: SurvivalData, eta: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
    hess = np.empty((5, 5))
    for j in range(5):
        h = rel_step * max(1.0, abs(eta[j]))
        up, dn = eta.copy(), eta.copy()
        up[j] += h
        dn[j] -= h
        hess[:, j] = (_score_eta(data, up) - _score_eta(data, dn)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def observed_information(data, params: ModelParams) -> np.ndarray:
    """Negative Hessian of the log-likelihood in ``eta`` coordinates.

    Built from central differences of the analytic score and symmetrized.
    """
    return -_hessian_eta(_as_data(data), params.eta)


def check_identifiable(data) -> None:
    data = _as_data(data)
    if len(data) == 0:
        raise NonIdentifiableError("no records")
    names = {0: "C", 1: "Rx"}, {0: "g_minus", 1: "g_plus"}
    for (x, m), count in data.cell_events().items():
        if count == 0:
            raise NonIdentifiableError(
                f"no events in cell (arm={names[0][x]}, group={names[1][m]})"
            )


def default_init(data) -> ModelParams:
    data = _as_data(data)
    return ModelParams(float(np.median(data.time)) / math.log(2.0), 1.0)


def fit_mle(data, init: ModelParams | None = None, tol: float = 1e-8,
            max_iter: int = 200, raise_on_failure: bool = True) -> FitResult:
    """Maximize the censored log-likelihood.

    Newton ascent on the finite-difference Hessian of the analytic score,
    with a Levenberg shift when the Hessian is not negative definite and a
    backtracking line search on the log-likelihood.

    Parameters
    ----------
    data : sequence of SubjectRecord or SurvivalData
    init : ModelParams, optional
        Starting point; defaults to an exponential model with the median
        observed time mapped to the scale and all coefficients zero.
    tol : float
        Convergence threshold on the sup-norm of the score.
    max_iter : int
        Maximum number of Newton iterations.
    raise_on_failure : bool
        If false, a non-converged fit is returned with ``converged=False``
        instead of raising.

    Raises
    ------
    NonIdentifiableError
        Some (arm, marker) cell has no events.
    NotConvergedError
        The score tolerance was not met within ``max_iter`` iterations.
    SingularInformationError
        The observed information at the optimum is not invertible.
    """
    data = _as_data(data)
    check_identifiable(data)
    eta = (init or default_init(data)).eta
    ll = _loglik_eta(data, eta)
    grad = _score_eta(data, eta)
    gnorm = float(np.max(np.abs(grad)))
    it = 0
    while gnorm >= tol and it < max_iter:
        it += 1
        hess = _hessian_eta(data, eta)
        info = -hess
        shift = 0.0
        while True:
            try:
                chol = np.linalg.cholesky(info + shift * np.eye(5))
                break
            except np.linalg.LinAlgError:
                shift = max(2.0 * shift, 1e-6 * max(1.0, np.abs(np.diag(info)).max()))
        step = np.linalg.solve(chol.T, np.linalg.solve(chol, grad))
        scale = 1.0
        while True:
            cand = eta + scale * step
            cand_ll = _loglik_eta(data, cand) if np.all(np.abs(cand[:2]) < 700) else -np.inf
            if np.isfinite(cand_ll) and cand_ll >= ll - 1e-12 * abs(ll):
                break
            scale *= 0.5
            if scale < 1e-12:
                break
        if scale < 1e-12:
            break
        eta, ll = cand, cand_ll
        grad = _score_eta(data, eta)
        gnorm = float(np.max(np.abs(grad)))

    converged = gnorm < tol
    if not converged and raise_on_failure:
        raise NotConvergedError(
            f"score sup-norm {gnorm:.3e} >= {tol:.1e} after {it} iterations"
        )
    info = -_hessian_eta(data, eta)
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SingularInformationError(str(exc)) from exc
    cov = 0.5 * (cov + cov.T)
    if converged and np.any(np.diag(cov) <= 0):
        raise SingularInformationError("observed information is not positive definite")
    return FitResult(ModelParams.from_eta(eta), cov, ll, converged, it, gnorm,
                     n=len(data), n_events=int(data.event.sum()))

