"""Weibull proportional-hazards survival quantities for two marker subgroups.

The baseline cell is (control, g-) with survival ``exp(-(t/lam)**k)``.  The
other three arm/marker cells scale the baseline cumulative hazard by

=========  ==================================
cell       hazard multiplier ``theta``
=========  ==================================
C,  g-     1
Rx, g-     exp(beta1)
C,  g+     exp(beta2)
Rx, g+     exp(beta1 + beta2 + beta3)
=========  ==================================

Every function here is pure and accepts scalar or array times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketFailure, DomainError, TailUnderflowError

#: Survival values below this are treated as underflow.
UNDERFLOW = 1e-300


class Arm(str, Enum):
    C = "C"
    RX = "Rx"

    @property
    def trt(self) -> int:
        return 1 if self is Arm.RX else 0


class Group(str, Enum):
    G_MINUS = "g_minus"
    G_PLUS = "g_plus"

    @property
    def marker(self) -> int:
        return 1 if self is Group.G_PLUS else 0


@dataclass(frozen=True)
class ArmGroupLabel:
    arm: Arm
    group: Group

    def __post_init__(self):
        object.__setattr__(self, "arm", Arm(self.arm))
        object.__setattr__(self, "group", Group(self.group))

    @classmethod
    def all(cls) -> list["ArmGroupLabel"]:
        """The four cells, reference cell (C, g-) first."""
        return [cls(a, g) for g in Group for a in Arm]


@dataclass(frozen=True)
class ModelParams:
    """Scale ``lam``, shape ``k`` and the three log-hazard-ratio coefficients."""

    lam: float
    k: float
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0

    def __post_init__(self):
        for name in ("lam", "k", "beta1", "beta2", "beta3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.lam <= 0:
            raise DomainError(f"lam must be positive, got {self.lam}")
        if self.k <= 0:
            raise DomainError(f"k must be positive, got {self.k}")

    @property
    def theta1(self) -> float:
        return math.exp(self.beta1)

    @property
    def theta2(self) -> float:
        return math.exp(self.beta2)

    @property
    def theta3(self) -> float:
        return math.exp(self.beta3)

    @property
    def betas(self) -> np.ndarray:
        return np.array([self.beta1, self.beta2, self.beta3])

    @property
    def eta(self) -> np.ndarray:
        """Unconstrained coordinates ``(log lam, log k, beta1, beta2, beta3)``."""
        return np.array([math.log(self.lam), math.log(self.k),
                         self.beta1, self.beta2, self.beta3])

    @classmethod
    def from_eta(cls, eta: Sequence[float]) -> "ModelParams":
        eta = np.asarray(eta, dtype=float)
        if eta.shape != (5,):
            raise DomainError(f"eta must have 5 entries, got shape {eta.shape}")
        return cls(math.exp(eta[0]), math.exp(eta[1]), *eta[2:])

    def log_theta(self, arm: Arm | str, group: Group | str) -> float:
        x, m = Arm(arm).trt, Group(group).marker
        return self.beta1 * x + self.beta2 * m + self.beta3 * x * m

    def theta(self, arm: Arm | str, group: Group | str) -> float:
        return math.exp(self.log_theta(arm, group))

    def rescaled(self, c: float) -> "ModelParams":
        """Same model with the time axis multiplied by ``c``."""
        return ModelParams(self.lam * c, self.k, self.beta1, self.beta2, self.beta3)

    def to_dict(self) -> dict:
        return {"lam": self.lam, "k": self.k, "beta1": self.beta1,
                "beta2": self.beta2, "beta3": self.beta3}


@dataclass(frozen=True)
class MixtureSpec:
    """Ordered ``(group, weight)`` components with weights summing to one.

    Zero weights are allowed so that a degenerate mixture reproduces a single
    subgroup exactly.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple((Group(g), float(w)) for g, w in self.components)
        if len(comps) < 2:
            raise DomainError("a mixture needs at least two components")
        weights = [w for _, w in comps]
        if any(not (0.0 <= w <= 1.0) for w in weights):
            raise DomainError(f"weights must lie in [0, 1], got {weights}")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {math.fsum(weights)!r}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def two_group(cls, gamma_plus: float) -> "MixtureSpec":
        """Weights ``(1 - gamma_plus, gamma_plus)`` over ``(g-, g+)``."""
        gamma_plus = float(gamma_plus)
        return cls(((Group.G_MINUS, 1.0 - gamma_plus), (Group.G_PLUS, gamma_plus)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.components])

    @property
    def groups(self) -> list[Group]:
        return [g for g, _ in self.components]


def _as_time(t, *, allow_zero: bool = True) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("time is NaN")
    if allow_zero:
        if np.any(arr < 0):
            raise DomainError(f"time must be nonnegative, got {t!r}")
    elif np.any(arr <= 0):
        raise DomainError(f"time must be positive, got {t!r}")
    return arr


def _out(arr: np.ndarray):
    return float(arr) if arr.ndim == 0 else arr


def _cumhaz0(params: ModelParams, t: np.ndarray) -> np.ndarray:
    return (t / params.lam) ** params.k


def _baseline_hazard(params: ModelParams, t: np.ndarray) -> np.ndarray:
    k, lam = params.k, params.lam
    with np.errstate(divide="ignore"):
        return (k / lam) * (t / lam) ** (k - 1.0)


def subgroup_survival(params: ModelParams, label: ArmGroupLabel, t):
    t = _as_time(t)
    return _out(np.exp(-params.theta(label.arm, label.group) * _cumhaz0(params, t)))


def subgroup_hazard(params: ModelParams, label: ArmGroupLabel, t):
    """Hazard ``theta * (k/lam) * (t/lam)**(k-1)``; ``+inf`` at ``t=0`` when ``k<1``."""
    t = _as_time(t)
    return _out(params.theta(label.arm, label.group) * _baseline_hazard(params, t))


def subgroup_density(params: ModelParams, label: ArmGroupLabel, t):
    t = _as_time(t)
    theta = params.theta(label.arm, label.group)
    surv = np.exp(-theta * _cumhaz0(params, t))
    return _out(theta * _baseline_hazard(params, t) * surv)


def _component_survivals(params, mix, arm, t):
    arm = Arm(arm)
    h0 = _cumhaz0(params, t)
    thetas = np.array([params.theta(arm, g) for g in mix.groups])
    surv = np.exp(-np.multiply.outer(thetas, h0))
    return thetas, surv


def mixture_survival(params: ModelParams, mix: MixtureSpec, arm: Arm | str, t):
    t = _as_time(t)
    _, surv = _component_survivals(params, mix, arm, t)
    return _out(np.tensordot(mix.weights, surv, axes=1))


def mixture_density(params: ModelParams, mix: MixtureSpec, arm: Arm | str, t):
    t = _as_time(t)
    thetas, surv = _component_survivals(params, mix, arm, t)
    per = thetas.reshape((-1,) + (1,) * t.ndim) * surv
    return _out(_baseline_hazard(params, t) * np.tensordot(mix.weights, per, axes=1))


def mixture_hazard_ratio(params: ModelParams, mix: MixtureSpec, t):
    """Hazard ratio Rx vs C of the two mixture populations at time ``t``.

    Written as a ratio of survival-weighted average multipliers so the
    baseline hazard cancels; the value at ``t=0`` is the small-time limit.

    Raises
    ------
    TailUnderflowError
        If either arm's mixture survival is below ``UNDERFLOW`` at ``t``.
    """
    t = _as_time(t)
    ratios = []
    for arm in (Arm.RX, Arm.C):
        thetas, surv = _component_survivals(params, mix, arm, t)
        surv = surv.reshape(len(thetas), -1)
        s_mix = mix.weights @ surv
        if np.any(s_mix < UNDERFLOW):
            raise TailUnderflowError(
                f"{arm.value} mixture survival underflows at t={t!r}; "
                "hazard ratio is undefined in the far tail"
            )
        ratios.append((mix.weights * thetas) @ surv / s_mix)
    hr = (ratios[0] / ratios[1]).reshape(t.shape)
    return _out(hr)


def component_quantile_time(params: ModelParams, arm: Arm | str, group: Group | str,
                            s: float) -> float:
    """Closed-form time at which one cell's survival equals ``s``."""
    return params.lam * (-math.log(s) / params.theta(arm, group)) ** (1.0 / params.k)


def mixture_quantile_time(params: ModelParams, mix: MixtureSpec, arm: Arm | str,
                          s: float, tol: float = 1e-10) -> float:
    """Time at which the arm's mixture survival equals ``s``.

    The root is bracketed by the component quantile times (mixture survival
    is at least ``s`` at the smallest and at most ``s`` at the largest) and
    refined by Brent's method to relative tolerance ``tol``.
    """
    if not (0.0 < s < 1.0):
        raise DomainError(f"survival level must lie in (0, 1), got {s}")
    arm = Arm(arm)
    active = [g for g, w in mix.components if w > 0]
    times = [component_quantile_time(params, arm, g, s) for g in active]
    lo, hi = min(times), max(times)
    if lo == hi:
        return lo

    def f(t):
        return mixture_survival(params, mix, arm, t) - s

    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo < 0 or f_hi > 0:
        raise BracketFailure(
            f"mixture survival does not bracket {s} on [{lo}, {hi}]: {f_lo}, {f_hi}"
        )
    rtol = max(tol, 4 * np.finfo(float).eps)
    return brentq(f, lo, hi, xtol=lo * rtol * 1e-3, rtol=rtol, maxiter=500)


def naive_hr_event_weighted(hr_gplus: float, hr_gminus: float,
                            d_plus: float, d_total: float) -> float:
    """Event-fraction weighted geometric mean of subgroup hazard ratios.

    A common approximation to the combined-group hazard ratio.  It yields a
    constant and is **not** a valid efficacy measure for a mixture; it is
    provided only as a labeled baseline.
    """
    if hr_gplus <= 0 or hr_gminus <= 0:
        raise DomainError("hazard ratios must be positive")
    if d_total <= 0 or not (0 <= d_plus <= d_total):
        raise DomainError(f"need 0 <= d_plus <= d_total and d_total > 0, got {d_plus}, {d_total}")
    f = d_plus / d_total
    if f == 1:
        return float(hr_gplus)
    if f == 0:
        return float(hr_gminus)
    return math.exp(f * math.log(hr_gplus) + (1.0 - f) * math.log(hr_gminus))


def naive_hr_lsmeans(params: ModelParams) -> float:
    """Equal-weight LSmeans hazard ratio ``exp(beta1 + beta3/2)``.

    Averages the log-hazard cell means over the two marker levels within each
    arm.  Constant in time and **not** a valid mixture efficacy measure;
    provided only as a labeled baseline.
    """
    return math.exp(params.beta1 + params.beta3 / 2.0)


#: Names of the baseline estimators that must carry an "incorrect" flag.
INCORRECT_ESTIMATORS = ("naive_hr_event_weighted", "naive_hr_lsmeans")


def subgroup_hazard_ratios(params: ModelParams) -> dict[Group, float]:
    """Constant within-subgroup hazard ratios Rx vs C."""
    return {Group.G_MINUS: params.theta1,
            Group.G_PLUS: params.theta1 * params.theta3}
