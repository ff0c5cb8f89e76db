"""Subgroup mixable estimation of treatment efficacy.

The pipeline has three steps:

1. take the fitted Weibull-PH parameters and their covariance;
2. within each arm, compute the per-subgroup and mixture summary (median or
   mean survival) and propagate the covariance to these six summaries by the
   delta method; the mixture median is defined only implicitly, so its
   sensitivities come from the implicit-function rule;
3. contrast Rx against C (difference or ratio) for g-, g+ and the mixture,
   propagate once more, and form simultaneous intervals from the
   equicoordinate normal quantile of the three estimates.

Summaries are always ordered ``(C g-, Rx g-, C g+, Rx g+, C mix, Rx mix)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.special import digamma, gammaln

from .errors import DomainError, NotConvergedError
from .likelihood import FitResult
from .simulci import DEFAULT_SAMPLES, equicoordinate_quantile
from .survival import (Arm, Group, MixtureSpec, ModelParams, component_quantile_time,
                       mixture_quantile_time)

SCHEMA_VERSION = "1.0"
LOG2 = math.log(2.0)

SUMMARY_LABELS = ("C_g_minus", "Rx_g_minus", "C_g_plus", "Rx_g_plus",
                  "C_mixture", "Rx_mixture")
GROUP_LABELS = ("g_minus", "g_plus", "mixture")


class Measure(str, Enum):
    DIFFERENCE = "difference"
    RATIO = "ratio"


class Summary(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"


class Scale(str, Enum):
    NATURAL = "natural"
    LOG = "log"


class CellValues(NamedTuple):
    c_gminus: float
    rx_gminus: float
    c_gplus: float
    rx_gplus: float


_CELLS = ((Arm.C, Group.G_MINUS), (Arm.RX, Group.G_MINUS),
          (Arm.C, Group.G_PLUS), (Arm.RX, Group.G_PLUS))


def _as_mix(mix) -> MixtureSpec:
    return mix if isinstance(mix, MixtureSpec) else MixtureSpec.two_group(mix)


def subgroup_medians(params: ModelParams) -> CellValues:
    return CellValues(*(component_quantile_time(params, a, g, 0.5) for a, g in _CELLS))


def subgroup_means(params: ModelParams) -> CellValues:
    """Weibull means ``lam * Gamma(1 + 1/k) * theta**(-1/k)`` per cell."""
    k = params.k
    log_gamma = gammaln(1.0 + 1.0 / k)
    return CellValues(*(
        params.lam * math.exp(log_gamma - params.log_theta(a, g) / k) for a, g in _CELLS
    ))


def mixture_median(params: ModelParams, mix, arm: Arm | str, tol: float = 1e-10) -> float:
    """Median of the arm's mixture survival, solved by bracketed root finding."""
    return mixture_quantile_time(params, _as_mix(mix), arm, 0.5, tol=tol)


def mixture_mean(params: ModelParams, mix, arm: Arm | str) -> float:
    mix = _as_mix(mix)
    means = subgroup_means(params)
    arm = Arm(arm)
    idx = {(a, g): i for i, (a, g) in enumerate(_CELLS)}
    return float(math.fsum(w * means[idx[(arm, g)]] for g, w in mix.components))


@dataclass(frozen=True)
class ArmSummary:
    arm: Arm
    median_gminus: float
    median_gplus: float
    median_mixture: float
    mean_gminus: float
    mean_gplus: float
    mean_mixture: float


def arm_summary(params: ModelParams, mix, arm: Arm | str, tol: float = 1e-10) -> ArmSummary:
    arm = Arm(arm)
    med, mean = subgroup_medians(params), subgroup_means(params)
    i = 0 if arm is Arm.C else 1
    return ArmSummary(arm, med[i], med[i + 2], mixture_median(params, mix, arm, tol),
                      mean[i], mean[i + 2], mixture_mean(params, mix, arm))


def summary_vector(params: ModelParams, mix, summary: Summary | str = Summary.MEDIAN,
                   tol: float = 1e-10) -> np.ndarray:
    summary = Summary(summary)
    if summary is Summary.MEDIAN:
        cells = subgroup_medians(params)
        mixed = [mixture_median(params, mix, a, tol) for a in (Arm.C, Arm.RX)]
    else:
        cells = subgroup_means(params)
        mixed = [mixture_mean(params, mix, a) for a in (Arm.C, Arm.RX)]
    return np.array([*cells, *mixed])


def _design(arm: Arm, group: Group) -> np.ndarray:
    x, m = arm.trt, group.marker
    return np.array([x, m, x * m], dtype=float)


def median_gradients(params: ModelParams, mix, tol: float = 1e-12) -> np.ndarray:
    """Jacobian (6 x 5) of the medians with respect to ``eta``.

    Subgroup rows differentiate the closed form ``lam * (log 2 / theta)**(1/k)``.
    Mixture rows use ``d nu / d eta = -(dF/d eta) / (dF/dt)`` at the solved
    median, where ``F(t) = sum_i w_i exp(-theta_i (t/lam)**k) - 1/2``.
    """
    mix = _as_mix(mix)
    k, lam = params.k, params.lam
    jac = np.zeros((6, 5))
    for row, (arm, group) in enumerate(_CELLS):
        nu = component_quantile_time(params, arm, group, 0.5)
        jac[row, 0] = nu
        jac[row, 1] = -nu * math.log(nu / lam)
        jac[row, 2:] = -nu / k * _design(arm, group)
    for row, arm in ((4, Arm.C), (5, Arm.RX)):
        nu = mixture_median(params, mix, arm, tol)
        u0 = (nu / lam) ** k
        weights = []
        designs = []
        for group, w in mix.components:
            u = params.theta(arm, group) * u0
            weights.append(w * u * math.exp(-u))
            designs.append(_design(arm, group))
        weights = np.array(weights)
        total = weights.sum()
        dF_dt = -k / nu * total
        dF = np.empty(5)
        dF[0] = k * total
        dF[1] = -k * math.log(nu / lam) * total
        dF[2:] = -(weights @ np.array(designs))
        jac[row] = -dF / dF_dt
    return jac


def mean_gradients(params: ModelParams, mix) -> np.ndarray:
    """Jacobian (6 x 5) of the means with respect to ``eta``.

    ``d log mu / d log k = (log theta - digamma(1 + 1/k)) / k``.
    """
    mix = _as_mix(mix)
    k = params.k
    means = subgroup_means(params)
    psi = float(digamma(1.0 + 1.0 / k))
    jac = np.zeros((6, 5))
    for row, (arm, group) in enumerate(_CELLS):
        mu = means[row]
        jac[row, 0] = mu
        jac[row, 1] = mu * (params.log_theta(arm, group) - psi) / k
        jac[row, 2:] = -mu / k * _design(arm, group)
    for row, arm in ((4, Arm.C), (5, Arm.RX)):
        base = 0 if arm is Arm.C else 1
        for group, w in mix.components:
            jac[row] += w * jac[base + (2 if group is Group.G_PLUS else 0)]
    return jac


def summary_gradients(params: ModelParams, mix, summary: Summary | str) -> np.ndarray:
    if Summary(summary) is Summary.MEDIAN:
        return median_gradients(params, mix)
    return mean_gradients(params, mix)


def contrast(summaries: np.ndarray, measure: Measure | str,
             scale: Scale | str = Scale.NATURAL) -> tuple[np.ndarray, np.ndarray]:
    """Efficacy values for (g-, g+, mixture) and their 3 x 6 Jacobian.

    Returned values are on the analysis scale: log ratios when
    ``scale='log'``.
    """
    measure, scale = Measure(measure), Scale(scale)
    if scale is Scale.LOG and measure is not Measure.RATIO:
        raise DomainError("log scale is only defined for the ratio measure")
    values = np.empty(3)
    jac = np.zeros((3, 6))
    for g in range(3):
        c, rx = summaries[2 * g], summaries[2 * g + 1]
        if measure is Measure.DIFFERENCE:
            values[g] = rx - c
            jac[g, 2 * g:2 * g + 2] = (-1.0, 1.0)
        elif scale is Scale.NATURAL:
            values[g] = rx / c
            jac[g, 2 * g:2 * g + 2] = (-rx / c**2, 1.0 / c)
        else:
            values[g] = math.log(rx) - math.log(c)
            jac[g, 2 * g:2 * g + 2] = (-1.0 / c, 1.0 / rx)
    return values, jac


def efficacy_points(params: ModelParams, prevalence, measure: Measure | str = "ratio",
                    summary: Summary | str = "median") -> np.ndarray:
    """True (g-, g+, mixture) efficacy on the natural scale."""
    values, _ = contrast(summary_vector(params, prevalence, summary), measure)
    return values


@dataclass(frozen=True)
class EfficacyEstimate:
    """One group's efficacy.

    ``se`` is on the analysis scale, i.e. the standard error of the log ratio
    when ``scale='log'``; ``point`` and the interval are always on the
    natural scale.
    """

    group: str
    measure: Measure
    summary: Summary
    scale: Scale
    point: float
    se: float
    sci_low: float
    sci_high: float

    def __post_init__(self):
        for name, kind in (("measure", Measure), ("summary", Summary), ("scale", Scale)):
            object.__setattr__(self, name, kind(getattr(self, name)))

    @property
    def null_value(self) -> float:
        return 0.0 if self.measure is Measure.DIFFERENCE else 1.0

    @property
    def significant(self) -> bool:
        return not (self.sci_low <= self.null_value <= self.sci_high)

    def to_dict(self) -> dict:
        return {"group": self.group, "measure": self.measure.value,
                "summary": self.summary.value, "scale": self.scale.value,
                "point": self.point, "se": self.se, "sci_low": self.sci_low,
                "sci_high": self.sci_high, "significant": self.significant}

    @classmethod
    def from_dict(cls, doc: dict) -> "EfficacyEstimate":
        return cls(doc["group"], Measure(doc["measure"]), Summary(doc["summary"]),
                   Scale(doc["scale"]), float(doc["point"]), float(doc["se"]),
                   float(doc["sci_low"]), float(doc["sci_high"]))


@dataclass(frozen=True)
class EfficacyReport:
    estimates: tuple
    corr: np.ndarray
    critical_value: float
    alpha: float
    prevalence: float
    summaries: np.ndarray = field(default_factory=lambda: np.full(6, np.nan))
    cov: np.ndarray = field(default_factory=lambda: np.full((3, 3), np.nan))
    critical_value_mc_se: float = 0.0

    def __getitem__(self, group: str) -> EfficacyEstimate:
        return self.estimates[GROUP_LABELS.index(group)]

    @property
    def points(self) -> np.ndarray:
        return np.array([e.point for e in self.estimates])

    @property
    def intervals(self) -> np.ndarray:
        return np.array([(e.sci_low, e.sci_high) for e in self.estimates])

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "efficacy_report",
            "alpha": self.alpha,
            "prevalence": self.prevalence,
            "critical_value": self.critical_value,
            "critical_value_mc_se": self.critical_value_mc_se,
            "summaries": dict(zip(SUMMARY_LABELS, self.summaries.tolist())),
            "estimates": [e.to_dict() for e in self.estimates],
            "corr": self.corr.tolist(),
            "cov": self.cov.tolist(),
            "prevalence_regime": "known",
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EfficacyReport":
        return cls(tuple(EfficacyEstimate.from_dict(e) for e in doc["estimates"]),
                   np.array(doc["corr"], dtype=float), float(doc["critical_value"]),
                   float(doc["alpha"]), float(doc["prevalence"]),
                   np.array([doc["summaries"][k] for k in SUMMARY_LABELS], dtype=float),
                   np.array(doc["cov"], dtype=float),
                   float(doc.get("critical_value_mc_se", 0.0)))


def _corr_from_cov(cov: np.ndarray) -> np.ndarray:
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    corr = np.eye(len(se))
    ok = se > 0
    outer = np.outer(se[ok], se[ok])
    sub = np.clip(cov[np.ix_(ok, ok)] / outer, -1.0, 1.0)
    np.fill_diagonal(sub, 1.0)
    corr[np.ix_(ok, ok)] = 0.5 * (sub + sub.T)
    return corr


def efficacy_covariance(fit: FitResult, prevalence, measure, summary, scale,
                        tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Summaries, analysis-scale efficacy values and their delta covariance."""
    mix = _as_mix(prevalence)
    summaries = summary_vector(fit.params, mix, summary, tol)
    jac_s = summary_gradients(fit.params, mix, summary)
    values, jac_e = contrast(summaries, measure, scale)
    full = jac_e @ jac_s
    cov = full @ fit.cov @ full.T
    return summaries, values, 0.5 * (cov + cov.T)


def efficacy(fit: FitResult, prevalence: float, measure: Measure | str = Measure.RATIO,
             summary: Summary | str = Summary.MEDIAN, scale: Scale | str | None = None,
             alpha: float = 0.05, seed: int = 0,
             n_samples: int = DEFAULT_SAMPLES) -> EfficacyReport:
    """Efficacy in g-, g+ and their mixture with simultaneous intervals.

    Parameters
    ----------
    fit : FitResult
        Converged fit; its covariance is in ``eta`` coordinates.
    prevalence : float
        Population fraction of g+, treated as known.
    measure, summary : str
        ``difference`` or ``ratio`` of ``median`` or ``mean`` survival.
    scale : str, optional
        ``log`` (default for ratios) or ``natural``.  Ratio intervals on the
        log scale are exponentiated so their bounds stay positive.
    alpha : float
        One minus the simultaneous coverage.
    seed, n_samples
        Monte Carlo controls for the equicoordinate critical value.
    """
    measure, summary = Measure(measure), Summary(summary)
    if scale is None:
        scale = Scale.LOG if measure is Measure.RATIO else Scale.NATURAL
    scale = Scale(scale)
    if scale is Scale.LOG and measure is not Measure.RATIO:
        raise DomainError("log scale is only defined for the ratio measure")
    if not fit.converged:
        raise NotConvergedError("efficacy requires a converged fit")
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 < float(prevalence) < 1.0):
        raise DomainError(f"prevalence must lie in (0, 1), got {prevalence}")

    summaries, values, cov = efficacy_covariance(fit, prevalence, measure, summary, scale)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    corr = _corr_from_cov(cov)
    crit = equicoordinate_quantile(corr, 1.0 - alpha, seed=seed, n_samples=n_samples)
    c = crit.value

    estimates = []
    for g, label in enumerate(GROUP_LABELS):
        lo, hi = values[g] - c * se[g], values[g] + c * se[g]
        point = values[g]
        if scale is Scale.LOG:
            point, lo, hi = math.exp(point), math.exp(lo), math.exp(hi)
        estimates.append(EfficacyEstimate(label, measure, summary, scale, float(point),
                                          float(se[g]), float(lo), float(hi)))
    return EfficacyReport(tuple(estimates), corr, c, alpha, float(prevalence),
                          summaries, cov, crit.mc_se)


def parametric_bootstrap_cov(fit: FitResult, prevalence, measure, summary, scale,
                             n_draws: int = 2000, seed: int = 0) -> np.ndarray:
    """Covariance of the efficacy vector over draws ``eta ~ N(eta_hat, cov)``."""
    rng = np.random.default_rng(seed)
    etas = rng.multivariate_normal(fit.params.eta, fit.cov, size=n_draws, method="eigh")
    mix = _as_mix(prevalence)
    draws = np.array([
        contrast(summary_vector(ModelParams.from_eta(e), mix, summary), measure, scale)[0]
        for e in etas
    ])
    return np.cov(draws, rowvar=False)


def linear_mix_efficacy(mu_rx_gplus: float, mu_rx_gminus: float, mu_c_gplus: float,
                        mu_c_gminus: float, prevalence: float) -> tuple[float, float, float]:
    """Difference-of-means efficacy ``(g-, g+, mixture)`` with linear mixing."""
    if not (0.0 <= prevalence <= 1.0):
        raise DomainError(f"prevalence must lie in [0, 1], got {prevalence}")
    eff_minus = mu_rx_gminus - mu_c_gminus
    eff_plus = mu_rx_gplus - mu_c_gplus
    return eff_minus, eff_plus, prevalence * eff_plus + (1.0 - prevalence) * eff_minus
