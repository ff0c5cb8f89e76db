"""Monte Carlo evaluation of the efficacy pipeline on simulated trials.

Each replicate draws a trial from the Weibull-PH model with uniform
``U[0, b]`` censoring, fits it, runs :func:`submix.engine.efficacy`, and
records point estimates and simultaneous intervals.  Replicate streams are
spawned from one master seed through :class:`numpy.random.SeedSequence` and
drive counter-based Philox generators, so results do not depend on the
number of workers or the order in which replicates finish.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .engine import Measure, Scale, Summary, efficacy, efficacy_points
from .errors import DomainError, SubmixError
from .likelihood import SurvivalData, fit_mle
from .simulci import DEFAULT_SAMPLES
from .survival import Arm, MixtureSpec, ModelParams, mixture_survival

SCHEMA_VERSION = "1.0"

#: Truth for the three reference simulation scenarios (time unit: weeks).
SCENARIOS = {
    "a": ModelParams(50.0, 1.25, 0.5, -1.0, -1.0),
    "b": ModelParams(50.0, 1.25, -0.1, -0.5, -0.5),
    "c": ModelParams(50.0, 1.25, -0.5, -1.0, 0.0),
}

GROUPS = ("g_minus", "g_plus", "mixture")


@dataclass(frozen=True)
class Censoring:
    a: float
    b: float

    @property
    def none(self) -> bool:
        return math.isinf(self.b)


@dataclass(frozen=True)
class ScenarioConfig:
    params: ModelParams
    prevalence: float
    n_total: int = 400
    allocation: float = 0.5
    censor_target: float = 0.0
    reps: int = 1000
    measure: Measure = Measure.DIFFERENCE
    summary: Summary = Summary.MEDIAN
    scale: Scale = Scale.NATURAL
    alpha: float = 0.05
    master_seed: int = 0
    n_samples: int = DEFAULT_SAMPLES
    crit_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "summary", Summary(self.summary))
        object.__setattr__(self, "scale", Scale(self.scale))
        if self.n_total < 8:
            raise DomainError("n_total must be at least 8")
        if self.reps < 1:
            raise DomainError("reps must be at least 1")
        if not (0 < self.prevalence < 1):
            raise DomainError("prevalence must lie in (0, 1)")
        if not (0 < self.allocation < 1):
            raise DomainError("allocation must lie in (0, 1)")
        if not (0 <= self.censor_target < 1):
            raise DomainError("censor_target must lie in [0, 1)")
        if self.scale is Scale.LOG and self.measure is not Measure.RATIO:
            raise DomainError("log scale is only defined for the ratio measure")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["params"] = self.params.to_dict()
        for key in ("measure", "summary", "scale"):
            doc[key] = getattr(self, key).value
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        doc.pop("schema_version", None)
        scenario = doc.pop("scenario", None)
        if "params" in doc:
            params = ModelParams(**doc.pop("params"))
        elif scenario is not None:
            try:
                params = SCENARIOS[str(scenario).lower()]
            except KeyError:
                raise DomainError(f"unknown scenario {scenario!r}") from None
        else:
            raise DomainError("config needs 'params' or 'scenario'")
        known = set(cls.__dataclass_fields__) - {"params"}
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(params=params, **doc)


def censoring_probability(params: ModelParams, prevalence: float, allocation: float,
                          b: float) -> float:
    """``P(T > C)`` for ``C ~ U[0, b]`` in the randomized population."""
    if math.isinf(b):
        return 0.0
    mix = MixtureSpec.two_group(prevalence)

    def surv(c):
        return (allocation * mixture_survival(params, mix, Arm.RX, c)
                + (1 - allocation) * mixture_survival(params, mix, Arm.C, c))

    integral, _ = quad(surv, 0.0, b, limit=200, epsabs=1e-12, epsrel=1e-12)
    return integral / b


def calibrate_censoring(params: ModelParams, prevalence: float, allocation: float = 0.5,
                        censor_target: float = 0.0, tol: float = 1e-4) -> Censoring:
    """Upper end ``b`` of ``U[0, b]`` censoring achieving ``censor_target``.

    A target of zero returns ``b = inf`` (no censoring).
    """
    if censor_target == 0:
        return Censoring(0.0, math.inf)
    if not (0 < censor_target <= 0.9):
        raise DomainError(f"censoring target {censor_target} is not achievable")

    def excess(b):
        return censoring_probability(params, prevalence, allocation, b) - censor_target

    lo = hi = params.lam
    while excess(lo) < 0:
        lo /= 2
    while excess(hi) > 0:
        hi *= 2
        if hi > params.lam * 1e12:
            raise DomainError(f"censoring target {censor_target} is not achievable")
    b = brentq(excess, lo, hi, xtol=1e-12 * hi, rtol=1e-12)
    if abs(excess(b)) > tol:
        raise DomainError(f"censoring calibration missed target by {excess(b):.2e}")
    return Censoring(0.0, b)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def generate_trial(config: ScenarioConfig, seed, censoring: Censoring | None = None
                   ) -> SurvivalData:
    """One simulated trial of ``config.n_total`` subjects.

    Event times use inversion, ``T = lam * (-log U / theta)**(1/k)``.
    """
    p = config.params
    if censoring is None:
        censoring = calibrate_censoring(p, config.prevalence, config.allocation,
                                        config.censor_target)
    rng = _generator(seed)
    n = config.n_total
    marker = (rng.random(n) < config.prevalence).astype(float)
    trt = (rng.random(n) < config.allocation).astype(float)
    lp = p.beta1 * trt + p.beta2 * marker + p.beta3 * trt * marker
    u = rng.random(n)
    event_time = p.lam * (-np.log1p(-u) / np.exp(lp)) ** (1.0 / p.k)
    if censoring.none:
        cens_time = np.full(n, np.inf)
    else:
        cens_time = rng.uniform(censoring.a, censoring.b, n)
    event = (event_time <= cens_time).astype(float)
    return SurvivalData(np.minimum(event_time, cens_time), event, trt, marker)


def replicate_seeds(master_seed: int, reps: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(reps)


def _run_replicate(config: ScenarioConfig, censoring: Censoring, seed) -> dict | None:
    data = generate_trial(config, seed, censoring)
    try:
        fit = fit_mle(data)
        report = efficacy(fit, config.prevalence, config.measure, config.summary,
                          config.scale, config.alpha, seed=config.crit_seed,
                          n_samples=config.n_samples)
    except SubmixError:
        return None
    return {"points": report.points, "intervals": report.intervals,
            "censored": 1.0 - float(data.event.mean())}


def _run_chunk(args):
    config, censoring, seeds = args
    return [_run_replicate(config, censoring, s) for s in seeds]


@dataclass(frozen=True)
class SimMetrics:
    truth: dict
    bias: dict
    avg_sci: dict
    marginal_coverage: dict
    coverage: float
    n_ok: int
    n_failed_fits: int
    censoring_b: float
    empirical_censoring: float
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["avg_sci"] = {g: list(v) for g, v in self.avg_sci.items()}
        doc["censoring_b"] = None if math.isinf(self.censoring_b) else self.censoring_b
        return {"schema_version": SCHEMA_VERSION, "kind": "sim_metrics", **doc}

    @classmethod
    def from_dict(cls, doc: dict) -> "SimMetrics":
        doc = dict(doc)
        doc.pop("schema_version", None)
        doc.pop("kind", None)
        doc["avg_sci"] = {g: tuple(v) for g, v in doc["avg_sci"].items()}
        if doc["censoring_b"] is None:
            doc["censoring_b"] = math.inf
        return cls(**doc)

    def table(self) -> str:
        """Plain-text summary: bias and average interval per group, then CP."""
        cfg = self.config
        head = (f"{'setting':<22}" + "".join(f"{g:>28}" for g in GROUPS) + f"{'CP':>8}")
        setting = ""
        if cfg:
            setting = (f"n={cfg['n_total']} g+={cfg['prevalence']:.2f} "
                       f"({100 * cfg['censor_target']:.0f}%)")
        cells = "".join(
            f"{self.bias[g]:>10.3f} ({self.avg_sci[g][0]:>6.2f},{self.avg_sci[g][1]:>7.2f})"
            for g in GROUPS
        )
        return f"{head}\n{setting:<22}{cells}{self.coverage:>8.3f}\n"


def run_study(config: ScenarioConfig, workers: int = 1) -> SimMetrics:
    """Run ``config.reps`` replicates and aggregate bias and coverage.

    Coverage is joint: a replicate covers when all three true efficacies lie
    in their simultaneous intervals.  Failed fits are dropped and counted.
    """
    censoring = calibrate_censoring(config.params, config.prevalence, config.allocation,
                                    config.censor_target)
    seeds = replicate_seeds(config.master_seed, config.reps)
    if workers > 1:
        size = math.ceil(len(seeds) / workers)
        chunks = [(config, censoring, seeds[i:i + size]) for i in range(0, len(seeds), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [r for chunk in pool.map(_run_chunk, chunks) for r in chunk]
    else:
        results = _run_chunk((config, censoring, seeds))

    ok = [r for r in results if r is not None]
    truth = efficacy_points(config.params, config.prevalence, config.measure, config.summary)
    if not ok:
        nan = float("nan")
        return SimMetrics(dict(zip(GROUPS, truth.tolist())), {g: nan for g in GROUPS},
                          {g: (nan, nan) for g in GROUPS}, {g: nan for g in GROUPS}, nan,
                          0, len(results), censoring.b, nan, config.to_dict())
    points = np.array([r["points"] for r in ok])
    intervals = np.array([r["intervals"] for r in ok])
    inside = (intervals[:, :, 0] <= truth) & (truth <= intervals[:, :, 1])
    return SimMetrics(
        truth=dict(zip(GROUPS, truth.tolist())),
        bias=dict(zip(GROUPS, (points.mean(axis=0) - truth).tolist())),
        avg_sci={g: tuple(intervals[:, i, :].mean(axis=0).tolist())
                 for i, g in enumerate(GROUPS)},
        marginal_coverage=dict(zip(GROUPS, inside.mean(axis=0).tolist())),
        coverage=float(inside.all(axis=1).mean()),
        n_ok=len(ok),
        n_failed_fits=len(results) - len(ok),
        censoring_b=censoring.b,
        empirical_censoring=float(np.mean([r["censored"] for r in ok])),
        config=config.to_dict(),
    )


def with_measure(config: ScenarioConfig, measure, scale=None) -> ScenarioConfig:
    measure = Measure(measure)
    if scale is None:
        scale = Scale.LOG if measure is Measure.RATIO else Scale.NATURAL
    return replace(config, measure=measure, scale=Scale(scale))
