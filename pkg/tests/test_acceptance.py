"""Acceptance suite.

Each ``TestCriterionN`` class holds one criterion at its stated tolerance.
The terminal summary prints one PASS/FAIL line per criterion.
"""
import csv
import io
import json
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest
from click.testing import CliRunner

from oracles import fd_median_jacobian
from reference_values import COLUMNS, ROWS
from svgutil import by_id, interval_endpoints, marker_center, parse
from submix.binary import (ResponseTable, mix_rr_correct, mix_rr_naive_prevalence,
                           rr_overall, rr_subgroup, table2)
from submix.cli import cli
from submix.engine import (EfficacyEstimate, EfficacyReport, efficacy_covariance,
                           efficacy_points, median_gradients, parametric_bootstrap_cov,
                           summary_vector)
from submix.likelihood import fit_mle
from submix.mmplot import MMPlotSpec, MMPoint, layout, render_mm_plot
from submix.simulci import (bonferroni_quantile, equicoordinate_quantile,
                            univariate_quantile)
from submix.survival import (Arm, INCORRECT_ESTIMATORS, MixtureSpec, ModelParams,
                             mixture_hazard_ratio, mixture_quantile_time,
                             subgroup_hazard_ratios)
from submix.trialsim import SCENARIOS, ScenarioConfig, generate_trial, run_study, with_measure

GROUPS = ("g_minus", "g_plus", "mixture")


def random_model(rng, marker_effects=True):
    b = rng.uniform(-2, 2, 3)
    if not marker_effects:
        b[1:] = 0.0
    return ModelParams(math.exp(rng.uniform(2, 5)), rng.uniform(0.5, 3), *b), \
        rng.uniform(0.05, 0.95)


def random_corr(rng, m=3):
    a = rng.normal(size=(m, m + int(rng.integers(0, 3))))
    cov = a @ a.T
    d = np.sqrt(np.diag(cov))
    return cov / np.outer(d, d)


@pytest.mark.criterion(1, "reference truth values for scenarios a, b, c (+-0.05 / +-0.01, < 1 s)")
class TestCriterion1:
    def test_every_printed_value(self):
        start = time.perf_counter()
        misses = []
        for scenario, rows in ROWS.items():
            p = SCENARIOS[scenario]
            v = summary_vector(p, 0.5)
            hr = subgroup_hazard_ratios(p)
            for i, group in enumerate(GROUPS):
                c, rx = v[2 * i], v[2 * i + 1]
                got = (c, rx, rx / c, rx - c, list(hr.values())[i] if i < 2 else None)
                tols = (0.05, 0.05, 0.01, 0.05, 0.01)
                for col, (value, printed, tol) in enumerate(zip(got, rows[group], tols)):
                    if printed is not None and abs(value - printed) > tol:
                        misses.append(f"{scenario}/{group}/{COLUMNS[col]}: "
                                      f"computed {value:.4f}, printed {printed}")
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"took {elapsed:.2f}s"
        assert not misses, "; ".join(misses)


@pytest.mark.criterion(2, "binary relative response exactness (< 1 s)")
class TestCriterion2:
    def test_exact_and_identity(self):
        start = time.perf_counter()
        t = table2()
        rr_p, rr_m = rr_subgroup(t, "g_plus"), rr_subgroup(t, "g_minus")
        assert rr_overall(t) == F(18, 15)
        assert mix_rr_naive_prevalence(rr_p, rr_m, t.prevalence()) == F(145, 86)
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            gamma, alloc = rng.uniform(0.05, 0.95), rng.uniform(0.1, 0.9)
            cells = {}
            for arm, pa in (("Rx", alloc), ("C", 1 - alloc)):
                for group, pg in (("g_plus", gamma), ("g_minus", 1 - gamma)):
                    r = rng.uniform(0.02, 0.98)
                    cells[(arm, group, "R")] = pa * pg * r
                    cells[(arm, group, "NR")] = pa * pg * (1 - r)
            tab = ResponseTable(cells)
            got = mix_rr_correct(rr_subgroup(tab, "g_plus"), rr_subgroup(tab, "g_minus"),
                                 tab.p("C", "g_plus", "R"), tab.p("C", "g_minus", "R"))
            worst = max(worst, abs(got - rr_overall(tab)))
        elapsed = time.perf_counter() - start
        assert worst < 1e-12
        assert elapsed < 1.0, f"took {elapsed:.2f}s"


@pytest.fixture(scope="module")
def coverage_config():
    return ScenarioConfig(SCENARIOS["c"], 0.5, n_total=400, censor_target=0.2, reps=1000,
                          master_seed=2015)


@pytest.mark.slow
@pytest.mark.criterion(3, "coverage in [0.93, 0.97] and bias bounds, scenario c, 1000 replicates")
class TestCriterion3:
    def test_difference(self, coverage_config):
        m = run_study(coverage_config)
        print(m.table())
        assert m.empirical_censoring == pytest.approx(0.20, abs=0.01)
        assert 0.93 <= m.coverage <= 0.97, m.coverage
        assert all(abs(b) < 1.5 for b in m.bias.values()), m.bias

    def test_log_ratio(self, coverage_config):
        m = run_study(with_measure(coverage_config, "ratio", "log"))
        print(m.table())
        assert 0.93 <= m.coverage <= 0.97, m.coverage
        assert all(abs(b) < 0.06 for b in m.bias.values()), m.bias


@pytest.mark.criterion(4, "mixture efficacy within subgroup range, 1000 draws (< 10 s)")
class TestCriterion4:
    @pytest.mark.parametrize("measure,summary", [("ratio", "median"), ("difference", "median"),
                                                 ("ratio", "mean"), ("difference", "mean")])
    def test_betweenness(self, measure, summary):
        start = time.perf_counter()
        rng = np.random.default_rng(4)
        outside = []
        for i in range(1000):
            p, g = random_model(rng)
            v = efficacy_points(p, g, measure, summary)
            if not (min(v[:2]) - 1e-8 <= v[2] <= max(v[:2]) + 1e-8):
                outside.append((i, v.round(4).tolist()))
        collapse = 0.0
        for _ in range(1000):
            p, g = random_model(rng, marker_effects=False)
            v = efficacy_points(p, g, measure, summary)
            collapse = max(collapse, float(np.ptp(v)))
        elapsed = time.perf_counter() - start
        assert collapse < 1e-8
        assert elapsed < 10.0, f"took {elapsed:.2f}s"
        assert not outside, f"{len(outside)} of 1000 draws outside, first {outside[:3]}"


@pytest.fixture(scope="module")
def fit_b():
    cfg = ScenarioConfig(SCENARIOS["b"], 0.5, n_total=400, censor_target=0.2)
    return fit_mle(generate_trial(cfg, seed=0))


@pytest.mark.criterion(5, "implicit Jacobian vs FD (< 1e-5); delta vs bootstrap covariance (15%)")
class TestCriterion5:
    def test_jacobian(self):
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(100):
            p, g = random_model(rng)
            jac = median_gradients(p, g)
            fd = np.array(fd_median_jacobian(p.eta, g, h=1e-6))
            nz = fd != 0
            assert np.all(jac[~nz] == 0)
            worst = max(worst, float(np.max(np.abs(jac[nz] - fd[nz]) / np.abs(fd[nz]))))
        assert worst < 1e-5, worst

    @pytest.mark.parametrize("measure,scale", [("difference", "natural"), ("ratio", "log"),
                                               ("ratio", "natural")])
    def test_bootstrap_covariance(self, fit_b, measure, scale):
        _, _, delta = efficacy_covariance(fit_b, 0.5, measure, "median", scale)
        boot = parametric_bootstrap_cov(fit_b, 0.5, measure, "median", scale,
                                        n_draws=2000, seed=5)
        rel = np.abs(boot - delta) / np.abs(delta)
        se = np.sqrt(np.diag(delta))
        other = rel[np.abs(delta / np.outer(se, se)) > 0.05]
        assert rel.max() < 0.15, (
            f"max entrywise relative error {rel.max():.3g} at "
            f"{tuple(int(i) for i in np.unravel_index(rel.argmax(), rel.shape))}; "
            f"delta corr {np.round(delta / np.outer(se, se), 3).tolist()}; "
            f"entries with |corr| > 0.05 agree within {other.max():.3g}")


@pytest.mark.criterion(6, "mixture hazard ratio varies over time; naive baselines constant and flagged")
class TestCriterion6:
    def test_non_constant_under_interaction(self):
        p, mix = SCENARIOS["a"], MixtureSpec.two_group(0.5)
        t = [mixture_quantile_time(p, mix, Arm.C, s) for s in (0.8, 0.2)]
        hr = mixture_hazard_ratio(p, mix, np.array(t))
        assert abs(hr[1] - hr[0]) / hr[0] > 0.10

    def test_constant_without_marker_effects(self):
        p = ModelParams(50.0, 1.25, 0.5)
        hr = mixture_hazard_ratio(p, MixtureSpec.two_group(0.5), np.logspace(-1, 2.5, 50))
        assert np.max(np.abs(hr - math.exp(0.5))) < 1e-10

    def test_naive_baselines(self, tmp_path):
        conf = tmp_path / "p.json"
        conf.write_text(json.dumps(SCENARIOS["a"].to_dict()))
        res = CliRunner().invoke(cli, ["hr-curve", "--config", str(conf), "--prevalence", "0.5",
                                       "--t-grid", "1:150:40"])
        assert res.exit_code == 0, res.output
        rows = list(csv.DictReader(io.StringIO(res.stdout)))
        for col in ("naive_event_weighted_hr_incorrect", "naive_lsmeans_hr_incorrect"):
            assert len({r[col] for r in rows}) == 1
        assert len({r["mixture_hr"] for r in rows}) == len(rows)
        assert set(INCORRECT_ESTIMATORS) == {"naive_hr_event_weighted", "naive_hr_lsmeans"}


@pytest.mark.criterion(7, "equicoordinate critical values and bounds")
class TestCriterion7:
    def test_reference_values(self):
        for corr, target in (([[1.0]], 1.95996), (np.ones((3, 3)), 1.95996),
                             (np.eye(3), 2.3877)):
            c = equicoordinate_quantile(corr)
            assert abs(c.value - target) <= 0.005
            assert abs(c.raw - target) <= 0.005

    def test_bounds_on_random_matrices(self):
        rng = np.random.default_rng(7)
        lo, hi = univariate_quantile(0.95), bonferroni_quantile(3, 0.95)
        for _ in range(200):
            c = equicoordinate_quantile(random_corr(rng)).value
            assert lo <= c <= hi


def _random_report(rng):
    measure = rng.choice(["difference", "ratio"])
    estimates, summaries = [], []
    for g in GROUPS:
        x = rng.uniform(5, 150)
        y = rng.uniform(5, 150)
        point = y - x if measure == "difference" else y / x
        if measure == "difference":
            half = rng.uniform(0.5, 60)
            lo, hi = point - half, point + half
        else:
            half = rng.uniform(0.02, 1.0)
            lo, hi = point * math.exp(-half), point * math.exp(half)
        summaries += [x, y]
        estimates.append(EfficacyEstimate(g, measure, "median",
                                          "natural" if measure == "difference" else "log",
                                          point, 1.0, lo, hi))
    return EfficacyReport(tuple(estimates), np.eye(3), 2.0, 0.05, 0.5,
                          np.array(summaries), np.eye(3))


@pytest.mark.criterion(8, "M&M geometry, XML well-formedness and the worked example")
class TestCriterion8:
    def test_crossing_iff_null_in_interval(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            rep = _random_report(rng)
            spec = MMPlotSpec.from_report(rep)
            lay = layout(spec)
            root = parse(render_mm_plot(spec))
            for est in rep.estimates:
                a, b, _ = interval_endpoints(by_id(root, f"ci-{est.group}"))
                (ax, ay), (bx, by) = lay.to_data(*a), lay.to_data(*b)
                crosses = (ay - ax) * (by - bx) <= 0
                assert crosses == (not est.significant), (est, a, b)

    def test_worked_example(self):
        points = (MMPoint("g_minus", 45.0, 90.0), MMPoint("g_plus", 25.0, 70.0))
        spec = MMPlotSpec(points, "difference")
        lay = layout(spec)
        root = parse(render_mm_plot(spec))
        ox, oy = lay.to_px(0, 0)
        offsets = [((oy - py) - (px - ox)) / math.sqrt(2)
                   for px, py in (marker_center(by_id(root, f"point-{g}"))
                                  for g in ("g_minus", "g_plus"))]
        assert offsets[0] == pytest.approx(offsets[1], abs=1e-3)
        root = parse(render_mm_plot(MMPlotSpec(points, "ratio")))
        slopes = []
        for g in ("g_minus", "g_plus"):
            el = by_id(root, f"effect-{g}")
            x1, y1, x2, y2 = (float(el.get(k)) for k in ("x1", "y1", "x2", "y2"))
            slopes.append((y1 - y2) / (x2 - x1))
        assert slopes == pytest.approx([2.0, 2.8], rel=1e-3)


@pytest.mark.criterion(9, "byte-identical randomized runs across repeats and worker counts")
class TestCriterion9:
    def test_study_any_worker_count(self):
        cfg = ScenarioConfig(SCENARIOS["c"], 0.5, n_total=400, censor_target=0.2, reps=24,
                             master_seed=2015)
        docs = {json.dumps(run_study(cfg, workers=w).to_dict()) for w in (1, 2, 3, 1)}
        assert len(docs) == 1

    def test_coverage_config_repeat(self, coverage_config):
        from dataclasses import replace
        small = run_study(replace(coverage_config, reps=6))
        again = run_study(replace(coverage_config, reps=6), workers=2)
        assert json.dumps(small.to_dict()) == json.dumps(again.to_dict())

    def test_critical_value_and_bootstrap(self, fit_b):
        corr = random_corr(np.random.default_rng(9))
        assert equicoordinate_quantile(corr, seed=3) == equicoordinate_quantile(corr, seed=3)
        a = parametric_bootstrap_cov(fit_b, 0.5, "ratio", "median", "log", n_draws=300, seed=1)
        b = parametric_bootstrap_cov(fit_b, 0.5, "ratio", "median", "log", n_draws=300, seed=1)
        assert a.tobytes() == b.tobytes()

    def test_cli_efficacy_bytes(self, tmp_path):
        path = tmp_path / "trial.csv"
        from submix.cli import write_survival_csv
        write_survival_csv(generate_trial(ScenarioConfig(SCENARIOS["b"], 0.5, n_total=300,
                                                         censor_target=0.2), 4), path)
        outs = [CliRunner().invoke(cli, ["efficacy", "--input", str(path), "--seed", "11"]).stdout
                for _ in range(2)]
        assert outs[0] == outs[1] and outs[0]
