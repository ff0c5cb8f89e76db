"""Command-line interface.

Every option can also be set through an environment variable named
``SUBMIX_<COMMAND>_<OPTION>``, e.g. ``SUBMIX_EFFICACY_ALPHA=0.1``.
Errors are reported on stderr as a JSON object and exit with status 2.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import __version__
from .binary import ResponseTable, rr_report
from .engine import Measure, Scale, Summary, efficacy
from .errors import DomainError, SchemaError, SubmixError
from .likelihood import FitResult, SurvivalData, fit_mle
from .mmplot import MMPlotSpec, render_mm_plot
from .survival import (Group, MixtureSpec, ModelParams, mixture_hazard_ratio,
                       naive_hr_event_weighted, naive_hr_lsmeans, subgroup_hazard_ratios)
from .trialsim import ScenarioConfig, run_study

SCHEMA_VERSION = "1.0"
CSV_COLUMNS = ("time", "event", "trt", "marker")

log = logging.getLogger("submix")


@dataclass(frozen=True)
class AnalysisConfig:
    input: str | None = None
    prevalence: float | None = None
    measure: Measure = Measure.RATIO
    summary: Summary = Summary.MEDIAN
    scale: Scale | None = None
    alpha: float = 0.05
    seed: int = 0
    json_out: str | None = None
    svg_out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "measure", _measure(self.measure))
        object.__setattr__(self, "summary", Summary(self.summary))
        if self.scale is not None:
            object.__setattr__(self, "scale", Scale(self.scale))
        if not (0 < self.alpha < 1):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.prevalence is not None and not (0 < self.prevalence < 1):
            raise DomainError(f"prevalence must lie in (0, 1), got {self.prevalence}")

    @property
    def prevalence_source(self) -> str:
        return "sample_fraction" if self.prevalence is None else "fixed"


def _measure(value) -> Measure:
    return Measure.DIFFERENCE if value in ("diff", Measure.DIFFERENCE) else Measure(value)


def read_survival_csv(path: str | Path) -> SurvivalData:
    """Read ``time,event,trt,marker`` rows; extra columns are ignored with a warning."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError(f"{path}: no records") from None
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: line 1: missing columns {missing}")
    extra = [h for h in header if h not in CSV_COLUMNS]
    if extra:
        log.warning("ignoring extra columns %s", extra)
    idx = [header.index(c) for c in CSV_COLUMNS]
    rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"{path}: line {line_no}: expected {len(header)} fields, "
                              f"got {len(row)}")
        try:
            t = float(row[idx[0]])
        except ValueError:
            raise SchemaError(f"{path}: line {line_no}: time is not a number: "
                              f"{row[idx[0]]!r}") from None
        if not (t > 0 and math.isfinite(t)):
            raise SchemaError(f"{path}: line {line_no}: time must be positive, got {t}")
        flags = []
        for name, i in zip(CSV_COLUMNS[1:], idx[1:]):
            cell = row[i].strip()
            if cell not in ("0", "1"):
                raise SchemaError(f"{path}: line {line_no}: {name} must be 0 or 1, "
                                  f"got {cell!r}")
            flags.append(int(cell))
        rows.append((t, *flags))
    if not rows:
        raise SchemaError(f"{path}: no records")
    return SurvivalData(*np.array(rows, dtype=float).T)


def write_survival_csv(data: SurvivalData, path: str | Path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for t, d, x, m in zip(data.time, data.event, data.trt, data.marker):
        lines.append(f"{float(t)!r},{int(d)},{int(x)},{int(m)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_response_table(path: str | Path) -> ResponseTable:
    """Read an 8-cell table from JSON (nested arm/group/response) or CSV.

    CSV rows are ``arm,group,response,count``.  Integer and decimal counts are
    read as exact rationals; JSON floats stay floating point.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        doc = json.loads(text)
        doc = doc.get("table", doc)
        return ResponseTable.from_nested(doc, counts=True)
    reader = csv.DictReader(io.StringIO(text))
    need = {"arm", "group", "response", "count"}
    if not reader.fieldnames or not need <= set(reader.fieldnames):
        raise SchemaError(f"{path}: line 1: header must contain {sorted(need)}")
    cells = {}
    for line_no, row in enumerate(reader, start=2):
        key = (row["arm"].strip(), row["group"].strip(), row["response"].strip())
        try:
            cells[key] = Fraction(row["count"].strip())
        except ValueError:
            raise SchemaError(f"{path}: line {line_no}: bad count {row['count']!r}") from None
    try:
        return ResponseTable.from_counts(cells)
    except KeyError as exc:
        raise SchemaError(f"{path}: missing cell {exc.args[0]}") from None


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}: {exc.msg}") from None


def _params_from_doc(doc: dict) -> ModelParams:
    doc = doc.get("params", doc)
    try:
        return ModelParams(**{k: doc[k] for k in ("lam", "k", "beta1", "beta2", "beta3")})
    except KeyError as exc:
        raise SchemaError(f"params missing {exc.args[0]!r}") from None


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def _emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (SubmixError, OSError, ValueError) as exc:
            report = {"schema_version": SCHEMA_VERSION, "error": type(exc).__name__,
                      "message": str(exc)}
            click.echo(json.dumps(report), err=True)
            ctx.exit(2)


@click.group(cls=_Group)
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True)
def cli(verbose):
    """Subgroup mixable efficacy estimation for time-to-event trials."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")


def _analysis_options(f):
    f = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                     help="JSON analysis config; flags override it.")(f)
    f = click.option("--json-out", type=click.Path(dir_okay=False))(f)
    f = click.option("--input", type=click.Path(exists=True, dir_okay=False))(f)
    return f


def _merge_config(config_path, **flags) -> AnalysisConfig:
    doc = _load_json(config_path) if config_path else {}
    unknown = set(doc) - set(AnalysisConfig.__dataclass_fields__) - {"schema_version"}
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}")
    doc.pop("schema_version", None)
    doc.update({k: v for k, v in flags.items() if v is not None})
    if doc.get("input") is None:
        raise SchemaError("no input file given (--input)")
    return AnalysisConfig(**doc)


@cli.command("fit")
@_analysis_options
def cmd_fit(input, json_out, config):
    """Fit the Weibull-PH model to a CSV of subjects."""
    cfg = _merge_config(config, input=input, json_out=json_out)
    fit = fit_mle(read_survival_csv(cfg.input))
    doc = {"schema_version": SCHEMA_VERSION, "kind": "fit_result", **fit.to_dict()}
    _emit(_dumps(doc), cfg.json_out)


@cli.command("efficacy")
@_analysis_options
@click.option("--measure", type=click.Choice(["diff", "difference", "ratio"]))
@click.option("--summary", type=click.Choice(["median", "mean"]))
@click.option("--scale", type=click.Choice(["natural", "log"]))
@click.option("--alpha", type=float)
@click.option("--prevalence", type=float,
              help="Fixed g+ prevalence; defaults to the sample marker fraction.")
@click.option("--seed", type=int)
@click.option("--svg-out", type=click.Path(dir_okay=False))
def cmd_efficacy(input, json_out, config, measure, summary, scale, alpha, prevalence,
                 seed, svg_out):
    """Efficacy in g-, g+ and the mixture with simultaneous intervals."""
    cfg = _merge_config(config, input=input, json_out=json_out, measure=measure,
                        summary=summary, scale=scale, alpha=alpha, prevalence=prevalence,
                        seed=seed, svg_out=svg_out)
    data = read_survival_csv(cfg.input)
    fit = fit_mle(data)
    gamma = cfg.prevalence if cfg.prevalence is not None else float(data.marker.mean())
    report = efficacy(fit, gamma, cfg.measure, cfg.summary, cfg.scale, cfg.alpha,
                      seed=cfg.seed)
    doc = report.to_dict()
    doc["prevalence_source"] = cfg.prevalence_source
    doc["fit"] = fit.to_dict()
    _emit(_dumps(doc), cfg.json_out)
    if cfg.svg_out:
        Path(cfg.svg_out).write_text(render_mm_plot(MMPlotSpec.from_report(report)),
                                     encoding="utf-8")


@cli.command("simulate")
@click.option("--config", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Scenario JSON.")
@click.option("--json-out", type=click.Path(dir_okay=False))
@click.option("--table-out", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, help="Overrides master_seed in the config.")
@click.option("--workers", type=int, default=1, show_default=True)
def cmd_simulate(config, json_out, table_out, seed, workers):
    """Run a simulation study; prints the text table unless --table-out is set."""
    doc = _load_json(config)
    if seed is not None:
        doc["master_seed"] = seed
    metrics = run_study(ScenarioConfig.from_dict(doc), workers=workers)
    text = _dumps(metrics.to_dict())
    if json_out:
        Path(json_out).write_text(text, encoding="utf-8")
    if table_out:
        Path(table_out).write_text(metrics.table(), encoding="utf-8")
    if not json_out:
        click.echo(text, nl=False)
    if not table_out:
        click.echo(metrics.table(), nl=False, err=bool(not json_out))


@cli.command("rr")
@click.option("--input", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json-out", type=click.Path(dir_okay=False))
def cmd_rr(input, json_out):
    """Relative response per subgroup, overall, and mixed three ways."""
    _emit(_dumps(rr_report(read_response_table(input))), json_out)


def _parse_grid(spec: str) -> np.ndarray:
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise SchemaError("grid must be 'start:stop:num' or a comma list")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        return np.linspace(start, stop, num)
    return np.array([float(v) for v in spec.split(",") if v.strip()])


@cli.command("hr-curve")
@click.option("--config", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON with the five model parameters.")
@click.option("--prevalence", required=True, type=float)
@click.option("--t-grid", required=True, help="'start:stop:num' or comma list of times.")
@click.option("--event-fraction", type=float,
              help="Share of events in g+ for the event-weighted baseline "
                   "(default: the prevalence).")
@click.option("--out", type=click.Path(dir_okay=False))
def cmd_hr_curve(config, prevalence, t_grid, event_fraction, out):
    """Mixture hazard ratio over time next to the two constant baselines."""
    params = _params_from_doc(_load_json(config))
    mix = MixtureSpec.two_group(prevalence)
    grid = _parse_grid(t_grid)
    hr = np.atleast_1d(mixture_hazard_ratio(params, mix, grid))
    sub = subgroup_hazard_ratios(params)
    f = prevalence if event_fraction is None else event_fraction
    eq_events = naive_hr_event_weighted(sub[Group.G_PLUS], sub[Group.G_MINUS], f, 1.0)
    eq_ls = naive_hr_lsmeans(params)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "mixture_hr", "naive_event_weighted_hr_incorrect",
                     "naive_lsmeans_hr_incorrect"])
    for t, v in zip(grid, hr):
        writer.writerow([repr(float(t)), repr(float(v)), repr(eq_events), repr(eq_ls)])
    _emit(buf.getvalue(), out)


@cli.command("mmplot")
@click.option("--input", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Efficacy report JSON.")
@click.option("--svg-out", type=click.Path(dir_okay=False))
@click.option("--x-label", default="C")
@click.option("--y-label", default="Rx")
@click.option("--title", default="")
def cmd_mmplot(input, svg_out, x_label, y_label, title):
    """Render an efficacy report as an M&M plot."""
    doc = _load_json(input)
    if doc.get("kind") != "efficacy_report":
        raise SchemaError(f"{input}: expected an efficacy_report document")
    from .engine import EfficacyReport

    spec = MMPlotSpec.from_report(EfficacyReport.from_dict(doc), x_label=x_label,
                                  y_label=y_label, title=title)
    _emit(render_mm_plot(spec), svg_out)


def main(argv=None):
    return cli.main(args=argv, prog_name="submix", auto_envvar_prefix="SUBMIX")


if __name__ == "__main__":
    sys.exit(main())
