"""M&M plots as standalone SVG.

Each group is a point ``(x, y) = (control summary, treatment summary)``.
The 45-degree line marks no effect.  For a difference measure the interval is
a segment through the point perpendicular to the diagonal, whose endpoints
have ``y - x`` equal to the interval bounds.  For a ratio measure the
interval is an arc of the origin-centered circle through the point, spanning
polar angles ``atan(low)`` to ``atan(high)``.  Both axes share one scale so
the diagonal is drawn at 45 degrees.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .engine import EfficacyReport, Measure, SUMMARY_LABELS
from .errors import DomainError

SVG_NS = "http://www.w3.org/2000/svg"

DEFAULT_STYLE = {
    "g_minus": {"color": "#d62728", "marker": "circle"},
    "g_plus": {"color": "#2ca02c", "marker": "square"},
    "mixture": {"color": "#1f77b4", "marker": "diamond"},
}
_FALLBACK = {"color": "#555555", "marker": "circle"}


def perpendicular_offset(x: float, y: float) -> float:
    """Signed Euclidean distance from ``(x, y)`` to the diagonal (positive above)."""
    return (y - x) / math.sqrt(2.0)


def difference_segment(x: float, y: float, low: float, high: float):
    """Endpoints of the perpendicular interval segment through ``(x, y)``.

    Moving along ``(-1, 1)`` by ``delta / 2`` changes ``y - x`` by ``delta``,
    so each endpoint satisfies ``y' - x' = bound``.
    """
    d = y - x
    return tuple((x - (b - d) / 2.0, y + (b - d) / 2.0) for b in (low, high))


def arc_angles(low: float, high: float) -> tuple[float, float]:
    """Polar angles in degrees of the ratio-interval arc endpoints."""
    return math.degrees(math.atan(low)), math.degrees(math.atan(high))


def ratio_arc(x: float, y: float, low: float, high: float):
    """Radius and endpoints of the ratio-interval arc through ``(x, y)``."""
    r = math.hypot(x, y)
    ends = tuple((r * math.cos(math.atan(b)), r * math.sin(math.atan(b)))
                 for b in (low, high))
    return r, ends


@dataclass(frozen=True)
class MMPoint:
    role: str
    x: float
    y: float
    interval: tuple | None = None
    label: str | None = None

    def __post_init__(self):
        if not (self.x > 0 and self.y > 0):
            raise DomainError(f"point coordinates must be positive, got ({self.x}, {self.y})")
        if self.interval is not None:
            lo, hi = map(float, self.interval)
            if not lo <= hi:
                raise DomainError(f"interval low must not exceed high, got {self.interval}")
            object.__setattr__(self, "interval", (lo, hi))


@dataclass(frozen=True)
class MMPlotSpec:
    points: tuple
    measure: Measure = Measure.DIFFERENCE
    x_label: str = "C"
    y_label: str = "Rx"
    title: str = ""
    width: int = 480
    height: int = 480
    margin: int = 60
    style: dict = field(default_factory=lambda: dict(DEFAULT_STYLE))

    def __post_init__(self):
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise DomainError("nothing to plot")

    @classmethod
    def from_report(cls, report: EfficacyReport, **kwargs) -> "MMPlotSpec":
        s = dict(zip(SUMMARY_LABELS, report.summaries))
        pts = []
        for est in report.estimates:
            g = est.group
            pts.append(MMPoint(g, s[f"C_{g}"], s[f"Rx_{g}"], (est.sci_low, est.sci_high)))
        measure = report.estimates[0].measure
        return cls(tuple(pts), measure, **kwargs)


@dataclass(frozen=True)
class Layout:
    """Data-to-pixel mapping with equal scale on both axes."""

    origin_x: float
    origin_y: float
    scale: float
    axis_max: float

    def to_px(self, x: float, y: float) -> tuple[float, float]:
        return self.origin_x + x * self.scale, self.origin_y - y * self.scale

    def to_data(self, px: float, py: float) -> tuple[float, float]:
        return (px - self.origin_x) / self.scale, (self.origin_y - py) / self.scale


def _extent(spec: MMPlotSpec) -> float:
    top = 0.0
    for p in spec.points:
        top = max(top, p.x, p.y)
        if p.interval is None:
            continue
        if spec.measure is Measure.DIFFERENCE:
            for ex, ey in difference_segment(p.x, p.y, *p.interval):
                top = max(top, ex, ey)
        else:
            top = max(top, math.hypot(p.x, p.y))
    return 1.15 * top


def layout(spec: MMPlotSpec) -> Layout:
    side = min(spec.width, spec.height) - 2 * spec.margin
    if side <= 0:
        raise DomainError(f"canvas {spec.width}x{spec.height} leaves no room inside "
                          f"margin {spec.margin}")
    axis_max = _extent(spec)
    return Layout(spec.margin, spec.height - spec.margin, side / axis_max, axis_max)


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _nice_step(span: float) -> float:
    raw = span / 5
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if mult * mag >= raw:
            return mult * mag
    return 10 * mag


def _marker(parent, kind: str, px: float, py: float, color: str, ident: str):
    r = 6.0
    attrs = {"id": ident, "fill": color, "stroke": "black", "stroke-width": "0.8"}
    if kind == "square":
        ET.SubElement(parent, "rect", x=_fmt(px - r), y=_fmt(py - r),
                      width=_fmt(2 * r), height=_fmt(2 * r), **attrs)
    elif kind == "diamond":
        pts = [(px, py - r * 1.3), (px + r * 1.3, py), (px, py + r * 1.3), (px - r * 1.3, py)]
        ET.SubElement(parent, "polygon",
                      points=" ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts), **attrs)
    else:
        ET.SubElement(parent, "circle", cx=_fmt(px), cy=_fmt(py), r=_fmt(r), **attrs)


def render_mm_plot(spec: MMPlotSpec) -> str:
    """Render ``spec`` as SVG 1.1 text."""
    lay = layout(spec)
    w, h, m = spec.width, spec.height, spec.margin
    ET.register_namespace("", SVG_NS)
    svg = ET.Element("svg", xmlns=SVG_NS, version="1.1", width=str(w), height=str(h),
                     viewBox=f"0 0 {w} {h}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(w), height=str(h), fill="white")
    defs = ET.SubElement(svg, "defs")
    clip = ET.SubElement(defs, "clipPath", id="plot-area")
    x0, y0 = lay.to_px(0, 0)
    x1, y1 = lay.to_px(lay.axis_max, lay.axis_max)
    ET.SubElement(clip, "rect", x=_fmt(x0), y=_fmt(y1), width=_fmt(x1 - x0),
                  height=_fmt(y0 - y1))

    axes = ET.SubElement(svg, "g", id="axes", stroke="black", fill="none")
    ET.SubElement(axes, "line", x1=_fmt(x0), y1=_fmt(y0), x2=_fmt(x1), y2=_fmt(y0))
    ET.SubElement(axes, "line", x1=_fmt(x0), y1=_fmt(y0), x2=_fmt(x0), y2=_fmt(y1))
    ticks = ET.SubElement(svg, "g", id="ticks", fill="black",
                          **{"font-size": "11", "font-family": "sans-serif"})
    step = _nice_step(lay.axis_max)
    v = 0.0
    while v <= lay.axis_max + 1e-9:
        tx, _ = lay.to_px(v, 0)
        _, ty = lay.to_px(0, v)
        ET.SubElement(ticks, "line", x1=_fmt(tx), y1=_fmt(y0), x2=_fmt(tx), y2=_fmt(y0 + 4),
                      stroke="black")
        ET.SubElement(ticks, "line", x1=_fmt(x0 - 4), y1=_fmt(ty), x2=_fmt(x0), y2=_fmt(ty),
                      stroke="black")
        ET.SubElement(ticks, "text", x=_fmt(tx), y=_fmt(y0 + 16),
                      **{"text-anchor": "middle"}).text = f"{v:g}"
        ET.SubElement(ticks, "text", x=_fmt(x0 - 7), y=_fmt(ty + 4),
                      **{"text-anchor": "end"}).text = f"{v:g}"
        v += step
    labels = ET.SubElement(svg, "g", id="labels", **{"font-size": "13",
                                                     "font-family": "sans-serif"})
    ET.SubElement(labels, "text", x=_fmt((x0 + x1) / 2), y=_fmt(h - m / 3),
                  **{"text-anchor": "middle"}).text = spec.x_label
    ET.SubElement(labels, "text", x=_fmt(m / 3), y=_fmt((y0 + y1) / 2),
                  transform=f"rotate(-90 {_fmt(m / 3)} {_fmt((y0 + y1) / 2)})",
                  **{"text-anchor": "middle"}).text = spec.y_label
    if spec.title:
        ET.SubElement(labels, "text", x=_fmt(w / 2), y=_fmt(m / 2),
                      **{"text-anchor": "middle"}).text = spec.title

    plot = ET.SubElement(svg, "g", id="plot", **{"clip-path": "url(#plot-area)"})
    ET.SubElement(plot, "line", id="diagonal", x1=_fmt(x0), y1=_fmt(y0), x2=_fmt(x1),
                  y2=_fmt(y1), stroke="gray", **{"stroke-dasharray": "5,4"})

    for p in spec.points:
        sty = spec.style.get(p.role, _FALLBACK)
        color = sty["color"]
        # Effect line: constant difference (slope 1) or constant ratio (through origin).
        if spec.measure is Measure.DIFFERENCE:
            d = p.y - p.x
            a, b = lay.to_px(0, d), lay.to_px(lay.axis_max, lay.axis_max + d)
        else:
            slope = p.y / p.x
            end = min(lay.axis_max, lay.axis_max / slope)
            a, b = lay.to_px(0, 0), lay.to_px(end, end * slope)
        ET.SubElement(plot, "line", id=f"effect-{p.role}", x1=_fmt(a[0]), y1=_fmt(a[1]),
                      x2=_fmt(b[0]), y2=_fmt(b[1]), stroke=color,
                      **{"stroke-width": "1", "stroke-opacity": "0.6"})
        if p.interval is not None:
            if spec.measure is Measure.DIFFERENCE:
                (ax, ay), (bx, by) = difference_segment(p.x, p.y, *p.interval)
                pa, pb = lay.to_px(ax, ay), lay.to_px(bx, by)
                ET.SubElement(plot, "line", id=f"ci-{p.role}", x1=_fmt(pa[0]),
                              y1=_fmt(pa[1]), x2=_fmt(pb[0]), y2=_fmt(pb[1]), stroke=color,
                              **{"stroke-width": "2.5"})
            else:
                r, ((ax, ay), (bx, by)) = ratio_arc(p.x, p.y, *p.interval)
                pa, pb = lay.to_px(ax, ay), lay.to_px(bx, by)
                lo_deg, hi_deg = arc_angles(*p.interval)
                large = 1 if hi_deg - lo_deg > 180 else 0
                rp = _fmt(r * lay.scale)
                ET.SubElement(plot, "path", id=f"ci-{p.role}", fill="none", stroke=color,
                              d=f"M {_fmt(pa[0])} {_fmt(pa[1])} A {rp} {rp} 0 {large} 0 "
                                f"{_fmt(pb[0])} {_fmt(pb[1])}",
                              **{"stroke-width": "2.5"})
        px, py = lay.to_px(p.x, p.y)
        _marker(plot, sty["marker"], px, py, color, f"point-{p.role}")
        if p.label:
            ET.SubElement(labels, "text", x=_fmt(px + 9), y=_fmt(py - 9),
                          fill=color).text = p.label

    ET.indent(svg)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"
