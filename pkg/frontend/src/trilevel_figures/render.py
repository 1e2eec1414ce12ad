"""Render one figure from a sweep CSV: heatmap, bars, curves, or surface.

    render --spec fig.json
    render rows.csv heatmap --x mu12 --y mu23 --value q_m \\
        --overlay separatrix.csv --out fig.png

The spec JSON mirrors the CLI flags:

    {"input": "rows.csv", "kind": "heatmap",
     "columns": {"x": "mu12", "y": "mu23", "value": "q_m"},
     "overlay": "separatrix.csv", "out": "fig.png"}

`--dump data.json` writes the bound data series as the exact strings read
from the CSV, so plotted values can be byte-checked against the source.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("heatmap", "bars", "curves", "surface")

# Column bindings per kind; list-valued bindings may repeat.
_REQUIRED = {
    "heatmap": ("x", "y", "value"),
    "bars": ("x", "height", "mean"),
    "curves": ("x", "y"),
    "surface": ("x", "y", "value"),
}
_OPTIONAL = {
    "heatmap": (),
    "bars": (),
    "curves": (),
    "surface": ("value2",),
}


class FigureError(Exception):
    """A figure spec or its data is unusable; the message names the defect."""


@dataclass
class FigureSpec:
    input: str
    kind: str
    columns: dict[str, object]
    out: str
    overlay: str | None = None
    dump: str | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"kind: expected one of {KINDS}, got {self.kind!r}")
        for key in _REQUIRED[self.kind]:
            if key not in self.columns:
                raise FigureError(f"columns.{key}: required for kind {self.kind!r}")
        allowed = set(_REQUIRED[self.kind]) | set(_OPTIONAL[self.kind])
        unknown = set(self.columns) - allowed
        if unknown:
            raise FigureError(
                f"columns: {sorted(unknown)} not used by kind {self.kind!r} "
                f"(allowed: {sorted(allowed)})"
            )


def load_spec(path: str) -> FigureSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FigureError(f"{path}: not valid JSON ({exc})") from exc
    known = {"input", "kind", "columns", "out", "overlay", "dump", "title"}
    unknown = set(doc) - known
    if unknown:
        raise FigureError(f"{path}: unknown spec fields {sorted(unknown)}")
    try:
        return FigureSpec(
            input=doc["input"],
            kind=doc["kind"],
            columns=dict(doc.get("columns") or {}),
            out=doc.get("out", "figure.png"),
            overlay=doc.get("overlay"),
            dump=doc.get("dump"),
            title=doc.get("title"),
        )
    except KeyError as exc:
        raise FigureError(f"{path}: missing required field {exc}") from exc


def load_csv(path: str) -> dict[str, list[str]]:
    """Columns of a CSV file as raw strings, keyed by header name."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path}: empty file") from None
        cols: dict[str, list[str]] = {name: [] for name in header}
        for row in reader:
            if len(row) != len(header):
                raise FigureError(f"{path}: row with {len(row)} cells, header has {len(header)}")
            for name, cell in zip(header, row):
                cols[name].append(cell)
    return cols


def _column(cols: dict[str, list[str]], name: str, path: str) -> list[str]:
    if name not in cols:
        raise FigureError(f"{path}: column {name!r} not in header ({list(cols)})")
    return cols[name]


def _floats(raw: list[str]) -> np.ndarray:
    return np.array([float(c) if c else np.nan for c in raw])


def _series_for_dump(spec: FigureSpec, cols: dict[str, list[str]]) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for key, bound in spec.columns.items():
        names = bound if isinstance(bound, list) else [bound]
        for name in names:
            out[name] = _column(cols, str(name), spec.input)
    return out


def _rect_grid(x: np.ndarray, y: np.ndarray, z: np.ndarray, path: str):
    """Reshape long-format (x, y, z) onto the complete rectangular grid."""
    xs = np.unique(x)
    ys = np.unique(y)
    if xs.size * ys.size != z.size:
        raise FigureError(
            f"{path}: ragged grid: {xs.size} x-values by {ys.size} y-values "
            f"but {z.size} rows"
        )
    Z = np.full((xs.size, ys.size), np.nan)
    xi = np.searchsorted(xs, x)
    yi = np.searchsorted(ys, y)
    seen = set(zip(xi.tolist(), yi.tolist()))
    if len(seen) != z.size:
        raise FigureError(f"{path}: duplicate grid points")
    Z[xi, yi] = z
    return xs, ys, Z


def _overlay_polyline(spec: FigureSpec, xname: str, yname: str):
    cols = load_csv(spec.overlay)
    ox = _column(cols, xname, spec.overlay)
    oy = _column(cols, yname, spec.overlay)
    pts = [(float(a), float(b)) for a, b in zip(ox, oy) if a and b]
    return np.array(pts)


def _poisson_pmf(mean: float, ms: np.ndarray) -> np.ndarray:
    if mean <= 0:
        return np.where(ms == 0, 1.0, 0.0)
    logs = ms * math.log(mean) - mean - np.array([math.lgamma(m + 1.0) for m in ms])
    return np.exp(logs)


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path; optionally dump data."""
    cols = load_csv(spec.input)
    if spec.dump:
        with open(spec.dump, "w", encoding="utf-8") as fh:
            json.dump(
                {"input": spec.input, "kind": spec.kind,
                 "series": _series_for_dump(spec, cols)},
                fh, indent=1,
            )

    fig = plt.figure(figsize=(6.4, 4.8), dpi=125)
    try:
        if spec.kind == "heatmap":
            _render_heatmap(spec, cols, fig)
        elif spec.kind == "bars":
            _render_bars(spec, cols, fig)
        elif spec.kind == "curves":
            _render_curves(spec, cols, fig)
        else:
            _render_surface(spec, cols, fig)
        fig.savefig(spec.out)
    finally:
        plt.close(fig)
    return spec.out


def _render_heatmap(spec: FigureSpec, cols, fig):
    xname, yname, zname = (str(spec.columns[k]) for k in ("x", "y", "value"))
    x = _floats(_column(cols, xname, spec.input))
    y = _floats(_column(cols, yname, spec.input))
    z = _floats(_column(cols, zname, spec.input))
    xs, ys, Z = _rect_grid(x, y, z, spec.input)
    ax = fig.add_subplot(111)
    mesh = ax.pcolormesh(xs, ys, Z.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=zname)
    if spec.overlay:
        pts = _overlay_polyline(spec, xname, yname)
        if pts.size:
            ax.plot(pts[:, 0], pts[:, 1], color="white", linewidth=2.0)
    ax.set_xlabel(xname)
    ax.set_ylabel(yname)
    ax.set_title(spec.title or zname)


def _render_bars(spec: FigureSpec, cols, fig):
    xname, hname, mname = (str(spec.columns[k]) for k in ("x", "height", "mean"))
    x = _floats(_column(cols, xname, spec.input))
    h = _floats(_column(cols, hname, spec.input))
    mean_raw = [c for c in _column(cols, mname, spec.input) if c]
    if not mean_raw:
        raise FigureError(f"{spec.input}: mean column {mname!r} is empty")
    mean = float(mean_raw[0])  # single source of truth from the CSV
    ax = fig.add_subplot(111)
    ax.bar(x, h, width=0.9, color="#4878a8", label=hname)
    ax.plot(x, _poisson_pmf(mean, x), "o", color="#c44e52", markersize=4,
            label=f"Poisson, mean {mean:.3g}")
    ax.set_xlabel(xname)
    ax.set_ylabel("probability")
    ax.legend()
    ax.set_title(spec.title or f"{hname} vs Poisson")


def _render_curves(spec: FigureSpec, cols, fig):
    xname = str(spec.columns["x"])
    ybound = spec.columns["y"]
    ynames = [str(n) for n in (ybound if isinstance(ybound, list) else [ybound])]
    x = _floats(_column(cols, xname, spec.input))
    ax = fig.add_subplot(111)
    # first series as a continuous line, the rest as dots
    for k, yname in enumerate(ynames):
        y = _floats(_column(cols, yname, spec.input))
        keep = ~np.isnan(y)
        if k == 0:
            ax.plot(x[keep], y[keep], "-", linewidth=1.6, label=yname)
        else:
            ax.plot(x[keep], y[keep], "o", markersize=3.5, label=yname)
    ax.set_xlabel(xname)
    ax.legend()
    ax.set_title(spec.title or ", ".join(ynames))


def _render_surface(spec: FigureSpec, cols, fig):
    xname, yname, zname = (str(spec.columns[k]) for k in ("x", "y", "value"))
    x = _floats(_column(cols, xname, spec.input))
    y = _floats(_column(cols, yname, spec.input))
    z = _floats(_column(cols, zname, spec.input))
    xs, ys, Z = _rect_grid(x, y, z, spec.input)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    ax = fig.add_subplot(111, projection="3d")
    ax.plot_surface(X, Y, np.nan_to_num(Z), cmap="viridis", alpha=0.9)
    if "value2" in spec.columns:
        z2 = _floats(_column(cols, str(spec.columns["value2"]), spec.input))
        _, _, Z2 = _rect_grid(x, y, z2, spec.input)
        stride = max(1, len(xs) // 16)
        ax.plot_wireframe(X, Y, np.nan_to_num(Z2), color="black", linewidth=0.5,
                          rstride=stride, cstride=stride)
    ax.set_xlabel(xname)
    ax.set_ylabel(yname)
    ax.set_zlabel(zname)
    ax.set_title(spec.title or zname)


def _spec_from_args(args: argparse.Namespace) -> FigureSpec:
    if args.spec:
        spec = load_spec(args.spec)
        if args.dump:
            spec.dump = args.dump
        if args.out:
            spec.out = args.out
        return spec
    if not args.input or not args.kind:
        raise FigureError("either --spec or positional CSV + kind are required")
    columns: dict[str, object] = {}
    if args.x:
        columns["x"] = args.x
    if args.y:
        columns["y"] = args.y[0] if len(args.y) == 1 else list(args.y)
    for key in ("value", "value2", "height", "mean"):
        if getattr(args, key):
            columns[key] = getattr(args, key)
    return FigureSpec(
        input=args.input,
        kind=args.kind,
        columns=columns,
        out=args.out or "figure.png",
        overlay=args.overlay,
        dump=args.dump,
        title=args.title,
    )


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render a figure from a trilevel sweep CSV",
    )
    parser.add_argument("input", nargs="?", help="CSV file (positional form)")
    parser.add_argument("kind", nargs="?", choices=KINDS, help="figure kind")
    parser.add_argument("--spec", help="JSON figure spec")
    parser.add_argument("--out", help="output PNG path")
    parser.add_argument("--overlay", help="separatrix polyline CSV (heatmap)")
    parser.add_argument("--dump", help="write plotted series as JSON")
    parser.add_argument("--title", help="figure title")
    parser.add_argument("--x", help="x column")
    parser.add_argument("--y", action="append", default=[], help="y column (repeatable)")
    parser.add_argument("--value", help="value column (heatmap/surface)")
    parser.add_argument("--value2", help="mesh overlay column (surface)")
    parser.add_argument("--height", help="bar height column (bars)")
    parser.add_argument("--mean", help="Poisson mean column (bars)")
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        out = render(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
