"""CSV/JSON serialization of results and emission of offline plot scripts.

Floats are written with ``repr`` (shortest string that round-trips), so a
file re-reads to bit-identical values and identical inputs give identical
bytes.  Missing values are an empty CSV field or JSON ``null``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .block_rg import Couplings, FlowTrace, flow
from .errors import MalformedResultFile
from .scaling import (
    ScalingFit,
    ScalingPoint,
    ScalingReport,
    SurfaceResult,
    SweepResult,
    canonical_observable,
    effective_size,
)

SWEEP_HEADER = ["n_steps", "N_eff", "J", "delta0", "D0", "delta_eff", "J_eff", "axis_value", "observable", "value"]
FLOW_HEADER = ["n", "N_eff", "J", "delta", "D", "saturated"]
SURFACE_HEADER = ["n_steps", "N_eff", "J", "D", "delta", "observable", "value"]


def fmt(x: float) -> str:
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _num(s: str) -> float:
    return math.nan if s == "" else float(s)


def _json_num(x):
    x = float(x)
    return None if math.isnan(x) else x


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


# sweeps


def sweep_rows(result: SweepResult):
    for k, (x, v) in enumerate(zip(result.grid, result.values)):
        c = result.couplings_at(k)
        final = flow(c, result.n_steps).final
        yield [
            result.n_steps,
            result.effective_size,
            fmt(c.J),
            fmt(c.Delta),
            fmt(c.D),
            fmt(final.Delta),
            fmt(final.J),
            fmt(x),
            result.observable,
            fmt(v),
        ]


def sweeps_to_csv(results: Sequence[SweepResult]) -> str:
    rows = [r for res in results for r in sweep_rows(res)]
    return _csv(SWEEP_HEADER, rows)


def sweep_to_dict(result: SweepResult) -> dict:
    f = result.fixed_params
    return {
        "axis": result.axis,
        "observable": result.observable,
        "n_steps": result.n_steps,
        "N_eff": result.effective_size,
        "fixed": {"J": f.J, "delta": f.Delta, "D": f.D},
        "grid": [float(x) for x in result.grid],
        "values": [_json_num(v) for v in result.values],
    }


def sweeps_to_json(results: Sequence[SweepResult]) -> str:
    return _json({"kind": "sweep", "series": [sweep_to_dict(r) for r in results]})


def _sweep_from_dict(d: dict) -> SweepResult:
    f = d["fixed"]
    return SweepResult(
        axis=d["axis"],
        grid=np.array(d["grid"], dtype=float),
        values=np.array([math.nan if v is None else v for v in d["values"]], dtype=float),
        n_steps=int(d["n_steps"]),
        observable=d["observable"],
        fixed_params=Couplings(J=f["J"], Delta=f["delta"], D=f["D"]),
    )


def _read_csv(text: str, header: Sequence[str]) -> list[list[str]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != list(header):
        raise MalformedResultFile(f"expected header {','.join(header)}")
    # concatenated files repeat the header; drop those lines
    body = [r for r in rows[1:] if r and r != list(header)]
    if any(len(r) != len(header) for r in body):
        raise MalformedResultFile("row length does not match header")
    return body


def _row_axes(p: dict) -> set[str]:
    axes = set()
    if p["x"] == p["delta0"]:
        axes.add("Delta")
    if p["x"] == p["D0"]:
        axes.add("D")
    return axes


def _extends(series: dict, p: dict) -> set[str]:
    """Axes under which row ``p`` continues ``series`` (empty if it starts a new one)."""
    last = series["rows"][-1]
    if (p["n"], p["obs"], p["J"]) != (last["n"], last["obs"], last["J"]) or not p["x"] > last["x"]:
        return set()
    ok = set()
    if "Delta" in series["axes"] and p["x"] == p["delta0"] and p["D0"] == last["D0"]:
        ok.add("Delta")
    if "D" in series["axes"] and p["x"] == p["D0"] and p["delta0"] == last["delta0"]:
        ok.add("D")
    return ok


def _sweeps_from_csv(text: str) -> list[SweepResult]:
    body = _read_csv(text, SWEEP_HEADER)
    if not body:
        raise MalformedResultFile("sweep file has no rows")
    # rows of one sweep are contiguous with increasing axis_value, so series
    # are split wherever a row cannot continue the previous one
    series: list[dict] = []
    for r in body:
        p = dict(n=int(r[0]), J=float(r[2]), delta0=float(r[3]), D0=float(r[4]), x=float(r[7]), obs=r[8],
                 v=_num(r[9]))
        axes = _row_axes(p)
        if not axes:
            raise MalformedResultFile("axis_value matches neither delta0 nor D0")
        ok = _extends(series[-1], p) if series else set()
        if ok:
            series[-1]["axes"] = ok
            series[-1]["rows"].append(p)
        else:
            series.append({"axes": axes, "rows": [p]})
    out = []
    for sr in series:
        ps = sr["rows"]
        # a single row with delta0 == D0 is ambiguous; read it as a Delta sweep
        axis = "Delta" if "Delta" in sr["axes"] else "D"
        first = ps[0]
        grid = np.array([p["x"] for p in ps])
        fixed = Couplings(J=first["J"], Delta=first["delta0"], D=first["D0"])
        out.append(SweepResult(axis, grid, np.array([p["v"] for p in ps]), first["n"],
                               canonical_observable(first["obs"]), fixed))
    return out


def read_sweeps(path: str | os.PathLike) -> list[SweepResult]:
    text = _read_text(path)
    try:
        if text.lstrip().startswith("{"):
            d = json.loads(text)
            if d.get("kind") != "sweep":
                raise MalformedResultFile("not a sweep JSON file")
            return [_sweep_from_dict(s) for s in d["series"]]
        return _sweeps_from_csv(text)
    except MalformedResultFile:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise MalformedResultFile(str(exc)) from exc


# flow


def flow_to_csv(trace: FlowTrace) -> str:
    rows = [
        [k, n_eff, fmt(c.J), fmt(c.Delta), fmt(c.D), int(sat)]
        for k, (c, n_eff, sat) in enumerate(zip(trace.steps, trace.effective_sizes, trace.saturated))
    ]
    return _csv(FLOW_HEADER, rows)


def flow_to_json(trace: FlowTrace) -> str:
    return _json(
        {
            "kind": "flow",
            "steps": [
                {"n": k, "N_eff": n_eff, "J": c.J, "delta": c.Delta, "D": c.D, "saturated": sat}
                for k, (c, n_eff, sat) in enumerate(zip(trace.steps, trace.effective_sizes, trace.saturated))
            ],
        }
    )


def read_flow(path: str | os.PathLike) -> FlowTrace:
    text = _read_text(path)
    try:
        if text.lstrip().startswith("{"):
            d = json.loads(text)
            if d.get("kind") != "flow":
                raise MalformedResultFile("not a flow JSON file")
            steps = [(s["J"], s["delta"], s["D"], bool(s["saturated"])) for s in d["steps"]]
        else:
            steps = [(float(r[2]), float(r[3]), float(r[4]), r[5] == "1") for r in _read_csv(text, FLOW_HEADER)]
        if not steps:
            raise MalformedResultFile("flow file has no rows")
        return FlowTrace(
            steps=tuple(Couplings(J=j, Delta=dl, D=d) for j, dl, d, _ in steps),
            saturated=tuple(s for *_, s in steps),
        )
    except MalformedResultFile:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise MalformedResultFile(str(exc)) from exc


# scaling


def _fit_dict(f: ScalingFit) -> dict:
    return {
        "slope": f.slope,
        "intercept": f.intercept,
        "r2": f.r_squared,
        "nu": f.nu_estimate,
        "points": [[a, b] for a, b in f.points],
    }


def scaling_to_dict(r: ScalingReport) -> dict:
    return {
        "kind": "scaling",
        "delta": r.delta,
        "d_c": r.d_c,
        "J": r.J,
        "points": [{"n": p.n, "N": p.N, "D_m": p.D_m, "min_value": p.min_value} for p in r.points],
        "position_fit": _fit_dict(r.position_fit),
        "divergence_fit": _fit_dict(r.divergence_fit),
    }


def scaling_to_json(r: ScalingReport) -> str:
    return _json(scaling_to_dict(r))


def _fit_from(d: dict) -> ScalingFit:
    return ScalingFit(
        slope=d["slope"],
        intercept=d["intercept"],
        r_squared=d["r2"],
        points=tuple((a, b) for a, b in d["points"]),
        nu_estimate=d["nu"],
    )


def read_scaling(path: str | os.PathLike) -> ScalingReport:
    text = _read_text(path)
    try:
        d = json.loads(text)
        if d.get("kind") != "scaling":
            raise MalformedResultFile("not a scaling JSON file")
        points = tuple(ScalingPoint(int(p["n"]), int(p["N"]), p["D_m"], p["min_value"]) for p in d["points"])
        return ScalingReport(
            delta=d["delta"],
            d_c=d["d_c"],
            points=points,
            position_fit=_fit_from(d["position_fit"]),
            divergence_fit=_fit_from(d["divergence_fit"]),
            J=d["J"],
        )
    except MalformedResultFile:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise MalformedResultFile(str(exc)) from exc


# surface


def surface_to_csv(s: SurfaceResult, J: float = 1.0) -> str:
    n_eff = effective_size(s.n_steps)
    rows = [
        [s.n_steps, n_eff, fmt(J), fmt(d), fmt(x), s.observable, fmt(s.values[i, j])]
        for i, d in enumerate(s.d_grid)
        for j, x in enumerate(s.delta_grid)
    ]
    return _csv(SURFACE_HEADER, rows)


def surface_to_json(s: SurfaceResult, J: float = 1.0) -> str:
    return _json(
        {
            "kind": "surface",
            "observable": s.observable,
            "n_steps": s.n_steps,
            "J": J,
            "delta_grid": [float(x) for x in s.delta_grid],
            "d_grid": [float(x) for x in s.d_grid],
            "values": [[_json_num(v) for v in row] for row in s.values],
        }
    )


def read_surface(path: str | os.PathLike) -> SurfaceResult:
    text = _read_text(path)
    try:
        if text.lstrip().startswith("{"):
            d = json.loads(text)
            if d.get("kind") != "surface":
                raise MalformedResultFile("not a surface JSON file")
            vals = np.array([[math.nan if v is None else v for v in row] for row in d["values"]], dtype=float)
            return SurfaceResult(
                np.array(d["delta_grid"], dtype=float), np.array(d["d_grid"], dtype=float), vals,
                int(d["n_steps"]), d["observable"],
            )
        body = _read_csv(text, SURFACE_HEADER)
        if not body:
            raise MalformedResultFile("surface file has no rows")
        d_vals = list(dict.fromkeys(float(r[3]) for r in body))
        x_vals = list(dict.fromkeys(float(r[4]) for r in body))
        if len(body) != len(d_vals) * len(x_vals):
            raise MalformedResultFile("surface rows do not form a full grid")
        vals = np.array([_num(r[6]) for r in body], dtype=float).reshape(len(d_vals), len(x_vals))
        return SurfaceResult(np.array(x_vals), np.array(d_vals), vals, int(body[0][0]), body[0][5])
    except MalformedResultFile:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise MalformedResultFile(str(exc)) from exc


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedResultFile(f"cannot read {path}: {exc}") from exc


# plot scripts

_READERS = {"sweep": read_sweeps, "flow": read_flow, "scaling": read_scaling, "surface": read_surface}

_PLOT_HEAD = '''"""Plot {data}. Generated by dmqrg; reads the data file next to this script."""
import csv
import json
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

DATA = Path(__file__).with_name({data!r})
'''

_PLOT_BODY = {
    "sweep": '''
def rows():
    text = DATA.read_text()
    if text.lstrip().startswith("{{"):
        for s in json.loads(text)["series"]:
            for x, v in zip(s["grid"], s["values"]):
                yield s, x, v
        return
    for r in csv.DictReader(text.splitlines()):
        if r["n_steps"] == "n_steps":
            continue
        yield r, float(r["axis_value"]), (float(r["value"]) if r["value"] else None)


series = defaultdict(lambda: ([], []))
for meta, x, v in rows():
    if "axis" in meta:
        key = (meta["observable"], meta["n_steps"], meta["fixed"]["D"] if meta["axis"] == "Delta" else meta["fixed"]["delta"])
    else:
        on_delta = meta["axis_value"] == meta["delta0"]
        key = (meta["observable"], meta["n_steps"], meta["D0"] if on_delta else meta["delta0"])
    if v is not None:
        series[key][0].append(x)
        series[key][1].append(v)

fig, ax = plt.subplots(figsize=(6, 4))
for (obs, n, fixed), (xs, ys) in series.items():
    ax.plot(xs, ys, label=f"{{obs}}, n={{n}}, fixed={{float(fixed):.4g}}")
ax.set_xlabel("{xlabel}")
ax.set_ylabel("value")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=200)
''',
    "flow": '''
rows = [r for r in csv.DictReader(DATA.read_text().splitlines())] if not DATA.read_text().lstrip().startswith("{{") \\
    else json.loads(DATA.read_text())["steps"]
ns = [int(r["n"]) for r in rows]
deltas = [float(r["delta"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(ns, deltas, "o-")
ax.set_xlabel("RG step n")
ax.set_ylabel("Delta_n")
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=200)
''',
    "scaling": '''
d = json.loads(DATA.read_text())
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, key, label in zip(axes, ("position_fit", "divergence_fit"), ("ln(D_c - D_m)", "ln|dC/dDelta|_min")):
    fit = d[key]
    xs = [p[0] for p in fit["points"]]
    ys = [p[1] for p in fit["points"]]
    ax.plot(xs, ys, "o", label="data")
    ax.plot(xs, [fit["slope"] * x + fit["intercept"] for x in xs], "-",
            label=f"slope {{fit['slope']:.3f}}, r2 {{fit['r2']:.4f}}")
    ax.set_xlabel("ln N")
    ax.set_ylabel(label)
    ax.legend()
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=200)
''',
    "surface": '''
import numpy as np

text = DATA.read_text()
if text.lstrip().startswith("{{"):
    d = json.loads(text)
    xs, ds = d["delta_grid"], d["d_grid"]
    z = np.array([[np.nan if v is None else v for v in row] for row in d["values"]])
else:
    rows = list(csv.DictReader(text.splitlines()))
    ds = list(dict.fromkeys(float(r["D"]) for r in rows))
    xs = list(dict.fromkeys(float(r["delta"]) for r in rows))
    z = np.array([float(r["value"]) if r["value"] else np.nan for r in rows]).reshape(len(ds), len(xs))
fig, ax = plt.subplots(figsize=(6, 4.5))
mesh = ax.pcolormesh(ds, xs, z.T, shading="nearest", cmap="viridis")
dd = np.linspace(min(ds), max(ds), 200)
ax.plot(dd, np.sqrt(1 + dd ** 2), "w--", lw=1, label="sqrt(1 + D^2)")
ax.set_xlabel("D")
ax.set_ylabel("Delta")
ax.legend()
fig.colorbar(mesh, label="dC13/dDelta")
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=200)
''',
}


def emit_plot_script(result_path: str | os.PathLike, kind: str) -> Path:
    """Write ``<stem>_plot.py`` next to ``result_path`` and return its path.

    The result file is parsed first; the script only references it by name.
    """
    if kind not in _READERS:
        raise ValueError(f"kind must be one of {sorted(_READERS)}, got {kind!r}")
    result_path = Path(result_path)
    parsed = _READERS[kind](result_path)
    xlabel = ""
    if kind == "sweep":
        xlabel = parsed[0].axis
    script = _PLOT_HEAD.format(data=result_path.name) + _PLOT_BODY[kind].format(xlabel=xlabel)
    out = result_path.with_name(result_path.stem + "_plot.py")
    atomic_write(out, script)
    return out
