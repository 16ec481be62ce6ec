"""Built-in instances, the golden table, and report/plot emission."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import mappings as mp
from .core import Box, bregman_distance, quartic, section6_quadratic
from .iterations import (IterationConfig, IterationTrace, closed_form_section6_step, run,
                         section6_schedule)

TABLE1_TOL = 1e-6
ORACLE_TOL = 1e-12

# n, z_n, y_n, x_{n+1}, |x_{n+1} - x_n|
GOLDEN_TABLE1 = np.array([
    [1, -0.7680000, -0.7808000, -0.7790384, 0.0209616],
    [2, -0.6232307, -0.6699730, -0.6692031, 0.1098353],
    [3, -0.4996716, -0.5448800, -0.5444501, 0.1247530],
    [4, -0.3920041, -0.4301156, -0.4298505, 0.1145996],
    [5, -0.3026148, -0.3331513, -0.3329781, 0.0968724],
    [6, -0.2308648, -0.2546912, -0.2545730, 0.0784051],
    [7, -0.1745643, -0.1928520, -0.1927684, 0.0618046],
    [8, -0.1310825, -0.1449618, -0.1449006, 0.0478678],
    [9, -0.0978884, -0.1083355, -0.1082892, 0.0366113],
    [10, -0.0727704, -0.0805845, -0.0805484, 0.0277408],
    [11, -0.0538942, -0.0597097, -0.0596806, 0.0208678],
    [12, -0.0397871, -0.0440974, -0.0440733, 0.0156073],
    [13, -0.0292918, -0.0324755, -0.0324551, 0.0116182],
    [14, -0.0215131, -0.0238578, -0.0238402, 0.0086150],
    [15, -0.0157663, -0.0174887, -0.0174730, 0.0063671],
    [16, -0.0115322, -0.0127946, -0.0127805, 0.0046925],
    [17, -0.0084201, -0.0093435, -0.0093306, 0.0034499],
    [18, -0.0061375, -0.0068116, -0.0067997, 0.0025309],
    [19, -0.0044663, -0.0049576, -0.0049465, 0.0018532],
    [20, -0.0032449, -0.0036023, -0.0035919, 0.0013546],
    [21, -0.0023536, -0.0026130, -0.0026032, 0.0009887],
    [22, -0.0017039, -0.0018920, -0.0018827, 0.0007205],
    [23, -0.0012311, -0.0013671, -0.0013583, 0.0005244],
    [24, -0.0008874, -0.0009855, -0.0009771, 0.0003812],
    [25, -0.0006379, -0.0007084, -0.0007004, 0.0002767],
    [26, -0.0004569, -0.0005074, -0.0004997, 0.0002007],
    [27, -0.0003257, -0.0003618, -0.0003544, 0.0001453],
    [28, -0.0002309, -0.0002564, -0.0002493, 0.0001051],
    [29, -0.0001623, -0.0001803, -0.0001734, 0.0000759],
    [30, -0.0001128, -0.0001253, -0.0001187, 0.0000547],
    [31, -0.0000772, -0.0000857, -0.0000793, 0.0000394],
    [32, -0.0000515, -0.0000572, -0.0000510, 0.0000283],
    [33, -0.0000331, -0.0000368, -0.0000307, 0.0000202],
    [34, -0.0000200, -0.0000222, -0.0000163, 0.0000144],
    [35, -0.0000106, -0.0000118, -0.0000060, 0.0000103],
    [36, -0.0000039, -0.0000044, 0.0000012, 0.0000072],
    [37, 0.0000008, 0.0000009, 0.0000063, 0.0000051],
    [38, 0.0000041, 0.0000045, 0.0000098, 0.0000035],
    [39, 0.0000063, 0.0000070, 0.0000122, 0.0000024],
    [40, 0.0000079, 0.0000088, 0.0000138, 0.0000016],
    [41, 0.0000089, 0.0000099, 0.0000148, 0.0000010],
    [42, 0.0000096, 0.0000106, 0.0000154, 0.0000006],
])
TABLE1_COLUMNS = ("z", "y", "x", "step_diff")
SECTION6_X1 = -0.8
SECTION6_U = 0.1


def section6_config(max_iter: int = 42) -> IterationConfig:
    """Halpern instance: f = (4/5)x^2, Tx = x/5 on [-1, 1], x1 = -0.8, u = 0.1."""
    c = Box.cube(-1.0, 1.0)
    return IterationConfig(
        scheme="bregman_halpern",
        t=mp.scaling(0.2, c),
        c=c,
        x1=np.array([SECTION6_X1]),
        schedule=section6_schedule(),
        bf=section6_quadratic(),
        anchor_u=np.array([SECTION6_U]),
        max_iter=max_iter,
        ref=np.zeros(1),
    )


def trace_table(trace: IterationTrace) -> np.ndarray:
    """1-D trace as rows ``(n, z, y, x_next, step_diff)``."""
    return np.array([[r.n, r.z[0], r.y[0], r.x_next[0], r.step_norm] for r in trace.rows])


def oracle_table(n_rows: int = 42, x1: float = SECTION6_X1, u: float = SECTION6_U) -> np.ndarray:
    rows, x = [], x1
    for n in range(1, n_rows + 1):
        z, y, x_next = closed_form_section6_step(n, x, u)
        rows.append([n, z, y, x_next, abs(x_next - x)])
        x = x_next
    return np.array(rows)


@dataclass
class Table1Report:
    table: np.ndarray
    max_dev: Dict[str, float]
    oracle_dev: float
    runtime: float
    trace: IterationTrace = field(repr=False)

    @property
    def worst_dev(self) -> float:
        return max(self.max_dev.values())

    @property
    def passed(self) -> bool:
        return self.worst_dev <= TABLE1_TOL and self.oracle_dev <= ORACLE_TOL

    def lines(self) -> List[str]:
        out = [f"table1 rows={len(self.table)} runtime={self.runtime:.4f}s"]
        out += [f"max_dev[{k}]={v:.3e}" for k, v in self.max_dev.items()]
        out.append(f"oracle_dev={self.oracle_dev:.3e}")
        out.append(f"verdict={'pass' if self.passed else 'fail'}")
        return out


def reproduce_table1() -> Table1Report:
    """Run the Halpern instance for 42 steps and diff it against the golden table."""
    start = time.perf_counter()
    trace = run(section6_config())
    runtime = time.perf_counter() - start
    got = trace_table(trace)
    dev = np.abs(got[:, 1:] - GOLDEN_TABLE1[:, 1:]).max(axis=0)
    oracle_dev = float(np.abs(got[:, 1:] - oracle_table()[:, 1:]).max())
    return Table1Report(got, dict(zip(TABLE1_COLUMNS, map(float, dev))), oracle_dev, runtime, trace)


@dataclass
class ClaimResult:
    claim: str
    expected: str
    confirmed: bool
    detail: str


@dataclass
class Example1Report:
    claims: List[ClaimResult]
    reports: List[mp.PropertyReport]
    fixed_points: list
    closed_form_dev: float

    @property
    def passed(self) -> bool:
        return all(c.confirmed for c in self.claims)

    def lines(self) -> List[str]:
        out = [r.to_line() for r in self.reports]
        out += [f"claim={c.claim} expected={c.expected} "
                f"result={'confirmed' if c.confirmed else 'refuted'} {c.detail}" for c in self.claims]
        out.append(f"verdict={'pass' if self.passed else 'fail'}")
        return out


def example1_closed_form(x, y):
    return x ** 4 + 3 * y ** 4 - 4 * x * y ** 3


def run_example1_suite(grid: int = 91, alphas=mp.DEFAULT_ALPHAS, bregman_alphas=(0.5, 0.6, 0.7, 0.8, 0.9),
                       refine_tol: float = 1e-10, n_pairs: int = 10_000, seed: int = 0,
                       jobs: int = 1) -> Example1Report:
    """Check each claim made about ``Tx = x^2`` on ``[0, 0.9]`` with ``f = x^4``.

    ``grid=91`` is a 0.01 step on ``[0, 0.9]``. Each claim is reported as
    confirmed or refuted on that grid; the suite passes only when all are
    confirmed.
    """
    bf = quartic(domain=Box.cube(-2.0, 2.0))
    t = mp.square()
    reports, claims = [], []

    for a in bregman_alphas:
        r = mp.check_bregman_generalized_alpha(bf, t, a, grid, jobs=jobs)
        reports.append(r)
        claims.append(ClaimResult(f"bregman_generalized_alpha[{a:g}]", mp.HOLDS, r.holds,
                                  f"worst_margin={r.worst_margin:.12g}"))

    for name, check in (("nonexpansive", mp.check_nonexpansive), ("condition_C", mp.check_condition_C)):
        r = check(t, grid, jobs=jobs)
        reports.append(r)
        claims.append(ClaimResult(name, mp.VIOLATED, not r.holds, f"worst_margin={r.worst_margin:.12g}"))
    for name, check in (("alpha_nonexpansive", mp.check_alpha_nonexpansive),
                        ("generalized_alpha", mp.check_generalized_alpha)):
        for a in alphas:
            r = check(t, a, grid, jobs=jobs)
            reports.append(r)
            claims.append(ClaimResult(f"{name}[{a:g}]", mp.VIOLATED, not r.holds,
                                      f"worst_margin={r.worst_margin:.12g}"))

    fps = mp.find_fixed_points(t, grid, refine_tol)
    ok = len(fps) == 1 and abs(fps[0][0]) <= refine_tol and not fps.degenerate
    claims.append(ClaimResult("fixed_points", "{0}", ok, "found=" + str([p.tolist() for p in fps])))

    rng = np.random.default_rng(seed)
    pairs = rng.uniform(0.0, 0.9, size=(n_pairs, 2))
    dev = max(abs(bregman_distance(bf, x, y) - example1_closed_form(x, y)) for x, y in pairs)
    claims.append(ClaimResult("closed_form_distance", "x^4+3y^4-4xy^3", dev <= ORACLE_TOL,
                              f"max_dev={dev:.3e}"))
    return Example1Report(claims, reports, list(fps), float(dev))


# -- plot data ----------------------------------------------------------------

def _svg_chart(series: Dict[str, np.ndarray], n: np.ndarray, width=640, height=400) -> str:
    pad = 50
    allv = np.concatenate(list(series.values()))
    lo, hi = float(allv.min()), float(allv.max())
    if hi - lo < 1e-15:
        lo, hi = lo - 1.0, hi + 1.0
    nmin, nmax = float(n.min()), float(max(n.max(), n.min() + 1))
    sx = lambda v: pad + (v - nmin) / (nmax - nmin) * (width - 2 * pad)
    sy = lambda v: height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)
    colors = {"x": "#1f77b4", "y": "#d62728", "z": "#2ca02c"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             '<rect width="100%" height="100%" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{pad}" y="{pad - 10}" font-size="12">{hi:.4g}</text>',
             f'<text x="{pad}" y="{height - pad + 15}" font-size="12">{lo:.4g}</text>',
             f'<text x="{width - pad}" y="{height - pad + 15}" font-size="12" '
             f'text-anchor="end">n={int(nmax)}</text>']
    for i, (name, v) in enumerate(series.items()):
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(n, v))
        col = colors.get(name, "#444444")
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 60}" y="{pad + 15 * i}" font-size="12" fill="{col}">'
                     f'{name}_n</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot_data(trace: IterationTrace, path, svg: Optional[str] = None) -> Path:
    """Write ``n,x,y,z`` columns for plotting (first coordinate of each point).

    ``x`` is ``x_n``. Missing ``y``/``z`` columns are left empty. When ``svg``
    is given, a standalone line chart of the available series is written there.
    """
    if trace is None or len(trace.rows) == 0:
        raise ValueError("cannot plot an empty trace")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = np.array([r.n for r in trace.rows], dtype=float)
    series = {"x": np.array([r.x[0] for r in trace.rows])}
    for name in ("y", "z"):
        vals = [getattr(r, name) for r in trace.rows]
        if all(v is not None for v in vals):
            series[name] = np.array([v[0] for v in vals])
    with open(path, "w") as fh:
        fh.write("n,x,y,z\n")
        for i in range(len(n)):
            cells = [f"{series[k][i]:.17g}" if k in series else "" for k in ("x", "y", "z")]
            fh.write(f"{int(n[i])}," + ",".join(cells) + "\n")
    if svg is not None:
        Path(svg).write_text(_svg_chart(series, n))
    return path


# -- registry -----------------------------------------------------------------

@dataclass
class ExperimentSpec:
    id: str
    description: str
    runner: Callable[[Path], bool]
    expected: Optional[str] = None


def _run_table1(out: Path) -> bool:
    rep = reproduce_table1()
    rep.trace.write_csv(out)
    (out / "report.txt").write_text("\n".join(rep.lines()) + "\n")
    return rep.passed


def _run_example1(out: Path) -> bool:
    rep = run_example1_suite()
    (out / "report.txt").write_text("\n".join(rep.lines()) + "\n")
    return rep.passed


def _run_figure1(out: Path) -> bool:
    trace = run(section6_config())
    trace.write_csv(out)
    emit_plot_data(trace, out / "plot_data.csv", svg=out / "plot.svg")
    last = trace.rows[-1]
    ends = [abs(last.x_next[0]), abs(last.y[0]), abs(last.z[0])]
    ok = max(ends) <= 2e-5
    (out / "report.txt").write_text(
        f"figure1 rows={len(trace)} final |x|={ends[0]:.3e} |y|={ends[1]:.3e} |z|={ends[2]:.3e}\n"
        f"verdict={'pass' if ok else 'fail'}\n")
    return ok


EXPERIMENTS: Dict[str, ExperimentSpec] = {
    s.id: s for s in (
        ExperimentSpec("table1", "Bregman Halpern iteration vs the published 42-row table",
                       _run_table1, "GOLDEN_TABLE1"),
        ExperimentSpec("example1", "class verdicts for Tx = x^2 on [0, 0.9] with f = x^4",
                       _run_example1),
        ExperimentSpec("figure1", "x_n, y_n, z_n series of the Halpern run as data and SVG",
                       _run_figure1),
    )
}


def run_experiment(exp_id: str, out_dir) -> bool:
    """Run a registered experiment writing into ``<out_dir>/<exp_id>/``."""
    spec = EXPERIMENTS[exp_id]
    out = Path(out_dir) / exp_id
    out.mkdir(parents=True, exist_ok=True)
    return bool(spec.runner(out))
