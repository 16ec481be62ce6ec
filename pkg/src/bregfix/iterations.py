"""Ishikawa, Noor, Bregman Noor and Bregman Halpern iterations with traces.

The Bregman schemes combine points in the dual space through ``grad f`` and
map back with ``grad f*``. Where the first stage produces ``z_n``, the
``z_space`` option decides whether ``z_n`` is mapped back to the primal space
(``"primal"``) or kept as the raw dual combination (``"dual"``). The Halpern
default is ``"dual"``: that is the arithmetic behind the published table, where
``z_n = (16n+8)/(25n) x_n`` is fed straight into ``grad f``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from .core import BregmanFunction, Box, as_point, bregman_project, divergence
from .errors import ConfigError, DomainError, NumericError, ScheduleError
from .mappings import Mapping

SCHEMES = ("ishikawa", "noor", "bregman_noor", "bregman_halpern")
BREGMAN_SCHEMES = ("bregman_noor", "bregman_halpern")
DEFAULT_Z_SPACE = {"bregman_noor": "primal", "bregman_halpern": "dual"}

Rule = Callable[[int], float]


@dataclass(frozen=True)
class Schedule:
    """Three step-size rules ``n -> [0, 1)``, indexed from ``n = 1``.

    Rules should accept numpy integer arrays as well as ints so the control
    condition diagnostics can evaluate long horizons in one call.
    """

    alpha: Rule
    beta: Rule
    gamma: Rule
    name: str = "custom"

    def values(self, n: int):
        out = (float(self.alpha(n)), float(self.beta(n)), float(self.gamma(n)))
        for label, v in zip("abg", out):
            if not (0.0 <= v < 1.0):
                raise ScheduleError(f"schedule {self.name}: {_RULE_NAMES[label]}_{n} = {v!r} not in [0,1)")
        return out

    def arrays(self, horizon: int):
        n = np.arange(1, horizon + 1, dtype=float)
        out = []
        for label, rule in zip("abg", (self.alpha, self.beta, self.gamma)):
            v = np.broadcast_to(np.asarray(rule(n), dtype=float), n.shape)
            bad = np.flatnonzero((v < 0) | (v >= 1) | ~np.isfinite(v))
            if bad.size:
                k = int(bad[0])
                raise ScheduleError(f"schedule {self.name}: {_RULE_NAMES[label]}_{k + 1} = {float(v[k])!r} not in [0,1)")
            out.append(v)
        return n, out[0], out[1], out[2]


_RULE_NAMES = {"a": "alpha", "b": "beta", "g": "gamma"}


def constant_schedule(alpha: float, beta: float, gamma: float) -> Schedule:
    return Schedule(lambda n: alpha + 0 * n, lambda n: beta + 0 * n, lambda n: gamma + 0 * n,
                    name=f"constant({alpha:g},{beta:g},{gamma:g})")


def section6_schedule() -> Schedule:
    """``alpha_n = (n+1)/(4n)``, ``beta_n = (n+1)/(5n)``, ``gamma_n = 1/(500n)``."""
    return Schedule(lambda n: (n + 1) / (4 * n), lambda n: (n + 1) / (5 * n),
                    lambda n: 1 / (500 * n), name="section6")


def harmonic_schedule(alpha: float, beta: float, scale: float = 1.0, power: float = 1.0) -> Schedule:
    """Constant ``alpha``, ``beta`` and ``gamma_n = scale / (n+1)**power``."""
    return Schedule(lambda n: alpha + 0 * n, lambda n: beta + 0 * n,
                    lambda n: scale / (n + 1) ** power,
                    name=f"harmonic({alpha:g},{beta:g},{scale:g},{power:g})")


@dataclass
class IterationConfig:
    scheme: str
    t: Mapping
    c: Box
    x1: np.ndarray
    schedule: Schedule
    bf: Optional[BregmanFunction] = None
    anchor_u: Optional[np.ndarray] = None
    max_iter: int = 100
    stop_tol: float = 0.0
    ref: Optional[np.ndarray] = None
    ref_orientation: Optional[str] = None
    z_space: Optional[str] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        self.x1 = as_point(self.x1, self.c.dim, "x1")
        if not self.c.contains(self.x1):
            raise DomainError(f"x1={self.x1.tolist()} lies outside {self.c}")
        if self.anchor_u is not None:
            self.anchor_u = as_point(self.anchor_u, self.c.dim, "u")
            if not self.c.contains(self.anchor_u):
                raise DomainError(f"u={self.anchor_u.tolist()} lies outside {self.c}")
        if self.ref is not None:
            self.ref = as_point(self.ref, self.c.dim, "ref")
        if self.scheme in BREGMAN_SCHEMES:
            if self.bf is None:
                raise ConfigError(f"{self.scheme} needs a Bregman function")
            if self.bf.grad_conj is None:
                raise ConfigError(f"{self.bf.name} has no inverse gradient")
        if self.scheme == "bregman_halpern" and self.anchor_u is None:
            raise ConfigError("bregman_halpern needs an anchor point u")
        if self.z_space is None:
            self.z_space = DEFAULT_Z_SPACE.get(self.scheme)
        if self.z_space not in (None, "primal", "dual"):
            raise ConfigError(f"z_space must be 'primal' or 'dual', got {self.z_space!r}")
        if self.ref_orientation is None:
            self.ref_orientation = "ref_first" if self.scheme in BREGMAN_SCHEMES else "ref_second"
        if self.ref_orientation not in ("ref_first", "ref_second"):
            raise ConfigError(f"bad ref_orientation {self.ref_orientation!r}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")
        if self.stop_tol < 0:
            raise ConfigError("stop_tol must be nonnegative")


@dataclass
class TraceRow:
    n: int
    x: np.ndarray
    z: Optional[np.ndarray]
    y: Optional[np.ndarray]
    x_next: np.ndarray
    step_norm: float
    residual: float
    dist_to_ref: Optional[float] = None


@dataclass
class IterationTrace:
    rows: List[TraceRow]
    terminated_reason: str
    config: Optional[IterationConfig] = field(default=None, repr=False)

    def __len__(self):
        return len(self.rows)

    @property
    def scheme(self) -> Optional[str]:
        return None if self.config is None else self.config.scheme

    @property
    def z_space(self) -> Optional[str]:
        if self.config is None or self.config.scheme == "ishikawa":
            return None
        return self.config.z_space or "primal"

    def iterates(self) -> np.ndarray:
        """``x_1, ..., x_{N+1}`` as an ``(N+1, d)`` array."""
        return np.vstack([r.x for r in self.rows] + [self.rows[-1].x_next])

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.rows]
        if any(v is None for v in vals):
            raise KeyError(f"trace has no {name} column")
        return np.vstack(vals)

    def write_csv(self, out_dir, stem: str = "trace"):
        """Write ``<stem>.csv`` (7 decimals) and ``<stem>_full.csv`` (17 significant digits)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        short = out_dir / f"{stem}.csv"
        full = out_dir / f"{stem}_full.csv"
        write_trace_csv(self, short, lambda v: f"{v:.7f}")
        write_trace_csv(self, full, lambda v: f"{v:.17g}")
        return short, full


def _cell(v, fmt) -> str:
    if v is None:
        return ""
    return " ".join(fmt(float(c)) for c in np.atleast_1d(v))


def write_trace_csv(trace: IterationTrace, path, fmt=lambda v: f"{v:.7f}"):
    """Rows ``n,z,y,x,step_diff``: ``x`` holds ``x_{n+1}``; vectors are space-separated."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "z", "y", "x", "step_diff"])
        for r in trace.rows:
            w.writerow([r.n, _cell(r.z, fmt), _cell(r.y, fmt), _cell(r.x_next, fmt),
                        fmt(r.step_norm)])
    return path


def read_trace_csv(path):
    """Parse a trace CSV back into a list of dicts of floats (vectors as arrays)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {"n": int(rec["n"])}
            for k in ("z", "y", "x", "step_diff"):
                row[k] = None if rec[k] == "" else np.array([float(v) for v in rec[k].split()])
            out.append(row)
    return out


# -- engines ------------------------------------------------------------------

def _apply(t: Mapping, x: np.ndarray, n: int, label: str) -> np.ndarray:
    tx = np.asarray(t(x), dtype=float)
    if not np.all(np.isfinite(tx)):
        raise NumericError(f"step {n}: T({label}) is not finite")
    if not t.domain.contains(x, atol=1e-12):
        raise DomainError(f"step {n}: {label}={x.tolist()} left the domain {t.domain} of {t.name}")
    return tx


def _finite(v: np.ndarray, n: int, label: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NumericError(f"step {n}: {label} is not finite")
    return v


def _distance_to_ref(cfg: IterationConfig, x: np.ndarray) -> Optional[float]:
    if cfg.ref is None or cfg.bf is None:
        return None
    if cfg.ref_orientation == "ref_first":
        return float(divergence(cfg.bf, cfg.ref, x))
    return float(divergence(cfg.bf, x, cfg.ref))


def _run(cfg: IterationConfig, step) -> IterationTrace:
    rows = []
    x = cfg.x1.copy()
    reason = "max_iter"
    for n in range(1, cfg.max_iter + 1):
        a, b, g = cfg.schedule.values(n)
        z, y, x_next = step(n, x, a, b, g)
        if not cfg.c.contains(x_next, atol=1e-12):
            raise DomainError(f"step {n}: iterate {x_next.tolist()} left {cfg.c}")
        res = float(np.linalg.norm(_apply(cfg.t, x, n, "x_n") - x))
        step_norm = float(np.linalg.norm(x_next - x))
        rows.append(TraceRow(n, x, z, y, x_next, step_norm, res, _distance_to_ref(cfg, x)))
        x = x_next
        if cfg.stop_tol > 0 and step_norm <= cfg.stop_tol:
            reason = "step_tol"
            break
    return IterationTrace(rows, reason, cfg)


def _require(cfg: IterationConfig, scheme: str):
    if cfg.scheme != scheme:
        raise ConfigError(f"config is for {cfg.scheme}, not {scheme}")


def run_ishikawa(cfg: IterationConfig) -> IterationTrace:
    """``y = b Tx + (1-b) x``; ``x+ = g Ty + (1-g) x``. ``alpha_n`` is unused."""
    _require(cfg, "ishikawa")
    t = cfg.t

    def step(n, x, a, b, g):
        y = b * _apply(t, x, n, "x_n") + (1 - b) * x
        x_next = g * _apply(t, y, n, "y_n") + (1 - g) * x
        return None, y, x_next

    return _run(cfg, step)


def run_noor(cfg: IterationConfig) -> IterationTrace:
    """Three-stage primal scheme ``z -> y -> x+``."""
    _require(cfg, "noor")
    t = cfg.t

    def step(n, x, a, b, g):
        z = a * _apply(t, x, n, "x_n") + (1 - a) * x
        y = b * _apply(t, z, n, "z_n") + (1 - b) * x
        x_next = g * _apply(t, y, n, "y_n") + (1 - g) * x
        return z, y, x_next

    return _run(cfg, step)


def _projector(cfg: IterationConfig):
    bf, c = cfg.bf, cfg.c

    def proj(v):
        if c.contains(v):
            return v
        return bregman_project(bf, c, v)

    return proj


def run_bregman_noor(cfg: IterationConfig) -> IterationTrace:
    """Noor-type scheme with convex combinations taken in the dual space."""
    _require(cfg, "bregman_noor")
    t, g_, gc = cfg.t, cfg.bf.grad, cfg.bf.grad_conj
    proj = _projector(cfg)
    primal_z = cfg.z_space == "primal"

    def step(n, x, a, b, g):
        gx = g_(x)
        zd = _finite(a * g_(_apply(t, x, n, "x_n")) + (1 - a) * gx, n, "z_n")
        z = gc(zd) if primal_z else zd
        y = _finite(gc(b * g_(_apply(t, z, n, "z_n")) + (1 - b) * gx), n, "y_n")
        w = _finite(gc(g * g_(_apply(t, y, n, "y_n")) + (1 - g) * gx), n, "x_{n+1}")
        return z, y, proj(w)

    return _run(cfg, step)


def run_bregman_halpern(cfg: IterationConfig) -> IterationTrace:
    """Halpern-type scheme anchored at ``u``, followed by a Bregman projection."""
    _require(cfg, "bregman_halpern")
    t, g_, gc = cfg.t, cfg.bf.grad, cfg.bf.grad_conj
    proj = _projector(cfg)
    primal_z = cfg.z_space == "primal"
    gu = g_(cfg.anchor_u)

    def step(n, x, a, b, g):
        gx = g_(x)
        zd = _finite(a * gx + (1 - a) * g_(_apply(t, x, n, "x_n")), n, "z_n")
        z = gc(zd) if primal_z else zd
        y = _finite(gc(b * gx + (1 - b) * g_(z)), n, "y_n")
        w = _finite(gc(g * gu + (1 - g) * g_(y)), n, "x_{n+1}")
        return z, y, proj(w)

    return _run(cfg, step)


RUNNERS = {
    "ishikawa": run_ishikawa,
    "noor": run_noor,
    "bregman_noor": run_bregman_noor,
    "bregman_halpern": run_bregman_halpern,
}


def run(cfg: IterationConfig) -> IterationTrace:
    return RUNNERS[cfg.scheme](cfg)


def closed_form_section6_step(n: int, x_n: float, u: float):
    """One step of the numerical example written out by hand: returns ``(z, y, x_next)``."""
    if n < 1:
        raise ValueError("n starts at 1")
    z = (16 * n + 8) / (25 * n) * x_n
    y = (n + 1) / (5 * n) * x_n + (4 * n - 1) / (5 * n) * z
    x_next = u / (500 * n) + (500 * n - 1) / (500 * n) * y
    return z, y, x_next


# -- diagnostics --------------------------------------------------------------

@dataclass
class ControlReport:
    horizon: int
    noor_sum: float
    gamma_sum: float
    gamma_tail: float
    beta_liminf: float
    beta_limsup: float
    noor_sum_divergent: bool
    gamma_to_zero: bool
    gamma_sum_divergent: bool
    gamma_sum_increasing: bool
    beta_bounds: bool

    @property
    def halpern_conditions(self) -> bool:
        return self.gamma_to_zero and self.gamma_sum_divergent and self.beta_bounds


def _looks_divergent(terms: np.ndarray, plateau: float) -> bool:
    # Compare the mass of the last two dyadic blocks: a convergent tail shrinks
    # geometrically between blocks, harmonic-like tails do not.
    h = terms.size
    last = float(terms[h // 2:].sum())
    prev = float(terms[h // 4:h // 2].sum())
    if last <= plateau:
        return False
    return prev == 0.0 or last / prev >= 0.75


def check_control_conditions(schedule: Schedule, horizon: int = 100_000,
                             plateau: float = 1e-6) -> ControlReport:
    """Finite-horizon evidence for the step-size conditions of the Bregman schemes.

    Divergence of a series is judged from its last two dyadic blocks
    ``(H/4, H/2]`` and ``(H/2, H]``: it counts as still growing when the last
    block adds more than ``plateau`` and at least 3/4 of the previous block.
    ``gamma -> 0`` passes when the tail maximum is at most half the head
    maximum. liminf/limsup of ``beta`` are the min/max over the last half.
    """
    if horizon < 100:
        raise ValueError("horizon must be at least 100")
    n, a, b, g = schedule.arrays(horizon)
    noor_terms = g * b * a * (1 - a)
    half = horizon // 2
    gamma_sum = math.fsum(g)
    return ControlReport(
        horizon=horizon,
        noor_sum=math.fsum(noor_terms),
        gamma_sum=gamma_sum,
        gamma_tail=float(g[-1]),
        beta_liminf=float(b[half:].min()),
        beta_limsup=float(b[half:].max()),
        noor_sum_divergent=_looks_divergent(noor_terms, plateau),
        gamma_to_zero=bool(g[half:].max() <= 0.5 * g[:half].max()),
        gamma_sum_divergent=_looks_divergent(g, plateau),
        gamma_sum_increasing=bool(g[-1] > 0 and gamma_sum > math.fsum(g[:-1])),
        beta_bounds=bool(b[half:].min() > 0 and b[half:].max() < 1),
    )


@dataclass
class FejerReport:
    distances: np.ndarray
    violations: List[int]
    decreases: int
    monotone: bool
    worst_excess: float


def check_fejer_monotonicity(trace: IterationTrace, bf: BregmanFunction, ref,
                             orientation: str = "ref_second", tol: float = 1e-10,
                             fixed_tol: float = 1e-9) -> FejerReport:
    """Step-by-step check of ``max{D(x_{n+1}), D(y_n), D(z_n)} <= D(x_n)``.

    ``D`` is ``D_f(., ref)`` for ``ref_second`` and ``D_f(ref, .)`` for
    ``ref_first``. ``z_n`` enters only when the trace stores it as a primal
    point.
    """
    ref = as_point(ref, bf.dim, "ref")
    if orientation not in ("ref_first", "ref_second"):
        raise ValueError(f"bad orientation {orientation!r}")
    if trace.config is not None:
        t = trace.config.t
        if np.linalg.norm(t(ref) - ref) > max(fixed_tol, trace.config.stop_tol):
            raise ValueError(f"ref={ref.tolist()} is not a fixed point of {t.name}")
    if orientation == "ref_first":
        dist = lambda p: float(divergence(bf, ref, p))
    else:
        dist = lambda p: float(divergence(bf, p, ref))

    xs = trace.iterates()
    d = np.array([dist(p) for p in xs])
    violations = []
    worst = -np.inf
    for i, r in enumerate(trace.rows):
        cands = [d[i + 1]]
        if r.y is not None:
            cands.append(dist(r.y))
        if r.z is not None and trace.z_space == "primal":
            cands.append(dist(r.z))
        excess = max(cands) - d[i]
        worst = max(worst, excess)
        if excess > tol:
            violations.append(r.n)
    steps = np.diff(d)
    return FejerReport(
        distances=d,
        violations=violations,
        decreases=int(np.count_nonzero(steps < 0)),
        monotone=bool(np.all(steps <= tol)),
        worst_excess=float(worst),
    )


def asymptotic_radius_estimate(bf: BregmanFunction, tail, x) -> float:
    """``max_k D_f(x_k, x)`` over a finite tail, standing in for ``limsup D_f(x_n, x)``."""
    tail = np.asarray(tail, dtype=float).reshape(-1, bf.dim)
    if tail.shape[0] == 0:
        raise ValueError("tail is empty")
    x = as_point(x, bf.dim, "x")
    return float(divergence(bf, tail, x).max())
