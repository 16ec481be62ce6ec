"""Self-maps of boxes and sampled verifiers for nonexpansive-type classes.

Every verifier sweeps all ordered pairs of a sample set, so for each pair
``(x, y)`` the swapped pair ``(y, x)`` is tested as well. Verdicts are
relative to the sample: ``holds_on_grid`` never claims anything about points
that were not evaluated.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq, minimize_scalar

from .core import EPS_ABS, BregmanFunction, Box, as_point, divergence
from .errors import DimensionError, DomainError

log = logging.getLogger(__name__)

HOLDS = "holds_on_grid"
VIOLATED = "violated"
VERIFIER_TOL = 1e-9
DEFAULT_ALPHAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

GridSpec = Union[int, np.ndarray, Sequence]


@dataclass(frozen=True)
class Mapping:
    """A map ``T: C -> C`` acting on arrays of shape ``(..., d)``."""

    name: str
    apply: Callable[[np.ndarray], np.ndarray]
    domain: Box
    known_fixed_points: Optional[tuple] = None

    def __call__(self, x):
        return self.apply(np.asarray(x, dtype=float))

    @property
    def dim(self) -> int:
        return self.domain.dim

    def with_fixed_points(self, points) -> "Mapping":
        pts = tuple(as_point(p, self.dim, "fixed point") for p in points)
        return Mapping(self.name, self.apply, self.domain, pts)

    def check_self_map(self, grid: GridSpec = 101, atol: float = 1e-12) -> bool:
        pts = sample_points(self.domain, grid)
        return self.domain.contains(self(pts), atol=atol)


def identity(domain: Box) -> Mapping:
    return Mapping("identity", lambda x: np.array(x, dtype=float), domain)


def scaling(k: float, domain: Optional[Box] = None) -> Mapping:
    """``Tx = k x``; the numerical example uses ``k = 1/5`` on ``[-1, 1]``."""
    domain = domain or Box.cube(-1.0, 1.0)
    return Mapping(f"scale({k:g})", lambda x: k * x, domain,
                   (np.zeros(domain.dim),) if domain.contains(np.zeros(domain.dim)) else None)


def power(p: float, domain: Optional[Box] = None) -> Mapping:
    """Coordinatewise ``x ** p``."""
    domain = domain or Box.cube(0.0, 0.9)
    return Mapping(f"power({p:g})", lambda x: np.power(x, p), domain)


def square(domain: Optional[Box] = None) -> Mapping:
    """``Tx = x^2`` on ``[0, 0.9]``, whose only fixed point there is 0."""
    domain = domain or Box.cube(0.0, 0.9)
    return Mapping("square", np.square, domain, (np.zeros(domain.dim),))


def constant(c, domain: Box) -> Mapping:
    c = as_point(c, domain.dim, "c")
    return Mapping("constant", lambda x: np.broadcast_to(c, np.shape(x)).copy(), domain, (c,))


def affine(a: float, b: float, domain: Box) -> Mapping:
    return Mapping(f"affine({a:g},{b:g})", lambda x: a * x + b, domain)


# -- reports ------------------------------------------------------------------

def _fmt_point(p) -> str:
    return ";".join(f"{v:.12g}" for v in np.atleast_1d(p))


@dataclass
class PropertyReport:
    class_name: str
    alpha: Optional[float]
    verdict: str
    worst_margin: float
    worst_pair: Optional[tuple]
    samples_checked: int
    qualifying: int
    tol: float = VERIFIER_TOL
    warning: Optional[str] = None

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    @property
    def witness(self) -> Optional[tuple]:
        return self.worst_pair if self.verdict == VIOLATED else None

    def to_line(self) -> str:
        alpha = "-" if self.alpha is None else f"{self.alpha:g}"
        if self.witness is None:
            wit = "-"
        else:
            wit = "(" + ",".join(_fmt_point(p) for p in self.witness) + ")"
        line = (f"class={self.class_name} alpha={alpha} verdict={self.verdict} "
                f"worst_margin={self.worst_margin:.12g} witness={wit} "
                f"samples={self.samples_checked} qualifying={self.qualifying}")
        if self.warning:
            line += f" warning={self.warning}"
        return line


# -- margin formulas ----------------------------------------------------------
# Each takes arrays X, Y of shape (..., d) and returns (margin, premise) with
# premise either None (all pairs qualify) or a boolean mask.

def _norm(v):
    return np.linalg.norm(v, axis=-1)


def _condition_c_premise(t, X, Y):
    return 0.5 * _norm(X - t(X)) <= _norm(X - Y)


def margin_nonexpansive(t, X, Y, alpha=None, bf=None):
    return _norm(X - Y) - _norm(t(X) - t(Y)), None


def margin_condition_c(t, X, Y, alpha=None, bf=None):
    return _norm(X - Y) - _norm(t(X) - t(Y)), _condition_c_premise(t, X, Y)


def margin_alpha_nonexpansive(t, X, Y, alpha, bf=None):
    TX, TY = t(X), t(Y)
    sq = lambda v: np.sum(np.square(v), axis=-1)
    m = alpha * sq(TX - Y) + alpha * sq(X - TY) + (1 - 2 * alpha) * sq(X - Y) - sq(TX - TY)
    return m, None


def margin_generalized_alpha(t, X, Y, alpha, bf=None):
    TX, TY = t(X), t(Y)
    m = (alpha * _norm(TX - Y) + alpha * _norm(X - TY) + (1 - 2 * alpha) * _norm(X - Y)
         - _norm(TX - TY))
    return m, _condition_c_premise(t, X, Y)


def margin_bregman_generalized_alpha(t, X, Y, alpha, bf):
    TX, TY = t(X), t(Y)
    m = (alpha * divergence(bf, TX, Y) + alpha * divergence(bf, X, TY)
         + (1 - 2 * alpha) * divergence(bf, X, Y) - divergence(bf, TX, TY))
    return m, None


def margin_bregman_nonexpansive(t, X, Y, alpha=None, bf=None):
    return divergence(bf, X, Y) - divergence(bf, t(X), t(Y)), None


def margin_bregman_nonspreading(t, X, Y, alpha=None, bf=None):
    TX, TY = t(X), t(Y)
    m = (divergence(bf, TX, Y) + divergence(bf, TY, X)
         - divergence(bf, TX, TY) - divergence(bf, TY, TX))
    return m, None


def margin_bregman_quasi(t, X, P, alpha=None, bf=None):
    return divergence(bf, P, X) - divergence(bf, P, t(X)), None


def margin_bregman_skew_quasi(t, X, P, alpha=None, bf=None):
    return divergence(bf, X, P) - divergence(bf, t(X), P), None


MARGINS = {
    "nonexpansive": margin_nonexpansive,
    "condition_C": margin_condition_c,
    "alpha_nonexpansive": margin_alpha_nonexpansive,
    "generalized_alpha": margin_generalized_alpha,
    "bregman_generalized_alpha": margin_bregman_generalized_alpha,
    "bregman_nonexpansive": margin_bregman_nonexpansive,
    "bregman_nonspreading": margin_bregman_nonspreading,
    "bregman_quasi": margin_bregman_quasi,
    "bregman_skew_quasi": margin_bregman_skew_quasi,
}


def pair_margin(class_name: str, t: Mapping, x, y, alpha=None, bf=None):
    """Margin of one pair; returns ``(margin, premise_holds)``."""
    x = as_point(x, t.dim, "x")
    y = as_point(y, t.dim, "y")
    m, prem = MARGINS[class_name](t, x, y, alpha, bf)
    return float(m), True if prem is None else bool(prem)


def recheck_witness(report: PropertyReport, t: Mapping, bf=None) -> Optional[float]:
    """Feed a report's witness back through its margin formula."""
    if report.witness is None:
        return None
    m, _ = pair_margin(report.class_name, t, *report.witness, alpha=report.alpha, bf=bf)
    return m


# -- sweep engine -------------------------------------------------------------

def sample_points(domain: Box, grid: GridSpec = 101) -> np.ndarray:
    """Grid spec: an int (points per axis) or an explicit ``(n, d)`` array."""
    if isinstance(grid, (int, np.integer)):
        if grid < 1:
            raise ValueError("grid must have at least one point per axis")
        return domain.grid(int(grid))
    pts = np.asarray(grid, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, domain.dim)
    if pts.shape[0] == 0:
        raise ValueError("grid produced zero samples")
    if pts.shape[1] != domain.dim:
        raise DimensionError("sample dimension does not match domain")
    return pts


def _lex_min(cands: List[tuple]) -> tuple:
    return min(cands, key=lambda c: tuple(np.concatenate([np.atleast_1d(p) for p in c])))


def _sweep_chunk(fn, X, Y):
    m, prem = fn(X[:, None, :], Y[None, :, :])
    m = np.broadcast_to(m, (X.shape[0], Y.shape[0]))
    if prem is None:
        mask = np.ones(m.shape, dtype=bool)
    else:
        mask = np.broadcast_to(prem, m.shape)
    n_q = int(np.count_nonzero(mask))
    if n_q == 0:
        return np.inf, 0, None
    masked = np.where(mask, m, np.inf)
    worst = float(masked.min())
    ii, jj = np.nonzero(masked == worst)
    cand = _lex_min([(X[i].copy(), Y[j].copy()) for i, j in zip(ii, jj)])
    return worst, n_q, cand


def _sweep(fn, X, Y, jobs: int = 1, chunk_pairs: int = 1_000_000):
    rows = max(1, chunk_pairs // max(1, Y.shape[0]))
    blocks = [X[i:i + rows] for i in range(0, X.shape[0], rows)]
    if jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda b: _sweep_chunk(fn, b, Y), blocks))
    else:
        parts = [_sweep_chunk(fn, b, Y) for b in blocks]
    n_q = sum(p[1] for p in parts)
    worst = min(p[0] for p in parts)
    cands = [p[2] for p in parts if p[2] is not None and p[0] == worst]
    return worst, n_q, (_lex_min(cands) if cands else None)


def _report(class_name, alpha, fn, X, Y, tol, jobs):
    worst, n_q, pair = _sweep(fn, X, Y, jobs)
    warning = None
    if n_q == 0:
        worst = 0.0
        warning = "no_qualifying_pairs"
        log.warning("%s: no sampled pair satisfies the premise", class_name)
    verdict = VIOLATED if worst < -tol else HOLDS
    return PropertyReport(class_name, alpha, verdict, worst, pair,
                          X.shape[0] * Y.shape[0], n_q, tol, warning)


def _pairwise(class_name, t, grid, alpha=None, bf=None, tol=VERIFIER_TOL, jobs=1):
    if bf is not None and not t.domain.subset_of(bf.domain):
        raise DomainError(f"mapping domain {t.domain} is not inside {bf.name} domain {bf.domain}")
    pts = sample_points(t.domain, grid)
    fn = lambda X, Y: MARGINS[class_name](t, X, Y, alpha, bf)
    return _report(class_name, alpha, fn, pts, pts, tol, jobs)


def check_nonexpansive(t: Mapping, grid: GridSpec = 101, tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    """``||Tx - Ty|| <= ||x - y||`` on all sampled pairs."""
    return _pairwise("nonexpansive", t, grid, tol=tol, jobs=jobs)


def check_condition_C(t: Mapping, grid: GridSpec = 101, tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    """Suzuki's condition: pairs failing ``||x - Tx||/2 <= ||x - y||`` are skipped."""
    return _pairwise("condition_C", t, grid, tol=tol, jobs=jobs)


def check_alpha_nonexpansive(t: Mapping, alpha: float, grid: GridSpec = 101,
                             tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    if not alpha < 1:
        raise ValueError("alpha must be < 1")
    return _pairwise("alpha_nonexpansive", t, grid, alpha, tol=tol, jobs=jobs)


def check_generalized_alpha(t: Mapping, alpha: float, grid: GridSpec = 101,
                            tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    return _pairwise("generalized_alpha", t, grid, alpha, tol=tol, jobs=jobs)


def check_bregman_generalized_alpha(bf: BregmanFunction, t: Mapping, alpha: float,
                                    grid: GridSpec = 101, tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    """Margin ``a D(Tx,y) + a D(x,Ty) + (1-2a) D(x,y) - D(Tx,Ty)`` over all sampled pairs."""
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    return _pairwise("bregman_generalized_alpha", t, grid, alpha, bf, tol, jobs)


def check_bregman_nonexpansive(bf: BregmanFunction, t: Mapping, grid: GridSpec = 101,
                               tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    return _pairwise("bregman_nonexpansive", t, grid, None, bf, tol, jobs)


def check_bregman_nonspreading(bf: BregmanFunction, t: Mapping, grid: GridSpec = 101,
                               tol=VERIFIER_TOL, jobs=1) -> PropertyReport:
    return _pairwise("bregman_nonspreading", t, grid, None, bf, tol, jobs)


def _fixed_point_array(t: Mapping) -> np.ndarray:
    if not t.known_fixed_points:
        raise ValueError(f"{t.name} has no known fixed points; run find_fixed_points first")
    return np.vstack([as_point(p, t.dim, "fixed point") for p in t.known_fixed_points])


def check_bregman_quasi(bf: BregmanFunction, t: Mapping, grid: GridSpec = 101,
                        tol=VERIFIER_TOL) -> PropertyReport:
    """``D(p, Tx) <= D(p, x)`` for sampled ``x`` and every known fixed point ``p``."""
    P = _fixed_point_array(t)
    X = sample_points(t.domain, grid)
    fn = lambda A, B: margin_bregman_quasi(t, A, B, None, bf)
    return _report("bregman_quasi", None, fn, X, P, tol, 1)


def check_bregman_skew_quasi(bf: BregmanFunction, t: Mapping, grid: GridSpec = 101,
                             tol=VERIFIER_TOL) -> PropertyReport:
    """``D(Tx, p) <= D(x, p)`` for sampled ``x`` and every known fixed point ``p``."""
    P = _fixed_point_array(t)
    X = sample_points(t.domain, grid)
    fn = lambda A, B: margin_bregman_skew_quasi(t, A, B, None, bf)
    return _report("bregman_skew_quasi", None, fn, X, P, tol, 1)


CHECKS = {
    "nonexpansive": lambda bf, t, a, g, tol, jobs: check_nonexpansive(t, g, tol, jobs),
    "condition_C": lambda bf, t, a, g, tol, jobs: check_condition_C(t, g, tol, jobs),
    "alpha_nonexpansive": lambda bf, t, a, g, tol, jobs: check_alpha_nonexpansive(t, a, g, tol, jobs),
    "generalized_alpha": lambda bf, t, a, g, tol, jobs: check_generalized_alpha(t, a, g, tol, jobs),
    "bregman_generalized_alpha":
        lambda bf, t, a, g, tol, jobs: check_bregman_generalized_alpha(bf, t, a, g, tol, jobs),
    "bregman_nonexpansive": lambda bf, t, a, g, tol, jobs: check_bregman_nonexpansive(bf, t, g, tol, jobs),
    "bregman_nonspreading": lambda bf, t, a, g, tol, jobs: check_bregman_nonspreading(bf, t, g, tol, jobs),
    "bregman_quasi": lambda bf, t, a, g, tol, jobs: check_bregman_quasi(bf, t, g, tol),
    "bregman_skew_quasi": lambda bf, t, a, g, tol, jobs: check_bregman_skew_quasi(bf, t, g, tol),
}
ALPHA_CLASSES = ("alpha_nonexpansive", "generalized_alpha", "bregman_generalized_alpha")


def lemma31_terms(bf: BregmanFunction, t: Mapping, alpha: float, X, Y) -> np.ndarray:
    """Vectorised slack of the ``D(x, Ty)`` upper bound for generalized alpha maps."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    TX, TY = t(X), t(Y)
    g = bf.grad
    ip = lambda a, b: np.sum(a * b, axis=-1)
    rhs = (divergence(bf, X, TX) + (1 - alpha) * divergence(bf, X, Y)
           + alpha * divergence(bf, TX, TY)
           + alpha * ip(X - TX, g(Y) - g(TY))
           + ip(X - TX, g(TX) - g(TY)))
    return rhs - divergence(bf, X, TY)


def lemma31_slack(bf: BregmanFunction, t: Mapping, alpha: float, x, y) -> float:
    """RHS minus LHS of the bound on ``D_f(x, Ty)``; nonnegative for class members."""
    x = as_point(x, t.dim, "x")
    y = as_point(y, t.dim, "y")
    return float(lemma31_terms(bf, t, alpha, x, y))


# -- fixed points -------------------------------------------------------------

class FixedPoints(list):
    """List of fixed points; ``degenerate`` marks maps fixing (almost) the whole grid."""

    def __init__(self, points=(), degenerate: bool = False):
        super().__init__(points)
        self.degenerate = degenerate


def _dedupe(points, radius):
    out = []
    for p in points:
        if all(np.max(np.abs(p - q)) > radius for q in out):
            out.append(p)
    return out


def find_fixed_points(t: Mapping, grid: GridSpec = 101, refine_tol: float = 1e-10,
                      max_damped_steps: int = 10_000) -> FixedPoints:
    """Locate fixed points by scanning ``||Tx - x||`` on a grid and refining.

    1-D maps are refined by bisection on sign changes of ``Tx - x`` (and by a
    bounded scalar search at touching zeros); higher dimensions use the damped
    iteration ``x <- x + (Tx - x)/2`` from each local minimum of the residual.
    """
    pts = sample_points(t.domain, grid)
    res = _norm(t(pts) - pts)
    zero = res <= refine_tol
    if np.count_nonzero(zero) > max(1, pts.shape[0] // 2):
        return FixedPoints(list(pts[zero]), degenerate=True)

    found = [pts[i] for i in np.flatnonzero(zero)]
    if t.dim == 1:
        order = np.argsort(pts[:, 0])
        xs = pts[order, 0]
        g = t(xs[:, None])[:, 0] - xs
        scalar = lambda s: float(t(np.array([s]))[0] - s)
        for i in range(len(xs) - 1):
            if g[i] * g[i + 1] < 0:
                r = brentq(scalar, xs[i], xs[i + 1], xtol=refine_tol / 4)
                found.append(np.array([r]))
        ag = np.abs(g)
        for i in range(1, len(xs) - 1):
            if ag[i] <= ag[i - 1] and ag[i] <= ag[i + 1] and ag[i] > refine_tol \
                    and g[i - 1] * g[i + 1] > 0:
                sol = minimize_scalar(lambda s: abs(scalar(s)), bounds=(xs[i - 1], xs[i + 1]),
                                      method="bounded", options={"xatol": refine_tol / 4})
                if abs(scalar(sol.x)) <= refine_tol:
                    found.append(np.array([sol.x]))
    else:
        if isinstance(grid, (int, np.integer)):
            shaped = res.reshape((int(grid),) * t.dim)
            minima = (shaped == ndimage.minimum_filter(shaped, size=3, mode="nearest")).ravel()
            starts = pts[minima]
        else:
            starts = pts[np.argsort(res)[:10]]
        for x in starts:
            for _ in range(max_damped_steps):
                step = 0.5 * (t(x) - x)
                x = x + step
                if np.max(np.abs(step)) <= refine_tol / 4:
                    break
            if _norm(t(x) - x) <= refine_tol and t.domain.contains(x, atol=refine_tol):
                found.append(t.domain.clip(x))
    found = [p for p in found if _norm(t(p) - p) <= refine_tol]
    return FixedPoints(_dedupe(found, 10 * refine_tol))


# -- demiclosedness -----------------------------------------------------------

@dataclass
class DemiclosednessReport:
    tail_residual_max: float
    limit_residual: float
    tail_dist_to_image: float
    tail_dist_to_limit: float
    tail_length: int
    residuals: np.ndarray = field(repr=False)

    @property
    def consistent(self) -> bool:
        """Image of the limit is no farther (in the tail) than the limit itself."""
        return self.tail_dist_to_image <= self.tail_dist_to_limit + EPS_ABS


def demiclosedness_probe(bf: BregmanFunction, t: Mapping, sequence, limit,
                         k: int = 10) -> DemiclosednessReport:
    """Finite-tail diagnostics around a candidate limit of a sequence.

    Reports the largest residual ``||Tx_n - x_n||`` over the last ``k`` terms,
    the residual at the limit, and the tail maxima of ``D_f(x_n, T limit)``
    and ``D_f(x_n, limit)``.
    """
    seq = np.asarray(sequence, dtype=float).reshape(-1, t.dim)
    if seq.shape[0] < k:
        raise ValueError(f"sequence has {seq.shape[0]} terms, need at least {k}")
    if not t.domain.contains(seq):
        raise DomainError("sequence leaves the mapping domain")
    limit = as_point(limit, t.dim, "limit")
    tail = seq[-k:]
    residuals = _norm(t(seq) - seq)
    t_limit = t(limit)
    return DemiclosednessReport(
        tail_residual_max=float(residuals[-k:].max()),
        limit_residual=float(_norm(t_limit - limit)),
        tail_dist_to_image=float(divergence(bf, tail, t_limit).max()),
        tail_dist_to_limit=float(divergence(bf, tail, limit).max()),
        tail_length=k,
        residuals=residuals,
    )
