"""Bregman geometry on boxes in R^d.

Points and dual points are plain float64 numpy vectors. Every callable held
by a :class:`BregmanFunction` acts on the last axis, so ``f`` maps an array of
shape ``(..., d)`` to ``(...)`` and ``grad`` maps ``(..., d)`` to ``(..., d)``.
The verifiers in :mod:`bregfix.mappings` rely on this to sweep whole grids of
pairs at once.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DimensionError, DomainError, NumericError, UnsupportedError

EPS_ABS = 1e-10
EPS_REL = 1e-6

ArrayFn = Callable[[np.ndarray], np.ndarray]


def as_point(x, dim: Optional[int] = None, name: str = "point") -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float vector, optionally of length ``dim``."""
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"{name} must be a non-empty vector, got shape {p.shape}")
    if dim is not None and p.size != dim:
        raise DimensionError(f"{name} has dimension {p.size}, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise DomainError(f"{name} has non-finite coordinates: {p}")
    return p


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError(f"box bounds disagree: {lo.shape} vs {hi.shape}")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise DomainError(f"invalid box bounds lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int = 1) -> "Box":
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - atol) and np.all(x <= self.hi + atol))

    def clip(self, x) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)

    def subset_of(self, other: "Box") -> bool:
        return (self.dim == other.dim and bool(np.all(self.lo >= other.lo))
                and bool(np.all(self.hi <= other.hi)))

    def vertices(self) -> np.ndarray:
        corners = np.array(np.meshgrid(*zip(self.lo, self.hi), indexing="ij"))
        return np.unique(corners.reshape(self.dim, -1).T, axis=0)

    def grid(self, points_per_axis: int = 101) -> np.ndarray:
        """Uniform tensor grid, shape ``(points_per_axis**d, d)``."""
        axes = [np.linspace(a, b, points_per_axis) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def __eq__(self, other):
        return (isinstance(other, Box) and np.array_equal(self.lo, other.lo)
                and np.array_equal(self.hi, other.hi))

    def __hash__(self):
        return hash((self.lo.tobytes(), self.hi.tobytes()))

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


@dataclass(frozen=True)
class BregmanFunction:
    """A convex function bundled with its gradient and (optionally) conjugate.

    The convexity flags are declarations, not proofs. ``separable`` marks
    functions of the form ``sum_i g(x_i)``; Bregman projections onto boxes
    and the numeric conjugate in several dimensions need it.
    """

    name: str
    f: ArrayFn
    grad: ArrayFn
    domain: Box
    conj: Optional[ArrayFn] = None
    grad_conj: Optional[ArrayFn] = None
    strictly_convex: bool = True
    strongly_coercive: bool = True
    legendre: bool = True
    separable: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def scaled(self, c: float) -> "BregmanFunction":
        """The function ``c*f`` for ``c > 0``."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        f, grad, conj, grad_conj = self.f, self.grad, self.conj, self.grad_conj
        return dataclasses.replace(
            self,
            name=f"{c:g}*{self.name}",
            f=lambda x: c * f(x),
            grad=lambda x: c * grad(x),
            conj=None if conj is None else (lambda z: c * conj(np.asarray(z) / c)),
            grad_conj=None if grad_conj is None else (lambda z: grad_conj(np.asarray(z) / c)),
        )


def _default_domain(domain: Optional[Box], dim: int) -> Box:
    return Box.cube(-2.0, 2.0, dim) if domain is None else domain


# -- built-in functions -------------------------------------------------------

def quadratic(coef: float, dim: int = 1, domain: Optional[Box] = None,
              name: Optional[str] = None) -> BregmanFunction:
    """``f(x) = coef * ||x||^2``; closed-form conjugate ``||z||^2 / (4 coef)``."""
    if not coef > 0:
        raise ValueError("coef must be positive")
    return BregmanFunction(
        name=name or f"quadratic({coef:g})",
        f=lambda x: coef * np.sum(np.square(x), axis=-1),
        grad=lambda x: 2.0 * coef * np.asarray(x, dtype=float),
        conj=lambda z: np.sum(np.square(z), axis=-1) / (4.0 * coef),
        grad_conj=lambda z: np.asarray(z, dtype=float) / (2.0 * coef),
        domain=_default_domain(domain, dim),
        meta={"coef": coef},
    )


def squared_norm(dim: int = 1, domain: Optional[Box] = None) -> BregmanFunction:
    """``||x||^2``, whose Bregman distance is ``||x - y||^2``."""
    return quadratic(1.0, dim, domain, name="squared_norm")


def section6_quadratic(dim: int = 1, domain: Optional[Box] = None) -> BregmanFunction:
    """``(4/5) x^2`` with ``f*(z) = (5/16) z^2`` and ``grad f*(z) = (5/8) z``."""
    return quadratic(0.8, dim, domain, name="section6_quadratic")


def _quartic_conj(z):
    a = np.abs(np.asarray(z, dtype=float))
    return np.sum(0.75 * a * np.cbrt(a / 4.0), axis=-1)


def _quartic_grad_conj(z):
    z = np.asarray(z, dtype=float)
    return np.cbrt(z / 4.0)


def quartic(dim: int = 1, domain: Optional[Box] = None) -> BregmanFunction:
    """``f(x) = sum_i x_i^4``, the generator of the ``x^4 + 3y^4 - 4xy^3`` distance."""
    return BregmanFunction(
        name="quartic",
        f=lambda x: np.sum(np.asarray(x, dtype=float) ** 4, axis=-1),
        grad=lambda x: 4.0 * np.asarray(x, dtype=float) ** 3,
        conj=_quartic_conj,
        grad_conj=_quartic_grad_conj,
        domain=_default_domain(domain, dim),
    )


def linear(a, domain: Optional[Box] = None) -> BregmanFunction:
    """``f(x) = <a, x>``. Its Bregman distance vanishes identically."""
    a = as_point(a, name="a")
    return BregmanFunction(
        name="linear",
        f=lambda x: np.asarray(x, dtype=float) @ a,
        grad=lambda x: np.broadcast_to(a, np.shape(x)).astype(float),
        domain=_default_domain(domain, a.size),
        strictly_convex=False,
        strongly_coercive=False,
        legendre=False,
    )


def separable_polynomial(coeffs: Sequence[float], dim: int = 1,
                         domain: Optional[Box] = None) -> BregmanFunction:
    """``f(x) = sum_i p(x_i)`` for ``p(t) = c0 + c1 t + c2 t^2 + ...``.

    No closed-form conjugate is attached. ``grad_conj`` inverts ``p'`` by root
    bracketing, which is valid when ``p'`` is strictly increasing on the
    domain; the convexity flags are set from a sampled check of ``p''``.
    """
    poly = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
    d1, d2 = poly.deriv(1), poly.deriv(2)
    dom = _default_domain(domain, dim)
    lo, hi = float(np.min(dom.lo)), float(np.max(dom.hi))
    probe = np.linspace(lo, hi, 2001)
    curv = d2(probe)
    strict = bool(np.all(curv >= 0) and np.count_nonzero(curv <= 0) < 3)

    def grad_conj(z):
        z = np.asarray(z, dtype=float)
        width = max(abs(lo), abs(hi), 1.0)

        def invert(s):
            a, b = -width, width
            while d1(a) > s:
                a *= 2.0
            while d1(b) < s:
                b *= 2.0
            return brentq(lambda t: d1(t) - s, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)

        return np.vectorize(invert, otypes=[float])(z)

    return BregmanFunction(
        name="polynomial(" + ",".join(f"{c:g}" for c in coeffs) + ")",
        f=lambda x: np.sum(poly(np.asarray(x, dtype=float)), axis=-1),
        grad=lambda x: d1(np.asarray(x, dtype=float)),
        grad_conj=grad_conj if strict and poly.degree() >= 2 else None,
        domain=dom,
        strictly_convex=strict,
        strongly_coercive=strict and poly.degree() % 2 == 0 and poly.coef[-1] > 0,
        legendre=strict,
        meta={"coeffs": list(coeffs)},
    )


BUILTINS = {
    "squared_norm": squared_norm,
    "section6_quadratic": section6_quadratic,
    "quartic": quartic,
}


# -- operations ---------------------------------------------------------------

def _check_in_domain(bf: BregmanFunction, *points: np.ndarray):
    for p in points:
        if p.size != bf.dim:
            raise DimensionError(f"point of dimension {p.size} for {bf.dim}-d function {bf.name}")
        if not bf.domain.contains(p):
            raise DomainError(f"point {p.tolist()} outside domain {bf.domain} of {bf.name}")


def divergence(bf: BregmanFunction, x, y) -> np.ndarray:
    """Vectorised ``D_f(x, y)`` with no validation; broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return bf.f(x) - bf.f(y) - np.sum((x - y) * bf.grad(y), axis=-1)


def bregman_distance(bf: BregmanFunction, x, y) -> float:
    """``D_f(x, y) = f(x) - f(y) - <x - y, grad f(y)>``."""
    x = as_point(x, bf.dim, "x")
    y = as_point(y, bf.dim, "y")
    _check_in_domain(bf, x, y)
    d = float(divergence(bf, x, y))
    if not np.isfinite(d):
        raise NumericError(f"non-finite Bregman distance for {bf.name} at {x}, {y}")
    return d


def three_point_residual(bf: BregmanFunction, x, y, z) -> float:
    """``D(x,z) - [D(x,y) + D(y,z) + <x - y, grad f(y) - grad f(z)>]``; zero in exact arithmetic."""
    x, y, z = (as_point(p, bf.dim, n) for p, n in ((x, "x"), (y, "y"), (z, "z")))
    _check_in_domain(bf, x, y, z)
    g = bf.grad
    rhs = divergence(bf, x, y) + divergence(bf, y, z) + np.dot(x - y, g(y) - g(z))
    return float(divergence(bf, x, z) - rhs)


def two_point_residual(bf: BregmanFunction, x, y) -> float:
    """``D(x,y) - [-D(y,x) + <y - x, grad f(y) - grad f(x)>]``."""
    x = as_point(x, bf.dim, "x")
    y = as_point(y, bf.dim, "y")
    _check_in_domain(bf, x, y)
    rhs = -divergence(bf, y, x) + np.dot(y - x, bf.grad(y) - bf.grad(x))
    return float(divergence(bf, x, y) - rhs)


def conjugate_numeric(bf: BregmanFunction, xstar, search: Box,
                      grid_points: int = 10_000, xtol: float = 1e-12) -> float:
    """``sup_{x in search} <x, x*> - f(x)`` by a dense grid and bounded refinement.

    Coordinates are handled one at a time, which is exact for separable ``f``:
    with the other coordinates pinned at a base point ``b``, the per-axis
    maxima add up to the joint maximum minus ``(d-1) f(b)``.
    """
    xstar = as_point(xstar, name="xstar")
    if search.dim != xstar.size:
        raise DimensionError("search box and dual point dimensions differ")
    if not search.bounded or np.any(search.hi <= search.lo):
        raise DomainError(f"search box must be bounded with positive width, got {search}")
    d = xstar.size
    if d > 1 and not bf.separable:
        raise UnsupportedError("numeric conjugate needs a separable function in d > 1")

    base = search.clip(np.zeros(d))
    f_base = float(bf.f(base))
    total = (d - 1) * f_base
    for i in range(d):
        t = np.union1d(np.linspace(search.lo[i], search.hi[i], grid_points), base[i])
        pts = np.tile(base, (t.size, 1))
        pts[:, i] = t

        def objective(s, i=i):
            p = base.copy()
            p[i] = s
            return -(s * xstar[i] - float(bf.f(p)))

        vals = t * xstar[i] - bf.f(pts)
        k = int(np.argmax(vals))
        a, b = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
        best = float(vals[k])
        if b > a:
            res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                                  options={"xatol": xtol, "maxiter": 500})
            best = max(best, -float(res.fun))
        total += best
    if not np.isfinite(total):
        raise NumericError("numeric conjugate is not finite")
    return total


def conjugate(bf: BregmanFunction, xstar, search: Optional[Box] = None,
              numeric_fallback: bool = True) -> float:
    """Closed-form ``f*`` when attached, else :func:`conjugate_numeric`."""
    xstar = as_point(xstar, bf.dim, "xstar")
    if bf.conj is not None:
        return float(bf.conj(xstar))
    if not numeric_fallback:
        raise UnsupportedError(f"{bf.name} has no conjugate and numeric fallback is disabled")
    return conjugate_numeric(bf, xstar, search or bf.domain)


def fenchel_young_gap(bf: BregmanFunction, x, xstar, search: Optional[Box] = None) -> float:
    """``f(x) + f*(x*) - <x, x*>``, nonnegative and zero iff ``x* = grad f(x)``."""
    x = as_point(x, bf.dim, "x")
    xstar = as_point(xstar, bf.dim, "xstar")
    return float(bf.f(x)) + conjugate(bf, xstar, search) - float(np.dot(x, xstar))


def v_function(bf: BregmanFunction, x, xstar, search: Optional[Box] = None,
               numeric_fallback: bool = True) -> float:
    """``V(x, x*) = f(x) - <x, x*> + f*(x*)``."""
    x = as_point(x, bf.dim, "x")
    xstar = as_point(xstar, bf.dim, "xstar")
    fstar = conjugate(bf, xstar, search, numeric_fallback)
    return float(bf.f(x)) - float(np.dot(x, xstar)) + fstar


def check_v_shift_inequality(bf: BregmanFunction, x, xstar, ystar) -> float:
    """Slack ``V(x, x*+y*) - V(x, x*) - <grad f*(x*) - x, y*>``; nonnegative by convexity of ``f*``."""
    if bf.grad_conj is None:
        raise UnsupportedError(f"{bf.name} has no inverse gradient")
    x = as_point(x, bf.dim, "x")
    xstar = as_point(xstar, bf.dim, "xstar")
    ystar = as_point(ystar, bf.dim, "ystar")
    lhs = v_function(bf, x, xstar) + float(np.dot(bf.grad_conj(xstar) - x, ystar))
    return v_function(bf, x, xstar + ystar) - lhs


def bregman_project(bf: BregmanFunction, c: Box, x) -> np.ndarray:
    """Minimiser of ``D_f(y, x)`` over ``y`` in the box ``c``.

    For a separable strictly convex ``f`` the objective splits into 1-D convex
    problems whose minimum sits at ``x_i`` clamped to ``[lo_i, hi_i]``.
    """
    if not bf.separable:
        raise UnsupportedError(f"Bregman projection of non-separable {bf.name} is not supported")
    x = as_point(x, bf.dim, "x")
    if c.dim != x.size:
        raise DimensionError("box and point dimensions differ")
    _check_in_domain(bf, x)
    return c.clip(x)


def projection_variational_slack(bf: BregmanFunction, c: Box, x, ys=None) -> float:
    """``max_y <y - p, grad f(x) - grad f(p)>`` with ``p`` the projection of ``x``.

    Checked against the box vertices plus ``ys``; a valid projection gives a
    value ``<= 0``. The map is linear in ``y`` so vertices are the worst case.
    """
    x = as_point(x, bf.dim, "x")
    p = bregman_project(bf, c, x)
    cand = c.vertices()
    if ys is not None:
        cand = np.vstack([cand, np.atleast_2d(np.asarray(ys, dtype=float))])
    return float(np.max((cand - p) @ (bf.grad(x) - bf.grad(p))))


def projection_pythagoras_slack(bf: BregmanFunction, c: Box, x, ys) -> float:
    """``min_y D(y, x) - D(y, p) - D(p, x)``; a valid projection gives ``>= 0``."""
    x = as_point(x, bf.dim, "x")
    p = bregman_project(bf, c, x)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    slack = divergence(bf, ys, x) - divergence(bf, ys, p) - divergence(bf, p, x)
    return float(np.min(slack))


def grad_finite_diff_check(bf: BregmanFunction, x, h: float = 1e-5) -> float:
    """Worst relative mismatch between ``grad`` and central differences of ``f``."""
    x = as_point(x, bf.dim, "x")
    if np.any(x - h < bf.domain.lo) or np.any(x + h > bf.domain.hi):
        raise DomainError(f"x={x.tolist()} is within h={h} of the domain boundary")
    steps = h * np.eye(x.size)
    fd = (bf.f(x + steps) - bf.f(x - steps)) / (2.0 * h)
    g = bf.grad(x)
    return float(np.max(np.abs(fd - g) / (1.0 + np.abs(g))))
