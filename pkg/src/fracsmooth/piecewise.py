"""
Piecewise polynomials on the torus.

Step functions, piecewise-linear staircases and Bernoulli-type primitives are
all piecewise polynomials; representing them exactly lets shifts, finite
differences, Fourier coefficients and L_p integrals be computed without
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .periodic import TWO_PI, FunctionSpec, reduce_angle

__all__ = ["PiecewisePoly", "linear_combination", "to_spec"]

_EDGE_TOL = 1e-13
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _taylor_shift(c: np.ndarray, s: float) -> np.ndarray:
    """Coefficients of ``P(t + s)`` given those of ``P(t)`` (power basis, low first)."""
    d = c.size - 1
    out = np.zeros_like(c)
    for m in range(d + 1):
        for j in range(m + 1):
            out[j] += c[m] * (factorial(m) // (factorial(j) * factorial(m - j))) * s ** (m - j)
    return out


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    """Function equal to ``sum_m coefs[i, m] (x - edges[i])^m`` on ``[edges[i], edges[i+1])``.

    ``edges`` starts at 0 and ends at 2*pi.  At an interior edge the value of
    the left piece is used (left continuity); at 0 the first piece is used.
    """

    edges: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        c = np.atleast_2d(np.asarray(self.coefs))
        if e.size != c.shape[0] + 1:
            raise ValueError("need one coefficient row per piece")
        if abs(e[0]) > 0 or abs(e[-1] - TWO_PI) > 1e-12 or np.any(np.diff(e) <= 0):
            raise ValueError("edges must increase from 0 to 2*pi")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "coefs", c)

    @property
    def npieces(self) -> int:
        return self.coefs.shape[0]

    @property
    def degree(self) -> int:
        return self.coefs.shape[1] - 1

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.coefs) or bool(np.all(self.coefs.imag == 0))

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.edges)

    def __call__(self, x):
        x = reduce_angle(x)
        i = np.clip(np.searchsorted(self.edges, x, side="left") - 1, 0, self.npieces - 1)
        t = x - self.edges[i]
        c = self.coefs[i]
        out = c[..., -1]
        for m in range(self.degree - 1, -1, -1):
            out = out * t + c[..., m]
        return out

    def breakpoints(self, tol: float = 1e-12) -> tuple:
        """Edges where the function or one of its derivatives jumps."""
        left = self._end_values()
        right = self.coefs
        jump = np.max(np.abs(right - np.roll(left, 1, axis=0)), axis=1)
        scale = max(1.0, float(np.max(np.abs(self.coefs))))
        return tuple(float(e) for e, j in zip(self.edges[:-1], jump) if j > tol * scale)

    def _end_values(self) -> np.ndarray:
        """Taylor coefficients of each piece re-centred at its right edge."""
        return np.array([_taylor_shift(c, L) for c, L in zip(self.coefs, self.lengths)])

    def jumps(self) -> np.ndarray:
        """Value jumps ``f(e+) - f(e-)`` at every left edge (wrap jump at index 0)."""
        left = self._end_values()[:, 0]
        return self.coefs[:, 0] - np.roll(left, 1)

    def is_continuous(self, tol: float = 1e-10) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.coefs[:, 0]))))
        return bool(np.all(np.abs(self.jumps()) <= tol * scale))

    def derivative(self) -> "PiecewisePoly":
        if self.degree == 0:
            return PiecewisePoly(self.edges, np.zeros_like(self.coefs))
        m = np.arange(1, self.degree + 1)
        return PiecewisePoly(self.edges, self.coefs[:, 1:] * m)

    def trimmed(self, rel: float = 1e-13) -> "PiecewisePoly":
        """Drop trailing power columns that vanish to relative precision."""
        c = self.coefs
        scale = max(1e-300, float(np.max(np.abs(c))))
        d = c.shape[1]
        while d > 1 and np.max(np.abs(c[:, d - 1]) * self.lengths.max() ** (d - 1)) <= rel * scale:
            d -= 1
        return PiecewisePoly(self.edges, c[:, :d])

    def fourier(self, k) -> np.ndarray:
        """Exact ``(1/2pi) int f(x) exp(-ikx) dx``."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.zeros(k.shape, dtype=complex)
        d = self.degree
        for a, L, c in zip(self.edges[:-1], self.lengths, self.coefs):
            z = -1j * k * L  # dimensionless exponent over the piece
            # moments int_0^L t^m e^{-ikt} dt = L^{m+1} J_m(z), J_m(z) = int_0^1 s^m e^{zs} ds
            J = _unit_moments(z, d)
            piece = sum(c[m] * L ** (m + 1) * J[m] for m in range(d + 1))
            out += np.exp(-1j * k * a) * piece
        return out / TWO_PI

    def lp_power(self, p: float) -> float | None:
        """``(1/2pi) int |f|^p`` computed piecewise; ``None`` for complex data."""
        if not self.is_real:
            return None
        pp = self.trimmed()
        coefs = np.real(pp.coefs)
        total = 0.0
        for L, c in zip(pp.lengths, coefs):
            total += _piece_power_integral(c, L, p)
        return total / TWO_PI

    def mean(self) -> complex:
        return complex(self.fourier(np.array([0]))[0])


def _unit_moments(z: np.ndarray, d: int) -> list:
    """``J_m(z) = int_0^1 s^m e^{z s} ds`` for ``m = 0..d``, stable for all ``z``."""
    z = np.asarray(z, dtype=complex)
    out = []
    small = np.abs(z) < 1.0
    ez = np.exp(z)
    zz = np.where(small, 1.0, z)
    # upward recurrence J_m = (e^z - m J_{m-1}) / z, stable for |z| >= 1
    Jprev = np.where(small, 0, (ez - 1) / zz)
    rec = [Jprev]
    for m in range(1, d + 1):
        Jprev = (ez - m * Jprev) / zz
        rec.append(Jprev)
    # power series for small |z|: J_m = sum_j z^j / (j! (m + j + 1))
    terms = np.arange(30)
    fact = np.array([float(factorial(j)) for j in terms])
    zs = np.where(small, z, 0)
    powers = zs[..., None] ** terms
    for m in range(d + 1):
        series = (powers / (fact * (m + terms + 1))).sum(axis=-1)
        out.append(np.where(small, series, rec[m]))
    return out


def _linear_power(c0: float, c1: float, L: float, p: float) -> float:
    """``int_0^L |c0 + c1 t|^p dt``."""
    if c1 == 0.0:
        return abs(c0) ** p * L
    root = -c0 / c1
    def prim(t):  # antiderivative of |c0 + c1 t|^p on a sign-constant interval
        return abs(c0 + c1 * t) ** (p + 1) / ((p + 1) * abs(c1))
    if 0.0 < root < L:
        return prim(0.0) + prim(L)  # both halves decrease to zero at the root
    return abs(prim(L) - prim(0.0))


def _leading_zeros(c: np.ndarray, scale: float, rel: float = 1e-12) -> int:
    """Number of leading power coefficients that vanish relative to ``scale``."""
    k = 0
    while k < c.size - 1 and abs(c[k]) <= rel * scale:
        k += 1
    return k


def _piece_power_integral(c: np.ndarray, L: float, p: float) -> float:
    if c.size == 1:
        return abs(c[0]) ** p * L
    if c.size == 2:
        return _linear_power(c[0], c[1], L, p)
    # real roots inside the piece, merged into clusters with multiplicities
    raw = np.roots(np.trim_zeros(c[::-1], "f"))
    raw = np.sort(raw[(np.abs(raw.imag) < 1e-6 * L) & (raw.real > 0) & (raw.real < L)].real)
    roots, mult = [], []
    for r in raw:
        if roots and r - roots[-1] < 1e-6 * L:
            mult[-1] += 1
        else:
            roots.append(r)
            mult.append(1)
    scale = float(np.max(np.abs(c) * L ** np.arange(c.size)))
    end = _taylor_shift(c.astype(float), L)[::-1] * (-1.0) ** np.arange(c.size)[::-1]
    knots = np.concatenate([[0.0], roots, [L]])
    kmult = [_leading_zeros(c, scale)] + mult + [_leading_zeros(end[::-1], scale)]
    poly = np.polynomial.Polynomial(c)
    total = 0.0
    # substitution t = a + h s^m with m = 2/(1 + k p) turns the |t - a|^(k p)
    # behaviour at a root of multiplicity k into a linear factor in s, so
    # Gauss-Legendre converges quickly from both ends of each sub-interval
    s = 0.5 * (_GL_X + 1.0)
    w = 0.5 * _GL_W
    for i, (a, b) in enumerate(zip(knots[:-1], knots[1:])):
        h = 0.5 * (b - a)
        if h <= 0:
            continue
        for x0, sign, k in ((a, 1.0, kmult[i]), (b, -1.0, kmult[i + 1])):
            m = 2.0 / (1.0 + k * p)
            t = x0 + sign * h * s ** m
            total += float(np.dot(w, np.abs(poly(t)) ** p * h * m * s ** (m - 1)))
    return total


def linear_combination(terms) -> PiecewisePoly:
    """``sum_j w_j f_j(x - s_j)`` for ``terms = [(f_j, s_j, w_j), ...]``, exactly."""
    terms = list(terms)
    edges = [np.array([0.0, TWO_PI])]
    for f, s, _ in terms:
        edges.append(reduce_angle(f.edges[:-1] + s))
    e = np.unique(np.concatenate(edges))
    keep = np.concatenate([[True], np.diff(e) > _EDGE_TOL])
    e = e[keep]
    if TWO_PI - e[-1] <= _EDGE_TOL:
        e = e[:-1]
    e = np.concatenate([e, [TWO_PI]])
    deg = max(f.degree for f, _, _ in terms)
    cplx = any(np.iscomplexobj(f.coefs) or np.iscomplexobj(w) for f, _, w in terms)
    out = np.zeros((e.size - 1, deg + 1), dtype=complex if cplx else float)
    mids = 0.5 * (e[:-1] + e[1:])
    for f, s, w in terms:
        y = reduce_angle(mids - s)
        j = np.clip(np.searchsorted(f.edges, y, side="right") - 1, 0, f.npieces - 1)
        # local variable of piece j at the new left edge, wrapped into [0, 2pi)
        offset = np.mod(e[:-1] - s - f.edges[j], TWO_PI)
        offset = np.where(offset > f.lengths[j] + 1e-9, offset - TWO_PI, offset)
        for i in range(e.size - 1):
            c = np.zeros(deg + 1, dtype=out.dtype)
            c[: f.degree + 1] = f.coefs[j[i]]
            out[i] += w * _taylor_shift(c, offset[i])
    return PiecewisePoly(e, out)


def to_spec(pp: PiecewisePoly, kind: str, params: dict | None = None, *,
            evaluator=None, extras: dict | None = None, flags: tuple = ()) -> FunctionSpec:
    """Wrap a piecewise polynomial with exact Fourier rule and exact L_p integrator."""
    extras = dict(extras or {})
    extras.setdefault("piecewise", pp)

    def weyl_companion(alpha, pp=pp):
        # integer orders only, and only while the function stays continuous
        if alpha <= 0 or abs(alpha - round(alpha)) > 1e-12:
            return None
        g = pp
        for _ in range(int(round(alpha))):
            if not g.is_continuous():
                return None
            g = g.derivative()
        return to_spec(g, kind=f"{kind}'", params={"alpha": alpha, "of": kind})

    extras.setdefault("weyl", weyl_companion)

    def lp_exact(p, pp=pp):
        v = pp.lp_power(p)
        return None if v is None else v ** (1.0 / p)

    return FunctionSpec(
        evaluator=evaluator or pp,
        fourier=pp.fourier,
        breakpoints=pp.breakpoints(),
        lp_exact=lp_exact if pp.is_real else None,
        kind=kind,
        params=dict(params or {}),
        is_real=pp.is_real,
        flags=flags,
        extras=extras,
    )
