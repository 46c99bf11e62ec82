"""
Fractional moduli of smoothness, the realization functional, and the
integral / tail-sum functionals used on right-hand sides of approximation
inequalities.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .fractional import DEFAULT_POLICY, TruncationPolicy, frac_difference, is_integer_order, weyl
from .periodic import FunctionSpec, TrigPolynomial, from_poly, partial_sum
from .quasinorm import QuadratureSpec, lp_distance, lp_norm

__all__ = [
    "ModulusCurve",
    "ETable",
    "RealizationResult",
    "TailSum",
    "IntegralResult",
    "modulus",
    "modulus_curve",
    "realization",
    "weighted_modulus_integral",
    "tail_sum",
    "sigma_rate",
    "rho_rate",
    "bernstein_rate",
    "dyadic_steps",
]


def dyadic_steps(jmin: int = 3, jmax: int = 10) -> np.ndarray:
    """``h = 2^{-j}`` for ``j = jmax..jmin`` (increasing ``h``)."""
    return 2.0 ** -np.arange(jmax, jmin - 1, -1, dtype=float)


def _two_column_csv(name: str, xs, ys, integer_x: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([name, "value"])
    for x, y in zip(xs, ys):
        w.writerow([int(x) if integer_x else repr(float(x)), repr(float(y))])
    return buf.getvalue()


def _read_two_column(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    body = rows[1:]
    return np.array([float(r[0]) for r in body]), np.array([float(r[1]) for r in body])


@dataclass(frozen=True, eq=False)
class ModulusCurve:
    """Samples ``(h, omega(h))`` with strictly increasing ``h``."""

    h: np.ndarray
    values: np.ndarray
    flags: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if h.shape != v.shape or h.ndim != 1:
            raise ValueError("h and values must be 1-d arrays of equal length")
        if np.any(np.diff(h) <= 0):
            raise ValueError("h must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("modulus values must be nonnegative")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "values", v)

    def is_monotone(self, slack: float = 1.02) -> bool:
        v = self.values
        return bool(np.all(v[:-1] <= slack * v[1:] + 1e-300))

    def __call__(self, t):
        """Log-log interpolation (power-law extrapolation at the ends)."""
        t = np.asarray(t, dtype=float)
        h, v = self.h, self.values
        if np.any(v <= 0):
            return np.interp(t, h, v)
        lh, lv = np.log(h), np.log(v)
        out = np.interp(np.log(t), lh, lv)
        if h.size >= 2:
            s0 = (lv[1] - lv[0]) / (lh[1] - lh[0])
            s1 = (lv[-1] - lv[-2]) / (lh[-1] - lh[-2])
            lt = np.log(t)
            out = np.where(lt < lh[0], lv[0] + s0 * (lt - lh[0]), out)
            out = np.where(lt > lh[-1], lv[-1] + s1 * (lt - lh[-1]), out)
        return np.exp(out)

    def to_csv(self) -> str:
        return _two_column_csv("h", self.h, self.values)

    @classmethod
    def from_csv(cls, text: str) -> "ModulusCurve":
        return cls(*_read_two_column(text))


@dataclass(frozen=True, eq=False)
class ETable:
    """Best-approximation errors ``E_n`` at increasing degrees ``n``.

    Degrees need not be contiguous; :meth:`value` interpolates log-log
    between computed degrees (``E`` is nonincreasing, so the interpolant is
    the natural power-law filling).
    """

    n: np.ndarray
    values: np.ndarray
    polynomials: list = field(default=None, repr=False)
    statuses: list = field(default=None, repr=False)

    def __post_init__(self):
        n = np.asarray(self.n, dtype=int)
        v = np.asarray(self.values, dtype=float)
        if n.shape != v.shape or n.ndim != 1:
            raise ValueError("n and values must be 1-d arrays of equal length")
        if np.any(np.diff(n) <= 0):
            raise ValueError("degrees must be strictly increasing")
        if np.any(v < 0):
            raise ValueError("E values must be nonnegative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", v)

    @property
    def n_max(self) -> int:
        return int(self.n[-1])

    def is_monotone(self, slack: float = 1.02) -> bool:
        v = self.values
        return bool(np.all(v[1:] <= slack * v[:-1] + 1e-300))

    def value(self, nu):
        nu = np.asarray(nu, dtype=float)
        n, v = self.n.astype(float), self.values
        exact = np.interp(nu, n, v)
        pos = (v > 0)
        if np.all(pos) and n.size > 1 and n[0] >= 1:
            return np.exp(np.interp(np.log(np.maximum(nu, 1)), np.log(n), np.log(v)))
        if np.all(pos) and n.size > 2 and n[0] == 0:
            # degree 0 is off the log scale: interpolate from degree 1 onward
            lg = np.exp(np.interp(np.log(np.maximum(nu, 1)), np.log(n[1:]), np.log(v[1:])))
            return np.where(nu < n[1], exact, lg)
        return exact

    def to_csv(self) -> str:
        return _two_column_csv("n", self.n, self.values, integer_x=True)

    @classmethod
    def from_csv(cls, text: str) -> "ETable":
        n, v = _read_two_column(text)
        return cls(n.astype(int), v)


@dataclass
class RealizationResult:
    """``R_alpha(f, delta)_p`` with minimizer and the two parts of the objective."""

    value: float
    minimizer: TrigPolynomial
    parts: tuple
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TailSum:
    """Truncated sum ``(sum_{nu=n+1}^{n_max} w(nu) E_nu^p)^{1/p}``.

    ``last_fraction`` is the last term over the whole sum (inside the p-th
    power); ``completion`` is the analytic power-law estimate of the terms
    beyond the horizon (also inside the p-th power), 0 unless requested.
    """

    value: float
    last_term: float
    last_fraction: float
    completion: float = 0.0
    truncated_value: float = 0.0


@dataclass(frozen=True)
class IntegralResult:
    """``(int_0^delta omega(t)^p t^{-w} dt)^{1/p}`` with head-error bookkeeping."""

    value: float
    head: float
    divergent: bool
    local_slope: float
    flags: tuple = ()


# ---------------------------------------------------------------------------
# moduli


def _check_order(alpha: float, p: float):
    pp = min(p, 1.0)
    if not (is_integer_order(alpha) and alpha >= 1) and not alpha > 1.0 / pp - 1.0:
        raise ValueError(
            f"order alpha={alpha} must be a positive integer or exceed 1/min(p,1)-1 = {1.0 / pp - 1.0:g}")


def _difference_norm(f, alpha, delta, p, q, policy):
    d = frac_difference(f, alpha, delta, policy)
    return lp_norm(d, p, q), d.flags


def modulus(f: FunctionSpec, alpha: float, h: float, p: float, q: QuadratureSpec | None = None,
            scan: int = 33, *, refine: int = 9, policy: TruncationPolicy = DEFAULT_POLICY,
            full_output: bool = False, check: bool = True):
    """Modulus of smoothness ``omega_alpha(f, h)_p = sup_{|delta| <= h} ||Delta_delta^alpha f||_p``.

    The supremum is taken over ``scan`` equispaced steps in ``[-h, h]``
    (zero excluded) followed by one refinement pass of ``refine`` points
    around the best step.  Integer orders only need ``delta > 0``: the norm
    of ``Delta_{-delta}^m f`` equals that of ``Delta_delta^m f``.

    Ties are resolved toward the smaller ``|delta|`` (then the positive one).
    """
    alpha = float(alpha)
    if check:
        _check_order(alpha, p)
    if not h > 0:
        raise ValueError("h must be positive")
    symmetric = is_integer_order(alpha)
    if symmetric:
        grid = np.linspace(0.0, h, (scan + 1) // 2 + 1)[1:]
    else:
        grid = np.linspace(-h, h, scan)
        grid = grid[grid != 0.0]
    # evaluate in order of increasing |delta| so strict '>' keeps the smaller step
    order = np.lexsort((-np.sign(grid), np.abs(grid)))
    grid = grid[order]
    flags: tuple = ()
    best, arg = -1.0, grid[0]
    vals = {}
    for d in grid:
        v, fl = _difference_norm(f, alpha, d, p, q, policy)
        vals[d] = v
        flags += tuple(x for x in fl if x not in flags)
        if v > best:
            best, arg = v, d
    # refinement between the neighbours of the best step
    srt = np.sort(grid)
    i = int(np.searchsorted(srt, arg))
    lo = srt[i - 1] if i > 0 else (0.0 if symmetric else -h)
    hi = srt[i + 1] if i + 1 < srt.size else h
    fine = np.linspace(lo, hi, refine + 2)[1:-1]
    fine = fine[(fine != 0.0) & (np.abs(fine) <= h)]
    fine = fine[np.lexsort((-np.sign(fine), np.abs(fine)))]
    for d in fine:
        if d in vals:
            continue
        v, fl = _difference_norm(f, alpha, d, p, q, policy)
        flags += tuple(x for x in fl if x not in flags)
        if v > best or (v == best and abs(d) < abs(arg)):
            best, arg = v, d
    best = max(best, 0.0)
    if full_output:
        return best, {"argmax": float(arg), "flags": flags}
    return best


def modulus_curve(f: FunctionSpec, alpha: float, p: float, h_list=None, q: QuadratureSpec | None = None,
                  scan: int = 33, **kw) -> ModulusCurve:
    """:func:`modulus` at every ``h`` of ``h_list`` (default dyadic ``2^-10..2^-3``)."""
    hs = dyadic_steps() if h_list is None else np.sort(np.asarray(h_list, dtype=float))
    vals, flags = [], ()
    for h in hs:
        v, info = modulus(f, alpha, h, p, q, scan, full_output=True, **kw)
        vals.append(v)
        flags += tuple(x for x in info["flags"] if x not in flags)
    return ModulusCurve(hs, np.asarray(vals), flags)


# ---------------------------------------------------------------------------
# realization


def realization(f: FunctionSpec, alpha: float, delta: float, p: float, solver_opts=None,
                q: QuadratureSpec | None = None, *, lambdas: int = 5) -> RealizationResult:
    """Realization functional ``inf_{T in T_[1/delta]} ||f - T||_p + delta^alpha ||T^{(alpha)}||_p``.

    Candidates are the best approximation of degree ``[1/delta]``, the zero
    polynomial, the Jackson-kernel mean of ``f`` and minimizers of the penalized problems
    ``||f - T||_p^p + lam ||T^{(alpha)}||_p^p`` for a few ``lam`` around the
    balancing value ``lam = delta^alpha (B/A)^{1-p}`` (A, B the two norms).
    The returned value is the best objective found, hence an upper bound.
    """
    from .best_approx import SolverOptions, best_approx, penalized_approx
    from .corpus import make_smooth

    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    opts = solver_opts or SolverOptions()
    m = int(np.floor(1.0 / delta + 1e-12))
    da = delta ** alpha

    def score(T: TrigPolynomial):
        A = lp_distance(f, from_poly(T), p, q)
        B = lp_norm(from_poly(weyl(T, alpha)), p, q)
        return A + da * B, A, B

    cands = []
    ba = best_approx(f, m, p, opts, q)
    cands.append(("best_approx", ba.polynomial))
    cands.append(("zero", TrigPolynomial.zeros(m)))
    if ba.value == 0.0:
        T = ba.polynomial
        v, A, B = score(T)
        return RealizationResult(v, T, (A, da * B), {"start": "best_approx"})
    # Jackson-kernel mean: trades a slightly larger error for a derivative
    # without the oscillations of near-best polynomials
    kernel = make_smooth("jackson", {"n": m}).poly.coeffs
    cands.append(("jackson-mean", TrigPolynomial(partial_sum(f, m).coeffs * kernel)))
    scored = [(score(T), name, T) for name, T in cands]
    (v0, A0, B0), _, start = min(scored, key=lambda s: s[0][0])
    lam0 = da ** p if B0 == 0 or A0 == 0 else da * (B0 / A0) ** (1.0 - p)
    lam_grid = lam0 * np.geomspace(0.1, 10.0, lambdas)
    for lam in lam_grid:
        T = penalized_approx(f, m, alpha, float(lam), p, opts, start=start)
        scored.append((score(T), f"penalized-{lam:.3g}", T))
    best = min(scored, key=lambda s: (s[0][0], s[1]))
    (v, A, B), name, T = best
    return RealizationResult(float(v), T, (float(A), float(da * B)),
                             {"start": name, "degree": m, "lambda0": float(lam0)})


# ---------------------------------------------------------------------------
# right-hand-side functionals


def weighted_modulus_integral(curve: ModulusCurve, p: float, weight_exponent: float, delta: float,
                              *, head_points: int = 3, margin: float = 0.02,
                              slow_factor=None) -> IntegralResult:
    """``(int_0^delta omega(t)^p t^{-w} dt)^{1/p}`` from a sampled modulus curve.

    Between samples ``omega`` is interpolated as a power law, which makes each
    panel integral exact for power-law curves.  The unresolved head
    ``(0, h_min]`` is integrated with the power law fitted to the first
    ``head_points`` samples; if that law makes the integrand exponent
    ``p*s - w`` not exceed ``-1 + margin`` the integral is flagged divergent
    and ``inf`` is returned.  Beyond the last sample the last panel's law is
    extended.

    ``slow_factor`` optionally multiplies the weight ``t^{-w}`` by a slowly
    varying function of ``t`` (e.g. a logarithm); the panels are then
    integrated numerically in ``log t`` and divergence is still judged from
    the power part alone.
    """
    h = curve.h
    v = curve.values
    w = float(weight_exponent)
    if np.all(v == 0):
        return IntegralResult(0.0, 0.0, False, np.inf)
    if not delta > 0:
        raise ValueError("delta must be positive")

    def panel(t0, t1, w0, s):
        # int_{t0}^{t1} (w0 (t/t0)^s)^p t^{-w} dt
        if slow_factor is not None:
            return _log_panel(t0, t1, w0, s)
        e = p * s - w + 1.0
        c = w0 ** p * t0 ** (-p * s)
        if abs(e) < 1e-12:
            return c * np.log(t1 / t0)
        return c * (t1 ** e - t0 ** e) / e

    def _log_panel(t0, t1, w0, s):
        # same integral with the slow factor, in the variable u = log t
        def g(u):
            t = np.exp(u)
            return (w0 * (t / t0) ** s) ** p * t ** (1.0 - w) * slow_factor(t)
        return quad(g, np.log(t0), np.log(t1), limit=200)[0]

    pos = v > 0
    k = min(head_points, h.size)
    if np.all(pos[:k]) and k >= 2:
        s0 = float(np.polyfit(np.log(h[:k]), np.log(v[:k]), 1)[0])
    else:
        s0 = np.inf  # curve vanishes near zero: no head contribution
    flags = ()
    e0 = p * s0 - w + 1.0
    if e0 <= margin:
        return IntegralResult(np.inf, np.inf, True, s0, ("divergent",))
    t0 = min(h[0], delta)
    if not np.isfinite(s0):
        head = 0.0
    elif slow_factor is not None:
        # head law anchored at the first sample, integrated from 0
        def gh(u):
            t = np.exp(u)
            return (v[0] * (t / h[0]) ** s0) ** p * t ** (1.0 - w) * slow_factor(t)
        # the integrand decays like exp(e0 u) as u -> -inf; stop where it is negligible
        head = quad(gh, np.log(t0) - 60.0 / e0, np.log(t0), limit=200)[0]
    else:
        head = v[0] ** p * h[0] ** (-p * s0) * t0 ** e0 / e0
    total = head
    for i in range(h.size - 1):
        a, b = h[i], h[i + 1]
        if a >= delta:
            break
        b_eff = min(b, delta)
        if v[i] > 0 and v[i + 1] > 0:
            s = np.log(v[i + 1] / v[i]) / np.log(b / a)
            total += panel(a, b_eff, v[i], s)
        else:
            # linear interpolation with a zero end: use the trapezoid on [a, b_eff]
            va = v[i]
            vb = v[i] + (v[i + 1] - v[i]) * (b_eff - a) / (b - a)
            total += 0.5 * (va ** p * a ** -w + vb ** p * b_eff ** -w) * (b_eff - a)
    if delta > h[-1]:
        if h.size >= 2 and v[-1] > 0 and v[-2] > 0:
            s1 = np.log(v[-1] / v[-2]) / np.log(h[-1] / h[-2])
        else:
            s1 = 0.0
        total += panel(h[-1], delta, v[-1], s1) if v[-1] > 0 else 0.0
        flags += ("extrapolated",)
    val = total ** (1.0 / p)
    headv = head ** (1.0 / p) if head > 0 else 0.0
    return IntegralResult(float(val), float(headv), False, s0, flags)


def tail_sum(table: ETable, p: float, exponent: float | None = None, n: int = 0, *, weight=None,
             completion: bool = False, fit_points: int = 4, upto: int | None = None) -> TailSum:
    """``(sum_{nu=n+1}^{H} nu^exponent E_nu^p)^{1/p}`` up to the horizon ``H``.

    Parameters
    ----------
    table : ETable
        Missing degrees are filled by the table's log-log interpolation.
    p : float
    exponent : float, optional
        Power of ``nu`` in the weight; ignored when ``weight`` is given.
    n : int
        Summation starts at ``n + 1``; requires ``n < n_max``.
    weight : callable, optional
        Vectorized ``nu -> weight`` replacing ``nu**exponent``.
    completion : bool
        Add the power-law continuation of the terms beyond the horizon,
        using the slope of the last ``fit_points`` table entries.
    upto : int, optional
        Truncation degree ``H``; defaults to (and is capped at) the table's
        largest degree.
    """
    H = int(table.n_max) if upto is None else min(int(upto), int(table.n_max))
    if n >= H:
        raise ValueError("start index must be below the table horizon")
    nu = np.arange(n + 1, H + 1, dtype=float)
    wts = weight(nu) if weight is not None else nu ** float(exponent)
    terms = np.asarray(wts) * table.value(nu) ** p
    s = float(terms.sum())
    last = float(terms[-1]) if terms.size else 0.0
    comp = 0.0
    if completion and terms.size >= 2 and last > 0:
        # slope of log(term) vs log(nu) over the last entries of the table
        tn = table.n[table.n <= H].astype(float)
        tn = tn[-min(fit_points, tn.size):]
        tn = tn[tn > n]
        if tn.size >= 2:
            tw = weight(tn) if weight is not None else tn ** float(exponent)
            tt = np.asarray(tw) * table.value(tn) ** p
            if np.all(tt > 0):
                slope = float(np.polyfit(np.log(tn), np.log(tt), 1)[0])
                if slope < -1.0:
                    # sum_{nu > H} last (nu/H)^slope  ~  last * H / (-slope - 1)
                    comp = last * H / (-slope - 1.0)
                else:
                    comp = np.inf
    total = s + comp
    val = total ** (1.0 / p) if total > 0 else 0.0
    trunc = s ** (1.0 / p) if s > 0 else 0.0
    frac = last / s if s > 0 else 0.0
    return TailSum(float(val), last, float(frac), float(comp), float(trunc))


# ---------------------------------------------------------------------------
# rate functions


def _branch(alpha: float, p: float, integers_from: int) -> str:
    thr = 1.0 / p - 1.0
    if (is_integer_order(alpha) and round(alpha) >= integers_from) or alpha > thr + 1e-12:
        return "power"
    if abs(alpha - thr) <= 1e-12:
        return "log"
    return "threshold"


def sigma_rate(n, alpha: float, p: float):
    """Bernstein-type growth ``sigma_{alpha,p}(n)`` (logarithm of ``n + 1``).

    ``n^alpha`` if ``alpha`` is a positive integer or ``alpha > 1/p - 1``;
    ``n^{1/p-1} log^{1/p}(n+1)`` if ``alpha = 1/p - 1`` is not an integer;
    ``n^{1/p-1}`` otherwise.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    b = _branch(alpha, p, 1)
    if b == "power":
        out = n ** alpha
    elif b == "log":
        out = n ** (1.0 / p - 1.0) * np.log(n + 1.0) ** (1.0 / p)
    else:
        out = n ** (1.0 / p - 1.0)
    return float(out) if out.ndim == 0 else out


def rho_rate(n, alpha: float, p: float):
    """Loss factor ``rho_{alpha,p}(n)`` of simultaneous approximation.

    1 if ``alpha`` is a positive integer or ``alpha > 1/p - 1``;
    ``log^{1/p}(n+1)`` at the threshold; ``n^{1/p-1-alpha}`` below it.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 1):
        raise ValueError("n must be >= 1")
    b = _branch(alpha, p, 1)
    if b == "power":
        out = np.ones_like(n)
    elif b == "log":
        out = np.log(n + 1.0) ** (1.0 / p)
    else:
        out = n ** (1.0 / p - 1.0 - alpha)
    return float(out) if out.ndim == 0 else out


def bernstein_rate(n, alpha: float, p: float):
    """Growth of the sharp Bernstein constant: like :func:`sigma_rate` but with
    ``log n`` and with the integer branch including 0 (nonnegative integers)."""
    n = np.asarray(n, dtype=float)
    b = _branch(alpha, p, 0)
    if b == "power":
        out = n ** alpha
    elif b == "log":
        out = n ** (1.0 / p - 1.0) * np.log(n) ** (1.0 / p)
    else:
        out = n ** (1.0 / p - 1.0)
    return float(out) if out.ndim == 0 else out
