"""
Fractional differences, Weyl derivatives and the Grünwald residual.

Conventions
-----------
* ``gbinom(alpha, nu)`` is the generalized binomial coefficient.
* The difference ``Delta_delta^alpha f(x) = sum_nu (-1)^nu binom(alpha, nu) f(x - nu*delta)``
  acts on ``exp(ikx)`` as the multiplier ``(1 - exp(-ik delta))^alpha`` taken on the
  principal branch, with the value 0 when ``k*delta`` is a multiple of 2*pi.
* The Weyl multiplier is ``(ik)^alpha = |k|^alpha exp(i alpha pi/2 sign k)`` for
  ``k != 0`` and 0 for ``k = 0``; negative ``alpha`` gives a fractional integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gammaln

from .periodic import TWO_PI, FunctionSpec, TrigPolynomial, eval_poly, from_poly, reduce_angle
from .quasinorm import QuadratureSpec, lp_distance, lp_norm

__all__ = [
    "TruncationPolicy",
    "DEFAULT_POLICY",
    "is_integer_order",
    "gbinom",
    "difference_weights",
    "series_terms",
    "binomial_tail",
    "difference_multiplier",
    "weyl_multiplier",
    "frac_difference",
    "weyl",
    "weyl_of_spec",
    "ResidualCurve",
    "grunwald_residual",
]

_CHUNK = 1 << 22


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation of the binomial series of a fractional difference.

    Attributes
    ----------
    tail_tol
        Largest admissible ``sum_{nu > M} |binom(alpha, nu)|``.
    max_terms
        Hard cap on ``M``; hitting it flags the result instead of failing.
    """

    tail_tol: float = 1e-8
    max_terms: int = 2_000_000

    def __post_init__(self):
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.max_terms < 2:
            raise ValueError("max_terms must be >= 2")


DEFAULT_POLICY = TruncationPolicy()


def is_integer_order(alpha: float, tol: float = 1e-12) -> bool:
    return abs(alpha - round(alpha)) <= tol


def gbinom(alpha: float, nu: int) -> float:
    """Generalized binomial coefficient ``binom(alpha, nu)`` by the product recurrence."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    out = 1.0
    for j in range(1, int(nu) + 1):
        out *= (alpha - j + 1) / j
    return out


def difference_weights(alpha: float, M: int) -> np.ndarray:
    """``a_nu = (-1)^nu binom(alpha, nu)`` for ``nu = 0..M``."""
    nu = np.arange(1, M + 1, dtype=float)
    ratios = (nu - 1.0 - alpha) / nu
    out = np.empty(M + 1)
    out[0] = 1.0
    # cumulative product is stable: every ratio has modulus < 1 + 1/nu
    out[1:] = np.cumprod(ratios)
    return out


def binomial_tail(alpha: float, M: int) -> float:
    """``sum_{nu > M} |binom(alpha, nu)|`` for ``M >= floor(alpha)``.

    Past ``floor(alpha)`` the terms ``a_nu`` have one sign and the full series
    sums to zero, so the tail equals the modulus of the partial sum
    ``sum_{nu<=M} a_nu = Gamma(M+1-alpha) / (Gamma(M+1) Gamma(1-alpha))``.
    """
    if is_integer_order(alpha):
        return 0.0 if M >= round(alpha) else float("nan")
    if M < np.floor(alpha):
        raise ValueError("tail formula needs M >= floor(alpha)")
    # |Gamma(1-alpha)| via gammaln of the absolute value
    return float(np.exp(gammaln(M + 1 - alpha) - gammaln(M + 1) - gammaln(1 - alpha)))


def series_terms(alpha: float, policy: TruncationPolicy = DEFAULT_POLICY):
    """Smallest ``M`` meeting the tail tolerance, capped at ``policy.max_terms``.

    Returns ``(M, tail, capped)``.
    """
    if is_integer_order(alpha):
        return int(round(alpha)), 0.0, False
    lo = int(np.floor(alpha))
    if binomial_tail(alpha, lo) <= policy.tail_tol:
        return lo, binomial_tail(alpha, lo), False
    hi = policy.max_terms
    if binomial_tail(alpha, hi) > policy.tail_tol:
        return hi, binomial_tail(alpha, hi), True
    while hi - lo > 1:  # tail is decreasing in M
        mid = (lo + hi) // 2
        if binomial_tail(alpha, mid) <= policy.tail_tol:
            hi = mid
        else:
            lo = mid
    return hi, binomial_tail(alpha, hi), False


def difference_multiplier(k, alpha: float, delta: float) -> np.ndarray:
    """``(1 - exp(-i k delta))^alpha`` on the principal branch; 0 on resonances."""
    theta = np.asarray(k, dtype=float) * float(delta)
    z = 1.0 - np.exp(-1j * theta)
    resonant = np.abs(np.mod(theta + np.pi, TWO_PI) - np.pi) < 1e-14
    out = np.zeros(z.shape, dtype=complex)
    nz = ~resonant
    out[nz] = np.exp(alpha * np.log(z[nz]))
    return out


def weyl_multiplier(k, alpha: float) -> np.ndarray:
    """``(ik)^alpha`` for ``k != 0`` and 0 for ``k = 0``."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape, dtype=complex)
    nz = k != 0
    out[nz] = np.abs(k[nz]) ** alpha * np.exp(0.5j * np.pi * alpha * np.sign(k[nz]))
    return out


def weyl(T: TrigPolynomial, alpha: float) -> TrigPolynomial:
    """Weyl derivative (``alpha > 0``) or integral (``alpha < 0``) of a polynomial."""
    return TrigPolynomial(T.coeffs * weyl_multiplier(T.ks, alpha))


def _series_multiplier(T: TrigPolynomial, weights: np.ndarray, delta: float) -> np.ndarray:
    """``sum_nu weights[nu] exp(-i k nu delta)`` for the frequencies of ``T``.

    The constant term is left at zero: subtracting the mean before summing is
    what makes truncated sums annihilate constants.  Weights are real, so the
    negative frequencies are conjugates of the positive ones.
    """
    n = T.degree
    out = np.zeros(T.coeffs.shape, dtype=complex)
    ks = [k for k in range(1, n + 1) if T.coeffs[n + k] != 0 or T.coeffs[n - k] != 0]
    if not ks:
        return out
    M = weights.size - 1
    step = max(1, _CHUNK // (8 * (1 + max(ks))))
    sums = np.zeros(len(ks), dtype=complex)
    dense = len(ks) > 4
    for s in range(0, M + 1, step):
        nu = np.arange(s, min(M + 1, s + step))
        w = weights[nu]
        if dense:
            # powers of one rotation: error grows like k ulp, far below the tail
            base = np.exp(-1j * reduce_angle(nu * delta))
            power = np.ones_like(base)
            j = 0
            for k in range(1, ks[-1] + 1):
                power *= base
                if k == ks[j]:
                    sums[j] += w @ power
                    j += 1
        else:
            for j, k in enumerate(ks):
                # k * nu is an exact integer, so the phase carries one rounding only
                sums[j] += w @ np.exp(-1j * reduce_angle((k * nu) * delta))
    for j, k in enumerate(ks):
        out[n + k] = sums[j]
        out[n - k] = np.conj(sums[j])
    return out


def _series_evaluator(f: FunctionSpec, weights: np.ndarray, delta: float, shift_mean: complex):
    M = weights.size - 1

    def ev(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.size, dtype=complex)
        step = max(1, _CHUNK // max(flat.size, 1))
        # fixed summation order: increasing nu
        for s in range(0, M + 1, step):
            nu = np.arange(s, min(M + 1, s + step))
            pts = reduce_angle(flat[None, :] - nu[:, None] * delta)
            vals = np.asarray(f.evaluator(pts.ravel())).reshape(pts.shape)
            if shift_mean:
                vals = vals - shift_mean
            out += weights[nu] @ vals
        return out.reshape(x.shape)

    return ev


def frac_difference(f: FunctionSpec, alpha: float, delta: float,
                    policy: TruncationPolicy = DEFAULT_POLICY, *, method: str = "auto",
                    breakpoint_terms: int = 512) -> FunctionSpec:
    """Fractional difference ``Delta_delta^alpha f``.

    Parameters
    ----------
    f : FunctionSpec
    alpha : float
        Order, ``alpha > 0``.
    delta : float
        Step, nonzero; negative values shift forward.
    policy : TruncationPolicy
    method : {"auto", "series", "multiplier"}
        ``"auto"`` applies the exact Fourier multiplier to polynomials and the
        binomial series to everything else.
    breakpoint_terms : int
        Shifted breakpoints ``b - nu*delta`` are recorded for
        ``nu <= min(M, breakpoint_terms)``; later terms carry weights of order
        ``nu^{-alpha-1}`` and their jumps are below quadrature resolution.

    Returns
    -------
    FunctionSpec
        Flagged ``"truncation-cap"`` when the term cap stopped the series
        before ``tail_tol`` was met.
    """
    alpha = float(alpha)
    delta = float(delta)
    if not alpha > 0:
        raise ValueError("difference order must be positive")
    if delta == 0.0:
        raise ValueError("step delta must be nonzero")
    if method not in ("auto", "series", "multiplier"):
        raise ValueError(f"unknown method {method!r}")
    params = {"alpha": alpha, "delta": delta, "of": f.kind}

    if method == "multiplier" or (method == "auto" and f.poly is not None):
        if f.poly is None:
            raise ValueError("multiplier route needs a polynomial input")
        T = TrigPolynomial(f.poly.coeffs * difference_multiplier(f.poly.ks, alpha, delta))
        return from_poly(T, kind="difference", **params)

    pp = f.extras.get("piecewise")
    if pp is not None and is_integer_order(alpha) and method == "auto":
        from .piecewise import linear_combination, to_spec

        m = int(round(alpha))
        a = np.rint(difference_weights(alpha, m))
        out = linear_combination([(pp, nu * delta, a[nu]) for nu in range(m + 1)])
        return to_spec(out, kind="difference", params=params, flags=f.flags)

    M, tail, capped = series_terms(alpha, policy)
    a = difference_weights(alpha, M)
    if is_integer_order(alpha):
        a = np.rint(a)
    # subtracting the mean leaves the full series unchanged (sum a_nu = 0) and
    # makes the truncated sum annihilate constants exactly
    mean = f.mean
    if mean is None and not is_integer_order(alpha):
        from .quasinorm import panel_nodes

        xs, ws = panel_nodes(f.breakpoints, 4096)
        mean = complex(np.dot(ws, f.evaluator(xs)))
    shift = 0j if is_integer_order(alpha) else (mean or 0j)
    if f.poly is not None:
        # same truncated series, summed per frequency: T(x - nu delta) only
        # rotates the coefficient c_k by exp(-i k nu delta)
        T = TrigPolynomial(f.poly.coeffs * _series_multiplier(f.poly, a, delta))
        flags = f.flags + (("truncation-cap",) if capped else ())
        return replace(from_poly(T, kind="difference", **params), flags=flags, extras={"terms": M, "tail": tail})
    ev = _series_evaluator(f, a, delta, shift)

    nb = min(M, breakpoint_terms)
    bps = tuple(
        float(v) for v in reduce_angle(
            np.asarray(f.breakpoints)[None, :] - np.arange(nb + 1)[:, None] * delta
        ).ravel()
    ) if f.breakpoints else ()

    fourier = None
    if f.fourier is not None or f.poly is not None:
        def fourier(k, f=f):
            k = np.atleast_1d(np.asarray(k, dtype=int))
            return f.coefficient(k) * difference_multiplier(k, alpha, delta)

    flags = f.flags + (("truncation-cap",) if capped else ())
    extras = {"terms": M, "tail": tail}
    if "resolution" in f.extras:
        extras["resolution"] = f.extras["resolution"]
    real = f.is_real and (is_integer_order(alpha))
    return FunctionSpec(ev, fourier=fourier, breakpoints=bps, kind="difference",
                        params=params, is_real=real, flags=flags, extras=extras)


def weyl_of_spec(f: FunctionSpec, alpha: float, K: int | None = None, N: int = 4096) -> FunctionSpec:
    """Weyl derivative or integral of a general periodic function.

    Polynomials are differentiated exactly.  A closed-form companion stored in
    ``f.extras["weyl"]`` (a callable ``alpha -> FunctionSpec`` or ``None``) is
    used when available.  Otherwise the degree-``K`` projection is multiplied
    and, if ``f`` has an exact coefficient rule, the multiplied rule is
    attached.  Positive orders require an exact rule: differentiating a raw
    spectral projection of a rough function only amplifies aliasing.

    The result is flagged ``"cutoff-insufficient"`` when the coefficients
    between ``K/2`` and ``K`` still carry more than ``1e-6`` in l_1.
    """
    alpha = float(alpha)
    if f.poly is not None:
        return from_poly(weyl(f.poly, alpha), kind="weyl", alpha=alpha, of=f.kind)
    companion = f.extras.get("weyl")
    if companion is not None:
        g = companion(alpha)
        if g is not None:
            return g
    if K is None:
        K = 2048
    ks = np.arange(-K, K + 1)
    if f.fourier is not None:
        c = f.coefficient(ks)
    else:
        if alpha > 0:
            raise ValueError(
                f"{f.kind}: positive-order Weyl derivative needs an exact Fourier rule")
        from .periodic import analyze, sample

        Ns = max(N, 1 << int(np.ceil(np.log2(4 * K + 2))))
        c = analyze(sample(f, Ns), K).coeffs
    m = weyl_multiplier(ks, alpha)
    T = TrigPolynomial(c * m)
    mag = np.abs(T.coeffs)
    upper = np.abs(ks) > K // 2
    flags = ("cutoff-insufficient",) if mag[upper].sum() > 1e-6 else ()

    fourier = None
    if f.fourier is not None:
        def fourier(k, f=f):
            k = np.atleast_1d(np.asarray(k, dtype=int))
            return f.coefficient(k) * weyl_multiplier(k, alpha)

    return FunctionSpec(lambda x, T=T: eval_poly(T, x), fourier=fourier, kind="weyl",
                        params={"alpha": alpha, "of": f.kind, "K": K}, is_real=f.is_real,
                        flags=f.flags + flags, extras={"resolution": K, "projection": T})


@dataclass(frozen=True)
class ResidualCurve:
    """Pairs ``(h, ||Delta_h^alpha f / h^alpha - g||_p)``."""

    h: np.ndarray
    values: np.ndarray
    flags: tuple = field(default=())

    def decreasing(self, slack: float = 1.0) -> bool:
        v = np.asarray(self.values)
        return bool(np.all(v[1:] <= slack * v[:-1]))


def grunwald_residual(f: FunctionSpec, g: FunctionSpec, alpha: float, p: float, h_schedule,
                      q: QuadratureSpec | None = None,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> ResidualCurve:
    """Residual of the difference quotient against a candidate derivative ``g``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    hs = np.asarray(h_schedule, dtype=float)
    if hs.size == 0 or np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise ValueError("h_schedule must be positive and strictly decreasing")
    vals = []
    flags: tuple = ()
    from .periodic import scale

    for h in hs:
        d = frac_difference(f, alpha, h, policy)
        flags = flags + tuple(fl for fl in d.flags if fl not in flags)
        vals.append(lp_distance(scale(d, h ** -alpha), g, p, q))
    return ResidualCurve(hs, np.array(vals), flags)
