"""
Library of test functions with known analytic structure.

Every constructor returns a :class:`~fracsmooth.periodic.FunctionSpec`
carrying an exact Fourier rule and, where available, an exact L_p
integrator and exact derivative companions.
"""

from __future__ import annotations

import json
from math import comb, factorial

import numpy as np
from scipy.special import bernoulli

from .fractional import weyl_of_spec
from .periodic import TWO_PI, FunctionSpec, TrigPolynomial, from_poly, reduce_angle
from .piecewise import PiecewisePoly, linear_combination, to_spec

__all__ = [
    "make_sign_sin",
    "make_jump",
    "make_f_r",
    "make_g_nr",
    "make_phi_nr",
    "make_krotov_primitive",
    "make_smooth",
    "make_frac_integral",
    "from_record",
    "KINDS",
    "krotov_cutoff",
]


def _sign_sin_modulus(alpha, h, p):
    """Exact first-order modulus; ``None`` for other orders."""
    if alpha != 1:
        return None
    return 2.0 * (min(h, np.pi) / np.pi) ** (1.0 / p)


def make_sign_sin() -> FunctionSpec:
    """Square wave ``sign(sin x)`` with value 0 at 0 and pi."""
    pp = PiecewisePoly([0.0, np.pi, TWO_PI], [[1.0], [-1.0]])

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < np.pi, 1.0, -1.0)
        return np.where((x == 0.0) | (x == np.pi), 0.0, out)

    def fourier(k):
        k = np.atleast_1d(np.asarray(k))
        out = np.zeros(k.shape, dtype=complex)
        odd = (k % 2) != 0
        out[odd] = 2.0 / (1j * np.pi * k[odd])
        return out

    spec = to_spec(pp, "sign_sin", evaluator=ev, extras={"modulus": _sign_sin_modulus})
    return FunctionSpec(ev, fourier=fourier, breakpoints=(0.0, np.pi), lp_exact=lambda p: 1.0,
                        kind="sign_sin", extras=spec.extras)


def make_jump(d0: float, jumps, p_declared: float | None = None) -> FunctionSpec:
    """Step function ``d0 + sum_{x_k < x} d_k`` on [0, 2*pi).

    Parameters
    ----------
    d0 : float
    jumps : iterable of (x_k, d_k) pairs or ``{"x":..., "d":...}`` mappings
    p_declared : float, optional
        Exponent for which ``sum |d_k|^p`` must be finite (always true for
        finitely many jumps; kept for the record).
    """
    pairs = []
    for j in jumps:
        if isinstance(j, dict):
            pairs.append((float(j["x"]), float(j["d"])))
        else:
            pairs.append((float(j[0]), float(j[1])))
    xs = [float(reduce_angle(x)) for x, _ in pairs]
    if len(set(xs)) != len(xs):
        raise ValueError("jump locations must be pairwise distinct")
    order = np.argsort(xs)
    xs = np.asarray(xs)[order]
    ds = np.asarray([d for _, d in pairs])[order]
    edges = np.unique(np.concatenate([[0.0], xs, [TWO_PI]]))
    values = [d0 + ds[xs <= e].sum() for e in edges[:-1]]
    pp = PiecewisePoly(edges, np.asarray(values)[:, None])
    params = {"d0": d0, "jumps": [[float(x), float(d)] for x, d in zip(xs, ds)]}
    if p_declared is not None:
        params["p"] = p_declared
    return to_spec(pp, "jump", params)


def _binomial_poly(a: float, b: float, r: int) -> np.ndarray:
    """Power coefficients of ``(a + b t)^r`` in ``t``."""
    return np.array([comb(r, m) * a ** (r - m) * b ** m for m in range(r + 1)], dtype=float)


def make_f_r(r: int) -> FunctionSpec:
    """``x^r`` on [0, pi) and ``(2 pi - x)^r`` on [pi, 2 pi)."""
    r = int(r)
    if r < 1:
        raise ValueError("r must be a positive integer")
    first = np.zeros(r + 1)
    first[r] = 1.0
    second = _binomial_poly(np.pi, -1.0, r)  # (pi - t)^r with t = x - pi
    pp = PiecewisePoly([0.0, np.pi, TWO_PI], [first, second])
    return to_spec(pp, "f_r", {"r": r})


def _g_pieces_u(n: int, r: int):
    """Pieces ``(u_a, u_b, coefficients in u - u_a)`` of the staircase on [0, 2)."""
    width = float(n) ** -(r + 1)
    pieces = []
    for k in range(n):
        lo, hi = k / n, (k + 1) / n
        c = hi - width
        # flat part (k/n) u^{r-1}
        flat = np.zeros(r + 1)
        flat[r - 1] = k / n
        # ramp (k/n) u^{r-1} + n u^{r-1} (u - c)
        ramp = np.zeros(r + 1)
        ramp[r - 1] = k / n - n * c
        ramp[r] += n
        for a, b, glob in ((lo, c, flat), (max(c, lo), hi, ramp)):
            if b - a > 1e-15:
                pieces.append((a, b, glob))
    out = []
    for a, b, glob in pieces:
        local = np.polynomial.Polynomial(glob)(np.polynomial.Polynomial([a, 1.0])).coef
        local = np.pad(local, (0, r + 1 - local.size))
        out.append((a, b, local))
    # reflection g(u) = 1 - g(u - 1) on (1, 2]
    refl = []
    for a, b, local in out:
        c = -local.copy()
        c[0] += 1.0
        refl.append((a + 1.0, b + 1.0, c))
    return out + refl


def _g_pp(n: int, r: int, height: float) -> PiecewisePoly:
    pieces = _g_pieces_u(n, r)
    edges = np.array([a for a, _, _ in pieces] + [2.0]) * np.pi
    edges[-1] = TWO_PI
    scale = np.pi ** -np.arange(r + 1)  # local variable t = pi (u - u_a)
    coefs = np.array([height * c * scale for _, _, c in pieces])
    return PiecewisePoly(edges, coefs)


def make_g_nr(n: int, r: int) -> FunctionSpec:
    """The staircase ``g_{n,r}`` rescaled to the torus: ``x -> g_{n,r}(x/pi)``."""
    n, r = int(n), int(r)
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive integers")
    return to_spec(_g_pp(n, r, 1.0), "g_nr", {"n": n, "r": r})


def make_phi_nr(n: int, r: int) -> FunctionSpec:
    """``phi_{n,r}(x) = pi g_{n,r}(x/pi)``: a staircase with ``n`` steep ramps per half period."""
    n, r = int(n), int(r)
    if n < 1 or r < 1:
        raise ValueError("n and r must be positive integers")
    return to_spec(_g_pp(n, r, np.pi), "phi_nr", {"n": n, "r": r})


def _bernoulli_piece(beta: int) -> PiecewisePoly:
    """Single-piece ``-(2pi)^{beta-1} B_beta(x / 2pi) / beta!`` on [0, 2pi)."""
    B = bernoulli(beta)
    coef = np.array([comb(beta, j) * B[beta - j] for j in range(beta + 1)])  # in (x/2pi)^j
    coef = -coef * TWO_PI ** (beta - 1) / factorial(beta) / TWO_PI ** np.arange(beta + 1)
    return PiecewisePoly([0.0, TWO_PI], coef[None, :])


def krotov_cutoff(beta: float) -> int:
    return 2048 if beta >= 1.5 else 8192


def make_krotov_primitive(jump: FunctionSpec, beta: float, K: int | None = None) -> FunctionSpec:
    """Mean-zero function whose ``(beta-1)``-th Weyl derivative is the given step function.

    Integer ``beta`` is built exactly as a sum of shifted Bernoulli polynomials;
    other orders use the exact multiplied Fourier rule truncated at ``K``.
    """
    beta = float(beta)
    if beta < 1:
        raise ValueError("beta must be >= 1")
    if beta == 1.0:
        return jump
    pp = jump.extras.get("piecewise")
    params = {"beta": beta, "of": jump.params, "of_kind": jump.kind}
    if abs(beta - round(beta)) < 1e-12 and pp is not None:
        b = int(round(beta))
        base = _bernoulli_piece(b)
        J = pp.jumps()
        terms = [(base, float(e), float(np.real(j)))
                 for e, j in zip(pp.edges[:-1], J) if abs(j) > 0]
        if not terms:
            out = PiecewisePoly([0.0, TWO_PI], [[0.0]])
        else:
            out = linear_combination(terms).trimmed()
        return to_spec(out, "krotov", params)
    if jump.fourier is None:
        raise ValueError("Krotov primitive needs an exact Fourier rule")
    K = int(K or krotov_cutoff(beta))
    spec = weyl_of_spec(jump, -(beta - 1.0), K=K)
    T = spec.extras["projection"]
    rule = spec.fourier
    return FunctionSpec(spec.evaluator, fourier=rule, kind="krotov", params={**params, "K": K},
                        poly=T, is_real=jump.is_real, flags=spec.flags,
                        extras={"resolution": K, "weyl": _krotov_companion(jump, beta, K)})


def _krotov_companion(jump, beta, K):
    def companion(alpha):
        rest = beta - alpha
        if rest == 1.0:
            return None  # the step function minus its mean; let the caller decide
        if rest > 1.0:
            return make_krotov_primitive(jump, rest, K)
        return None
    return companion


def _kernel(name: str, n: int) -> TrigPolynomial:
    ks = np.arange(-n, n + 1)
    if name == "dirichlet":
        c = np.ones(2 * n + 1)
    elif name == "fejer":
        c = 1.0 - np.abs(ks) / (n + 1.0)
    elif name == "vallee_poussin":
        m = n // 2
        c = np.where(np.abs(ks) <= m, 1.0, (n + 1 - np.abs(ks)) / (n + 1.0 - m))
    elif name == "jackson":
        # square of a Fejér kernel of degree m, total degree 2m <= n
        m = max(n // 2, 0)
        f = 1.0 - np.abs(np.arange(-m, m + 1)) / (m + 1.0)
        sq = np.convolve(f, f)
        c = np.zeros(2 * n + 1)
        c[n - 2 * m : n + 2 * m + 1] = sq
        c /= c[n]
    else:
        raise ValueError(name)
    return TrigPolynomial(c.astype(complex))


def make_smooth(kind: str, params: dict | None = None) -> FunctionSpec:
    """Polynomial and analytic exemplars.

    Kinds: ``trig_poly`` (``coeffs`` as ``[[re, im], ...]`` for k = -n..n),
    ``dirichlet``, ``fejer``, ``jackson``, ``vallee_poussin`` (``n``),
    ``random_poly`` (``n``, ``seed``, ``real``), ``exp`` (``k``),
    ``sin``/``cos`` (``k``, default 1), ``const`` (``c``).
    """
    params = dict(params or {})
    if kind == "trig_poly":
        arr = np.asarray(params["coeffs"], dtype=float)
        c = arr[:, 0] + 1j * arr[:, 1] if arr.ndim == 2 else arr.astype(complex)
        T = TrigPolynomial(c)
    elif kind in ("dirichlet", "fejer", "jackson", "vallee_poussin"):
        T = _kernel(kind, int(params["n"]))
    elif kind == "random_poly":
        n = int(params["n"])
        rng = np.random.default_rng(int(params.get("seed", 0)))
        c = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
        if params.get("real", True):
            c = 0.5 * (c + np.conj(c[::-1]))
        T = TrigPolynomial(c)
    elif kind == "exp":
        T = TrigPolynomial.from_dict({int(params.get("k", 1)): 1.0})
    elif kind == "sin":
        k = int(params.get("k", 1))
        T = TrigPolynomial.from_dict({k: -0.5j, -k: 0.5j})
    elif kind == "cos":
        k = int(params.get("k", 1))
        T = TrigPolynomial.from_dict({k: 0.5, -k: 0.5})
    elif kind == "const":
        T = TrigPolynomial.constant(complex(params.get("c", 1.0)))
    else:
        raise ValueError(f"unknown smooth kind {kind!r}")
    return from_poly(T, kind=kind, **params)


def make_frac_integral(alpha: float, of: FunctionSpec, K: int | None = None) -> FunctionSpec:
    """Weyl fractional integral ``I_alpha`` (``alpha > 0``) of a corpus function."""
    if not alpha > 0:
        raise ValueError("integration order must be positive")
    out = weyl_of_spec(of, -float(alpha), K=K)
    return out


KINDS = (
    "sign_sin", "jump", "f_r", "g_nr", "phi_nr", "krotov", "trig_poly", "dirichlet", "fejer",
    "jackson", "vallee_poussin", "random_poly", "exp", "sin", "cos", "const", "frac_integral",
)


def from_record(rec) -> FunctionSpec:
    """Build a function from its tagged JSON record (dict or JSON text)."""
    if isinstance(rec, str):
        rec = json.loads(rec)
    if not isinstance(rec, dict) or "kind" not in rec:
        raise ValueError("function record must be an object with a 'kind' field")
    kind = rec["kind"]
    args = {k: v for k, v in rec.items() if k != "kind"}
    if kind == "sign_sin":
        return make_sign_sin()
    if kind == "jump":
        return make_jump(float(args.get("d0", 0.0)), args.get("jumps", []), args.get("p"))
    if kind == "f_r":
        return make_f_r(int(args["r"]))
    if kind == "g_nr":
        return make_g_nr(int(args["n"]), int(args["r"]))
    if kind == "phi_nr":
        return make_phi_nr(int(args["n"]), int(args["r"]))
    if kind == "krotov":
        base = from_record(args.get("of", {"kind": "sign_sin"}))
        return make_krotov_primitive(base, float(args["beta"]), args.get("K"))
    if kind == "frac_integral":
        return make_frac_integral(float(args["alpha"]), from_record(args["of"]), args.get("K"))
    if kind in ("trig_poly", "dirichlet", "fejer", "jackson", "vallee_poussin", "random_poly",
                "exp", "sin", "cos", "const"):
        return make_smooth(kind, args)
    raise ValueError(f"unknown function kind {kind!r}; known kinds: {', '.join(KINDS)}")
