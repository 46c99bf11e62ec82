"""
Periodic functions and trigonometric polynomials on the torus [0, 2*pi).

Everything is complex-valued; real inputs are a special case.  A
:class:`FunctionSpec` wraps a vectorized evaluator together with optional
exact Fourier coefficients, jump locations and an exact L_p integrator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "TWO_PI",
    "TrigPolynomial",
    "FunctionSpec",
    "SampleGrid",
    "eval_poly",
    "sample",
    "analyze",
    "partial_sum",
    "vallee_poussin",
    "reduce_angle",
    "from_poly",
    "combine",
    "scale",
]


def reduce_angle(x):
    """Map angles to [0, 2*pi)."""
    x = np.mod(np.asarray(x, dtype=float), TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    return np.where(x >= TWO_PI, 0.0, x)


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """Trigonometric polynomial ``sum_{|k|<=n} c_k exp(i k x)``.

    ``coeffs[k + n]`` holds ``c_k``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient array must be 1-d with odd length 2n+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        n = self.degree
        return np.arange(-n, n + 1)

    @classmethod
    def zeros(cls, n: int) -> "TrigPolynomial":
        return cls(np.zeros(2 * n + 1, dtype=complex))

    @classmethod
    def constant(cls, c: complex, n: int = 0) -> "TrigPolynomial":
        out = np.zeros(2 * n + 1, dtype=complex)
        out[n] = c
        return cls(out)

    @classmethod
    def from_dict(cls, coeffs: dict) -> "TrigPolynomial":
        """Build from a ``{k: c_k}`` mapping."""
        n = max((abs(int(k)) for k in coeffs), default=0)
        out = np.zeros(2 * n + 1, dtype=complex)
        for k, c in coeffs.items():
            out[int(k) + n] += c
        return cls(out)

    def coeff(self, k: int) -> complex:
        n = self.degree
        return complex(self.coeffs[k + n]) if abs(k) <= n else 0j

    def resize(self, m: int) -> "TrigPolynomial":
        """Zero-pad or truncate to degree ``m``."""
        n = self.degree
        out = np.zeros(2 * m + 1, dtype=complex)
        j = min(n, m)
        out[m - j : m + j + 1] = self.coeffs[n - j : n + j + 1]
        return TrigPolynomial(out)

    def trim(self, tol: float = 0.0) -> "TrigPolynomial":
        """Drop leading coefficients with modulus <= tol."""
        n = self.degree
        mag = np.abs(self.coeffs)
        m = 0
        for k in range(n, 0, -1):
            if mag[n + k] > tol or mag[n - k] > tol:
                m = k
                break
        return self.resize(m)

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.coeffs, np.conj(self.coeffs[::-1]), atol=tol, rtol=0))

    def __call__(self, x):
        return eval_poly(self, x)

    def sample_uniform(self, N: int, offset: float = 0.0) -> np.ndarray:
        """Values at ``x_j = 2*pi*(j + offset)/N`` via one inverse FFT."""
        ks = self.ks
        a = np.zeros(N, dtype=complex)
        np.add.at(a, np.mod(ks, N), self.coeffs * np.exp(2j * np.pi * ks * offset / N))
        return N * np.fft.ifft(a)

    def _binary(self, other, sign):
        if isinstance(other, TrigPolynomial):
            m = max(self.degree, other.degree)
            return TrigPolynomial(self.resize(m).coeffs + sign * other.resize(m).coeffs)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __mul__(self, s):
        if np.isscalar(s):
            return TrigPolynomial(self.coeffs * s)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return TrigPolynomial(-self.coeffs)

    def __repr__(self):
        return f"TrigPolynomial(degree={self.degree})"


def eval_poly(T: TrigPolynomial, x) -> np.ndarray:
    """Value of ``T`` at the points ``x``.

    Horner's scheme in ``z = exp(i x)``: ``T(x) = z^{-n} sum_j c_{j-n} z^j``,
    which is backward stable on the unit circle and avoids ``(2n+1)`` complex
    exponentials per point.
    """
    x = np.asarray(x, dtype=float)
    z = np.exp(1j * x)
    n = T.degree
    return np.polyval(T.coeffs[::-1], z) * np.exp(-1j * n * x)


@dataclass(frozen=True, eq=False)
class FunctionSpec:
    """A 2*pi-periodic function.

    Parameters
    ----------
    evaluator
        Vectorized map from angles in [0, 2*pi) to complex (or real) values.
        Use :meth:`__call__` to evaluate at unreduced angles.
    fourier
        Optional exact rule ``k -> hat f_k`` vectorized over integer arrays.
    breakpoints
        Sorted angles in [0, 2*pi) where the function may jump or kink.
    lp_exact
        Optional closed form ``p -> ||f||_p``.
    poly
        Set when the function is exactly a trigonometric polynomial.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    fourier: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: tuple = ()
    lp_exact: Optional[Callable[[float], float]] = None
    poly: Optional[TrigPolynomial] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    is_real: bool = True
    flags: tuple = ()
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        bps = np.unique(reduce_angle(np.asarray(self.breakpoints, dtype=float)))
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in bps))

    def __call__(self, x):
        return self.evaluator(reduce_angle(x))

    @property
    def mean(self) -> Optional[complex]:
        """Exact mean when known (poly or Fourier rule), else ``None``."""
        if self.poly is not None:
            return self.poly.coeff(0)
        if self.fourier is not None:
            return complex(np.asarray(self.fourier(np.array([0])))[0])
        return None

    def coefficient(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k, dtype=int))
        if self.poly is not None:
            n = self.poly.degree
            out = np.zeros(k.shape, dtype=complex)
            inside = np.abs(k) <= n
            out[inside] = self.poly.coeffs[k[inside] + n]
            return out
        if self.fourier is None:
            raise ValueError(f"{self.kind}: no exact Fourier rule")
        return np.asarray(self.fourier(k), dtype=complex)

    def with_flags(self, *flags) -> "FunctionSpec":
        return replace(self, flags=tuple(dict.fromkeys(self.flags + tuple(flags))))


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Samples ``values[j] = f(2*pi*j/N)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 4 or not _is_pow2(v.size):
            raise ValueError("grid size must be a power of two >= 4")
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.size) / self.size

    def __add__(self, other):
        return SampleGrid(self.values + other.values)

    def __mul__(self, s):
        return SampleGrid(self.values * s)

    __rmul__ = __mul__


def from_poly(T: TrigPolynomial, kind: str = "trig_poly", **params) -> FunctionSpec:
    """Wrap a polynomial as a :class:`FunctionSpec`."""
    return FunctionSpec(
        evaluator=lambda x, T=T: eval_poly(T, x),
        poly=T,
        kind=kind,
        params=params,
        is_real=T.is_real(),
    )


def sample(f: FunctionSpec, N: int) -> SampleGrid:
    if not (isinstance(N, (int, np.integer)) and N >= 4 and _is_pow2(int(N))):
        raise ValueError(f"invalid grid size {N!r}: need a power of two >= 4")
    if f.poly is not None:
        return SampleGrid(f.poly.sample_uniform(int(N)))
    x = TWO_PI * np.arange(N) / N
    return SampleGrid(np.asarray(f.evaluator(x), dtype=complex))


def analyze(g: SampleGrid, n: int) -> TrigPolynomial:
    """Discrete Fourier coefficients ``c_k`` for ``|k| <= n``."""
    N = g.size
    if n < 0 or 2 * n + 1 > N:
        raise ValueError(f"degree {n} too large for grid of size {N}")
    F = np.fft.fft(g.values) / N
    ks = np.arange(-n, n + 1)
    return TrigPolynomial(F[np.mod(ks, N)])


def partial_sum(f: FunctionSpec, n: int, N: int = 4096) -> TrigPolynomial:
    """Fourier projection ``S_n f``; exact when a coefficient rule is known."""
    if f.poly is not None:
        return f.poly.resize(n)
    if f.fourier is not None:
        return TrigPolynomial(f.coefficient(np.arange(-n, n + 1)))
    return analyze(sample(f, N), n)


def vallee_poussin(f: FunctionSpec, n: int, N: int = 4096) -> TrigPolynomial:
    """Averaged projection of degree ``n``: weight 1 up to n/2, then linear to 0."""
    S = partial_sum(f, n, N)
    if n == 0:
        return S
    m = n // 2
    ks = np.abs(S.ks)
    w = np.where(ks <= m, 1.0, (n + 1 - ks) / (n + 1 - m))
    return TrigPolynomial(S.coeffs * w)


def combine(specs, weights) -> FunctionSpec:
    """Pointwise linear combination ``sum_i w_i f_i``."""
    specs = list(specs)
    weights = [complex(w) if np.iscomplexobj(w) else float(w) for w in weights]
    if all(s.poly is not None for s in specs):
        m = max(s.poly.degree for s in specs)
        T = TrigPolynomial(sum(w * s.poly.resize(m).coeffs for s, w in zip(specs, weights)))
        return from_poly(T, kind="combination")

    def ev(x):
        return sum(w * np.asarray(s.evaluator(x)) for s, w in zip(specs, weights))

    fourier = None
    if all(s.fourier is not None or s.poly is not None for s in specs):
        def fourier(k):
            return sum(w * s.coefficient(k) for s, w in zip(specs, weights))

    bps = tuple(b for s in specs for b in s.breakpoints)
    real = all(s.is_real for s in specs) and all(not isinstance(w, complex) for w in weights)
    flags = tuple(dict.fromkeys(fl for s in specs for fl in s.flags))
    return FunctionSpec(ev, fourier=fourier, breakpoints=bps, kind="combination",
                        is_real=real, flags=flags)


def scale(f: FunctionSpec, c) -> FunctionSpec:
    """``c * f`` keeping exact rules and integrators."""
    if f.poly is not None:
        return replace(f, evaluator=lambda x, T=f.poly * c: eval_poly(T, x), poly=f.poly * c,
                       lp_exact=None, is_real=f.is_real and np.isrealobj(c))
    fourier = None if f.fourier is None else (lambda k, r=f.fourier: c * np.asarray(r(k)))
    lp = None if f.lp_exact is None else (lambda p, e=f.lp_exact: abs(c) * e(p))
    return replace(f, evaluator=lambda x, ev=f.evaluator: c * np.asarray(ev(x)),
                   fourier=fourier, lp_exact=lp, is_real=f.is_real and np.isrealobj(c),
                   extras={})
