"""
Best trigonometric approximation in L_p for every 0 < p < inf.

For ``p < 1`` the problem is nonconvex.  It is attacked by smoothed
iteratively reweighted least squares: the objective

    F_eps(c) = sum_j w_j (|f_j - T_c(x_j)|^2 + eps^2)^{p/2}

is majorized at the current iterate by a weighted least-squares problem with
weights ``w_j (|r_j|^2 + eps^2)^{(p-2)/2}``.  Each majorizer is minimized
exactly, so ``F_eps`` decreases monotonically; ``eps`` is driven to zero in
stages and several starting points are tried.

The normal equations live on the ``2n+1`` coefficients.  On a uniform lattice
their matrix is Toeplitz and is assembled from one FFT of the weights; cells
cut by a breakpoint of ``f`` are replaced by small sets of extra nodes whose
contributions are added densely.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .fractional import weyl
from .periodic import TWO_PI, FunctionSpec, TrigPolynomial, from_poly, partial_sum, vallee_poussin
from .quasinorm import QuadratureSpec, lp_distance, lp_norm, resolution

__all__ = [
    "SolverOptions",
    "BestApproxResult",
    "best_approx",
    "best_approx_table",
    "simultaneous_deriv_error",
    "bernstein_sup",
    "penalized_approx",
    "derive_seed",
]


def derive_seed(*parts) -> int:
    """Deterministic 64-bit seed from arbitrary printable parts."""
    h = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass(frozen=True)
class SolverOptions:
    """Options of the smoothed IRLS solver.

    Attributes
    ----------
    restarts
        Number of randomly perturbed starting points (on top of the
        deterministic ones).
    eps_schedule
        Smoothing levels relative to ``max |f|``; strictly decreasing.
    max_iters
        Iteration cap per smoothing level.
    step_tol
        Relative decrease of the smoothed objective that ends a level.
    seed
        Seed of the perturbation generator.
    lattice
        Number of uniform lattice cells (``None``: ``max(8192, 64 n)`` rounded
        up to a power of two).
    perturbation
        Relative size of the random perturbations.
    polish_top
        How many of the best restarts are re-scored with the accurate
        quasi-norm before the winner is chosen.
    """

    restarts: int = 8
    eps_schedule: tuple = tuple(10.0 ** -np.arange(1, 9))
    max_iters: int = 200
    step_tol: float = 1e-9
    seed: int = 0
    lattice: int | None = None
    perturbation: float = 0.3
    polish_top: int = 3

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_schedule)
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_schedule must be strictly decreasing and positive")
        object.__setattr__(self, "eps_schedule", eps)
        if self.restarts < 0 or self.max_iters < 1:
            raise ValueError("restarts must be >= 0 and max_iters >= 1")


@dataclass
class BestApproxResult:
    """Outcome of :func:`best_approx`.

    ``value`` is an upper bound on ``E_n(f)_p`` and equals the accurate
    distance from ``f`` to ``polynomial``.
    """

    value: float
    polynomial: TrigPolynomial
    status: str
    trace: list = field(default_factory=list)
    restart: int = 0
    diagnostics: dict = field(default_factory=dict)


def _pow2_at_least(m: int) -> int:
    return 1 << int(np.ceil(np.log2(max(m, 16))))


class _Lattice:
    """Uniform midpoint lattice with breakpoint-aware extra nodes."""

    def __init__(self, f: FunctionSpec, n: int, N: int | None, sub: int = 4):
        res = max(n, resolution(f))
        if N is None:
            N = _pow2_at_least(max(8192, 64 * n, 16 * (2 * res + 1)))
        self.N = N
        self.n = n
        self.x = TWO_PI * (np.arange(N) + 0.5) / N
        self.w = np.full(N, 1.0 / N)
        h = TWO_PI / N
        ex, ew = [], []
        if f.breakpoints and f.poly is None:
            b = np.asarray(f.breakpoints)
            pos = b / h
            cell = np.floor(pos).astype(int) % N
            on_edge = np.abs(pos - np.rint(pos)) < 1e-9
            for c in np.unique(cell[~on_edge]):
                cuts = np.sort(b[(cell == c) & ~on_edge])
                a0 = c * h
                knots = np.concatenate([[a0], cuts, [a0 + h]])
                self.w[c] = 0.0
                for lo, hi in zip(knots[:-1], knots[1:]):
                    if hi - lo <= 0:
                        continue
                    wd = (hi - lo) / sub
                    ex.extend(lo + (np.arange(sub) + 0.5) * wd)
                    ew.extend([wd / TWO_PI] * sub)
        self.xe = np.asarray(ex, dtype=float)
        self.we = np.asarray(ew, dtype=float)
        if f.poly is not None:
            self.fu = f.poly.sample_uniform(N, offset=0.5)
            self.fe = np.asarray(f.evaluator(self.xe), dtype=complex) if self.xe.size else np.zeros(0, complex)
        else:
            self.fu = np.asarray(f.evaluator(self.x), dtype=complex)
            self.fe = np.asarray(f.evaluator(self.xe), dtype=complex)
        ks = np.arange(-n, n + 1)
        self.ks = ks
        self.E = np.exp(1j * np.outer(self.xe, ks)) if self.xe.size else np.zeros((0, ks.size))
        # phase factors for the shifted lattice
        m = np.arange(-2 * n, 2 * n + 1)
        self._m = m
        self._phase_m = np.exp(1j * np.pi * m / N)
        self._phase_k = np.exp(-1j * np.pi * ks / N)

    def values(self, c: np.ndarray):
        T = TrigPolynomial(c)
        tu = T.sample_uniform(self.N, offset=0.5)
        te = self.E @ c if self.xe.size else np.zeros(0, complex)
        return tu, te

    def residuals(self, c):
        tu, te = self.values(c)
        return self.fu - tu, self.fe - te

    def objective(self, c, p, eps):
        ru, re = self.residuals(c)
        return _smoothed(ru, re, self.w, self.we, p, eps)

    def toeplitz_gram(self, Wu):
        """``sum_j Wu_j exp(i (l - k) x_j)`` over the uniform lattice, for |k|, |l| <= n."""
        N, n = self.N, self.n
        What = self._phase_m * N * np.fft.ifft(Wu)[np.mod(self._m, N)]
        return sla.toeplitz(What[2 * n::-1], What[2 * n:])

    def normal_equations(self, Wu, We):
        """Gram matrix and right-hand side of the weighted least-squares problem."""
        G = self.toeplitz_gram(Wu)
        b = self._phase_k * np.fft.fft(Wu * self.fu)[np.mod(self.ks, self.N)]
        if self.xe.size:
            EW = self.E.conj().T * We
            G = G + EW @ self.E
            b = b + EW @ self.fe
        return G, b


    def real_solve(self, Wu, We):
        """Weighted least squares restricted to real polynomials.

        Works in the basis ``1, cos kx, sin kx`` (``k = 1..n``), where the
        Gram matrix is real symmetric (Toeplitz plus Hankel, built from the
        same lattice moments), so each solve costs a quarter of the complex
        Hermitian one.  Returns the complex coefficient vector.
        """
        N, n = self.N, self.n
        What = self._phase_m * N * np.fft.ifft(Wu)[np.mod(self._m, N)]  # moments m = -2n..2n
        if not hasattr(self, "_idx"):
            K = np.arange(n + 1)
            self._idx = ((K[:, None] - K[None, :]) + 2 * n, (K[:, None] + K[None, :]) + 2 * n)
        dif = What[self._idx[0]]
        add = What[self._idx[1]]
        G = np.empty((2 * n + 1, 2 * n + 1))
        np.add(dif.real, add.real, out=G[: n + 1, : n + 1])
        np.subtract(dif.real[1:, 1:], add.real[1:, 1:], out=G[n + 1:, n + 1:])
        np.subtract(add.imag[:, 1:], dif.imag[:, 1:], out=G[: n + 1, n + 1:])
        G[n + 1:, : n + 1] = G[: n + 1, n + 1:].T
        G *= 0.5
        F = np.conj(self._phase_k * np.fft.fft(Wu * self.fu)[np.mod(self.ks, N)])[n:]  # k = 0..n
        b = np.concatenate([F.real, F.imag[1:]])
        if self.xe.size:
            A = self._real_design
            AW = A.T * We
            G = G + AW @ A
            b = b + AW @ self.fe.real
        u = _solve_psd(G, b)
        a, bs = u[: n + 1], u[n + 1:]
        c = np.empty(2 * n + 1, dtype=complex)
        c[n] = a[0]
        c[n + 1:] = 0.5 * (a[1:] - 1j * bs)
        c[:n] = np.conj(c[n + 1:])[::-1]
        return c

    @property
    def _real_design(self):
        if not hasattr(self, "_A"):
            n = self.n
            self._A = np.concatenate([self.E[:, n:].real, self.E[:, n + 1:].imag], axis=1)
        return self._A


def _smoothed(ru, re, w, we, p, eps):
    s = np.dot(w, (np.abs(ru) ** 2 + eps * eps) ** (0.5 * p))
    if re.size:
        s += np.dot(we, (np.abs(re) ** 2 + eps * eps) ** (0.5 * p))
    return float(s)


def _solve_psd(G, b):
    scale = float(np.max(np.abs(np.diag(G)).real))
    if scale <= 0:
        return np.zeros_like(b)
    Gs = G / scale
    bs = b / scale
    diag = np.diag(Gs).copy()
    idx = np.diag_indices_from(Gs)
    ridge = 1e-13
    for _ in range(4):
        Gs[idx] = diag + ridge
        try:
            cf = sla.cho_factor(Gs, lower=False, overwrite_a=False, check_finite=False)
            return sla.cho_solve(cf, bs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            ridge *= 100
    return sla.lstsq(Gs, bs, check_finite=False)[0]


def _hermitian(c):
    return 0.5 * (c + np.conj(c[::-1]))


def _irls(lat: _Lattice, c0: np.ndarray, p: float, eps_list, opts: SolverOptions, real: bool):
    """Run the smoothed IRLS continuation from ``c0``.

    Returns ``(c, objective at final eps, trace, status)``.
    """
    c = c0.copy()
    trace = []
    status = "converged"
    for eps in eps_list:
        ru, re = lat.residuals(c)
        F = _smoothed(ru, re, lat.w, lat.we, p, eps)
        stage = [F]
        done = False
        for _ in range(opts.max_iters):
            Wu = lat.w * (np.abs(ru) ** 2 + eps * eps) ** (0.5 * p - 1.0)
            We = lat.we * (np.abs(re) ** 2 + eps * eps) ** (0.5 * p - 1.0)
            if real:
                cn = lat.real_solve(Wu, We)
            else:
                cn = _solve_psd(*lat.normal_equations(Wu, We))
            # monotone safeguard: halve the step until the objective does not increase
            t = 1.0
            while True:
                trial = c + t * (cn - c)
                rtu, rte = lat.residuals(trial)
                Fn = _smoothed(rtu, rte, lat.w, lat.we, p, eps)
                if Fn <= F * (1 + 1e-13) or t < 1e-3:
                    break
                t *= 0.5
            if Fn > F * (1 + 1e-13):
                status = "stagnated" if status == "converged" else status
                done = True
                break
            rel = (F - Fn) / max(F, 1e-300)
            c, ru, re, F = trial, rtu, rte, Fn
            stage.append(F)
            if rel <= opts.step_tol:
                done = True
                break
        trace.append(stage)
    # intermediate smoothing levels only need to hand over a good start; the
    # status reports how the final (least smoothed) level ended
    if not done and status == "converged":
        status = "iteration-cap"
    return c, F, trace, status


def _initial_points(f: FunctionSpec, n: int, opts: SolverOptions, warm: TrigPolynomial | None,
                    real: bool, rng: np.random.Generator, ref: float, levels=None):
    S = partial_sum(f, n).coeffs
    V = vallee_poussin(f, n).coeffs
    inits = [("partial_sum", S), ("vallee_poussin", V)]
    if warm is not None:
        inits.append(("warm", warm.resize(n).coeffs))
    base = [c for _, c in inits]
    ks = np.abs(np.arange(-n, n + 1))
    for r in range(opts.restarts):
        c = base[r % len(base)]
        noise = rng.standard_normal(c.size) + (0 if real else 1j * rng.standard_normal(c.size))
        noise = noise * opts.perturbation * ref / (1.0 + ks)
        if real:
            noise = _hermitian(noise.astype(complex))
        # the constant term also gets an O(1) kick: the n = 0 landscape has
        # interior maxima at symmetric points
        noise[n] += opts.perturbation * ref * rng.standard_normal()
        inits.append((f"perturbed-{r}", c + noise))
    for r, v in enumerate(levels if levels is not None else ()):
        c = np.zeros(2 * n + 1, dtype=complex)
        c[n] = v
        inits.append((f"level-{r}", c))
    return inits


def _quantile_levels(lat: _Lattice, k: int) -> np.ndarray:
    """Values of real ``f`` at the lattice quantiles ``(r + 1/2) / k``, ``r < k``."""
    v = np.concatenate([lat.fu.real, lat.fe.real])
    w = np.concatenate([lat.w, lat.we])
    order = np.argsort(v, kind="stable")
    cum = np.cumsum(w[order])
    cum /= cum[-1]
    idx = np.searchsorted(cum, (np.arange(k) + 0.5) / max(k, 1))
    return v[order][np.minimum(idx, v.size - 1)]


def _rms(lat: _Lattice) -> float:
    """Root-mean-square size of ``f`` on the lattice (perturbation scale)."""
    v = float(np.dot(lat.w, np.abs(lat.fu) ** 2))
    if lat.fe.size:
        v += float(np.dot(lat.we, np.abs(lat.fe) ** 2))
    return np.sqrt(v)


def _scale(lat: _Lattice) -> float:
    m = float(np.max(np.abs(lat.fu)))
    if lat.fe.size:
        m = max(m, float(np.max(np.abs(lat.fe))))
    return m


def best_approx(f: FunctionSpec, n: int, p: float, opts: SolverOptions | None = None,
                q: QuadratureSpec | None = None, *, warm: TrigPolynomial | None = None) -> BestApproxResult:
    """Best approximation ``E_n(f)_p`` by trigonometric polynomials of degree ``n``.

    Parameters
    ----------
    f : FunctionSpec
    n : int
        Degree, ``n >= 0``.
    p : float
        Exponent, ``p > 0``.
    opts : SolverOptions, optional
    q : QuadratureSpec, optional
        Quadrature used for the accurate final scoring.
    warm : TrigPolynomial, optional
        Extra starting point (e.g. the solution of degree ``n - 1``).

    Returns
    -------
    BestApproxResult
        The value is the accurate distance to the returned polynomial, so it
        is an upper bound on the true ``E_n(f)_p``.  For ``p >= 1`` the
        problem is convex and the bound is tight up to the solver tolerance.
    """
    p = float(p)
    if not p > 0 or not np.isfinite(p):
        raise ValueError(f"exponent p must be positive and finite, got {p}")
    n = int(n)
    if n < 0:
        raise ValueError("degree must be nonnegative")
    opts = opts or SolverOptions()
    if f.poly is not None and f.poly.degree <= n:
        return BestApproxResult(0.0, f.poly.resize(n), "converged", [], 0, {"exact": True})
    lat = _Lattice(f, n, opts.lattice)
    scale = _scale(lat)
    if scale == 0.0:
        return BestApproxResult(0.0, TrigPolynomial.zeros(n), "converged", [], 0, {"exact": True})
    real = f.is_real
    rng = np.random.default_rng(opts.seed)
    # for p < 1 the best constant sits at a value f takes on a large set, so
    # degree 0 also starts from the quantiles of f; these starts skip the
    # coarse smoothing levels, which would pull them back to the centre
    levels = _quantile_levels(lat, opts.restarts) if real and p < 1 and n == 0 else None
    inits = _initial_points(f, n, opts, warm, real, rng, _rms(lat), levels)
    eps_list = [e * scale for e in opts.eps_schedule]

    runs = []
    for idx, (name, c0) in enumerate(inits):
        c0 = _hermitian(c0) if real else c0
        if p == 2.0:
            G, b = lat.normal_equations(lat.w.astype(float), lat.we)
            c = _solve_psd(G, b)
            c = _hermitian(c) if real else c
            runs.append((lat.objective(c, p, 0.0), idx, name, c, [], "converged"))
            break
        eps_run = [e for e in eps_list if e <= 1e-4 * scale] if name.startswith("level-") else eps_list
        c, F, trace, status = _irls(lat, c0, p, eps_run or eps_list[-1:], opts, real)
        runs.append((lat.objective(c, p, 0.0), idx, name, c, trace, status))

    # accurate re-scoring of the most promising restarts plus the projection
    runs.sort(key=lambda r: (r[0], r[1]))
    shortlist = runs[: max(1, opts.polish_top)]
    best = None
    scored = []
    for F, idx, name, c, trace, status in shortlist:
        val = lp_distance(f, from_poly(TrigPolynomial(c)), p, q)
        scored.append((val, idx, name, c, trace, status))
    S = inits[0][1]
    scored.append((lp_distance(f, from_poly(TrigPolynomial(S)), p, q), -1, "partial_sum-raw", S, [], "stagnated"))
    vbest = min(s[0] for s in scored)
    # deterministic tie-break: lowest restart index among near-equal values
    ties = [s for s in scored if s[0] <= vbest + 1e-10]
    best = min(ties, key=lambda s: (s[1] if s[1] >= 0 else len(inits) + 1))
    val, idx, name, c, trace, status = best
    if idx < 0:
        status = "stagnated"
    diag = {"lattice": lat.N, "extra_nodes": int(lat.xe.size), "start": name,
            "candidates": len(inits), "objective": float(runs[0][0])}
    return BestApproxResult(float(val), TrigPolynomial(c), status, trace, max(idx, 0), diag)


def best_approx_table(f: FunctionSpec, n_max: int, p: float, opts: SolverOptions | None = None,
                      q: QuadratureSpec | None = None, *, degrees=None):
    """``E_n(f)_p`` for ``n = 0..n_max`` (or the given increasing ``degrees``).

    Each degree is warm-started from the previous solution and the table is
    made nonincreasing by running minima (a polynomial of degree ``m`` is
    admissible for every larger degree).
    """
    from .smoothness import ETable

    opts = opts or SolverOptions()
    degs = list(range(n_max + 1)) if degrees is None else sorted(int(d) for d in degrees)
    vals, polys, statuses = [], [], []
    warm = None
    best_val, best_poly = np.inf, None
    for d in degs:
        o = SolverOptions(**{**opts.__dict__, "seed": derive_seed(opts.seed, "table", d)})
        res = best_approx(f, d, p, o, q, warm=warm)
        warm = res.polynomial
        if res.value < best_val:
            best_val, best_poly = res.value, res.polynomial
        vals.append(best_val)
        polys.append(best_poly.resize(d))
        statuses.append(res.status)
    return ETable(np.asarray(degs), np.asarray(vals), polynomials=polys, statuses=statuses)


def simultaneous_deriv_error(f: FunctionSpec, f_alpha: FunctionSpec, T_n: TrigPolynomial, alpha: float,
                             p: float, q: QuadratureSpec | None = None) -> float:
    """``|| f^{(alpha)} - T_n^{(alpha)} ||_p`` with an exact derivative companion."""
    return lp_distance(f_alpha, from_poly(weyl(T_n, alpha)), p, q)


# ---------------------------------------------------------------------------
# penalized problem used by the realization functional


def penalized_approx(f: FunctionSpec, n: int, alpha: float, lam: float, p: float,
                     opts: SolverOptions | None = None, *, start: TrigPolynomial | None = None):
    """Minimize ``||f - T||_p^p + lam ||T^{(alpha)}||_p^p`` over ``T`` of degree ``n``.

    Returns the minimizing coefficients found from ``start`` (default: the
    partial sum) by the same smoothed IRLS continuation.
    """
    opts = opts or SolverOptions()
    lat = _Lattice(f, n, opts.lattice)
    scale = _scale(lat) or 1.0
    ks = lat.ks
    from .fractional import weyl_multiplier

    D = weyl_multiplier(ks, alpha)
    real = f.is_real
    c = (start.resize(n).coeffs if start is not None else partial_sum(f, n).coeffs).copy()

    def parts(c, eps):
        ru, re = lat.residuals(c)
        du = TrigPolynomial(c * D).sample_uniform(lat.N, offset=0.5)
        A = _smoothed(ru, re, lat.w, lat.we, p, eps)
        B = float(np.mean((np.abs(du) ** 2 + eps * eps) ** (0.5 * p)))
        return ru, re, du, A, B

    for eps in [e * scale for e in opts.eps_schedule]:
        ru, re, du, A, B = parts(c, eps)
        F = A + lam * B
        for _ in range(opts.max_iters):
            Wu = lat.w * (np.abs(ru) ** 2 + eps * eps) ** (0.5 * p - 1.0)
            We = lat.we * (np.abs(re) ** 2 + eps * eps) ** (0.5 * p - 1.0)
            G1, b1 = lat.normal_equations(Wu, We)
            # the penalty is a polynomial, so the plain uniform rule is exact
            Wd = lam / lat.N * (np.abs(du) ** 2 + eps * eps) ** (0.5 * p - 1.0)
            G2 = lat.toeplitz_gram(Wd)
            G = G1 + (np.conj(D)[:, None] * G2) * D[None, :]
            cn = _solve_psd(G, b1)
            if real:
                cn = _hermitian(cn)
            t = 1.0
            while True:
                trial = c + t * (cn - c)
                rtu, rte, dtu, At, Bt = parts(trial, eps)
                Fn = At + lam * Bt
                if Fn <= F * (1 + 1e-13) or t < 1e-3:
                    break
                t *= 0.5
            if Fn > F * (1 + 1e-13):
                break
            rel = (F - Fn) / max(F, 1e-300)
            c, ru, re, du, F = trial, rtu, rte, dtu, Fn
            if rel <= opts.step_tol:
                break
    return TrigPolynomial(c)


# ---------------------------------------------------------------------------
# Bernstein-type ratio search


def _ratio(T: TrigPolynomial, alpha: float, p: float, N: int) -> float:
    num = np.mean(np.abs(weyl(T, alpha).sample_uniform(N, 0.5)) ** p) ** (1.0 / p)
    den = np.mean(np.abs(T.sample_uniform(N, 0.5)) ** p) ** (1.0 / p)
    return float(num / den) if den > 0 else 0.0


def bernstein_sup(n: int, alpha: float, p: float, search: SolverOptions | None = None, *,
                  full_output: bool = False):
    """Lower bound for ``sup ||T^{(alpha)}||_p / ||T||_p`` over ``T`` of degree ``n``.

    The candidate set holds ``exp(inx)``, the Dirichlet, Fejér, de la
    Vallée Poussin and Jackson kernels of degree ``n``, and ``search.restarts``
    seeded random polynomials improved by coordinate ascent.
    """
    from .corpus import _kernel

    if n < 1:
        raise ValueError("degree must be >= 1")
    search = search or SolverOptions()
    N = _pow2_at_least(max(512, 32 * (2 * n + 1)))
    cands = {"exp": TrigPolynomial.from_dict({n: 1.0})}
    for name in ("dirichlet", "fejer", "vallee_poussin", "jackson"):
        cands[name] = _kernel(name, n)
    rng = np.random.default_rng(search.seed)
    ks = np.arange(-n, n + 1)
    for r in range(search.restarts):
        c = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
        T = TrigPolynomial(c)
        best = _ratio(T, alpha, p, N)
        step = 0.5
        for _sweep in range(2):
            for j in rng.permutation(ks.size):
                for s in (step, -step, 1j * step, -1j * step):
                    trial = c.copy()
                    trial[j] += s * max(abs(c[j]), 1e-3)
                    v = _ratio(TrigPolynomial(trial), alpha, p, N)
                    if v > best:
                        best, c = v, trial
                        break
            step *= 0.5
        cands[f"random-{r}"] = TrigPolynomial(c)
    ratios = {k: _ratio(T, alpha, p, N) for k, T in cands.items()}
    winner = max(ratios, key=lambda k: (ratios[k], -list(ratios).index(k)))
    if full_output:
        return ratios[winner], {"winner": winner, "ratios": ratios}
    return ratios[winner]
