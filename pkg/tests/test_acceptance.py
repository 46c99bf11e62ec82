"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records a one-line verdict (printed in the terminal summary)
before asserting, so a failing criterion still reports its measurement.
"""

import json
import time

import numpy as np
import pytest

from fracsmooth.best_approx import best_approx
from fracsmooth.cli import main
from fracsmooth.corpus import from_record, make_sign_sin, make_smooth
from fracsmooth.fractional import DEFAULT_POLICY, TruncationPolicy, difference_multiplier, frac_difference, weyl
from fracsmooth.periodic import FunctionSpec, TrigPolynomial, from_poly
from fracsmooth.quasinorm import lp_norm, panel_nodes
from fracsmooth.smoothness import dyadic_steps, modulus_curve
from fracsmooth.verifier import DEFAULT_SWEEPS, VerifyEnv, fit_rate, sweep

SIGN = {"kind": "sign_sin"}


def _elapsed(t0):
    return time.perf_counter() - t0


# --- 1. operator identities ----------------------------------------------------------

ALPHAS = (0.3, 0.5, 1.0, 1.7, 2.0)
DELTAS = (0.01, 0.1, 1.0, np.pi, -0.01, -0.1, -1.0, -np.pi)


def test_criterion_1_operator_identities(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    orders = np.linspace(-2, 3, 11)
    worst_semi = worst_inv = 0.0
    for deg in (1, 4, 9):
        T = TrigPolynomial(rng.normal(size=2 * deg + 1) + 1j * rng.normal(size=2 * deg + 1))
        zeroed = T.coeffs.copy()
        zeroed[deg] = 0
        for a in orders:
            worst_inv = max(worst_inv, np.max(np.abs(weyl(weyl(T, a), -a).coeffs - zeroed)))
            for b in orders:
                lhs, rhs = weyl(weyl(T, a), b).coeffs, weyl(T, a + b).coeffs
                worst_semi = max(worst_semi, np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(rhs))))

    # eigenrelation: the truncated binomial series against the closed-form multiplier,
    # for every |k| <= 32 at once (the series acts frequency by frequency)
    ks = np.arange(-32, 33)
    all_k = from_poly(TrigPolynomial(np.ones(ks.size, dtype=complex)))
    worst_eig = 0.0
    capped = []
    for a in ALPHAS:
        for d in DELTAS:
            s = frac_difference(all_k, a, d, method="series")
            bound = max(DEFAULT_POLICY.tail_tol, s.extras["tail"])
            if s.extras["tail"] > DEFAULT_POLICY.tail_tol:
                capped.append(a)
            err = np.max(np.abs(s.poly.coeffs - difference_multiplier(ks, a, d)))
            worst_eig = max(worst_eig, err - bound)
    # the pointwise series evaluator on a bare exponential (no polynomial structure)
    e = make_smooth("exp", {"k": 5})
    bare = FunctionSpec(e.evaluator, is_real=False)
    x = np.linspace(0.05, 6.2, 9)
    for d in (0.1, -1.0):
        s = frac_difference(bare, 1.7, d)
        err = np.max(np.abs(s(x) - difference_multiplier(5, 1.7, d) * np.exp(5j * x)))
        worst_eig = max(worst_eig, err - s.extras["tail"])

    # annihilation of constants, on both the polynomial and the pointwise route
    worst_const = 0.0
    c_poly = make_smooth("const", {"c": 3.0})
    c_bare = from_record({"kind": "jump", "d0": 3.0, "jumps": []})
    short = TruncationPolicy(max_terms=2000)
    xs = np.linspace(0.0, 2 * np.pi, 257)
    for a in ALPHAS:
        for d in (0.1, -2.0):
            diff = frac_difference(c_poly, a, d, method="series")
            for p in (0.5, 1.0, 2.0):
                worst_const = max(worst_const, lp_norm(diff, p))
            # pointwise route: the sup over samples stands in for the (much slower) adaptive quadrature
            worst_const = max(worst_const, np.max(np.abs(frac_difference(c_bare, a, d, short)(xs))))
    elapsed = _elapsed(t0)
    ok = (worst_semi <= 1e-9 and worst_inv <= 1e-9 and worst_eig <= 1e-9
          and worst_const <= DEFAULT_POLICY.tail_tol and elapsed < 10)
    criterion(1, ok, f"semigroup {worst_semi:.1e}, inversion {worst_inv:.1e}, eigenrelation excess over "
                     f"truncation bound {worst_eig:.1e} (capped series at alpha {sorted(set(capped))}), "
                     f"constants {worst_const:.1e}, {elapsed:.1f}s")
    assert ok


# --- 2. square-wave modulus law ----------------------------------------------------------


def test_criterion_2_square_wave_modulus(criterion):
    t0 = time.perf_counter()
    hs = dyadic_steps(3, 10)
    curve = modulus_curve(make_sign_sin(), 1, 0.5, hs)
    fit = fit_rate(zip(curve.h, curve.values))
    rel = np.max(np.abs(curve.values / (2 * (curve.h / np.pi) ** 2) - 1))
    elapsed = _elapsed(t0)
    ok = abs(fit.slope - 2.0) <= 0.05 and rel <= 0.02 and elapsed < 30
    criterion(2, ok, f"slope {fit.slope:.4f} (2 +- 0.05), max deviation from 2(h/pi)^2 {rel:.1e}, {elapsed:.1f}s")
    assert ok


# --- 3. Grunwald pathology -----------------------------------------------------------------


def test_criterion_3_grunwald_pathology(criterion):
    t0 = time.perf_counter()
    res = sweep("GRUNWALD-ZERO", env=VerifyEnv())
    half = [g for g in res.summary["groups"] if g["params"]["p"] == 0.5][0]
    one = [r.lhs for r in res.reports if r.case.params["p"] == 1.0]
    dev = max(abs(v / (2 / np.pi) - 1) for v in one)
    elapsed = _elapsed(t0)
    ok = abs(half["slope"] - 1.0) <= 0.1 and dev <= 0.02 and elapsed < 30
    criterion(3, ok, f"p=1/2 slope {half['slope']:.4f} (1 +- 0.1), p=1 max deviation from 2/pi {dev:.1e}, "
                     f"{elapsed:.1f}s")
    assert ok


# --- 4. best-approximation rate of the square wave ---------------------------------------


def test_criterion_4_square_wave_rate(criterion):
    t0 = time.perf_counter()
    res = sweep("JACKSON", [{"function": SIGN, "params": {"beta": 1}}],
                {"p": [0.5], "n": [8, 12, 16, 24, 32, 48, 64]}, VerifyEnv())
    pts = [(r.case.params["n"], r.lhs) for r in res.reports]
    fit = fit_rate(pts)
    elapsed = _elapsed(t0)
    ok = abs(fit.slope + 2.0) <= 0.2 and elapsed < 600
    criterion(4, ok, f"slope {fit.slope:.4f} (-2 +- 0.2), n^2 E_n: "
                     + ", ".join(f"{n}:{n * n * e:.2f}" for n, e in pts) + f", {elapsed:.0f}s")
    assert ok


# --- 5. nonconvexity certification ----------------------------------------------------------


def test_criterion_5_nonconvexity(criterion):
    t0 = time.perf_counter()
    res = best_approx(make_sign_sin(), 0, 0.5)
    c = float(np.real(res.polynomial.coeff(0)))
    x, w = panel_nodes((0.0, np.pi), 512)
    vals = np.real(make_sign_sin()(x))
    grid = np.linspace(-2.0, 2.0, 100_001)
    obj = np.array([np.dot(w, np.abs(vals - g) ** 0.5) for g in grid]) ** 2
    oracle, c_oracle = float(obj.min()), float(grid[np.argmin(obj)])
    elapsed = _elapsed(t0)
    ok = (abs(res.value - 0.5) <= 1e-3 and abs(res.value - oracle) <= 1e-3 and abs(abs(c) - 1) <= 1e-3
          and abs(abs(c_oracle) - 1) <= 1e-3 and abs(res.value - 1.0) > 0.1 and elapsed < 5)
    criterion(5, ok, f"E_0 {res.value:.6f} at c={c:+.4f}; grid oracle {oracle:.6f} at c={c_oracle:+.4f}; "
                     f"{elapsed:.1f}s")
    assert ok


# --- 6. sharpness demonstration ------------------------------------------------------------------


def test_criterion_6_sharpness(criterion):
    t0 = time.perf_counter()
    res = sweep("SHARPNESS", env=VerifyEnv())
    g = res.summary["groups"][0]
    # failure factor of the single-term bound ||f_1 - T_n|| <= C n^-r ||T_n^(r)||; it must grow without bound
    reports = sorted(res.reports, key=lambda r: r.case.params["n"])
    growth = [r.case.params["n"] ** r.case.params["r"] * r.lhs / r.rhs for r in reports]
    elapsed = _elapsed(t0)
    ok = bool(g["lhs_passed"] and g["rhs_passed"] and growth[-1] > growth[0] and elapsed < 900)
    criterion(6, ok, f"slope ||f_1 - T_n|| {g['slope']:.3f} (-1 +- 0.3), slope ||T_n'|| {g['rhs_slope']:.3f} "
                     f"(-1 +- 0.3), ratio {growth[0]:.3g} -> {growth[-1]:.3g}, {elapsed:.0f}s")
    assert ok


# --- 7. constant-band stability ---------------------------------------------------------------

BAND_IDS = ("TH-DIRECT", "JACKSON", "INVERSE-EB", "TH-MOD-INVERSE", "NIK-STECHKIN", "NIKOLSKII", "MOD-LAMBDA")


def test_criterion_7_band_stability(criterion):
    t0 = time.perf_counter()
    env = VerifyEnv()
    parts, ok = [], True
    for tid in BAND_IDS:
        assert set(DEFAULT_SWEEPS[tid]["grid"]["p"]) == {0.5, 0.75}
        s = sweep(tid, env=env).summary
        limited = "horizon-limited" in s["flags"]
        ok &= s["stability"] <= 2.0 and not limited
        parts.append(f"{tid} {s['stability']:.3f}" + (" horizon-limited" if limited else ""))
    elapsed = _elapsed(t0)
    ok &= elapsed < 1800
    criterion(7, ok, "stability per decade (<= 2): " + ", ".join(parts) + f"; {elapsed:.0f}s")
    assert ok


# --- 8. Bernstein regimes -------------------------------------------------------------------------


def test_criterion_8_bernstein(criterion):
    t0 = time.perf_counter()
    res = sweep("BERNSTEIN", env=VerifyEnv())
    by_alpha = {g["params"]["alpha"]: g for g in res.summary["groups"]}
    above = [by_alpha[a] for a in (2.0, 1.5)]
    below = by_alpha[0.4]
    elapsed = _elapsed(t0)
    ok = all(abs(g["slope"] - a) <= 0.1 for g, a in zip(above, (2.0, 1.5)))
    # below the threshold the slope is reported against 1.0; a gap is a finding, not a failure
    ok &= below["slope"] is not None and below["passed"] in (True, None) and elapsed < 1200
    finding = below.get("finding", "no finding")
    criterion(8, ok, f"slopes alpha=2: {above[0]['slope']:.3f}, alpha=1.5: {above[1]['slope']:.3f} (+- 0.1); "
                     f"alpha=0.4: {below['slope']:.3f} vs 1.0 ({finding}); {elapsed:.0f}s")
    assert ok


# --- 9. Krotov primitive ------------------------------------------------------------------------


def test_criterion_9_krotov(criterion):
    t0 = time.perf_counter()
    res = sweep("KROTOV-SLOPE", env=VerifyEnv())
    g = [g for g in res.summary["groups"] if g["function_kind"] == "krotov" and g["params"]["beta"] == 2][0]
    elapsed = _elapsed(t0)
    ok = abs(g["slope"] - 3.0) <= 0.2 and elapsed < 600
    criterion(9, ok, f"slope {g['slope']:.4f} (3 +- 0.2), {elapsed:.1f}s")
    assert ok


# --- 10. determinism ------------------------------------------------------------------------------

COMMANDS = {
    2: (["modulus", "--f", '{"kind":"sign_sin"}', "--p", "0.5", "--beta", "1",
         "--h"] + [str(2.0 ** -k) for k in range(3, 11)], None),
    3: (["sweep", "--case", "GRUNWALD-ZERO"], None),
    4: (["bestapprox", "--f", '{"kind":"sign_sin"}', "--p", "0.5", "--n", "8", "12", "16", "--seed", "3"], None),
    5: (["bestapprox", "--f", '{"kind":"sign_sin"}', "--p", "0.5", "--n", "0"], None),
    6: (["sweep", "--case", "SHARPNESS"], {"grid": {"n": [8, 16]}}),
    7: (["sweep", "--case", "JACKSON", "--f", '{"kind":"sign_sin"}', "--beta", "1"],
        {"grid": {"p": [0.5, 0.75], "n": [4, 8]}}),
    8: (["sweep", "--case", "BERNSTEIN"], {"grid": {"n": [8, 16]}}),
    9: (["sweep", "--case", "KROTOV-SLOPE"], None),
}


def test_criterion_10_determinism(criterion, tmp_path, capsys):
    t0 = time.perf_counter()
    differ = []
    for number, (argv, cfg) in COMMANDS.items():
        if cfg is not None:
            path = tmp_path / f"c{number}.json"
            path.write_text(json.dumps(cfg))
            argv = argv + ["--config", str(path)]
        outs = []
        for run, jobs in enumerate(("1", "2")):
            dest = tmp_path / f"c{number}_{run}.csv"
            extra = ["--jobs", jobs] if argv[0] == "sweep" else []
            code = main(argv + extra + ["--out", str(dest)])
            assert code in (0, 2), (number, code)
            outs.append(dest.read_bytes())
        if outs[0] != outs[1]:
            differ.append(number)
    capsys.readouterr()
    elapsed = _elapsed(t0)
    ok = not differ
    criterion(10, ok, f"byte-identical CSV for the commands of criteria {sorted(COMMANDS)} "
                      f"(second run with two workers where applicable); differing: {differ or 'none'}; "
                      f"{elapsed:.0f}s")
    assert ok
