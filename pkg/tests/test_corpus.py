import json

import numpy as np
import pytest
from scipy.integrate import quad

from fracsmooth.corpus import (
    from_record,
    krotov_cutoff,
    make_f_r,
    make_g_nr,
    make_phi_nr,
    make_sign_sin,
    make_smooth,
)
from fracsmooth.fractional import weyl
from fracsmooth.periodic import analyze, combine, from_poly, partial_sum, sample
from fracsmooth.piecewise import PiecewisePoly, linear_combination, to_spec
from fracsmooth.quasinorm import QuadratureSpec, lp_distance, lp_norm
from fracsmooth.smoothness import modulus
from fracsmooth.verifier import fit_rate

JUMP3 = {"kind": "jump", "d0": 0.0, "jumps": [[0.5, 1.0], [2.0, -1.5], [4.0, 0.5]]}
PIECEWISE = [
    {"kind": "sign_sin"},
    JUMP3,
    {"kind": "f_r", "r": 1},
    {"kind": "f_r", "r": 3},
    {"kind": "g_nr", "n": 3, "r": 1},
    {"kind": "phi_nr", "n": 4, "r": 2},
    {"kind": "krotov", "beta": 2, "of": JUMP3},
    {"kind": "krotov", "beta": 3, "of": {"kind": "sign_sin"}},
]


def _quad_coefficient(f, k, breakpoints):
    """Independent oracle: adaptive quadrature of f(x) exp(-ikx) between breakpoints."""
    pts = np.unique(np.concatenate([[0.0], np.asarray(breakpoints, dtype=float), [2 * np.pi]]))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        re = quad(lambda x: np.real(f(x) * np.exp(-1j * k * x)), a, b, limit=200, epsabs=1e-13)[0]
        im = quad(lambda x: np.imag(f(x) * np.exp(-1j * k * x)), a, b, limit=200, epsabs=1e-13)[0]
        total += re + 1j * im
    return total / (2 * np.pi)


# --- named functions ----------------------------------------------------------

def test_square_wave_first_coefficient():
    assert make_sign_sin().coefficient(np.array([1]))[0] == pytest.approx(-2j / np.pi, rel=1e-14)
    assert make_sign_sin().coefficient(np.array([2]))[0] == 0


def test_f1_values():
    f = make_f_r(1)
    assert f(np.pi / 2) == pytest.approx(np.pi / 2)
    assert f(3 * np.pi / 2) == pytest.approx(np.pi / 2)


def test_jump_with_two_opposite_jumps_is_square_wave():
    f = from_record({"kind": "jump", "d0": -1.0, "jumps": [[0.0, 2.0], [np.pi, -2.0]]})
    x = np.linspace(0.1, 6.1, 31)
    assert np.allclose(f(x), make_sign_sin()(x))
    assert lp_norm(f, 0.5) == pytest.approx(1.0)


def test_jump_rejects_duplicate_locations():
    with pytest.raises(ValueError):
        from_record({"kind": "jump", "d0": 0.0, "jumps": [[1.0, 1.0], [1.0 + 2 * np.pi, -1.0]]})


def test_dirichlet_and_fejer_coefficients():
    D = make_smooth("dirichlet", {"n": 3}).poly
    assert np.allclose(D.coeffs, 1.0)
    F = make_smooth("fejer", {"n": 3}).poly
    assert np.allclose(F.coeffs, [0.25, 0.5, 0.75, 1.0, 0.75, 0.5, 0.25])


def test_jackson_kernel_is_nonnegative_with_unit_mean():
    J = make_smooth("jackson", {"n": 8})
    assert J.poly.degree == 8 and J.poly.coeff(0) == pytest.approx(1.0)
    x = np.linspace(0, 2 * np.pi, 1001)
    assert np.min(np.real(J(x))) >= -1e-12


def test_random_poly_is_reproducible_and_real():
    a = make_smooth("random_poly", {"n": 5, "seed": 7}).poly
    b = from_record({"kind": "random_poly", "n": 5, "seed": 7}).poly
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.is_real()
    c = make_smooth("random_poly", {"n": 5, "seed": 8}).poly
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_record_accepts_json_text():
    f = from_record(json.dumps({"kind": "sin", "k": 2}))
    assert f(np.pi / 4) == pytest.approx(1.0)


@pytest.mark.parametrize("rec", [{"kind": "nope"}, {"no_kind": 1}, [1, 2]])
def test_unknown_records_are_rejected(rec):
    with pytest.raises(ValueError):
        from_record(rec)


# --- exact rules against independent quadrature ------------------------------

@pytest.mark.parametrize("rec", PIECEWISE)
def test_fourier_rule_matches_quadrature(rec):
    f = from_record(rec)
    ks = np.array([-8, -3, -1, 0, 1, 2, 5, 8])
    exact = f.coefficient(ks)
    oracle = np.array([_quad_coefficient(f, k, f.breakpoints) for k in ks])
    assert np.allclose(exact, oracle, atol=1e-9)


@pytest.mark.parametrize("rec", PIECEWISE)
def test_fourier_rule_matches_fft(rec):
    f = from_record(rec)
    T = analyze(sample(f, 2 ** 16), 8)
    # aliasing of an O(1/k) spectrum at N = 2^16 stays below 1e-4
    assert np.allclose(T.coeffs, f.coefficient(T.ks), atol=1e-4)


@pytest.mark.parametrize("rec", PIECEWISE)
@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_exact_norm_matches_quadrature(rec, p):
    f = from_record(rec)
    bare = combine([f], [1.0])  # same function without the exact integrator
    assert bare.lp_exact is None
    assert lp_norm(f, p) == pytest.approx(lp_norm(bare, p, QuadratureSpec(base_size=8192)), rel=1e-6)


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("p", [0.3, 0.5, 1.0, 2.0])
def test_exact_norm_of_f_r(r, p):
    # (1/pi) int_0^pi x^(rp) dx = pi^(rp) / (rp + 1), including the multiple root at 0
    expected = (np.pi ** (r * p) / (r * p + 1)) ** (1 / p)
    assert lp_norm(make_f_r(r), p) == pytest.approx(expected, rel=1e-12)


# --- Krotov primitives ----------------------------------------------------------

@pytest.mark.parametrize("beta", [2, 3])
def test_krotov_primitive_differentiates_back(beta):
    jump = from_record(JUMP3)
    g = from_record({"kind": "krotov", "beta": beta, "of": JUMP3})
    ks = np.arange(-32, 33)
    ks = ks[ks != 0]
    back = (1j * ks) ** (beta - 1) * g.coefficient(ks)
    assert np.allclose(back, jump.coefficient(ks), atol=1e-12)
    assert abs(g.coefficient(np.array([0]))[0]) < 1e-12


def test_fractional_krotov_primitive_uses_multiplier_rule():
    jump = from_record(JUMP3)
    g = from_record({"kind": "krotov", "beta": 1.5, "of": JUMP3})
    assert g.params["K"] == krotov_cutoff(1.5)
    T = g.poly
    D = weyl(T, 0.5)
    ks = np.arange(-32, 33)
    ks = ks[ks != 0]
    assert np.allclose([D.coeff(k) for k in ks], jump.coefficient(ks), atol=1e-12)


def test_integer_krotov_primitive_is_continuous_piecewise():
    g = from_record({"kind": "krotov", "beta": 2, "of": JUMP3})
    pp = g.extras["piecewise"]
    assert pp.is_continuous() and pp.degree == 1


# --- staircases ---------------------------------------------------------------

@pytest.mark.parametrize("r", [1, 2])
def test_staircase_is_nondecreasing_then_reflected(r):
    g = make_g_nr(4, r)
    x = np.linspace(0, np.pi, 2001)
    vals = np.real(g(x))
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[0] == pytest.approx(0.0, abs=1e-12)
    # g(u) = 1 - g(u - 1) on the second half
    assert np.allclose(g(x[1:-1] + np.pi), 1 - vals[1:-1], atol=1e-12)


def test_staircase_approaches_f1():
    # phi_{n,1} differs from f_1 on sets of size ~ 1/n: L_{1/2} distance decays like 1/n
    ns = [4, 8, 16, 32, 64]
    d = [lp_distance(make_f_r(1), make_phi_nr(n, 1), 0.5) for n in ns]
    fit = fit_rate(list(zip(ns, d)))
    assert fit.slope == pytest.approx(-1.0, abs=0.2)


def test_staircase_rejects_bad_parameters():
    with pytest.raises(ValueError):
        make_g_nr(0, 1)
    with pytest.raises(ValueError):
        make_phi_nr(3, 0)


# --- piecewise polynomials --------------------------------------------------------

def test_piecewise_validation():
    with pytest.raises(ValueError):
        PiecewisePoly([0.0, 1.0], [[1.0]])
    with pytest.raises(ValueError):
        PiecewisePoly([0.0, 1.0, 2 * np.pi], [[1.0]])


def test_shifted_combination_is_exact():
    f = from_record({"kind": "f_r", "r": 2}).extras["piecewise"]
    g = linear_combination([(f, 0.0, 1.0), (f, 1.3, -2.0)])
    x = np.linspace(0.05, 6.2, 41)
    assert np.allclose(g(x), f(x) - 2 * f(x - 1.3), atol=1e-12)


def test_derivative_and_continuity():
    pp = make_f_r(2).extras["piecewise"]
    assert pp.is_continuous()
    d = pp.derivative()  # 2x, then -2(2 pi - x): jumps by -4 pi at pi
    assert not d.is_continuous()
    assert d(np.pi / 2) == pytest.approx(np.pi)


def test_partial_sums_of_f1_converge_in_l2():
    f = make_f_r(1)
    errs = [lp_distance(f, from_poly(partial_sum(f, n)), 2.0) for n in (8, 32)]
    assert errs[1] < errs[0]


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_staircase_derivative_norm(n):
    # phi_{n,1}' = n on 2n ramps of width pi / n^2: (1/2pi) * 2n * (pi/n^2) * n^(1/2) = n^(-1/2)
    d = to_spec(make_phi_nr(n, 1).extras["piecewise"].derivative(), "derivative")
    assert lp_norm(d, 0.5) == pytest.approx(1.0 / n, rel=1e-12)


def test_staircase_modulus_behaves_like_jumps():
    # for steps h above the ramp width each ramp acts as a jump of height pi/n, so
    # ||Delta_h phi||_{1/2} ~ (2n h / 2pi)^2 (pi/n) -> 1/(pi n) at h = 1/n, far above n^-1 ||phi'||
    vals = [modulus(make_phi_nr(n, 1), 1, 1.0 / n, 0.5, scan=17) * np.pi * n for n in (16, 32, 64)]
    assert vals[-1] == pytest.approx(1.0, abs=0.05)
    assert vals[0] > vals[1] > vals[2] > 1.0
