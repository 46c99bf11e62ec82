import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsmooth.corpus import make_sign_sin, make_smooth
from fracsmooth.periodic import (
    SampleGrid,
    TrigPolynomial,
    analyze,
    eval_poly,
    from_poly,
    partial_sum,
    sample,
)


def test_eval_constant():
    T = TrigPolynomial.constant(1.0)
    assert eval_poly(T, np.array([0.3, 2.0, 5.9])) == pytest.approx([1, 1, 1])


def test_eval_cosine_at_zero():
    T = TrigPolynomial.from_dict({1: 0.5, -1: 0.5})
    assert eval_poly(T, 0.0) == pytest.approx(1.0)


def test_eval_sine_matches_direct_summation():
    T = TrigPolynomial.from_dict({1: -0.5j, -1: 0.5j})
    x = np.pi / 2
    direct = sum(T.coeff(k) * np.exp(1j * k * x) for k in (-1, 0, 1))
    assert eval_poly(T, x) == pytest.approx(direct)
    assert eval_poly(T, x) == pytest.approx(1.0)


def test_polynomial_needs_odd_length():
    with pytest.raises(ValueError):
        TrigPolynomial(np.ones(4))


def test_sample_constant():
    g = sample(make_smooth("const", {"c": 1.0}), 8)
    assert np.allclose(g.values, 1.0)


def test_sample_sign_sin_uses_evaluator_convention():
    g = sample(make_sign_sin(), 4)
    assert np.allclose(g.values, [0, 1, 0, -1])


def test_sample_exponential_gives_roots_of_unity():
    g = sample(make_smooth("exp", {"k": 1}), 8)
    assert np.allclose(g.values, np.exp(2j * np.pi * np.arange(8) / 8))


@pytest.mark.parametrize("N", [3, 6, 2, 12])
def test_sample_rejects_bad_grid(N):
    with pytest.raises(ValueError):
        sample(make_sign_sin(), N)


def test_analyze_cosine():
    T = analyze(sample(make_smooth("cos", {}), 16), 2)
    expected = np.array([0, 0.5, 0, 0.5, 0])
    assert np.allclose(T.coeffs, expected, atol=1e-14)


def test_analyze_square_wave_first_coefficient():
    T = analyze(sample(make_sign_sin(), 4096), 1)
    assert T.coeff(1) == pytest.approx(-2j / np.pi, abs=1e-6)
    assert T.coeff(-1) == pytest.approx(2j / np.pi, abs=1e-6)


def test_analyze_rejects_large_degree():
    with pytest.raises(ValueError):
        analyze(SampleGrid(np.ones(8)), 4)


def test_partial_sum_of_polynomial_is_itself():
    T = make_smooth("random_poly", {"n": 5, "seed": 3}).poly
    assert np.allclose(partial_sum(from_poly(T), 5).coeffs, T.coeffs)


def test_partial_sum_square_wave():
    S = partial_sum(make_sign_sin(), 1)
    x = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(eval_poly(S, x), 4 / np.pi * np.sin(x), atol=1e-12)
    assert S.is_real()


def test_partial_sum_zero():
    S = partial_sum(make_smooth("const", {"c": 0.0}), 3)
    assert np.all(S.coeffs == 0)


def _coeffs(n):
    return st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                    min_size=2 * n + 1, max_size=2 * n + 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 12).flatmap(lambda n: st.tuples(st.just(n), _coeffs(n))),
       st.integers(0, 3))
def test_round_trip(data, extra):
    n, c = data
    T = TrigPolynomial(np.array(c))
    N = 1 << int(np.ceil(np.log2(2 * n + 2)) + extra)
    N = max(N, 4)
    back = analyze(sample(from_poly(T), N), n)
    assert np.max(np.abs(back.coeffs - T.coeffs)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=16, max_size=16),
       st.lists(st.floats(-5, 5), min_size=16, max_size=16),
       st.floats(-3, 3), st.floats(-3, 3))
def test_analyze_is_linear(v1, v2, a, b):
    g1, g2 = SampleGrid(np.array(v1)), SampleGrid(np.array(v2))
    lhs = analyze(a * g1 + b * g2, 7).coeffs
    rhs = a * analyze(g1, 7).coeffs + b * analyze(g2, 7).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=32, max_size=32))
def test_real_samples_give_conjugate_symmetry(v):
    T = analyze(SampleGrid(np.array(v)), 15)
    assert np.allclose(T.coeffs[::-1], np.conj(T.coeffs), atol=1e-12)
