import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsmooth.best_approx import SolverOptions
from fracsmooth.verifier import (
    CSV_COLUMNS,
    DEFAULT_SWEEPS,
    REGISTRY,
    HypothesisError,
    TheoremCase,
    VerifyEnv,
    build_cases,
    check_inequality,
    compute_ratio,
    fit_rate,
    reports_to_csv,
    summarize,
    sweep,
    table_degrees,
    unknown_id_message,
)

POLY = {"kind": "random_poly", "n": 3, "seed": 5}
SIGN = {"kind": "sign_sin"}


def cheap_env(**kw):
    kw.setdefault("solver", SolverOptions(restarts=0))
    return VerifyEnv(**kw)


# --- rate fits ------------------------------------------------------------------

def test_fit_of_exact_square():
    fit = fit_rate([(x, x ** 2) for x in (1.0, 2.0, 4.0, 8.0, 16.0)])
    assert fit.slope == pytest.approx(2.0, abs=1e-12) and fit.r2 == pytest.approx(1.0)
    assert fit.npoints == 5 and fit.window == (1.0, 16.0)


def test_fit_of_constant_is_flat():
    fit = fit_rate([(x, 3.0) for x in (1.0, 2.0, 3.0, 4.0)])
    assert fit.slope == 0.0 and fit.r2 == 1.0


def test_fit_of_noisy_power_law():
    rng = np.random.default_rng(1)
    xs = np.geomspace(1, 1000, 30)
    ys = xs ** -2.0 * np.exp(rng.normal(0, 0.05, xs.size))
    assert fit_rate(zip(xs, ys)).slope == pytest.approx(-2.0, abs=0.1)


def test_fit_window_and_rejections():
    pts = [(x, x ** -1.0 if x < 10 else 1.0) for x in (1, 2, 4, 8, 16, 32)]
    assert fit_rate(pts, window=(1, 8)).slope == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        fit_rate(pts, window=(16, 32))
    with pytest.raises(ValueError):
        fit_rate([(1, 1), (2, 0), (3, 1), (4, 1)])


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 4), st.floats(0.1, 10))
def test_fit_recovers_any_power(a, c):
    xs = [1.0, 3.0, 9.0, 27.0, 81.0]
    assert fit_rate([(x, c * x ** a) for x in xs]).slope == pytest.approx(a, abs=1e-9)


# --- ratio conventions and cases -----------------------------------------------

def test_ratio_conventions():
    assert compute_ratio(0.0, 0.0) == 0.0
    assert compute_ratio(1.0, 0.0) == math.inf
    assert compute_ratio(1.0, 4.0) == 0.25


def test_registry_has_all_ids():
    assert len(REGISTRY) == 21
    assert set(DEFAULT_SWEEPS) == set(REGISTRY)


def test_unknown_id_suggests_near_match():
    assert "JACKSON" in unknown_id_message("JAKSON")
    with pytest.raises(KeyError):
        TheoremCase("JAKSON", {"p": 0.5, "beta": 1, "n": 4}, SIGN)


@pytest.mark.parametrize("params", [
    {"p": 1.0, "beta": 1, "n": 4},  # p outside (0, 1)
    {"p": 0.5, "beta": 0.8, "n": 4},  # beta neither integer nor above 1/p - 1
    {"p": 0.5, "beta": 1, "n": 0},  # degree below 1
    {"p": 0.5, "n": 4},  # missing beta
])
def test_hypotheses_are_gated(params):
    with pytest.raises(HypothesisError):
        TheoremCase("JACKSON", params, SIGN)


def test_gating_accepts_admissible_fractional_order():
    TheoremCase("JACKSON", {"p": 0.75, "beta": 0.5, "n": 4}, SIGN)
    with pytest.raises(HypothesisError):
        TheoremCase("JACKSON", {"p": 0.5, "beta": 0.5, "n": 4}, SIGN)


def test_nikolskii_step_and_exponent_gates():
    with pytest.raises(HypothesisError):
        TheoremCase("NIKOLSKII", {"p": 0.5, "q": 0.25, "n": 4}, POLY)
    with pytest.raises(HypothesisError):
        TheoremCase("NIK-STECHKIN", {"p": 0.5, "alpha": 1, "n": 4, "h": 1.0}, POLY)


def test_function_record_is_required():
    with pytest.raises(HypothesisError):
        TheoremCase("JACKSON", {"p": 0.5, "beta": 1, "n": 4}, None)


def test_missing_derivative_companion_is_a_hypothesis_error():
    case = TheoremCase("TH-DIRECT", {"p": 0.5, "alpha": 1.5, "n": 4}, SIGN)
    with pytest.raises(HypothesisError):
        check_inequality(case, cheap_env(horizon=8))


def test_polynomial_direct_theorem_is_zero_over_zero():
    case = TheoremCase("TH-DIRECT", {"p": 0.5, "alpha": 1, "n": 4}, POLY)
    rep = check_inequality(case, cheap_env(horizon=16))
    assert rep.lhs == 0.0 and rep.rhs == 0.0
    assert rep.ratio == 0.0 and rep.status == "degenerate"


def test_tail_entries_need_degree_below_horizon():
    case = TheoremCase("TH-INVERSE", {"p": 0.5, "alpha": 1, "n": 16}, POLY)
    with pytest.raises(HypothesisError):
        check_inequality(case, cheap_env(horizon=16))


def test_table_degrees_ladder():
    assert table_degrees(32) == (0, 1, 2, 3, 4, 5, 6, 7, 8, 12, 16, 24, 32)
    assert 10 in table_degrees(32, extra=[10, 40])
    assert 40 not in table_degrees(32, extra=[10, 40])


# --- every entry on a cheap case --------------------------------------------------

CHEAP = {
    "TH-DIRECT": ({"p": 0.5, "alpha": 1, "n": 4}, POLY),
    "TH-INVERSE": ({"p": 0.5, "alpha": 1, "n": 2}, POLY),
    "TH-INVERSE-SIGMA": ({"p": 0.5, "alpha": 0.5, "n": 2}, POLY),
    "TH-SIMUL": ({"p": 0.5, "alpha": 1, "n": 2}, POLY),
    "TH-MOD-DIRECT": ({"p": 0.5, "alpha": 1, "beta": 1, "h": 0.25}, POLY),
    "TH-MOD-INVERSE": ({"p": 0.5, "alpha": 1, "beta": 1, "h": 0.25}, POLY),
    "TH-MOD-INVERSE-SIGMA": ({"p": 0.5, "alpha": 1, "beta": 1, "h": 0.25}, POLY),
    "JACKSON": ({"p": 0.5, "beta": 1, "n": 2}, POLY),
    "INVERSE-EB": ({"p": 0.5, "beta": 2, "n": 2}, POLY),
    "TH-JACKSON-FRAC": ({"p": 0.5, "alpha": 1, "beta": 1, "n": 2}, POLY),
    "TH-MOD-FROM-E": ({"p": 0.5, "alpha": 1, "beta": 2, "n": 2}, POLY),
    "TH-MOD-FROM-E-SIGMA": ({"p": 0.5, "alpha": 1, "beta": 2, "n": 2}, POLY),
    "MOD-LAMBDA": ({"p": 0.5, "beta": 1, "h": 0.1, "lam": 2.0}, SIGN),
    "NIK-STECHKIN": ({"p": 0.5, "alpha": 1.5, "n": 3}, POLY),
    "NIKOLSKII": ({"p": 0.5, "q": 2.0, "n": 3}, POLY),
    "BERNSTEIN": ({"p": 0.5, "alpha": 1.0, "n": 4}, None),
    "KROTOV-SLOPE": ({"p": 0.5, "beta": 1, "h": 0.1}, SIGN),
    "SHARPNESS": ({"p": 0.5, "r": 1, "n": 4}, None),
    "GRUNWALD-ZERO": ({"p": 0.5, "alpha": 1, "h": 0.1}, SIGN),
    "EQUIV-E": ({"p": 0.5, "alpha": 1, "n": 2}, POLY),
    "EQUIV-MOD": ({"p": 0.5, "alpha": 1, "beta": 2, "n": 2}, POLY),
}


def test_cheap_cases_cover_registry():
    assert set(CHEAP) == set(REGISTRY)


@pytest.mark.parametrize("tid", sorted(CHEAP))
def test_every_entry_evaluates(tid):
    params, ref = CHEAP[tid]
    rep = check_inequality(TheoremCase(tid, params, ref), cheap_env(horizon=16))
    assert rep.lhs >= 0 and rep.rhs >= 0
    assert rep.ratio == compute_ratio(rep.lhs, rep.rhs)
    assert rep.status in ("ok", "flagged", "degenerate", "infinite")
    assert list(rep.row()) == list(CSV_COLUMNS)


def test_known_values():
    env = cheap_env(horizon=16)
    # Delta_h sign is +-2 on two intervals of length h: ||Delta_h sign||_{1/2} = 2 h^2 / pi^2
    h = 0.125
    rep = check_inequality(TheoremCase("GRUNWALD-ZERO", {"p": 0.5, "alpha": 1, "h": h}, SIGN), env)
    assert rep.lhs == pytest.approx(2 * h / np.pi ** 2, rel=1e-9)
    # norms increase with the exponent, so the Nikolskii ratio is at least n^-(1/p - 1/q)
    rep = check_inequality(TheoremCase("NIKOLSKII", {"p": 0.5, "q": 0.75, "n": 3}, POLY), env)
    assert rep.ratio >= 3.0 ** -(2 - 4 / 3) * (1 - 1e-12)


# --- sweeps, summaries and CSV ------------------------------------------------------

def test_empty_corpus_is_rejected():
    with pytest.raises(ValueError):
        build_cases("JACKSON", [], {"p": [0.5], "beta": [1], "n": [4]})
    with pytest.raises(ValueError):
        sweep("JACKSON", [], {"p": [0.5], "beta": [1], "n": [4]}, cheap_env())


def test_templated_records_follow_the_grid():
    cases = build_cases("NIKOLSKII", [{"kind": "fejer", "n": "$n"}], {"p": [0.5], "n": [2, 4]})
    assert sorted(c.function_ref["n"] for c in cases) == [2, 4]


def test_corpus_entry_parameters_expand_the_grid():
    cases = build_cases("JACKSON", [{"function": SIGN, "params": {"beta": [1, 2]}}], {"p": 0.5, "n": [4, 8]})
    assert len(cases) == 4


def _csv_rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_sweep_csv_is_sorted_and_deterministic():
    grid = {"p": [0.75, 0.5], "n": [4, 2, 8], "q": [2.0]}
    corpus = [{"kind": "jackson", "n": "$n"}]
    a = sweep("NIKOLSKII", corpus, grid, cheap_env())
    b = sweep("NIKOLSKII", corpus, grid, cheap_env(jobs=3))
    assert a.to_csv() == b.to_csv()
    rows = _csv_rows(a.to_csv())
    assert tuple(rows[0]) == CSV_COLUMNS
    # ordered by case key: the (templated) record first, then the parameters by name
    keys = [(int(r[5]), float(r[2])) for r in rows[1:]]
    assert keys == sorted(keys)
    assert a.summary["cases"] == 6 and a.summary["kind"] == "band"


def test_csv_floats_round_trip():
    rep = check_inequality(TheoremCase("GRUNWALD-ZERO", {"p": 0.5, "alpha": 1, "h": 0.1}, SIGN), cheap_env())
    row = _csv_rows(reports_to_csv([rep]))[1]
    assert float(row[CSV_COLUMNS.index("lhs")]) == rep.lhs
    assert float(row[CSV_COLUMNS.index("ratio")]) == rep.ratio


def test_slope_entry_judges_its_rate():
    hs = [2.0 ** -k for k in range(3, 9)]
    res = sweep("GRUNWALD-ZERO", [SIGN], {"p": [0.5], "alpha": [1], "h": hs}, cheap_env())
    # ||Delta_h sign||_{1/2} / h = 2 h / pi^2: slope 1 = 1/p - alpha
    assert res.summary["slope"] == pytest.approx(1.0, abs=1e-9)
    assert res.summary["passed"] is True


def test_band_summary_stability_of_exact_ratio():
    # MOD-LAMBDA for the square wave at integer order: both moduli are exact closed forms
    # with the same power of h, so the ratio is constant and its stability is 1
    hs = [2.0 ** -k for k in range(4, 8)]
    res = sweep("MOD-LAMBDA", [SIGN], {"p": [0.5], "beta": [1], "h": hs, "lam": [2.0]}, cheap_env())
    assert res.summary["stability"] == pytest.approx(1.0, abs=1e-6)
    assert res.summary["flags"] == []


def test_tail_cases_agree_between_sweep_and_single_check():
    # tails are truncated per case, so a case reports the same numbers in any sweep
    ref = {"kind": "random_poly", "n": 10, "seed": 3}
    res = sweep("TH-INVERSE", [ref], {"p": [0.5], "alpha": [1], "n": [2, 4, 32]}, cheap_env())
    single = check_inequality(TheoremCase("TH-INVERSE", {"p": 0.5, "alpha": 1, "n": 2}, ref), cheap_env())
    rep = next(r for r in res.reports if r.case.params["n"] == 2)
    assert res.summary["horizon"] == 128 and single.diagnostics["horizon"] == 64
    assert rep.diagnostics["tail_horizon"] == single.diagnostics["tail_horizon"] == 64
    assert rep.lhs == single.lhs and rep.rhs == single.rhs


def test_non_tail_entries_only_build_tables_to_the_top_degree():
    res = sweep("JACKSON", [POLY], {"p": [0.5], "beta": [1], "n": [2, 4]}, cheap_env())
    assert res.summary["horizon"] == 8


def test_summarize_groups_by_non_scale_parameters():
    hs = [0.25, 0.125]
    res = sweep("KROTOV-SLOPE", [SIGN], {"p": [0.5], "beta": [1, 2], "h": hs}, cheap_env())
    s = summarize("KROTOV-SLOPE", res.reports)
    assert len(s["groups"]) == 2
    assert all(g["cases"] == 2 for g in s["groups"])
