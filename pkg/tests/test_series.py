import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jcmflow.series import (
    Certified,
    FixedOrder,
    ModelParams,
    eval_L,
    eval_L_grid,
    resolve_order,
    tail_bound,
    truncation_order,
)
from reference import mp_L, mp_L_float

FIELDS = ("L1", "L3", "L4", "dL1", "dL3", "dL4", "ddL1", "ddL3", "ddL4")
ORDER_OF = dict(zip(FIELDS, (0, 0, 0, 1, 1, 1, 2, 2, 2)))

# 500-term mpmath sums at 40 digits, beta = 1, t = 1
REF_BETA1_T1 = (0.3679518671775599, -0.08494596622173321, -0.5013721456911019,
                -0.6735813245950728, -0.7408245423450277, -0.34234773153693193,
                0.7759319025141834, 2.810906251471526, 1.2989680062544118)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0.0)
    with pytest.raises(ValueError):
        ModelParams(-1.0)
    with pytest.raises(ValueError):
        ModelParams(math.inf)
    with pytest.raises(ValueError):
        Certified(0.0)
    with pytest.raises(ValueError):
        FixedOrder(-1)
    assert ModelParams(1.0).trunc == FixedOrder(150)


@pytest.mark.parametrize("beta, tol, expected", [
    (0.5, 1.63e-33, 150),
    (1.0, 1.0, 0),
    (1.0, 1e-12, 27),
])
def test_truncation_order_examples(beta, tol, expected):
    assert truncation_order(ModelParams(beta, Certified(tol)), 0) == expected


def test_truncation_order_27_by_inversion():
    # invert exp(-(N+1)) <= 1e-12 analytically, then check both sides
    n_analytic = math.ceil(12 * math.log(10)) - 1
    assert n_analytic == 27
    assert math.exp(-28) <= 1e-12 < math.exp(-27)


def test_truncation_order_is_minimal():
    for beta in (0.3, 1.0, 4.0):
        for tol in (1e-3, 1e-15, 1e-40):
            p = ModelParams(beta, Certified(tol))
            for k in (0, 1, 2):
                N = truncation_order(p, k)
                assert tail_bound(beta, N, k) <= tol
                if N > 0:
                    assert tail_bound(beta, N - 1, k) > tol


def test_truncation_order_needs_certified():
    with pytest.raises(ValueError):
        truncation_order(ModelParams(1.0), 0)


def test_tail_bound_published_value():
    # exp(-75.5) = 1.6247e-33, quoted to three figures as 1.63e-33
    assert tail_bound(0.5, 150, 0) == pytest.approx(1.63e-33, rel=5e-3)
    assert tail_bound(0.5, 150, 0) == pytest.approx(math.exp(-75.5), rel=1e-14)


def test_tail_bound_order1_exceeds_brute_force_tail():
    beta, N = 1.0, 0
    bound = tail_bound(beta, N, 1)
    with mp.workdps(30):
        x = mp.exp(-beta)
        # sum of the per-term maxima of the three differentiated tails
        term_max = mp.fsum(max((1 - x) * (mp.sqrt(n + 1) + mp.sqrt(n)) * x ** n,
                               mp.sinh(beta) * 2 * mp.sqrt(n) * x ** n)
                           for n in range(N + 1, 501))
        assert bound > term_max
        # and the actual tails at sampled times
        for t in np.linspace(0, 20, 41):
            full = mp_L(beta, t, N=500, dps=30)
            head = mp_L(beta, t, N=N, dps=30)
            for k in (3, 4, 5):
                assert bound > abs(full[k] - head[k])


@settings(max_examples=200, deadline=None)
@given(beta=st.floats(0.05, 30.0), N=st.integers(0, 2000), k=st.sampled_from([0, 1, 2]))
def test_tail_bound_monotone(beta, N, k):
    a, b = tail_bound(beta, N, k), tail_bound(beta, N + 1, k)
    assert b < a or a == 0.0


def test_tail_bound_rejects_bad_input():
    with pytest.raises(ValueError):
        tail_bound(0.0, 1, 0)
    with pytest.raises(ValueError):
        tail_bound(1.0, -1, 0)
    with pytest.raises(ValueError):
        tail_bound(1.0, 1, 3)


def test_eval_L_initial_values():
    lv = eval_L(ModelParams(1.0), 0.0)
    assert abs(lv.L1 - 1) <= lv.err_bound + 1e-15
    assert abs(lv.L3 - 1) <= lv.err_bound + 1e-15
    assert abs(lv.L4) <= lv.err_bound + 1e-15
    assert lv.dL1 == lv.dL3 == lv.dL4 == 0.0
    # L4(0) = 0 is the geometric series sum_{n>=1} e^{-n beta} = 1/(e^beta - 1)
    e = math.e
    assert -(1 - 1 / e) / 2 + (e - 1) ** 2 / (2 * e) / (e - 1) == pytest.approx(0, abs=1e-15)


def test_eval_L_vacuum_limit():
    lv = eval_L(ModelParams(20.0), 1.2)
    c, s = math.cos(1.2), math.sin(1.2)
    assert abs(lv.L1 - c) <= 1e-8
    assert abs(lv.L3 - c * c) <= 1e-8
    assert abs(lv.L4 + s * s) <= 1e-8


def test_eval_L_regression_beta1_t1():
    lv = eval_L(ModelParams(1.0), 1.0)
    np.testing.assert_allclose(lv.as_array(), REF_BETA1_T1, rtol=0, atol=1e-14)


def test_reference_oracle_still_matches_locked_values():
    assert mp_L_float(1.0, 1.0) == pytest.approx(REF_BETA1_T1, abs=1e-15)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0, 100.0])
def test_certified_bound_150_vs_300(beta, t):
    a = eval_L(ModelParams(beta, FixedOrder(150)), t)
    b = eval_L(ModelParams(beta, FixedOrder(300)), t)
    for f in FIELDS:
        assert abs(getattr(a, f) - getattr(b, f)) <= tail_bound(beta, 150, ORDER_OF[f])


@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_tail_bounds_hold_in_extended_precision(beta):
    # truncation errors themselves, with rounding taken out of the picture
    t = 3.7
    N = 40
    head = mp_L(beta, t, N=N, dps=60)
    full = mp_L(beta, t, N=400, dps=60)
    err = [abs(a - b) for a, b in zip(head, full)]
    x = math.exp(-beta)
    prefactor = {0: 1.0, 1: (math.exp(beta) + 1) / 2, 2: (math.exp(beta) - 1) / 2}
    for i, f in enumerate(FIELDS):
        if ORDER_OF[f] == 0:
            assert err[i] <= prefactor[i] * x ** (N + 1)
        else:
            assert err[i] <= tail_bound(beta, N, ORDER_OF[f])
    assert err[0] <= tail_bound(beta, N, 0)
    assert max(err) <= eval_L(ModelParams(beta, FixedOrder(N)), t).err_bound


def test_derivative_consistency(rng):
    h = 1e-5
    for _ in range(100):
        beta = rng.uniform(0.5, 5.0)
        t = rng.uniform(0.0, 100.0)
        p = ModelParams(beta)
        g = eval_L_grid(p, [t - h, t, t + h])
        for L, dL, ddL in (("L1", "dL1", "ddL1"), ("L3", "dL3", "ddL3"), ("L4", "dL4", "ddL4")):
            v = getattr(g, L)
            d = getattr(g, dL)
            assert abs((v[2] - v[0]) / (2 * h) - d[1]) <= 1e-6
            # second derivative as the difference of the first; a second
            # difference of L itself would be swamped by rounding at h=1e-5
            assert abs((d[2] - d[0]) / (2 * h) - getattr(g, ddL)[1]) <= 1e-6


def test_vacuum_limit_over_window():
    t = np.linspace(0, 10, 2001)
    g = eval_L_grid(ModelParams(20.0), t)
    assert np.max(np.abs(g.L1 - np.cos(t))) <= 1e-8
    assert np.max(np.abs(g.L3 - np.cos(t) ** 2)) <= 1e-8
    assert np.max(np.abs(g.L4 + np.sin(t) ** 2)) <= 1e-8


def test_boundedness(rng):
    for beta in rng.uniform(0.05, 10.0, size=100):
        g = eval_L_grid(ModelParams(beta), rng.uniform(-50, 200, size=100))
        for f in ("L1", "L3", "L4"):
            assert np.all(np.abs(getattr(g, f)) <= 1 + g.err_bound + 1e-15)


def test_grid_and_scalar_agree_bitwise(rng):
    p = ModelParams(1.3)
    ts = rng.uniform(0, 300, size=777)
    g = eval_L_grid(p, ts)
    for i in range(0, 777, 31):
        assert g.at(i) == eval_L(p, ts[i])


def test_negative_time_parity():
    p = ModelParams(0.8)
    a, b = eval_L(p, 2.3), eval_L(p, -2.3)
    for f in ("L1", "L3", "L4", "ddL1", "ddL3", "ddL4"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-14)
    for f in ("dL1", "dL3", "dL4"):
        assert getattr(a, f) == pytest.approx(-getattr(b, f), abs=1e-14)


def test_certified_policy_meets_tolerance():
    p = ModelParams(1.0, Certified(1e-14))
    lv = eval_L(p, 2.0)
    assert lv.err_bound <= 1e-14
    assert lv.N == resolve_order(p)
    ref = mp_L_float(1.0, 2.0)
    assert np.max(np.abs(lv.as_array() - ref)) <= 1e-14 + 1e-14


def test_large_beta_has_no_overflow():
    lv = eval_L(ModelParams(700.0), 0.7)
    assert all(math.isfinite(v) for v in lv.as_array())
    assert lv.L1 == pytest.approx(math.cos(0.7), abs=1e-15)
