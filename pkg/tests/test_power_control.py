import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import network_gains, unit_gains
from leasegame.errors import ConfigurationError, DomainError
from leasegame.power_control import (
    Partition,
    QosParams,
    Role,
    best_response_update,
    interference,
    node_utility,
    received_sinr,
    rho_weight,
    sinr_target,
    solve_fixed_point,
    trace_rows,
)


def test_partition_roles():
    part = Partition((2, 0, 1), 1)
    assert part.ccrs == (2,) and part.nccrs == (0, 1)
    assert part.role(2) is Role.CCR and part.role(0) is Role.NCCR
    np.testing.assert_array_equal(part.ccr_mask(), [False, False, True])


@pytest.mark.parametrize("order, n", [((0, 0, 1), 1), ((0, 1), 3), ((0, 1), -1)])
def test_partition_rejects(order, n):
    with pytest.raises(ConfigurationError):
        Partition(order, n)


def test_qos_params_validation():
    for kwargs in ({"alpha": 0.5}, {"alpha": 0.2, "lambda_qos": 0},
                   {"alpha": 0.2, "p_max": 0}, {"alpha": 0.2, "n0": -1}):
        with pytest.raises(ConfigurationError):
            QosParams(**kwargs)


def test_rho_weight_examples():
    assert rho_weight(0.0, 1.0, 2.0) == pytest.approx(2 / 3)
    assert rho_weight(0.25, 1.0, 2.0) == pytest.approx(2 * math.e**0.25 / (1 + 2 * math.e**0.25))
    assert rho_weight(0.25, 1.0, 2.0) == pytest.approx(0.7197, abs=5e-5)


def test_rho_weight_range_and_limit():
    g = np.logspace(-6, 12, 200)
    r = rho_weight(0.3, g, 4.0)
    assert np.all((r > 0) & (r < 1))
    assert np.all(np.diff(r) < 0)
    assert r[-1] < 1e-8


def test_rho_weight_domain():
    with pytest.raises(DomainError):
        rho_weight(0.1, 0.0, 2.0)
    with pytest.raises(DomainError):
        rho_weight(-0.1, 1.0, 2.0)


def test_sinr_target_examples():
    assert sinr_target(0.25, 20, 10, 2.0) == pytest.approx(0.5 / math.sqrt(200))
    assert sinr_target(0.25, 20, 10, 4.0) == 2 * sinr_target(0.25, 20, 10, 2.0)
    assert sinr_target(0.05, 1, 1, 2.0) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        sinr_target(0.25, 20, 0, 2.0)


def test_received_sinr_examples():
    assert received_sinr(0, [1.0], unit_gains([1.0]), 1.0) == (1.0, 1.0)
    assert received_sinr(0, [0.0, 1.0], unit_gains([1.0, 1.0]), 1.0)[0] == 0.0
    for k in (0, 1):
        assert received_sinr(k, [1.0, 1.0], unit_gains([1.0, 1.0]), 1.0) == (0.5, 2.0)


def test_interference_excludes_self():
    g = np.array([1.0, 2.0, 4.0])
    p = np.array([0.1, 0.2, 0.3])
    np.testing.assert_allclose(interference(p, g, 0.5), [0.5 + 1.6, 0.5 + 1.3, 0.5 + 0.5])


def test_node_utility_examples():
    gains = unit_gains([1.0])
    nccr = Partition.first(1, 0)
    params = QosParams(alpha=0.25, n0=1.0)
    assert node_utility(0, Role.NCCR, 0.25, [0.0], gains, params, nccr) == 0.0
    assert node_utility(0, Role.NCCR, 0.25, [1.0], gains, params, nccr) == pytest.approx(1 / 3)


def test_ccr_utility_vanishes_at_target():
    # One CCR that sees its target exactly, at (vanishingly) zero power.
    params = QosParams(alpha=0.25, lambda_qos=2.0, n0=1.0)
    part = Partition.first(1, 1)
    gamma_th = sinr_target(0.25, 1, 1, 2.0)
    g = gamma_th / 1e-300
    u = node_utility(0, "CCR", 0.25, [1e-300], unit_gains([g]), params, part)
    assert u == pytest.approx(0.0, abs=1e-12)


def test_node_utility_role_mismatch():
    with pytest.raises(DomainError):
        node_utility(0, Role.CCR, 0.25, [1.0], unit_gains([1.0]), QosParams(0.25),
                     Partition.first(1, 0))


def test_nccr_unit_gain_update():
    params = QosParams(alpha=0.25, p_max=10.0, n0=1.0)
    out = best_response_update([0.0], Partition.first(1, 0), params, unit_gains([1.0]))
    assert out[0] == pytest.approx(1.0)


def test_update_clamps_at_p_max():
    params = QosParams(alpha=0.25, p_max=0.01, n0=1.0)
    out = best_response_update([0.0, 0.0], Partition.first(2, 1), params, unit_gains([1, 1]))
    np.testing.assert_array_equal(out, [0.01, 0.01])


def test_update_term_by_term(gains20, n0):
    params = QosParams(alpha=0.25, lambda_qos=6.0, n0=n0)
    part = Partition.first(20, 10)
    p = np.random.default_rng(0).uniform(0, 0.6, 20)
    i = interference(p, gains20.g_s, n0)
    g = gains20.g_s
    expected = np.empty(20)
    for k in range(20):
        if k < 10:
            r = rho_weight(0.25, g[k], 6.0)
            expected[k] = (sinr_target(0.25, 20, 10, 6.0) * i[k] / g[k]
                           + (r / (2 * (1 - r))) ** 2 * g[k] / i[k])
        else:
            r = rho_weight(0.0, g[k], 6.0)
            expected[k] = (r / (2 * (1 - r))) ** 2 * g[k] / i[k]
    raw = best_response_update(p, part, params, gains20, clamp=False)
    np.testing.assert_allclose(raw, expected, rtol=1e-13)


def test_all_nccr_has_no_target_term(gains20, n0):
    # The type-II form: scaling I by t scales every update by 1/t.
    params = QosParams(alpha=0.25, n0=n0)
    part = Partition.first(20, 0)
    p = np.full(20, 0.1)
    base = best_response_update(p, part, params, gains20, clamp=False)
    doubled = best_response_update(2 * p, part, params, gains20, clamp=False)
    i1, i2 = interference(p, gains20.g_s, n0), interference(2 * p, gains20.g_s, n0)
    np.testing.assert_allclose(doubled * i2, base * i1, rtol=1e-12)


def test_all_ccr_matches_reduction(gains20, n0):
    params = QosParams(alpha=0.3, n0=n0)
    part = Partition.first(20, 20)
    p = np.full(20, 0.2)
    i = interference(p, gains20.g_s, n0)
    g = gains20.g_s
    r = rho_weight(0.3, g, 2.0)
    expected = sinr_target(0.3, 20, 20, 2.0) * i / g + (r / (2 * (1 - r))) ** 2 * g / i
    np.testing.assert_allclose(best_response_update(p, part, params, gains20, clamp=False),
                               expected, rtol=1e-13)


def test_update_shapes_in_interference():
    # NCCR: strictly decreasing in I. CCR: convex with a minimum at sqrt(a2 g^2 / target).
    alpha, lam, g = 0.25, 2.0, 2.0
    gamma_th = sinr_target(alpha, 2, 1, lam)
    r_c, r_n = rho_weight(alpha, g, lam), rho_weight(0.0, g, lam)
    a2_c, a2_n = (r_c / (2 * (1 - r_c))) ** 2, (r_n / (2 * (1 - r_n))) ** 2
    i = np.linspace(0.05, 20, 4000)
    assert np.all(np.diff(a2_n * g / i) < 0)
    ccr = gamma_th * i / g + a2_c * g / i
    assert np.all(np.diff(ccr, 2) > 0)
    i_min = math.sqrt(a2_c * g**2 / gamma_th)
    assert i[np.argmin(ccr)] == pytest.approx(i_min, rel=1e-2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.0001, 10.0))
def test_two_sided_scalability(seed, mu):
    rng = np.random.default_rng(seed)
    gains = network_gains(seed, 8)
    part = Partition.first(8, int(rng.integers(0, 9)))
    params = QosParams(alpha=float(rng.uniform(0.01, 0.49)), lambda_qos=float(rng.uniform(1, 8)))
    p = rng.uniform(1e-4, 0.6, 8)
    p2 = p * mu ** rng.uniform(-1, 1, 8)
    lam = best_response_update(p, part, params, gains, clamp=False)
    lam2 = best_response_update(p2, part, params, gains, clamp=False)
    assert np.all(lam / mu < lam2) and np.all(lam2 < mu * lam)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_clamped_map_is_self_map(seed):
    rng = np.random.default_rng(seed)
    gains = network_gains(seed, 6)
    part = Partition.first(6, int(rng.integers(0, 7)))
    params = QosParams(alpha=0.2, lambda_qos=8.0)
    out = best_response_update(rng.uniform(0, 0.6, 6), part, params, gains)
    assert np.all((out >= 0) & (out <= 0.6))


def test_golden_ratio_fixed_point():
    params = QosParams(alpha=0.25, p_max=1.0, n0=1.0)
    res = solve_fixed_point(Partition.first(2, 0), params, unit_gains([1.0, 1.0]), tol=1e-12)
    assert res.converged
    np.testing.assert_allclose(res.p_star, (math.sqrt(5) - 1) / 2, atol=1e-8)


def test_uniqueness_from_random_starts(gains20, n0):
    params = QosParams(alpha=0.25, lambda_qos=2.0, n0=n0)
    part = Partition.first(20, 10)
    tol = 1e-9
    rng = np.random.default_rng(3)
    sols = []
    for _ in range(10):
        res = solve_fixed_point(part, params, gains20, rng.uniform(0, 0.6, 20), tol=tol)
        assert res.converged and res.residual <= tol
        sols.append(res.p_star)
    spread = np.max(np.abs(np.array(sols) - sols[0]), axis=0)
    assert np.all(spread <= 10 * tol * np.max(sols[0]))


def test_fixed_point_is_fixed(gains20, n0):
    params = QosParams(alpha=0.25, lambda_qos=6.0, n0=n0)
    part = Partition.first(20, 10)
    res = solve_fixed_point(part, params, gains20, tol=1e-12)
    step = best_response_update(res.p_star, part, params, gains20)
    np.testing.assert_allclose(step, res.p_star, rtol=1e-10)


def test_nonconvergence_is_reported(gains20, n0):
    res = solve_fixed_point(Partition.first(20, 10), QosParams(0.25, n0=n0), gains20,
                            max_iter=2)
    assert not res.converged and res.iterations == 2 and res.residual > 1e-9


def test_solver_argument_validation(gains20):
    part = Partition.first(20, 10)
    with pytest.raises(ConfigurationError):
        solve_fixed_point(part, QosParams(0.25), gains20, tol=0)
    with pytest.raises(ConfigurationError):
        solve_fixed_point(part, QosParams(0.25), gains20, max_iter=0)
    with pytest.raises(DomainError):
        solve_fixed_point(Partition.first(3, 1), QosParams(0.25), gains20)
    with pytest.raises(DomainError):
        solve_fixed_point(part, QosParams(0.25), gains20, p0=np.full(20, 0.7))


def test_pluggable_target(gains20, n0):
    params = QosParams(alpha=0.25, n0=n0)
    part = Partition.first(20, 10)
    doubled = lambda a, k, n, lam: 2 * sinr_target(a, k, n, lam)
    res1 = solve_fixed_point(part, params, gains20)
    res2 = solve_fixed_point(part, params, gains20, target=doubled)
    assert res2.converged
    assert np.all(res2.p_star[:10] >= res1.p_star[:10])


def test_trace_rows(gains20, n0):
    res = solve_fixed_point(Partition.first(20, 10), QosParams(0.25, n0=n0), gains20,
                            record_trace=True)
    rows = list(trace_rows(res, gains20, n0))
    assert len(rows) == 20 * (res.iterations + 1)
    it, k, p_k, sinr_k, i_k = rows[-1]
    assert (it, k) == (res.iterations, 19)
    assert sinr_k == pytest.approx(gains20.g_s[19] * p_k / i_k)
    with pytest.raises(ValueError):
        list(trace_rows(solve_fixed_point(Partition.first(20, 10), QosParams(0.25), gains20),
                        gains20, n0))


def test_interference_keeps_noise_next_to_strong_node():
    g = np.array([1e4, 1e-6])
    p = np.array([0.6, 0.6])
    i = interference(p, g, 1e-13)
    assert i[0] == pytest.approx(1e-13 + 6e-7, rel=1e-12)
    assert interference(np.array([0.6]), np.array([1e4]), 1e-13)[0] == 1e-13
