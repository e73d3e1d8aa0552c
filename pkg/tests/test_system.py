import numpy as np
import pytest

from lincs.algebra import E12, H0, X0, group_exp
from lincs.exceptions import RejectedInputError
from lincs.oracles import rk4_constant_control
from lincs.system import (
    LinearSystemSpec,
    PiecewiseControl,
    linear_flow,
    reachable_cloud,
    solve,
    solve_constant,
    solve_reversed,
    steer,
)

from conftest import random_sl2


def random_group(rng):
    return group_exp(random_sl2(rng))


def random_control(rng, rho, k_max=4):
    k = int(rng.integers(1, k_max + 1))
    return PiecewiseControl(tuple(zip(rng.uniform(0.05, 1.0, k), rng.uniform(-rho, rho, k))))


def test_spec_validation():
    with pytest.raises(RejectedInputError):
        LinearSystemSpec.from_matrices(H0, [np.eye(2)], 0.1)
    with pytest.raises(RejectedInputError, match="rho"):
        LinearSystemSpec.from_matrices(H0, [X0], -1.0)
    sys = LinearSystemSpec.from_matrices(H0, [X0, E12], 0.2)
    np.testing.assert_allclose(sys.generator([0.1, -0.2]), H0 + 0.1 * X0 - 0.2 * E12)


def test_piecewise_control_basics():
    u = PiecewiseControl(((0.5, 0.1), (0.25, -0.05)))
    assert u.duration == 0.75
    assert PiecewiseControl.from_string(u.to_string()) == u
    assert (u + u).duration == 1.5
    cut = u.restricted(0.6)
    assert cut.duration == pytest.approx(0.6)
    assert [c for _, c in cut.segments] == [(0.1,), (-0.05,)]
    padded = u.restricted(1.0)
    assert padded.duration == pytest.approx(1.0)
    assert padded.segments[-1][1] == (0.0,)
    with pytest.raises(RejectedInputError):
        PiecewiseControl(((0.0, 0.1),))
    assert u.admissible(0.1) and not u.admissible(0.09)


def test_linear_flow_fixes_identity(example_system):
    for t in (-2.0, 0.0, 1.5):
        np.testing.assert_allclose(linear_flow(example_system, t, np.eye(2)), np.eye(2), atol=1e-15)


def test_linear_flow_on_exp_E12(example_system):
    for t in (-1.0, 0.3, 1.2):
        got = linear_flow(example_system, t, group_exp(E12))
        np.testing.assert_allclose(got, group_exp(np.exp(2 * t) * E12), rtol=1e-13)


def test_linear_flow_fixes_diagonal(example_system):
    a = np.diag([2.0, 0.5])
    np.testing.assert_allclose(linear_flow(example_system, 0.8, a), a, rtol=1e-14)


def test_linear_flow_is_automorphism(example_system, rng):
    for _ in range(20):
        g, h = random_group(rng), random_group(rng)
        t = rng.uniform(-1, 1)
        lhs = linear_flow(example_system, t, g @ h)
        rhs = linear_flow(example_system, t, g) @ linear_flow(example_system, t, h)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_solve_constant_zero_control_is_drift(example_system, rng):
    g = random_group(rng)
    np.testing.assert_allclose(solve_constant(example_system, 0.7, g, 0.0),
                               linear_flow(example_system, 0.7, g), atol=1e-14)


def test_solve_constant_example_against_rk4(example_system):
    got = solve_constant(example_system, 1.0, np.eye(2), 0.1)
    np.testing.assert_allclose(got, group_exp(H0 + 0.1 * X0) @ group_exp(H0, -1.0), atol=1e-15)
    oracle = rk4_constant_control(H0, H0 + 0.1 * X0, np.eye(2), 1.0)
    assert np.abs(got - oracle).max() <= 1e-6


def test_solve_constant_rejects_large_control(example_system):
    with pytest.raises(RejectedInputError):
        solve_constant(example_system, 1.0, np.eye(2), 0.2)


def test_closed_form_vs_rk4(example_system, rng):
    worst = 0.0
    for _ in range(20):
        t = rng.uniform(0, 5)
        c = rng.uniform(-0.1, 0.1)
        g = group_exp(random_sl2(rng, 0.5))
        oracle = rk4_constant_control(H0, example_system.generator(c), g, t)
        worst = max(worst, np.abs(solve_constant(example_system, t, g, c) - oracle).max())
    assert worst <= 1e-6


def test_solve_examples(example_system, rng):
    g = random_group(rng)
    one = PiecewiseControl.constant(0.8, 0.05)
    np.testing.assert_array_equal(solve(example_system, g, one),
                                  solve_constant(example_system, 0.8, g, 0.05))
    split = PiecewiseControl(((0.3, 0.05), (0.5, 0.05)))
    np.testing.assert_allclose(solve(example_system, g, split), solve(example_system, g, one),
                               atol=1e-9)
    np.testing.assert_array_equal(solve(example_system, g, PiecewiseControl()), g)


def test_translation_identity(example_system, rng):
    for _ in range(500):
        g = random_group(rng)
        u = random_control(rng, 0.1)
        lhs = solve(example_system, g, u)
        rhs = solve(example_system, np.eye(2), u) @ linear_flow(example_system, u.duration, g)
        assert np.abs(lhs - rhs).max() <= 1e-8


def test_cocycle(example_system, rng):
    for _ in range(200):
        g = random_group(rng)
        u1, u2 = random_control(rng, 0.1), random_control(rng, 0.1)
        whole = solve(example_system, g, u1 + u2)
        assert np.abs(whole - solve(example_system, solve(example_system, g, u1), u2)).max() <= 1e-8


def test_determinant_preserved(example_system, rng):
    for _ in range(100):
        u = random_control(rng, 0.1, k_max=8)
        u = PiecewiseControl(tuple((tau * 10 / (8 * 1.0), c) for tau, c in u.segments))
        assert u.duration <= 10
        g = solve(example_system, random_group(rng), u)
        assert abs(np.linalg.det(g) - 1.0) <= 1e-8 * max(1.0, np.abs(g).max() ** 2)


def test_time_reversal_duality(example_system, rng):
    for _ in range(100):
        u = random_control(rng, 0.1)
        end = solve(example_system, np.eye(2), u)
        back = solve_reversed(example_system, end, u.reversed())
        assert np.abs(back - np.eye(2)).max() <= 1e-7


def test_cloud_deterministic_and_replays(example_system):
    a = reachable_cloud(example_system, np.eye(2), 2.0, 30, seed=5)
    b = reachable_cloud(example_system, np.eye(2), 2.0, 30, seed=5)
    assert all(np.array_equal(p[0], q[0]) and p[1] == q[1] for p, q in zip(a.points, b.points))
    assert a.replay_residual(example_system) <= 1e-9
    for g, u in a.points:
        assert 1 <= len(u) <= 8
        assert u.duration <= 2.0 + 1e-12
        assert u.admissible(0.1)


def test_cloud_forced_zero_control(example_system, rng):
    g = random_group(rng)
    cloud = reachable_cloud(example_system, g, 1.5, 1, seed=0, zero_control=True)
    np.testing.assert_allclose(cloud.points[0][0], linear_flow(example_system, 1.5, g), atol=1e-12)


def test_cloud_without_control_authority(rng):
    # a vanishing control box leaves only the drift orbit
    sys = LinearSystemSpec.from_matrices(H0, [X0], 1e-300)
    g = random_group(rng)
    for h, u in reachable_cloud(sys, g, 2.0, 20, seed=1).points:
        np.testing.assert_allclose(h, linear_flow(sys, u.duration, g), atol=1e-9)


def test_cloud_translation_per_sample(example_system, rng):
    g = random_group(rng)
    from_e = reachable_cloud(example_system, np.eye(2), 1.0, 20, seed=3)
    from_g = reachable_cloud(example_system, g, 1.0, 20, seed=3)
    for (a, u), (b, _) in zip(from_e.points, from_g.points):
        np.testing.assert_allclose(b, a @ linear_flow(example_system, u.duration, g), atol=1e-9)


def test_steer_identity(example_system):
    res = steer(example_system, np.eye(2), budget=10)
    assert res.success and res.distance == 0.0 and len(res.control) == 0


def test_steer_to_replayed_point(example_system):
    u0 = PiecewiseControl(((0.4, 0.1), (0.7, -0.1)))
    target = solve(example_system, np.eye(2), u0)
    res = steer(example_system, target, budget=20000, seed=1)
    assert res.success and res.distance <= 0.05
    assert np.abs(solve(example_system, np.eye(2), res.control) - target).max() == pytest.approx(res.distance)


def test_steer_into_parabolic(example_system):
    target = np.array([[1.2, 0.3], [0.0, 1 / 1.2]])
    res = steer(example_system, target, budget=20000, seed=0)
    assert res.success
    assert res.control.admissible(0.1)
    assert res.evaluations <= 20000


def test_steer_failure_is_a_value(example_system):
    res = steer(example_system, np.array([[50.0, 0.0], [0.0, 0.02]]), budget=200, seed=0)
    assert not res.success
    assert res.distance > 0.05
