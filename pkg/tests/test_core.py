import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcgs.core import (CONVEX, STRONGLY_CONVEX, ScheduleError, consensus_residual, dcgs_run, default_R, gap_Q,
                       make_schedule, oracle_R, primal_dual_reference_run)
from dcgs.graph import build_complete, build_cycle, build_from_edges, build_path, laplacian
from dcgs.inner import InnerBudgetExceeded
from dcgs.objectives import Quadratic, Zero, total_value
from dcgs.sets import Box, L1Ball


def _quads(rng, m, d, strong=0.2):
    out = []
    for _ in range(m):
        M = rng.standard_normal((d, d))
        out.append(Quadratic(M @ M.T / d + strong * np.eye(d), rng.standard_normal(d)))
    return out


# schedules

def test_convex_schedule_example():
    s = make_schedule(CONVEX, 10, 3, 4.0, R=1.0)
    for k in range(1, 11):
        p = s.at(k)
        assert (p["eta"], p["tau"], p["alpha"], p["theta"]) == (8.0, 4.0, 1.0, 1.0)
        assert p["e"] == pytest.approx(4.0 / 30)


def test_strongly_convex_schedule_example():
    p = make_schedule(STRONGLY_CONVEX, 10, 3, 4.0, u=0.5, R=1.0).at(3)
    assert p["alpha"] == 0.75 and p["theta"] == 4.0 and p["eta"] == 0.75
    assert p["tau"] == pytest.approx(32.0, rel=1e-15)
    assert p["e"] == pytest.approx(1.0 / 90)


@pytest.mark.parametrize("kwargs", [
    dict(regime=STRONGLY_CONVEX, N=5, m=2, L_norm=2.0, u=0.0),
    dict(regime=CONVEX, N=5, m=2, L_norm=0.0),
    dict(regime=CONVEX, N=0, m=2, L_norm=1.0),
    dict(regime=CONVEX, N=5, m=2, L_norm=1.0, R=0.0),
    dict(regime="weird", N=5, m=2, L_norm=1.0),
])
def test_schedule_errors(kwargs):
    with pytest.raises(ScheduleError):
        make_schedule(**kwargs)


@pytest.mark.parametrize("N", [1, 2, 3, 17, 100, 1000, 10_000])
@pytest.mark.parametrize("regime", [CONVEX, STRONGLY_CONVEX])
def test_schedule_identities_exhaustive(N, regime):
    for L_norm, u in [(4.0, 0.5), (3.0, 1e-3), (0.7, 25.0)]:
        s = make_schedule(regime, N, 10, L_norm, u=u, R=2.0)
        assert s.identity_violations() == []


@given(st.sampled_from([CONVEX, STRONGLY_CONVEX]), st.integers(1, 400),
       st.floats(1e-3, 1e3), st.floats(1e-4, 1e4))
def test_schedule_identities_random(regime, N, L_norm, u):
    assert make_schedule(regime, N, 4, L_norm, u=u, R=1.0).identity_violations() == []


def test_R_helpers():
    assert default_R(CONVEX, 10, 2.0) == 40.0
    assert default_R(STRONGLY_CONVEX, 10, 2.0, u=0.5) == 20.0
    X0 = np.zeros((2, 2))
    xs = np.array([1.0, 1.0])
    assert oracle_R(CONVEX, X0, xs) == 4.0
    assert oracle_R(CONVEX, X0, xs, Y0=np.full((2, 2), 2.0)) == 16.0
    assert oracle_R(STRONGLY_CONVEX, X0, xs, u=0.5, L_norm=2.0, Y0=np.ones((2, 2))) == 32.0
    with pytest.raises(ScheduleError):
        oracle_R(STRONGLY_CONVEX, X0, xs)


# consensus residual and gap

def test_consensus_residual_examples(rng):
    lap = laplacian(build_path(2))
    assert consensus_residual(lap, np.array([[1.0], [3.0]])) == pytest.approx(2 * np.sqrt(2))
    assert consensus_residual(laplacian(build_cycle(5)), np.tile(rng.standard_normal(3), (5, 1))) == pytest.approx(0, abs=1e-14)


@given(st.integers(0, 2**31))
def test_consensus_residual_matches_kronecker(seed):
    rng = np.random.default_rng(seed)
    g = build_cycle(5)
    X = rng.standard_normal((5, 4))
    Lk = np.kron(laplacian(g).matrix, np.eye(4))
    assert consensus_residual(laplacian(g), X) == pytest.approx(np.linalg.norm(Lk @ X.ravel()), rel=1e-12)


def test_gap_Q_trivial_cases(rng):
    g = build_cycle(4)
    lap = laplacian(g)
    objs = _quads(rng, 4, 2)
    z = (rng.standard_normal((4, 2)), rng.standard_normal((4, 2)))
    assert gap_Q(objs, lap, z, z) == pytest.approx(0, abs=1e-12)
    x = np.tile(rng.standard_normal(2), (4, 1))
    y = rng.standard_normal((4, 2))
    assert gap_Q(objs, lap, (x, y), (x, rng.standard_normal((4, 2)))) == pytest.approx(0, abs=1e-12)


def test_gap_Q_saddle_point(rng):
    # f_i(x) = 0.5 a_i x^2 - b_i x on the 2-path; the saddle is closed form
    a, b = np.array([1.0, 3.0]), np.array([2.0, -1.0])
    objs = [Quadratic([[ai]], [-bi]) for ai, bi in zip(a, b)]
    lap = laplacian(build_path(2))
    xs = b.sum() / a.sum()
    grad = a * xs - b                      # grad F(x*) = -L y*, and L = [[1,-1],[-1,1]]
    ys = np.array([-grad[0], 0.0])         # L y* = (-grad_0, grad_0) = -grad since grad sums to 0
    np.testing.assert_allclose(lap.matrix @ ys, -grad, atol=1e-15)
    z_star = (np.full((2, 1), xs), ys[:, None])
    for _ in range(100):
        z = (rng.uniform(-3, 3, (2, 1)), rng.standard_normal((2, 1)) * 5)
        assert gap_Q(objs, lap, z_star, z) <= 1e-9


# primal-dual reference and DCGS

def test_reference_one_step_by_hand():
    # f_1 = 0.5 x^2 - x, f_2 = 0.5 x^2 + x on the 2-path (||L|| = 2): eta = 4, tau = 2
    objs = [Quadratic([[1.0]], [-1.0]), Quadratic([[1.0]], [1.0])]
    sched = make_schedule(CONVEX, 1, 2, 2.0, R=1.0)
    rep = primal_dual_reference_run(objs, Box([-2.0], [2.0]), build_path(2), sched,
                                    x0=np.array([[0.5], [-0.5]]), exact_tol=1e-14)
    # y = L x0 / tau = (0.5, -0.5); w = L y = (1, -1)
    # agent 1: x - 1 + 1 + 4 (x - 0.5) = 0 -> x = 0.4; agent 2 by symmetry -0.4
    np.testing.assert_allclose(rep.y_history[1].ravel(), [0.5, -0.5], atol=1e-12)
    np.testing.assert_allclose(rep.x_history[1].ravel(), [0.4, -0.4], atol=1e-12)


def test_reference_zero_objective_is_stationary():
    fs = L1Ball(1.0, 2)
    sched = make_schedule(CONVEX, 5, 3, 3.0, R=1.0)
    x0 = np.array([0.3, -0.2])
    rep = primal_dual_reference_run([Zero(2)] * 3, fs, build_cycle(3), sched, x0=x0)
    for X, Y in zip(rep.x_history, rep.y_history):
        np.testing.assert_allclose(X, np.tile(x0, (3, 1)), atol=1e-9)
        np.testing.assert_allclose(Y, 0.0, atol=1e-12)


def test_dcgs_matches_reference_in_exact_limit():
    rng = np.random.default_rng(11)
    g = build_cycle(3)
    fs = L1Ball(1.0, 2)
    objs = _quads(rng, 3, 2)
    x0 = np.array([[1.0, 0.0], [0.0, -1.0], [-0.5, 0.5]])
    sched = make_schedule(CONVEX, 50, 3, laplacian(g).spectral_norm, R=1.0).with_tolerance(1e-10)
    ref = primal_dual_reference_run(objs, fs, g, sched, x0=x0, exact_tol=1e-10)
    run = dcgs_run(objs, fs, g, sched, inner="pcg", x0=x0, keep_history=True, max_inner_iters=100_000)
    dev = max(np.max(np.abs(a - b)) for a, b in zip(run.x_history, ref.x_history))
    assert dev <= 1e-5


def test_dual_step_arithmetic():
    # K4 has ||L|| = 4, so tau = 4 under the convex schedule
    g = build_complete(4)
    sched = make_schedule(CONVEX, 1, 4, laplacian(g).spectral_norm, R=1.0)
    assert sched.at(1)["tau"] == pytest.approx(4.0, rel=1e-10)
    x0 = np.zeros((4, 2))
    x0[0] = [4.0 / 3.0, -2.0 / 3.0]  # v_0 = 3 x0_0 = (4, -2)
    rep = dcgs_run([Zero(2)] * 4, Box(-2 * np.ones(2), 2 * np.ones(2)), g, sched, x0=x0, keep_history=True)
    np.testing.assert_allclose(rep.y_history[1][0], [1.0, -0.5], rtol=1e-9)


def test_symmetric_agents_stay_in_consensus(rng):
    M = rng.standard_normal((4, 4))
    f = Quadratic(M @ M.T, rng.standard_normal(4))
    g = build_cycle(6)
    sched = make_schedule(CONVEX, 15, 6, laplacian(g).spectral_norm, R=1.0)
    rep = dcgs_run([f] * 6, L1Ball(1.0, 4), g, sched, keep_history=True)
    for X in rep.x_history:
        assert np.all(X == X[0])
    assert np.all(rep.column("consensus") == 0.0)


def _small_run(seed, regime=CONVEX, N=12, inner="cg", graph=None, objs=None):
    rng = np.random.default_rng(seed)
    g = graph or build_cycle(5)
    objs = objs or _quads(rng, g.m, 3)
    fs = L1Ball(1.0, 3)
    u = 0.2 if regime == STRONGLY_CONVEX else 0.0
    sched = make_schedule(regime, N, g.m, laplacian(g).spectral_norm, u=u, R=1.0)
    return dcgs_run(objs, fs, g, sched, inner=inner, keep_history=True, f_ref=0.0), sched, g, fs, objs


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.sampled_from([CONVEX, STRONGLY_CONVEX]), st.sampled_from(["cg", "pcg"]))
def test_run_invariants(seed, regime, inner):
    rep, sched, g, fs, objs = _small_run(seed, regime, inner=inner)
    L = laplacian(g).matrix
    # dual telescoping
    xs, ys = rep.x_history, rep.y_history
    y = ys[0].copy()
    for k in range(1, sched.N + 1):
        prev, prev2 = xs[k - 1], xs[max(k - 2, 0)]
        xt = prev + sched.at(k)["alpha"] * (prev - prev2)
        y = y + L @ xt / sched.at(k)["tau"]
        np.testing.assert_allclose(ys[k], y, atol=1e-10)
    # averaging and feasibility
    th = np.array(rep.theta)
    acc = np.zeros_like(xs[0])
    for k in range(1, sched.N + 1):
        acc = acc + th[k - 1] * xs[k]
        x_bar_k = acc / th[:k].sum()
        for row in x_bar_k:
            assert fs.contains(row, tol=1e-9)
    np.testing.assert_allclose(rep.x_bar, acc / th.sum(), atol=1e-12)
    # communication accounting
    for r in rep.rows:
        assert r.comm_rounds == 2 * r.k
        assert r.messages == 2 * r.k * 2 * g.n_edges
    assert rep.final.gap == pytest.approx(total_value(objs, np.tile(rep.x_bar.mean(0), (g.m, 1))))


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    base = build_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)])
    objs = _quads(rng, 5, 3)
    perm = np.array([3, 0, 4, 1, 2])  # agent i becomes perm[i]
    inv = np.argsort(perm)
    moved = build_from_edges(5, [(perm[i], perm[j]) for i, j in base.edges])
    a = _small_run(0, graph=base, objs=objs, N=8)[0]
    b = _small_run(0, graph=moved, objs=[objs[inv[i]] for i in range(5)], N=8)[0]
    np.testing.assert_allclose(b.x_bar[perm], a.x_bar, atol=1e-7)


def test_deterministic_and_executor_independent():
    from concurrent.futures import ThreadPoolExecutor

    a = _small_run(3)[0]
    rng = np.random.default_rng(3)
    g = build_cycle(5)
    objs = _quads(rng, 5, 3)
    sched = make_schedule(CONVEX, 12, 5, laplacian(g).spectral_norm, R=1.0)
    with ThreadPoolExecutor(4) as ex:
        b = dcgs_run(objs, L1Ball(1.0, 3), g, sched, executor=ex, f_ref=0.0)
    assert a.to_csv() == b.to_csv()


def test_errors():
    g = build_cycle(3)
    sched = make_schedule(CONVEX, 3, 3, 3.0, R=1.0)
    fs = L1Ball(1.0, 2)
    with pytest.raises(ValueError):
        dcgs_run([Zero(2)] * 3, fs, g, sched, x0=np.array([5.0, 0.0]))
    with pytest.raises(ValueError):
        dcgs_run([Zero(2)] * 2, fs, g, sched)
    with pytest.raises(ValueError):
        dcgs_run([Zero(2)] * 3, fs, g, sched, inner="newton")
    rng = np.random.default_rng(0)
    tight = sched.with_tolerance(1e-15)
    with pytest.raises(InnerBudgetExceeded) as info:
        dcgs_run(_quads(rng, 3, 2), fs, g, tight, max_inner_iters=3)
    assert info.value.k == 1 and info.value.agent == 0
