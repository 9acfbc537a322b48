import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcgs.dfw import dfw_run, metropolis_weights
from dcgs.graph import build_cycle, build_from_edges, build_path
from dcgs.objectives import Quadratic
from dcgs.sets import Box, L1Ball


def test_metropolis_examples():
    W = metropolis_weights(build_cycle(10))
    assert np.all(W[W > 0] == pytest.approx(1 / 3))
    assert np.count_nonzero(W) == 30
    np.testing.assert_array_equal(metropolis_weights(build_path(2)), [[0.5, 0.5], [0.5, 0.5]])


@given(st.integers(0, 2**31), st.integers(2, 9))
def test_metropolis_properties(seed, m):
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(m - 1)]
    edges += [(i, j) for i in range(m) for j in range(i + 2, m) if rng.random() < 0.3]
    g = build_from_edges(m, edges)
    W = metropolis_weights(g)
    np.testing.assert_array_equal(W, W.T)
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(W >= 0)
    allowed = np.eye(m, dtype=bool)
    for i, j in g.edges:
        allowed[i, j] = allowed[j, i] = True
    assert np.all(W[~allowed] == 0)


def test_one_iteration_by_hand():
    # f_1 = 0.5 x^2 - x, f_2 = 0.5 x^2 + 2x on the 2-path, X = [-1, 1], x0 = (1, -1)
    objs = [Quadratic([[1.0]], [-1.0]), Quadratic([[1.0]], [2.0])]
    rep = dfw_run(objs, Box([-1.0], [1.0]), build_path(2), 1, x0=np.array([[1.0], [-1.0]]), keep_history=True)
    # gossip: xa = (0, 0); trackers start at grad(x0) = (0, 1), mix to (0.5, 0.5),
    # correct by grad(xa) - grad(x0) = (-1, 2) - (0, 1) -> g = (-0.5, 1.5)
    np.testing.assert_allclose(rep.y_history[1].ravel(), [-0.5, 1.5])
    # LMO: s = (1, -1); gamma_0 = 1 -> x = s
    np.testing.assert_allclose(rep.x_history[1].ravel(), [1.0, -1.0])
    assert rep.final.comm_rounds == 2 and rep.final.messages == 4 and rep.final.lo_total == 2


def _centralized_fw(f, fs, x0, T):
    x = x0.copy()
    out = []
    for t in range(T):
        s, _ = fs.lmo(f.gradient(x))
        x = x + 2.0 / (t + 2.0) * (s - x)
        out.append(x.copy())
    return out


def test_symmetric_agents_follow_centralized_fw(rng):
    M = rng.standard_normal((4, 4))
    f = Quadratic(M @ M.T, rng.standard_normal(4))
    fs = L1Ball(1.0, 4)
    rep = dfw_run([f] * 5, fs, build_cycle(5), 30, keep_history=True)
    central = _centralized_fw(f, fs, fs.default_point(), 30)
    for X, c in zip(rep.x_history[1:], central):
        np.testing.assert_allclose(X, np.tile(c, (5, 1)), atol=1e-12)
    assert np.all(rep.column("consensus") <= 1e-12)


def test_tracker_conserves_gradient_sum(rng):
    objs = []
    for _ in range(6):
        M = rng.standard_normal((3, 3))
        objs.append(Quadratic(M @ M.T, rng.standard_normal(3)))
    rep = dfw_run(objs, L1Ball(1.0, 3), build_cycle(6), 20, keep_history=True)
    X, G = rep.x_history, rep.y_history
    W = metropolis_weights(build_cycle(6))
    for t in range(1, 21):
        Xa = W @ X[t - 1]
        grad_sum = sum(f.gradient(x) for f, x in zip(objs, Xa))
        np.testing.assert_allclose(G[t].sum(axis=0), grad_sum, atol=1e-9)


def test_line_search_loss_is_nonincreasing_for_symmetric_agents(rng):
    M = rng.standard_normal((5, 5))
    f = Quadratic(M @ M.T, rng.standard_normal(5))
    rep = dfw_run([f] * 4, L1Ball(2.0, 5), build_cycle(4), 50, step_rule="line_search")
    loss = rep.column("loss")
    assert np.all(np.diff(loss) <= 1e-12)


def test_errors():
    f = Quadratic(np.eye(2))
    with pytest.raises(ValueError):
        dfw_run([f] * 3, L1Ball(1.0, 2), build_cycle(3), 5, step_rule="armijo")
    with pytest.raises(ValueError):
        dfw_run([f] * 2, L1Ball(1.0, 2), build_cycle(3), 5)
