import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcgs import kernels
from dcgs.kernels import ATOM_L1, ATOM_SIMPLEX, STATUS_CONVERGED, backends

BACKENDS = backends()
needs_two = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def _instance(seed, d=12):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d))
    H = np.ascontiguousarray(A @ A.T / d)
    return H, rng.standard_normal(d), 0.7, rng.standard_normal(d)


def test_backend_flag_is_known():
    assert kernels.BACKEND in ("python", "cython")
    assert "python" in BACKENDS


@needs_two
@given(st.integers(0, 2**31), st.sampled_from([ATOM_L1, ATOM_SIMPLEX]), st.booleans())
def test_fw_atoms_backends_agree(seed, kind, ls):
    H, c, eta, center = _instance(seed)
    d = len(c)
    z0 = np.zeros(d) if kind == ATOM_L1 else np.full(d, 1.0 / d)
    outs = {}
    for name, mod in BACKENDS.items():
        z = z0.copy()
        outs[name] = mod.fw_atoms(H, c, eta, center, z, H @ z, kind, 1.0, 1e-5, 200000, ls)
    p, q = outs["python"], outs["cython"]
    assert p[4] == q[4] == STATUS_CONVERGED
    assert p[3] <= 1e-5 and q[3] <= 1e-5
    # both at gap 1e-5 on a (1/eta)-conditioned problem: ||z - z*||^2 <= 2 gap / eta
    np.testing.assert_allclose(p[0], q[0], atol=2 * np.sqrt(2e-5 / eta))


@needs_two
@given(st.integers(0, 2**31), st.sampled_from([ATOM_L1, ATOM_SIMPLEX]))
def test_pairwise_atoms_backends_agree(seed, kind):
    H, c, eta, center = _instance(seed)
    d = len(c)
    n_atoms = 2 * d if kind == ATOM_L1 else d
    outs = {}
    for name, mod in BACKENDS.items():
        w = np.zeros(n_atoms)
        w[0] = 1.0
        z = np.zeros(d)
        z[0] = 1.0
        outs[name] = mod.pairwise_atoms(H, c, eta, center, w, z, H @ z, kind, 1.0, 1e-10, 20000)
    p, q = outs["python"], outs["cython"]
    assert p[5] == q[5] == STATUS_CONVERGED
    np.testing.assert_allclose(p[0], q[0], atol=1e-6)
    for out in (p, q):
        np.testing.assert_allclose(out[2].sum(), 1.0, atol=1e-9)
        assert np.all(out[2] >= 0)


@given(st.integers(0, 2**31))
def test_top_singular_pair_matches_svd(seed):
    G = np.random.default_rng(seed).standard_normal((7, 5))
    s_ref = np.linalg.svd(G, compute_uv=False)[0]
    for mod in BACKENDS.values():
        sigma, u, v = mod.top_singular_pair(np.ascontiguousarray(G), 20000, 1e-14)
        assert sigma == pytest.approx(s_ref, rel=1e-6)
        np.testing.assert_allclose(u @ G @ v, sigma, rtol=1e-9)


def test_top_singular_pair_zero_matrix():
    for mod in BACKENDS.values():
        sigma, u, v = mod.top_singular_pair(np.zeros((3, 2)), 10, 1e-9)
        assert sigma == 0.0


@pytest.mark.parametrize("a,b,gmax,expected", [(1, -1, 1, 0.5), (1, -4, 1, 1.0), (0, 2, 1, 0.0), (0, -1, 0.3, 0.3)])
def test_line_search_examples_all_backends(a, b, gmax, expected):
    for mod in BACKENDS.values():
        assert mod.line_search_quadratic(a, b, gmax) == expected


def test_pure_python_fallback_selected_by_env():
    import os
    import subprocess
    import sys

    code = ("from dcgs import kernels; from dcgs.experiments.generators import gen_lasso_synthetic; "
            "print(kernels.BACKEND)")
    env = {**os.environ, "DCGS_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
