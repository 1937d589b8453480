import numpy as np
import pytest

from qcfem.analysis.manufactured import (
    fd_curl,
    fd_div,
    fd_jacobian,
    fd_laplacian,
    get_example,
    manufactured_layer,
    manufactured_smooth,
)
from qcfem.assembly import ProblemParams


@pytest.fixture(scope="module")
def pts():
    return np.random.default_rng(3).uniform(0.05, 0.95, size=(100, 3))


def _boundary_points(n=40, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for axis in range(3):
        for side in (0.0, 1.0):
            p = rng.uniform(0, 1, size=(n, 3))
            p[:, axis] = side
            out.append((axis, p))
    return out


@pytest.mark.parametrize("make", [manufactured_smooth, manufactured_layer])
def test_curl_matches_finite_differences(make, pts):
    sol = make(ProblemParams())
    assert np.abs(sol.curl_u(pts) - fd_curl(sol.u, pts)).max() <= 1e-5
    assert np.abs(sol.curlcurl_u(pts) - fd_curl(sol.curl_u, pts)).max() <= 1e-5


@pytest.mark.parametrize("make", [manufactured_smooth, manufactured_layer])
def test_higher_derivatives_match_finite_differences(make, pts):
    sol = make(ProblemParams())
    assert np.abs(sol.gradcurl_u(pts) - fd_jacobian(sol.curl_u, pts)).max() <= 1e-5
    assert np.abs(sol.curl_lap_curl_u(pts) - fd_curl(sol.lap_curl_u, pts)).max() <= 1e-5
    # the Laplacian stencil is only second order; this just guards against sign slips
    assert np.allclose(sol.lap_curl_u(pts), fd_laplacian(sol.curl_u, pts), rtol=1e-4, atol=1e-3)


@pytest.mark.parametrize("make", [manufactured_smooth, manufactured_layer])
def test_divergence_free(make, pts):
    sol = make(ProblemParams())
    assert sol.divergence_free
    assert np.abs(fd_div(sol.u, pts)).max() <= 1e-6
    assert np.abs(sol.div_u(pts)).max() <= 1e-10


def test_smooth_boundary_conditions():
    sol = manufactured_smooth(ProblemParams())
    for axis, p in _boundary_points():
        u = sol.u(p)
        tang = np.delete(u, axis, axis=1)
        assert np.abs(tang).max() < 1e-12
        assert np.abs(sol.curl_u(p)).max() < 1e-12


def test_layer_tangential_trace_and_third_component():
    sol = manufactured_layer(ProblemParams())
    for axis, p in _boundary_points():
        assert np.abs(np.delete(sol.u(p), axis, axis=1)).max() < 1e-12
    p = np.random.default_rng(1).uniform(0, 1, (50, 3))
    assert np.all(sol.u(p)[:, 2] == 0)
    assert sol.reduced


def test_smooth_load_combines_terms(pts):
    params = ProblemParams(eps=0.3, alpha=2.0, beta=0.5)
    s = manufactured_smooth(params)
    f = -0.3 * s.curl_lap_curl_u(pts) + 2.0 * s.curlcurl_u(pts) + 0.5 * s.u(pts)
    assert np.allclose(s.f(pts), f)


def test_layer_load_ignores_eps(pts):
    a = manufactured_layer(ProblemParams(eps=1e-8))
    b = manufactured_layer(ProblemParams(eps=0.0))
    assert np.allclose(a.f(pts), b.f(pts))
    assert np.allclose(a.f(pts), a.curlcurl_u(pts) + a.u(pts))


def test_unknown_example():
    with pytest.raises(ValueError):
        get_example("wave", ProblemParams())
    with pytest.raises(ValueError):
        fd_jacobian(lambda p: p, np.zeros((1, 3)), order=3)
