"""Shared fixtures: one reference grid/eigenpair/branch per session.

The continuation run is by far the most expensive object the unit tests
need, so it is computed once and treated as read-only.
"""

import pytest
from hypothesis import HealthCheck, settings

import radbif

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def ref_model():
    return radbif.reference_model()


@pytest.fixture(scope="session")
def grid512():
    return radbif.build_grid(3, 1.0, 512)


@pytest.fixture(scope="session")
def grid128():
    return radbif.build_grid(3, 1.0, 128)


@pytest.fixture(scope="session")
def eig512(grid512):
    return radbif.steklov_eigenpair(grid512)


@pytest.fixture(scope="session")
def mu0_ref(ref_model, eig512):
    return radbif.bifurcation_point(ref_model, eig512.mu1)


@pytest.fixture(scope="session")
def branch_cfg():
    return radbif.ContinuationConfig(ds0=0.01, ds_min=1e-8, ds_max=0.25,
                                     eps_step_off=1e-4, lambda_stop_low=1e-3,
                                     max_points=4000)


@pytest.fixture(scope="session")
def ref_branch(grid512, ref_model, branch_cfg):
    return radbif.continue_branch(grid512, ref_model, branch_cfg)


def trace_system_solve(mu_h, g1, g2, dg1, dg2, t1, t2, tol=1e-14):
    """Independent 2x2 Newton for the trace system mu t1 = g1(t2),
    mu t2 = g2(t1).  Every discrete solution lies on the kernel ray, so its
    boundary values must satisfy this reduced system exactly; the tests use
    it as an oracle the solver modules never see.
    """
    for _ in range(200):
        f1 = mu_h * t1 - g1(t2)
        f2 = mu_h * t2 - g2(t1)
        if max(abs(f1), abs(f2)) <= tol * max(1.0, abs(t1), abs(t2)):
            return t1, t2
        # rows: [mu, -dg1(t2)], [-dg2(t1), mu]
        det = mu_h * mu_h - dg1(t2) * dg2(t1)
        if det == 0.0:
            break
        t1 -= (mu_h * f1 + dg1(t2) * f2) / det
        t2 -= (dg2(t1) * f1 + mu_h * f2) / det
    raise AssertionError("trace-system oracle did not converge")


@pytest.fixture(scope="session")
def mu_h512(grid512):
    # discrete eigenvalue seen by the trace reduction: 1 / v_h(R)
    v = radbif.solve_flux_bvp(grid512, 1.0)
    return 1.0 / float(v[-1])
