"""Sub/supersolution machinery: canonical subsolution, increasing fixed
point iteration of the boundary-flux map, and the two-solutions driver.

The iteration u^{k+1} = T(lam f(u^k)) applies the linear solution operator
with frozen boundary fluxes.  Starting from a subsolution of a monotone
nondecreasing model, iterates increase nodewise and converge to the minimal
solution above the start; ordering is checked every step, not assumed.
"""

from __future__ import annotations

import math

import numpy as np

from .continuation import Branch, solutions_at
from .errors import (ConfigError, MonotonicityViolationError,
                     NonConvergenceError, SubsolutionError, DistinctnessError)
from .grid import RadialGrid, SystemState, boundary_flux, pair_norm
from .model import NonlinearityModel, f_extended, validate_hypotheses
from .solver import linear_bvp_solve
from .steklov import SteklovPair, steklov_eigenpair

__all__ = [
    "build_subsolution",
    "monotone_iterate",
    "second_solution",
    "ORDER_SLACK_REL",
]

# Nodewise ordering tolerance, relative to the iterate's pair norm.
ORDER_SLACK_REL = 1e-12


def _flux_gap(grid, model, lam, state):
    """min over components of lam f_i(trace of the other) - boundary_flux;
    nonnegative exactly when the subsolution inequalities hold."""
    g1 = lam * f_extended(model, 1, float(state.u2[-1])) - boundary_flux(grid, state.u1)
    g2 = lam * f_extended(model, 2, float(state.u1[-1])) - boundary_flux(grid, state.u2)
    return min(g1, g2)


def build_subsolution(grid: RadialGrid, model: NonlinearityModel,
                      steklov_pair: SteklovPair, lam: float,
                      eps: float) -> SystemState:
    """Kernel-direction subsolution (eps a phi1, eps b phi1), a = sqrt(f1'(0)),
    b = sqrt(f2'(0)).

    Verifies the discrete flux inequalities boundary_flux(u_i) <= lam
    f_i(u_other(R)); on violation halves eps up to 40 times.  Persistent
    failure signals lam at or below the bifurcation value (the inequalities
    then fail for every small amplitude) or a model violation.
    """
    if eps <= 0:
        raise ConfigError(f"subsolution amplitude must be positive, got {eps}")
    if lam <= 0:
        raise ConfigError(f"parameter must be positive, got {lam}")
    a = math.sqrt(model.fp0_1)
    b = math.sqrt(model.fp0_2)
    phi = steklov_pair.phi1
    for _ in range(41):
        cand = SystemState(eps * a * phi, eps * b * phi)
        if _flux_gap(grid, model, lam, cand) >= 0.0:
            return cand
        eps *= 0.5
    raise SubsolutionError(
        "no admissible subsolution amplitude after 40 halvings; "
        "the parameter is likely at or below the bifurcation value")


def monotone_iterate(grid: RadialGrid, model: NonlinearityModel, lam: float,
                     sub: SystemState, sup: SystemState | None = None,
                     tol: float = 1e-12, max_iter: int = 2000,
                     validate: bool = True,
                     trace: list | None = None) -> SystemState:
    """Increasing iteration from a verified subsolution; returns the minimal
    solution above it.

    Each step solves the linear problem with fluxes (lam f1(u2(R)),
    lam f2(u1(R))) and must not decrease any node by more than
    ORDER_SLACK_REL times the current pair norm; when sup is given, iterates
    must also stay below it nodewise.  Stops when the max node change is at
    most tol.  Pass a list as trace to record the change per iteration.
    """
    if lam <= 0:
        raise ConfigError(f"parameter must be positive, got {lam}")
    if tol <= 0 or max_iter < 1:
        raise ConfigError("tol must be positive and max_iter at least 1")
    if validate:
        report = validate_hypotheses(model, grid.N_dim)
        if not report["monotone"].passed:
            raise ConfigError(
                f"model is not monotone nondecreasing: {report['monotone'].detail}")
    if _flux_gap(grid, model, lam, sub) < 0.0:
        raise SubsolutionError(
            "starting state violates the discrete subsolution inequalities")

    cur = sub.copy()
    changes = trace if trace is not None else []
    for _ in range(max_iter):
        nxt = linear_bvp_solve(grid,
                               lam * f_extended(model, 1, float(cur.u2[-1])),
                               lam * f_extended(model, 2, float(cur.u1[-1])))
        slack = ORDER_SLACK_REL * max(1e-300, pair_norm(cur))
        drop1 = float((cur.u1 - nxt.u1).max())
        drop2 = float((cur.u2 - nxt.u2).max())
        if max(drop1, drop2) > slack:
            raise MonotonicityViolationError(
                f"iterate decreased by {max(drop1, drop2):.3e} at some node "
                f"(allowed slack {slack:.3e})")
        if sup is not None:
            ceil_slack = ORDER_SLACK_REL * max(1.0, pair_norm(sup))
            over1 = float((nxt.u1 - sup.u1).max())
            over2 = float((nxt.u2 - sup.u2).max())
            if max(over1, over2) > ceil_slack:
                raise MonotonicityViolationError(
                    f"iterate exceeded the supersolution by "
                    f"{max(over1, over2):.3e}")
        change = max(float(np.abs(nxt.u1 - cur.u1).max()),
                     float(np.abs(nxt.u2 - cur.u2).max()))
        changes.append(change)
        cur = nxt
        if change <= tol:
            return cur
    raise NonConvergenceError(
        f"monotone iteration did not settle in {max_iter} steps "
        f"(last change {changes[-1]:.3e})", trace=changes, last_state=cur)


def second_solution(grid: RadialGrid, model: NonlinearityModel, lam: float,
                    branch: Branch):
    """(minimal solution, distinct branch solution) at lam between the
    bifurcation value and the fold.

    The minimal solution comes from the increasing iteration started at the
    canonical subsolution; the ceiling is the nodewise minimum of the upper
    branch solution at lam and at a larger parameter before the fold.  The
    branch solution is the largest-norm state from solutions_at.  Raises
    DistinctnessError when the two states' pair norms agree to within the
    deduplication threshold (e.g. at the fold) or when the branch offers no
    solution at lam.
    """
    eig = steklov_eigenpair(grid)
    sigma = math.sqrt(model.fp0_1 * model.fp0_2)
    mu0 = eig.mu1 / sigma
    if lam <= mu0:
        raise ConfigError(
            f"parameter {lam:.6g} is not above the bifurcation value {mu0:.6g}")
    if branch.fold is None:
        raise ConfigError("branch has no detected fold; cannot bracket the "
                          "multiplicity window")

    candidates = solutions_at(branch, lam, grid, model)
    if not candidates:
        raise DistinctnessError(
            f"branch offers no positive solution at lam={lam:.6g} "
            f"(fold estimate {branch.fold.lam_bar:.6g})")
    upper = max(candidates, key=pair_norm)

    ceiling = upper
    lam_mid = 0.5 * (lam + branch.fold.lam_bar)
    if lam_mid > lam:
        higher = solutions_at(branch, lam_mid, grid, model)
        if higher:
            other = max(higher, key=pair_norm)
            ceiling = SystemState(np.minimum(upper.u1, other.u1),
                                  np.minimum(upper.u2, other.u2))

    a = math.sqrt(model.fp0_1)
    b = math.sqrt(model.fp0_2)
    eps0 = 1e-2 / max(a, b)
    sub = build_subsolution(grid, model, eig, lam, eps0)
    minimal = monotone_iterate(grid, model, lam, sub, sup=ceiling)

    gap = abs(pair_norm(minimal) - pair_norm(upper))
    if gap <= 1e-3 * max(1.0, pair_norm(upper)):
        raise DistinctnessError(
            f"minimal and branch solutions coincide at lam={lam:.6g} "
            f"(pair norm gap {gap:.3e}); the parameter may be at the fold")
    return minimal, upper
