"""Pseudo-arclength continuation of the positive solution branch.

The branch leaves the trivial state at the bifurcation value, rises to a
fold, and then descends toward the zero-parameter end where norms blow up.
Tracing uses a secant predictor and a Newton corrector on the extended
system {residual = 0, arclength constraint = 0}; the constraint is affine,
so the corrector is an ordinary Newton method on a bordered banded matrix
solved with two banded back-substitutions.

The weighted metric (dU.dU)/dim + dlam^2 keeps the arclength parameter
comparable between the state (many nodes) and the scalar parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import LinAlgError

from .errors import ConfigError, ContinuationError, NonConvergenceError, StepOffError
from .grid import RadialGrid, SystemState, pair_norm
from .model import NonlinearityModel, f_extended, zeta
from .solver import (NewtonConfig, is_positive_state, jacobian, newton_solve,
                     residual, scaled_residual_norm)
from .steklov import SteklovPair, steklov_eigenpair

__all__ = [
    "ContinuationConfig",
    "BranchPoint",
    "FoldInfo",
    "Branch",
    "initial_tangent",
    "step_off",
    "continue_branch",
    "detect_fold",
    "solutions_at",
]

MAX_CORRECTOR_ITER = 12


@dataclass(frozen=True)
class ContinuationConfig:
    """Arclength stepping parameters.

    ds doubles when the corrector needs <= 3 iterations and halves when it
    needs >= 8 or fails, clipped to [ds_min, ds_max].  lambda_stop_low > 0
    is the tail cutoff: the zero-parameter end is a bifurcation from
    infinity and is analyzed by rescaling, not chased to blow-up.
    """

    ds0: float = 0.01
    ds_min: float = 1e-8
    ds_max: float = 0.25
    eps_step_off: float = 1e-4
    lambda_stop_low: float = 1e-3
    max_points: int = 2000
    newton: NewtonConfig = NewtonConfig()

    def __post_init__(self):
        if not (0.0 < self.ds_min <= self.ds0 <= self.ds_max):
            raise ConfigError(
                f"need 0 < ds_min <= ds0 <= ds_max, got "
                f"({self.ds_min}, {self.ds0}, {self.ds_max})")
        if not (0.0 < self.eps_step_off <= 0.1):
            raise ConfigError(
                f"eps_step_off must lie in (0, 0.1], got {self.eps_step_off}")
        if self.lambda_stop_low <= 0:
            raise ConfigError("lambda_stop_low must be positive")
        if self.max_points < 2:
            raise ConfigError("max_points must be at least 2")


@dataclass
class BranchPoint:
    lam: float
    state: SystemState
    norm: float
    tangent_lambda_sign: int
    ds: float


class FoldInfo(NamedTuple):
    lam_bar: float
    index: int


@dataclass
class Branch:
    """Ordered branch points, the fold if one was crossed, and why we stopped.

    termination is one of "lambda_floor", "max_points", "corrector_failure".
    fold_indices lists every tangent sign flip; more than one entry means
    the computed geometry is not a single fold and callers should look.
    """

    points: list = field(default_factory=list)
    fold: Optional[FoldInfo] = None
    termination: str = ""
    fold_indices: list = field(default_factory=list)

    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    def norms(self) -> np.ndarray:
        return np.array([p.norm for p in self.points])


def initial_tangent(model: NonlinearityModel, steklov_pair: SteklovPair) -> SystemState:
    """Kernel direction (phi1/(1+zeta), zeta*phi1/(1+zeta)) at the
    bifurcation point; pair_norm 1 because sup phi1 = 1."""
    z = zeta(model)
    phi = steklov_pair.phi1
    return SystemState(phi / (1.0 + z), (z / (1.0 + z)) * phi)


def _weighted_dist(u_a: np.ndarray, lam_a: float, u_b: np.ndarray,
                   lam_b: float) -> float:
    d = u_a - u_b
    return math.sqrt(float(d @ d) / d.size + (lam_a - lam_b) ** 2)


class _CorrectorFailure(Exception):
    pass


def _corrector(grid, model, tau_u, tau_lam, anchor_u, anchor_lam, ds,
               u0, lam0, tol, max_iter=MAX_CORRECTOR_ITER):
    """Newton on {residual(U, lam) = 0, constraint = 0}.

    constraint(U, lam) = ((U - anchor_u) . tau_u)/dim + (lam - anchor_lam)
    tau_lam - ds.  The bordered linear system is solved with two banded
    solves: z1 = J^{-1} F, z2 = J^{-1} F_lam, then dlam from the constraint
    row and dU = -z1 - z2 dlam.
    """
    dim = anchor_u.size
    M = grid.M
    u = u0.copy()
    lam = float(lam0)
    for it in range(max_iter + 1):
        if lam <= 0.0 or not np.isfinite(lam) or not np.all(np.isfinite(u)):
            raise _CorrectorFailure("iterate left the admissible region")
        state = SystemState.from_vector(u)
        res = residual(grid, model, lam, state)
        con = float((u - anchor_u) @ tau_u) / dim + (lam - anchor_lam) * tau_lam - ds
        rnorm = scaled_residual_norm(res, state)
        if rnorm <= tol and abs(con) <= tol * max(1.0, abs(ds)):
            return state, lam, it, rnorm
        if it == max_iter:
            raise _CorrectorFailure(f"no convergence in {max_iter} iterations")
        jac = jacobian(grid, model, lam, state)
        res_lam = np.zeros(dim)
        res_lam[2 * M] = -f_extended(model, 1, float(state.u2[M]))
        res_lam[2 * M + 1] = -f_extended(model, 2, float(state.u1[M]))
        try:
            z1 = jac.solve(res)
            z2 = jac.solve(res_lam)
        except LinAlgError as exc:
            raise _CorrectorFailure(f"singular bordered system: {exc}")
        denom = tau_lam - float(tau_u @ z2) / dim
        if not np.isfinite(denom) or denom == 0.0:
            raise _CorrectorFailure("degenerate arclength constraint")
        dlam = (float(tau_u @ z1) / dim - con) / denom
        u = u - z1 - dlam * z2
        lam = lam + dlam
    raise _CorrectorFailure("unreachable")


def step_off(grid: RadialGrid, model: NonlinearityModel, mu0: float,
             tangent: SystemState, eps: float,
             cfg: ContinuationConfig = ContinuationConfig()) -> BranchPoint:
    """First nontrivial point: amplitude eps along the kernel tangent.

    The constraint fixes the component of the state along the tangent at
    eps and leaves the parameter free, so the trivial state cannot satisfy
    it and Newton must land on the bifurcating branch.
    """
    if not (0.0 < eps <= 0.1):
        raise ConfigError(f"step-off amplitude must lie in (0, 0.1], got {eps}")
    tau_u = tangent.to_vector()
    anchor = eps * tau_u
    try:
        state, lam, _, rnorm = _corrector(
            grid, model, tau_u, 0.0, anchor, mu0, 0.0,
            anchor, mu0, cfg.newton.tol_residual)
    except _CorrectorFailure as exc:
        raise StepOffError(
            f"could not leave the trivial branch at eps={eps:g} ({exc}); "
            "try a larger amplitude")
    if not is_positive_state(state):
        raise StepOffError(
            f"step-off at eps={eps:g} produced a non-positive state; "
            "try a larger amplitude")
    sign = 1 if lam > mu0 else (-1 if lam < mu0 else 0)
    return BranchPoint(lam=lam, state=state, norm=pair_norm(state),
                       tangent_lambda_sign=sign, ds=eps)


def continue_branch(grid: RadialGrid, model: NonlinearityModel,
                    cfg: ContinuationConfig = ContinuationConfig()) -> Branch:
    """Trace the positive branch from the trivial state at the bifurcation
    value through the fold toward the small-parameter tail.

    points[0] is the trivial anchor (norm 0) at lam = mu1/sigma; points[1]
    comes from step_off; each later point is accepted only after an
    independent residual re-check and a positivity check.
    """
    eig = steklov_eigenpair(grid, tol=min(1e-10, cfg.newton.tol_residual))
    sigma = math.sqrt(model.fp0_1 * model.fp0_2)
    mu0 = eig.mu1 / sigma
    tangent = initial_tangent(model, eig)

    branch = Branch()
    branch.points.append(BranchPoint(
        lam=mu0, state=SystemState.zero(grid), norm=0.0,
        tangent_lambda_sign=0, ds=0.0))
    try:
        first = step_off(grid, model, mu0, tangent, cfg.eps_step_off, cfg)
    except StepOffError as exc:
        raise ContinuationError(f"first corrector step failed: {exc}",
                                last_point=branch.points[0])
    branch.points.append(first)

    ds = cfg.ds0
    tol = cfg.newton.tol_residual
    last_sign = first.tangent_lambda_sign
    while True:
        last = branch.points[-1]
        if last.lam <= cfg.lambda_stop_low:
            branch.termination = "lambda_floor"
            break
        if len(branch.points) >= cfg.max_points:
            branch.termination = "max_points"
            break
        prev = branch.points[-2]
        u_last = last.state.to_vector()
        u_prev = prev.state.to_vector()
        wdist = _weighted_dist(u_last, last.lam, u_prev, prev.lam)
        if wdist == 0.0:
            branch.termination = "corrector_failure"
            break
        tau_u = (u_last - u_prev) / wdist
        tau_lam = (last.lam - prev.lam) / wdist

        accepted = None
        while True:
            try:
                state, lam, iters, _ = _corrector(
                    grid, model, tau_u, tau_lam, u_last, last.lam, ds,
                    u_last + ds * tau_u, last.lam + ds * tau_lam, tol)
                # Independent re-check; the corrector's own norm is not trusted.
                re_norm = scaled_residual_norm(
                    residual(grid, model, lam, state), state)
                if re_norm > tol:
                    raise _CorrectorFailure(
                        f"re-verification failed ({re_norm:.3e})")
                if not is_positive_state(state):
                    raise _CorrectorFailure("corrected state not positive")
                accepted = (state, lam, iters)
                break
            except _CorrectorFailure:
                if ds <= cfg.ds_min * (1.0 + 1e-12):
                    break
                ds = max(0.5 * ds, cfg.ds_min)
        if accepted is None:
            branch.termination = "corrector_failure"
            break

        state, lam, iters = accepted
        dlam = lam - last.lam
        sign = last_sign if dlam == 0.0 else (1 if dlam > 0 else -1)
        branch.points.append(BranchPoint(
            lam=lam, state=state, norm=pair_norm(state),
            tangent_lambda_sign=sign, ds=ds))
        if sign != 0 and last_sign != 0 and sign != last_sign:
            branch.fold_indices.append(len(branch.points) - 1)
        if sign != 0:
            last_sign = sign
        if iters <= 3:
            ds = min(2.0 * ds, cfg.ds_max)
        elif iters >= 8:
            ds = max(0.5 * ds, cfg.ds_min)

    branch.fold = detect_fold(branch)
    return branch


def detect_fold(branch: Branch) -> Optional[FoldInfo]:
    """Fold estimate from a 3-point quadratic fit of lam(s) around the
    first tangent sign flip; None when the parameter is monotone."""
    if not branch.points:
        return None
    flips = list(branch.fold_indices)
    if not flips:
        last_sign = 0
        for k, p in enumerate(branch.points):
            s = p.tangent_lambda_sign
            if s != 0 and last_sign != 0 and s != last_sign:
                flips.append(k)
            if s != 0:
                last_sign = s
    if not flips:
        return None
    k = flips[0]
    n = len(branch.points)
    if k >= 2:
        idx = [k - 2, k - 1, k]
    else:
        idx = [i for i in (k - 1, k, k + 1) if 0 <= i < n]
    best = max(idx, key=lambda i: branch.points[i].lam)
    lam_best = branch.points[best].lam
    if len(idx) < 3:
        return FoldInfo(lam_bar=lam_best, index=best)
    pts = [branch.points[i] for i in idx]
    s = [0.0]
    for a, b in zip(pts[:-1], pts[1:]):
        s.append(s[-1] + _weighted_dist(a.state.to_vector(), a.lam,
                                        b.state.to_vector(), b.lam))
    lams = [p.lam for p in pts]
    ca, cb, cc = np.polyfit(s, lams, 2)
    if ca >= 0.0:
        return FoldInfo(lam_bar=lam_best, index=best)
    s_star = -cb / (2.0 * ca)
    if not (s[0] <= s_star <= s[-1]):
        return FoldInfo(lam_bar=lam_best, index=best)
    lam_bar = float(np.polyval([ca, cb, cc], s_star))
    return FoldInfo(lam_bar=lam_bar, index=best)


def solutions_at(branch: Branch, lam: float, grid: RadialGrid,
                 model: NonlinearityModel,
                 cfg: ContinuationConfig = ContinuationConfig()) -> list:
    """All positive states on the branch at the given parameter value.

    Brackets every segment crossing lam, re-converges each crossing with a
    fixed-parameter Newton started from linear interpolation, keeps positive
    states, and deduplicates by relative pair_norm gap 1e-3.  Crossings that
    fail to re-converge are dropped, not fatal.
    """
    if lam <= 0:
        raise ConfigError(f"parameter must be positive, got {lam}")
    states = []
    for a, b in zip(branch.points[:-1], branch.points[1:]):
        if (a.lam - lam) * (b.lam - lam) > 0.0:
            continue
        if a.lam == b.lam:
            continue
        t = (lam - a.lam) / (b.lam - a.lam)
        init = SystemState.from_vector(
            (1.0 - t) * a.state.to_vector() + t * b.state.to_vector())
        try:
            result = newton_solve(grid, model, lam, init, cfg.newton)
        except NonConvergenceError:
            continue
        if result.positive:
            states.append(result.state)
    states.sort(key=pair_norm)
    kept = []
    for st in states:
        n = pair_norm(st)
        if kept and abs(n - pair_norm(kept[-1])) <= 1e-3 * max(1.0, n):
            continue
        kept.append(st)
    return kept
