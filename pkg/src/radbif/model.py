"""Nonlinearity pairs and the scalar data attached to them.

A model bundles two scalar functions f1, f2 on [0, inf) together with the
constants that the bifurcation analysis reads off them: growth exponents and
coefficients at infinity (f2(s)/s^p1 -> b1, f1(s)/s^p2 -> b2), derivatives at
zero, remainder exponents nu1, nu2 for R_i(s) = f_i(s) - f_i'(0) s, and a
linear-minorant constant K with f_i(s) >= K s.  Models are immutable and safe
to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, EstimationFailedError

__all__ = [
    "NonlinearityModel",
    "CheckResult",
    "HypothesesReport",
    "reference_model",
    "quadratic_model",
    "linear_model",
    "polynomial_model",
    "eval_f",
    "eval_fprime",
    "f_extended",
    "fprime_extended",
    "remainder",
    "remainder_limits",
    "estimate_remainder_limits",
    "r0_bounds",
    "zeta",
    "validate_hypotheses",
]


@dataclass(frozen=True, eq=False)
class NonlinearityModel:
    """Two boundary nonlinearities and their derived scalar parameters.

    Fields
    ------
    f1, f2 : callables on [0, inf), vanishing at 0, with evaluable derivatives
        df1, df2.
    p1, p2 : growth exponents at infinity (f2 ~ b1 s^p1, f1 ~ b2 s^p2).
    b1, b2 : positive asymptotic coefficients.
    fp0_1, fp0_2 : f1'(0), f2'(0).
    nu1, nu2 : remainder exponents (> 1); nu = min(nu1, nu2).
    K : linear-minorant constant, f_i(s) >= K s for all s >= 0.
    r_lims : optional analytic (R1_lo, R1_hi, R2_lo, R2_hi), the liminf and
        limsup of R_i(s)/s^nu as s -> 0+.  When absent they are estimated
        numerically by remainder_limits.
    """

    f1: Callable[[float], float]
    f2: Callable[[float], float]
    df1: Callable[[float], float]
    df2: Callable[[float], float]
    p1: float
    p2: float
    b1: float
    b2: float
    fp0_1: float
    fp0_2: float
    nu1: float
    nu2: float
    K: float
    r_lims: Optional[tuple[float, float, float, float]] = None
    name: str = "custom"

    def __post_init__(self):
        if self.nu1 <= 1 or self.nu2 <= 1:
            raise ConfigError("remainder exponents nu1, nu2 must exceed 1")
        if self.K <= 0:
            raise ConfigError("linear-minorant constant K must be positive")
        if self.p1 <= 0 or self.p2 <= 0:
            raise ConfigError("growth exponents p1, p2 must be positive")
        if self.b1 < 0 or self.b2 < 0:
            raise ConfigError("asymptotic coefficients b1, b2 must be nonnegative")
        for f, tag in ((self.f1, "f1"), (self.f2, "f2")):
            if abs(float(f(0.0))) > 1e-12:
                raise ConfigError(f"{tag}(0) must vanish")
        if self.r_lims is not None:
            lo1, hi1, lo2, hi2 = self.r_lims
            if lo1 > hi1 or lo2 > hi2:
                raise ConfigError("remainder limits must satisfy lo <= hi")

    @property
    def nu(self) -> float:
        return min(self.nu1, self.nu2)


def _as_pair(model: NonlinearityModel, i: int):
    if i == 1:
        return model.f1, model.df1, model.fp0_1
    if i == 2:
        return model.f2, model.df2, model.fp0_2
    raise ValueError(f"component index must be 1 or 2, got {i}")


def eval_f(model: NonlinearityModel, i: int, s: float) -> float:
    """Evaluate f_i(s) for s >= 0; negative arguments are a domain error."""
    if s < 0:
        raise ValueError(f"f{i} is only defined for s >= 0, got {s}")
    f, _, _ = _as_pair(model, i)
    return float(f(s))


def eval_fprime(model: NonlinearityModel, i: int, s: float) -> float:
    """Evaluate f_i'(s) for s >= 0."""
    if s < 0:
        raise ValueError(f"f{i}' is only defined for s >= 0, got {s}")
    _, df, _ = _as_pair(model, i)
    return float(df(s))


def f_extended(model: NonlinearityModel, i: int, s: float) -> float:
    """f_i extended linearly below zero (f_i(s) = f_i'(0) s for s < 0).

    Used inside Newton solvers so intermediate iterates with small negative
    excursions stay evaluable; converged positive solutions never hit it.
    The extension is C1 because R_i'(0) = 0 under nu_i > 1.
    """
    f, _, fp0 = _as_pair(model, i)
    return float(f(s)) if s >= 0 else fp0 * float(s)


def fprime_extended(model: NonlinearityModel, i: int, s: float) -> float:
    """Derivative of the linear extension (constant f_i'(0) below 0)."""
    _, df, fp0 = _as_pair(model, i)
    return float(df(s)) if s >= 0 else float(fp0)


def remainder(model: NonlinearityModel, i: int, s: float) -> float:
    """Remainder R_i(s) = f_i(s) - f_i'(0) s for s > 0."""
    if s <= 0:
        raise ValueError(f"remainder is defined for s > 0, got {s}")
    f, _, fp0 = _as_pair(model, i)
    return float(f(s)) - fp0 * s


def estimate_remainder_limits(model: NonlinearityModel, i: int,
                              s_hi: float = 1e-2, s_lo: float = 1e-6,
                              per_decade: int = 25, rel_tol: float = 0.05):
    """Estimate (liminf, limsup) of R_i(s)/s^nu on a decreasing sample.

    Returns (lo, hi, uncertainty, samples) where lo/hi are the min/max of the
    quotient over the last (smallest) decade, uncertainty is the drift of
    those values relative to the previous decade, and samples is the full
    (s, quotient) table.  Raises EstimationFailedError when the last decade
    neither settles within rel_tol nor trends monotonically.
    """
    nu = model.nu
    n_dec = int(round(math.log10(s_hi / s_lo)))
    s = np.geomspace(s_hi, s_lo, n_dec * per_decade + 1)
    q = np.array([remainder(model, i, float(x)) / float(x) ** nu for x in s])
    samples = np.column_stack([s, q])
    last = q[-(per_decade + 1):]
    prev = q[-(2 * per_decade + 1):-per_decade]
    lo, hi = float(last.min()), float(last.max())
    uncertainty = float(max(abs(lo - prev.min()), abs(hi - prev.max())))
    spread = hi - lo
    scale = max(1.0, abs(lo + hi) / 2)
    tail = q[-(2 * per_decade + 1):]
    diffs = np.diff(tail)
    monotone = bool(np.all(diffs >= -1e-12 * scale) or np.all(diffs <= 1e-12 * scale))
    if spread > rel_tol * scale and not monotone:
        raise EstimationFailedError(
            f"R{i}(s)/s^nu does not settle: last-decade spread {spread:.3g} "
            f"exceeds {rel_tol:.3g}*{scale:.3g} with no monotone trend",
            samples=samples)
    return lo, hi, uncertainty, samples


def remainder_limits(model: NonlinearityModel, rel_tol: float = 0.05):
    """(R1_lo, R1_hi, R2_lo, R2_hi): analytic values win, else estimates."""
    if model.r_lims is not None:
        return tuple(float(x) for x in model.r_lims)
    lo1, hi1, _, _ = estimate_remainder_limits(model, 1, rel_tol=rel_tol)
    lo2, hi2, _, _ = estimate_remainder_limits(model, 2, rel_tol=rel_tol)
    return lo1, hi1, lo2, hi2


def zeta(model: NonlinearityModel) -> float:
    """zeta = sqrt(f2'(0) / f1'(0)), the component ratio of the kernel pair."""
    if model.fp0_1 <= 0 or model.fp0_2 <= 0:
        raise ValueError("zeta requires positive derivatives at zero")
    return math.sqrt(model.fp0_2 / model.fp0_1)


def r0_bounds(model: NonlinearityModel) -> tuple[float, float]:
    """Combined remainder bounds (R0_lo, R0_hi).

    R0_hi = 1/2 (z/(1+z))^(nu-1) R1_hi + 1/2 (1/(1+z))^(nu-1) R2_hi with
    z = zeta(model); R0_lo analogously from the lower limits.  The weights
    are positive, so lo pairs with lo and hi with hi.
    """
    lo1, hi1, lo2, hi2 = remainder_limits(model)
    z = zeta(model)
    e = model.nu - 1.0
    w1 = 0.5 * (z / (1.0 + z)) ** e
    w2 = 0.5 * (1.0 / (1.0 + z)) ** e
    return w1 * lo1 + w2 * lo2, w1 * hi1 + w2 * hi2


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class HypothesesReport:
    checks: tuple[CheckResult, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_hypotheses(model: NonlinearityModel, N_dim: int) -> HypothesesReport:
    """Sampled pass/fail report for every structural hypothesis.

    Checks nonnegativity, vanishing at zero, positive derivatives at zero,
    the linear minorant f_i >= K s, the exponent window p_i in (1, N/(N-2)]
    with at most one critical exponent, monotonicity of f_i (needed by the
    multiplicity machinery), and the empirical growth f2/s^p1 -> b1,
    f1/s^p2 -> b2 on s in [1e2, 1e6].  Never raises; callers decide.
    """
    checks = []
    small = np.geomspace(1e-8, 1e3, 56)

    def sample(f):
        return np.array([float(f(float(s))) for s in small])

    v1, v2 = sample(model.f1), sample(model.f2)
    checks.append(CheckResult(
        "nonneg", bool((v1 >= 0).all() and (v2 >= 0).all()),
        f"min f1={v1.min():.3g}, min f2={v2.min():.3g} on s in [1e-8, 1e3]"))
    z1, z2 = abs(float(model.f1(0.0))), abs(float(model.f2(0.0)))
    checks.append(CheckResult(
        "zero-at-zero", z1 <= 1e-12 and z2 <= 1e-12,
        f"|f1(0)|={z1:.3g}, |f2(0)|={z2:.3g}"))
    checks.append(CheckResult(
        "positive-derivative-at-zero", model.fp0_1 > 0 and model.fp0_2 > 0,
        f"f1'(0)={model.fp0_1:.6g}, f2'(0)={model.fp0_2:.6g}"))
    ks = small * model.K
    margin = min(float((v1 - ks).min()), float((v2 - ks).min()))
    checks.append(CheckResult(
        "linear-minorant", margin >= -1e-12,
        f"min(f_i(s) - K s) = {margin:.3g} with K={model.K:.6g}"))
    crit = N_dim / (N_dim - 2)
    in_window = 1 < model.p1 <= crit + 1e-12 and 1 < model.p2 <= crit + 1e-12
    checks.append(CheckResult(
        "exponent-range", bool(in_window),
        f"p1={model.p1:.6g}, p2={model.p2:.6g}, window (1, {crit:.6g}]"))
    n_crit = sum(abs(p - crit) <= 1e-12 for p in (model.p1, model.p2))
    checks.append(CheckResult(
        "not-both-critical", n_crit < 2,
        f"{n_crit} exponent(s) at the critical value {crit:.6g}"))
    d1 = np.array([float(model.df1(float(s))) for s in small])
    d2 = np.array([float(model.df2(float(s))) for s in small])
    dmin = min(float(d1.min()), float(d2.min()))
    checks.append(CheckResult(
        "monotone", dmin >= -1e-12,
        f"min sampled f_i'(s) = {dmin:.3g}"))
    big = np.geomspace(1e2, 1e6, 9)
    try:
        g2 = np.array([float(model.f2(float(s))) / float(s) ** model.p1 for s in big])
        g1 = np.array([float(model.f1(float(s))) / float(s) ** model.p2 for s in big])
        ok = (model.b1 > 0 and model.b2 > 0
              and abs(g2[-1] / model.b1 - 1) <= 1e-3
              and abs(g1[-1] / model.b2 - 1) <= 1e-3
              and abs(g2[-1] - model.b1) <= abs(g2[0] - model.b1) + 1e-12
              and abs(g1[-1] - model.b2) <= abs(g1[0] - model.b2) + 1e-12)
        detail = (f"f2/s^p1 -> {g2[-1]:.6g} (b1={model.b1:.6g}), "
                  f"f1/s^p2 -> {g1[-1]:.6g} (b2={model.b2:.6g})")
    except (OverflowError, FloatingPointError, ZeroDivisionError) as exc:
        ok, detail = False, f"growth sampling failed: {exc}"
    checks.append(CheckResult("growth-coefficient", bool(ok), detail))
    return HypothesesReport(tuple(checks))


def polynomial_model(coeffs1: Sequence[float], coeffs2: Sequence[float], *,
                     p1: float, p2: float, b1: float, b2: float,
                     nu1: float, nu2: float, K: float,
                     r_lims=None, name: str = "polynomial") -> NonlinearityModel:
    """Model from ascending coefficient lists f_i(s) = sum_k a_k s^k.

    Requires a0 = 0 and a1 > 0 for both components.  Derivatives are exact.
    """
    c1 = np.asarray(coeffs1, dtype=float)
    c2 = np.asarray(coeffs2, dtype=float)
    for c, tag in ((c1, "coeffs1"), (c2, "coeffs2")):
        if c.ndim != 1 or c.size < 2:
            raise ConfigError(f"{tag} needs at least the s^0 and s^1 coefficients")
        if c[0] != 0.0:
            raise ConfigError(f"{tag}: constant term must be 0 (f(0)=0)")
        if c[1] <= 0.0:
            raise ConfigError(f"{tag}: linear coefficient must be positive")
    d1, d2 = np.polynomial.polynomial.polyder(c1), np.polynomial.polynomial.polyder(c2)
    pv = np.polynomial.polynomial.polyval
    return NonlinearityModel(
        f1=lambda s: pv(s, c1), f2=lambda s: pv(s, c2),
        df1=lambda s: pv(s, d1), df2=lambda s: pv(s, d2),
        p1=p1, p2=p2, b1=b1, b2=b2,
        fp0_1=float(c1[1]), fp0_2=float(c2[1]),
        nu1=nu1, nu2=nu2, K=K, r_lims=r_lims, name=name)


def reference_model() -> NonlinearityModel:
    """Repo-wide test model: f1 = s - s^2 + s^3, f2 = s + s^2/2.

    Exact data: p1=2, p2=3, b1=1/2, b2=1, f_i'(0)=1, nu1=nu2=2,
    R1 limits -1, R2 limits +1/2, K = min(1 - s + s^2) = 3/4.  Combined
    remainder bound R0 = -1/8, so the branch leaves to the right.
    """
    return polynomial_model(
        [0.0, 1.0, -1.0, 1.0], [0.0, 1.0, 0.5],
        p1=2.0, p2=3.0, b1=0.5, b2=1.0, nu1=2.0, nu2=2.0, K=0.75,
        r_lims=(-1.0, -1.0, 0.5, 0.5), name="reference")


def quadratic_model() -> NonlinearityModel:
    """Symmetric model f1 = f2 = s + s^2 (R0 = +1/2, branch leaves left)."""
    return polynomial_model(
        [0.0, 1.0, 1.0], [0.0, 1.0, 1.0],
        p1=2.0, p2=2.0, b1=1.0, b2=1.0, nu1=2.0, nu2=2.0, K=1.0,
        r_lims=(1.0, 1.0, 1.0, 1.0), name="quadratic")


def linear_model(c1: float = 1.0, c2: float = 1.0) -> NonlinearityModel:
    """Purely linear pair f1 = c1 s, f2 = c2 s (remainders vanish).

    Violates the superlinear growth hypothesis by construction (p_i = 1);
    validate_hypotheses reports that.  Useful for degenerate-case checks.
    """
    if c1 <= 0 or c2 <= 0:
        raise ConfigError("linear model needs positive slopes")
    return NonlinearityModel(
        f1=lambda s: c1 * s, f2=lambda s: c2 * s,
        df1=lambda s: c1 + 0.0 * s, df2=lambda s: c2 + 0.0 * s,
        p1=1.0, p2=1.0, b1=c2, b2=c1,
        fp0_1=c1, fp0_2=c2, nu1=2.0, nu2=2.0, K=min(c1, c2),
        r_lims=(0.0, 0.0, 0.0, 0.0), name="linear")
