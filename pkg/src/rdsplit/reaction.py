"""Positivity-preserving solver for one reversible reaction at a point.

The reaction is tracked through a scalar trajectory variable R with
concentrations ``c(R) = c0 + sigma R``, ``sigma = beta - alpha``. One step of
size ``dt`` solves a monotone scalar equation whose root keeps every species
strictly positive, conserves ``e . c`` for every ``e`` orthogonal to sigma,
and dissipates the pointwise free energy

    F(R) = sum_i c_i(R) (ln c_i(R) - 1 + U_i).

Two residuals are used. The first-order predictor solves

    ln((Rhat - Rn)/(eta(c(Rn)) dt) + 1) + sum_i sigma_i mu_i(c(Rhat)) = 0,

with mobility ``eta(c) = k_minus prod_i c_i^beta_i`` and chemical potential
``mu_i = ln c_i + U_i``. The second-order step freezes the mobility at the
predicted midpoint, ``eta* = eta(c((Rn + Rhat)/2))``, and solves

    ln((R - Rn)/(eta* dt) + 1) + phi(R, Rn)
        + dt sum_i sigma_i (mu_i(c(R)) - mu_i(c(Rn))) = 0,

where ``phi(p, q) = (F(p) - F(q))/(p - q)`` is the difference quotient of the
free energy along the trajectory (its value at p = q is F'(p), the affinity).
Both residuals are strictly increasing on the admissible interval and blow up
at its ends, so a bracketed Newton iteration cannot escape or stall.

Every sub-step starts from Rn = 0; callers fold the returned R into the
concentrations and reset.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DomainError, InvalidInput, NonConvergence, PositivityViolation
from .grid import Field


@dataclass(frozen=True, eq=False)
class ReactionSpec:
    """One reversible reaction with rate constants and internal energies.

    Parameters
    ----------
    alpha, beta : arrays of nonnegative stoichiometric coefficients
        Reactant and product sides; ``sigma = beta - alpha``.
    k_plus, k_minus : float
        Forward and backward rate constants, both positive.
    U : array
        Internal energy per species. Detailed balance ties it to the rates:
        ``sigma . U = ln(k_minus / k_plus)``. Arbitrary U is accepted with a
        warning when that identity fails, but the reaction then relaxes to a
        different equilibrium than mass-action kinetics would.
    """

    alpha: np.ndarray
    beta: np.ndarray
    k_plus: float
    k_minus: float
    U: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        u = np.atleast_1d(np.asarray(self.U, dtype=float))
        if a.ndim != 1 or a.shape != b.shape or a.shape != u.shape:
            raise InvalidInput("alpha, beta, U must be 1-D arrays of equal length")
        if a.size == 0:
            raise InvalidInput("need at least one species")
        if np.any(a < 0) or np.any(b < 0):
            raise InvalidInput("stoichiometric coefficients must be nonnegative")
        if not (self.k_plus > 0 and self.k_minus > 0):
            raise InvalidInput("rate constants must be positive")
        if not np.all(np.isfinite(u)):
            raise InvalidInput("U must be finite")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "k_plus", float(self.k_plus))
        object.__setattr__(self, "k_minus", float(self.k_minus))
        gap = float(self.sigma @ u) - np.log(self.k_minus / self.k_plus)
        if abs(gap) > 1e-12:
            warnings.warn(
                "internal energies break detailed balance: sigma.U - ln(k-/k+) = "
                f"{gap:.3e}; the reaction will not relax to the mass-action equilibrium",
                stacklevel=2)

    @property
    def sigma(self) -> np.ndarray:
        return self.beta - self.alpha

    @property
    def n_species(self) -> int:
        return self.alpha.size

    @classmethod
    def law_of_mass_action(cls, alpha, beta, k_plus: float, k_minus: float) -> "ReactionSpec":
        """Build a spec whose trajectory ODE reproduces mass-action kinetics.

        Internal energies are distributed over the species the reaction
        consumes and produces: ``U_i = ln(k_plus)/s-`` where ``sigma_i < 0``
        (``s- = sum of consumed stoichiometry``) and ``U_i = ln(k_minus)/s+``
        where ``sigma_i > 0``, which makes ``sigma . U = ln(k_minus/k_plus)``
        exactly. For one consumed and one produced species this is
        ``U = (ln k_plus, ln k_minus)``. If the reaction only consumes or only
        produces (all of sigma on one side, e.g. A <-> 2A), the whole log
        ratio is folded onto that side instead.
        """
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        b = np.atleast_1d(np.asarray(beta, dtype=float))
        sigma = b - a
        if not (k_plus > 0 and k_minus > 0):
            raise InvalidInput("rate constants must be positive")
        U = np.zeros_like(sigma)
        s_minus = -sigma[sigma < 0].sum()
        s_plus = sigma[sigma > 0].sum()
        if s_minus == 0 and s_plus == 0:
            if abs(np.log(k_minus / k_plus)) > 1e-12:
                raise InvalidInput(
                    "alpha == beta leaves no stoichiometric change; detailed balance "
                    "then requires k_plus == k_minus")
            return cls(a, b, float(k_plus), float(k_minus), U)
        if s_minus == 0:
            U[sigma > 0] = np.log(k_minus / k_plus) / s_plus
        elif s_plus == 0:
            U[sigma < 0] = np.log(k_plus / k_minus) / s_minus
        else:
            U[sigma < 0] = np.log(k_plus) / s_minus
            U[sigma > 0] = np.log(k_minus) / s_plus
        return cls(a, b, float(k_plus), float(k_minus), U)


@dataclass
class PointState:
    """Concentrations at one point plus the trajectory value of the stage."""

    c0: np.ndarray
    R: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c0, dtype=float))
        if c.ndim != 1 or not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise PositivityViolation("concentrations must be finite and strictly positive")
        self.c0 = c
        self.R = float(self.R)


@dataclass(frozen=True)
class ReactionSolveConfig:
    tol_residual: float = 1e-12
    max_iter: int = 100
    phi_switch: float = 1e-8

    def __post_init__(self):
        if not (self.tol_residual > 0 and self.max_iter > 0 and self.phi_switch > 0):
            raise InvalidInput("solver tolerances and iteration cap must be positive")


_DEFAULT_CFG = ReactionSolveConfig()


def reaction_mobility(c, spec: ReactionSpec) -> float:
    """Mobility ``eta(c) = k_minus * prod_i c_i^beta_i`` (the backward rate)."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if np.any(c <= 0):
        raise PositivityViolation("mobility needs strictly positive concentrations")
    return float(spec.k_minus * np.prod(c ** spec.beta))


def point_free_energy(R: float, st: PointState, spec: ReactionSpec) -> float:
    """Pointwise free energy F(R) along the trajectory through st.c0."""
    c = st.c0 + spec.sigma * R
    if np.any(c <= 0):
        raise DomainError("trajectory value leaves the positive orthant")
    return float(np.sum(c * (np.log(c) - 1.0 + spec.U)))


def chemical_affinity(R: float, st: PointState, spec: ReactionSpec) -> float:
    """Affinity ``F'(R) = sum_i sigma_i (ln c_i(R) + U_i)``; zero at equilibrium."""
    c = st.c0 + spec.sigma * R
    if np.any(c <= 0):
        raise DomainError("trajectory value leaves the positive orthant")
    return float(np.sum(spec.sigma * (np.log(c) + spec.U)))


def admissible_interval(st: PointState, spec: ReactionSpec, eta_dt: float
                        ) -> tuple[float, float]:
    """Open interval of R values keeping ``c(R) > 0`` and ``R + eta_dt > 0``.

    ``lo = max(-eta_dt, max_{sigma_i>0} -c0_i/sigma_i)`` and
    ``hi = min_{sigma_i<0} c0_i/(-sigma_i)`` (+inf when nothing is consumed);
    always ``lo < 0 < hi``.
    """
    if st.R != 0.0:
        raise InvalidInput("stage must start from R = 0")
    if not eta_dt > 0:
        raise InvalidInput("eta_dt must be positive")
    lo, hi = _interval_arrays(st.c0[:, None], spec.sigma, np.array([eta_dt]))
    return float(lo[0]), float(hi[0])


def energy_difference_quotient(p: float, q: float, st: PointState, spec: ReactionSpec,
                               switch: float = 1e-8) -> float:
    """Difference quotient ``phi(p, q) = (F(p) - F(q))/(p - q)`` along the trajectory.

    Evaluated species-wise through the slope of x ln x, which keeps full
    precision for nearby arguments; at ``|p - q| <= switch * max(1, |p|, |q|)``
    it returns the limiting value ``F'((p + q)/2)``. Symmetric in (p, q).
    """
    for r, name in ((p, "p"), (q, "q")):
        c = st.c0 + spec.sigma * r
        if np.any(c <= 0):
            raise DomainError(f"c({name}) leaves the positive orthant")
    val = _phi(st.c0[:, None], spec.sigma, spec.U,
               np.array([float(p)]), np.array([float(q)]), switch)
    return float(val[0])


def predictor_first_order(st: PointState, spec: ReactionSpec, dt: float,
                          cfg: ReactionSolveConfig | None = None) -> float:
    """First-order trajectory update used to freeze the midpoint mobility."""
    cfg = cfg or _DEFAULT_CFG
    _check_step_args(st, dt)
    if not spec.sigma.any():
        return 0.0
    Rhat, _ = _scalar_predictor(st.c0.tolist(), spec, dt, cfg)
    return Rhat


def reaction_step(st: PointState, spec: ReactionSpec, dt: float,
                  cfg: ReactionSolveConfig | None = None) -> float:
    """Second-order reaction update at one point; returns the new R.

    The result lies strictly inside the admissible interval, so
    ``c(R) = c0 + sigma R`` is strictly positive, and F(R) <= F(0).
    """
    cfg = cfg or _DEFAULT_CFG
    _check_step_args(st, dt)
    if not spec.sigma.any():
        return 0.0
    R, _, _ = _scalar_stage(st.c0.tolist(), spec, dt, cfg)
    if np.any(st.c0 + spec.sigma * R <= 0):
        raise PositivityViolation("reaction step left the positive orthant")
    return R


def reaction_stage(fields: list[Field], spec: ReactionSpec, dt: float,
                   cfg: ReactionSolveConfig | None = None) -> list[Field]:
    """Apply one reaction sub-step of size dt to every cell of the fields."""
    new_fields, _ = reaction_stage_counted(fields, spec, dt, cfg)
    return new_fields


def reaction_stage_counted(fields: list[Field], spec: ReactionSpec, dt: float,
                           cfg: ReactionSolveConfig | None = None
                           ) -> tuple[list[Field], float]:
    """Like :func:`reaction_stage` but also returns mean Newton iterations per cell."""
    cfg = cfg or _DEFAULT_CFG
    if len(fields) != spec.n_species:
        raise InvalidInput(f"expected {spec.n_species} fields, got {len(fields)}")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise InvalidInput("species fields live on different grids")
    if not dt > 0:
        raise InvalidInput("dt must be positive")
    c0 = np.stack([f.values.ravel() for f in fields])
    if np.any(c0 <= 0):
        i = int(np.argwhere(np.any(c0 <= 0, axis=0)).ravel()[0])
        raise PositivityViolation(
            f"nonpositive concentration entering reaction stage at cell {_cell_label(grid, i)}")
    if not spec.sigma.any():
        return [f.copy() for f in fields], 0.0
    R, it_pred, it_corr = _solve_stage(c0, spec, dt, cfg)
    c_new = c0 + spec.sigma[:, None] * R[None, :]
    if np.any(c_new <= 0):
        i = int(np.argwhere(np.any(c_new <= 0, axis=0)).ravel()[0])
        raise PositivityViolation(
            f"reaction stage left the positive orthant at cell {_cell_label(grid, i)}")
    out = [Field(grid, c_new[i].reshape(grid.shape)) for i in range(spec.n_species)]
    return out, float(np.mean(it_pred + it_corr))


def _check_step_args(st: PointState, dt: float) -> None:
    if st.R != 0.0:
        raise InvalidInput("stage must start from R = 0")
    if not dt > 0:
        raise InvalidInput("dt must be positive")


def _cell_label(grid, flat_index: int) -> str:
    return str(tuple(int(k) for k in np.unravel_index(flat_index, grid.shape)))


def _eta_of(c, spec: ReactionSpec) -> np.ndarray:
    return spec.k_minus * np.prod(c ** spec.beta[:, None], axis=0)


def _interval_arrays(c0, sigma, eta_dt):
    lo = -eta_dt.astype(float).copy()
    hi = np.full(c0.shape[1], np.inf)
    for i, s in enumerate(sigma):
        if s > 0:
            lo = np.maximum(lo, -c0[i] / s)
        elif s < 0:
            hi = np.minimum(hi, -c0[i] / s)
    return lo, hi


def _xlnx_slope(a, d):
    """Slope of x ln x between a and a + d, stable for all |d|.

    Uses ln a + ((a + d)/d) log1p(d/a), identical to
    (x ln x - a ln a)/(x - a) but free of cancellation; below
    |d| <= 1e-8 max(1, a) the two-term expansion ln a + 1 + d/(2a) applies.
    """
    small = np.abs(d) <= 1e-8 * np.maximum(1.0, a)
    dsafe = np.where(small, 1.0, d)
    loga = np.log(a)
    return np.where(small,
                    loga + 1.0 + d / (2.0 * a),
                    loga + ((a + d) / dsafe) * np.log1p(d / a))


def _phi(c0, sigma, U, p, q, switch):
    """Vectorized phi(p, q) for trajectories anchored at c0 (shape (nsp, m))."""
    dR = p - q
    a = c0 + sigma[:, None] * q[None, :]
    d = sigma[:, None] * dR[None, :]
    g1 = _xlnx_slope(a, d)
    main = np.einsum("i,im->m", sigma, g1) + float(sigma @ (U - 1.0))
    near = np.abs(dR) <= switch * np.maximum(1.0, np.maximum(np.abs(p), np.abs(q)))
    if not near.any():
        return main
    c_mid = c0 + sigma[:, None] * ((p + q) / 2.0)[None, :]
    aff_mid = np.einsum("i,im->m", sigma, np.log(c_mid) + U[:, None])
    return np.where(near, aff_mid, main)


def _solve_predictor(c0, spec, dt, cfg):
    sigma, U = spec.sigma, spec.U
    eta0_dt = _eta_of(c0, spec) * dt
    lo, hi = _interval_arrays(c0, sigma, eta0_dt)

    def g_pred(R):
        c = c0 + sigma[:, None] * R[None, :]
        g = np.log1p(R / eta0_dt) + np.einsum("i,im->m", sigma, np.log(c) + U[:, None])
        gp = 1.0 / (R + eta0_dt) + np.einsum("i,im->m", sigma ** 2, 1.0 / c)
        return g, gp

    return _bracketed_newton(g_pred, lo, hi, np.zeros(c0.shape[1]),
                             cfg.tol_residual, cfg.max_iter,
                             "first-order reaction predictor")


def _solve_stage(c0, spec, dt, cfg):
    """Predictor + second-order corrector for c0 of shape (nsp, m)."""
    sigma, U = spec.sigma, spec.U
    Rhat, it_pred = _solve_predictor(c0, spec, dt, cfg)
    eta_star_dt = _eta_of(c0 + sigma[:, None] * (Rhat / 2.0)[None, :], spec) * dt
    lo, hi = _interval_arrays(c0, sigma, eta_star_dt)
    zeros = np.zeros(c0.shape[1])

    def g_corr(R):
        c = c0 + sigma[:, None] * R[None, :]
        dmu = np.einsum("i,im->m", sigma, np.log1p(sigma[:, None] * R[None, :] / c0))
        ph = _phi(c0, sigma, U, R, zeros, cfg.phi_switch)
        g = np.log1p(R / eta_star_dt) + ph + dt * dmu
        aff = np.einsum("i,im->m", sigma, np.log(c) + U[:, None])
        affp = np.einsum("i,im->m", sigma ** 2, 1.0 / c)
        near = np.abs(R) <= cfg.phi_switch * np.maximum(1.0, np.abs(R))
        c_mid = c0 + sigma[:, None] * (R / 2.0)[None, :]
        affp_mid = np.einsum("i,im->m", sigma ** 2, 1.0 / c_mid)
        php = np.where(near, 0.5 * affp_mid, (aff - ph) / np.where(near, 1.0, R))
        gp = 1.0 / (R + eta_star_dt) + php + dt * affp
        return g, gp

    x0 = np.where((Rhat > lo) & (Rhat < hi), Rhat, 0.0)
    R, it_corr = _bracketed_newton(g_corr, lo, hi, x0, cfg.tol_residual, cfg.max_iter,
                                   "second-order reaction step")
    return R, it_pred, it_corr


def _bracketed_newton(eval_fn, lo, hi, x0, tol, max_iter, label):
    """Vector root solve of strictly increasing residuals on open intervals.

    ``eval_fn(x) -> (g, g')`` per component. The residual tends to -inf at
    lo+ and +inf at hi- (hi may be +inf; a finite upper bracket is then found
    by doubling). Newton steps are accepted only strictly inside the current
    sign-change bracket; anything else falls back to bisection, so progress
    is guaranteed. Converges when ``|g| <= tol``; raises NonConvergence with
    the worst remaining residual after ``max_iter`` iterations.
    """
    a = np.asarray(lo, dtype=float).copy()
    b = np.asarray(hi, dtype=float).copy()
    x = np.where((x0 > a) & (x0 < b), x0, np.where(np.isfinite(b), 0.5 * (a + b), a + 1.0))

    binf = ~np.isfinite(b)
    if binf.any():
        t = np.where(binf, np.maximum(np.maximum(1.0, 2.0 * np.abs(x)), a + 1.0), x)
        for _ in range(400):
            g, _ = eval_fn(t)
            need = binf & (g <= 0)
            if not need.any():
                break
            t = np.where(need, a + 2.0 * (t - a), t)
        else:
            raise NonConvergence(f"{label}: could not bracket the root from above")
        b = np.where(binf, t, b)
        x = np.where((x > a) & (x < b), x, 0.5 * (a + b))

    g, gp = eval_fn(x)
    done = np.abs(g) <= tol
    iters = np.zeros(x.shape, dtype=int)
    for it in range(1, max_iter + 1):
        if done.all():
            break
        gpos = g > 0
        b = np.where(~done & gpos, x, b)
        a = np.where(~done & ~gpos, x, a)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            cand = x - g / gp
        bad = ~np.isfinite(cand) | (cand <= a) | (cand >= b)
        cand = np.where(bad, 0.5 * (a + b), cand)
        x = np.where(done, x, cand)
        g_new, gp_new = eval_fn(x)
        g = np.where(done, g, g_new)
        gp = np.where(done, gp, gp_new)
        newly = ~done & (np.abs(g) <= tol)
        iters[newly] = it
        done |= newly
    if not done.all():
        bad_idx = np.flatnonzero(~done)
        worst = float(np.max(np.abs(g[~done])))
        raise NonConvergence(
            f"{label}: {bad_idx.size} cell(s) not converged after {max_iter} iterations, "
            f"first at flat index {int(bad_idx[0])}",
            residual=worst, iterations=max_iter)
    return x, iters


# Scalar twins of the solvers above.  Single-point callers (ODE studies,
# operator-split stages applied pointwise) pay dearly for numpy dispatch on
# length-1 arrays, so these run the identical algorithm on plain floats.

def _scalar_xlnx_slope(a, d):
    if abs(d) <= 1e-8 * max(1.0, a):
        return math.log(a) + 1.0 + d / (2.0 * a)
    return math.log(a) + ((a + d) / d) * math.log1p(d / a)


def _scalar_interval(c0, sigma, eta_dt):
    lo, hi = -eta_dt, math.inf
    for c, s in zip(c0, sigma):
        if s > 0:
            lo = max(lo, -c / s)
        elif s < 0:
            hi = min(hi, c / -s)
    return lo, hi


def _scalar_phi(c0, sigma, U, p, q, switch):
    dR = p - q
    if abs(dR) <= switch * max(1.0, abs(p), abs(q)):
        mid = (p + q) / 2.0
        return sum(s * (math.log(c + s * mid) + u)
                   for c, s, u in zip(c0, sigma, U) if s)
    tot = 0.0
    for c, s, u in zip(c0, sigma, U):
        if s:
            tot += s * (_scalar_xlnx_slope(c + s * q, s * dR) + u - 1.0)
    return tot


def _scalar_solve(eval_fn, lo, hi, x0, tol, max_iter, label):
    """Scalar counterpart of _bracketed_newton; same bracketing rules."""
    a, b = lo, hi
    if a < x0 < b:
        x = x0
    elif math.isfinite(b):
        x = 0.5 * (a + b)
    else:
        x = a + 1.0

    if not math.isfinite(b):
        t = max(1.0, 2.0 * abs(x), a + 1.0)
        for _ in range(400):
            g, _ = eval_fn(t)
            if g > 0:
                break
            t = a + 2.0 * (t - a)
        else:
            raise NonConvergence(f"{label}: could not bracket the root from above")
        b = t
        if not (a < x < b):
            x = 0.5 * (a + b)

    g, gp = eval_fn(x)
    if abs(g) <= tol:
        return x, 0
    for it in range(1, max_iter + 1):
        if g > 0:
            b = x
        else:
            a = x
        cand = x - g / gp if gp > 0 and math.isfinite(gp) else math.inf
        if not (a < cand < b):
            cand = 0.5 * (a + b)
        if not (a < cand < b):
            break  # bracket shrunk to adjacent floats
        x = cand
        g, gp = eval_fn(x)
        if abs(g) <= tol:
            return x, it
    raise NonConvergence(f"{label}: not converged after {max_iter} iterations",
                         residual=abs(g), iterations=max_iter)


def _scalar_predictor(c0, spec, dt, cfg):
    sigma = spec.sigma.tolist()
    U = spec.U.tolist()
    eta0_dt = spec.k_minus * dt
    for c, bexp in zip(c0, spec.beta.tolist()):
        if bexp:
            eta0_dt *= c ** bexp
    lo, hi = _scalar_interval(c0, sigma, eta0_dt)
    active = [(c, s, u) for c, s, u in zip(c0, sigma, U) if s]

    def g_pred(R):
        g = math.log1p(R / eta0_dt)
        gp = 1.0 / (R + eta0_dt)
        for c, s, u in active:
            ci = c + s * R
            g += s * (math.log(ci) + u)
            gp += s * s / ci
        return g, gp

    return _scalar_solve(g_pred, lo, hi, 0.0, cfg.tol_residual, cfg.max_iter,
                         "first-order reaction predictor")


def _scalar_stage(c0, spec, dt, cfg):
    sigma = spec.sigma.tolist()
    U = spec.U.tolist()
    Rhat, it_pred = _scalar_predictor(c0, spec, dt, cfg)
    eta_star_dt = spec.k_minus * dt
    for c, s, bexp in zip(c0, sigma, spec.beta.tolist()):
        if bexp:
            eta_star_dt *= (c + s * Rhat / 2.0) ** bexp
    lo, hi = _scalar_interval(c0, sigma, eta_star_dt)
    active = [(c, s, u) for c, s, u in zip(c0, sigma, U) if s]
    switch = cfg.phi_switch

    def g_corr(R):
        g = math.log1p(R / eta_star_dt)
        gp = 1.0 / (R + eta_star_dt)
        aff = affp = dmu = 0.0
        for c, s, u in active:
            ci = c + s * R
            aff += s * (math.log(ci) + u)
            affp += s * s / ci
            dmu += s * math.log1p(s * R / c)
        ph = _scalar_phi(c0, sigma, U, R, 0.0, switch)
        if abs(R) <= switch * max(1.0, abs(R)):
            php = 0.5 * sum(s * s / (c + s * R / 2.0) for c, s, _ in active)
        else:
            php = (aff - ph) / R
        return g + ph + dt * dmu, gp + php + dt * affp

    x0 = Rhat if lo < Rhat < hi else 0.0
    R, it_corr = _scalar_solve(g_corr, lo, hi, x0, cfg.tol_residual, cfg.max_iter,
                               "second-order reaction step")
    return R, it_pred, it_corr
