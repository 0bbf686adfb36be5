"""Diffusion sub-steps: exact exponential stepping and nonlinear Crank-Nicolson.

Constant-coefficient diffusion is advanced exactly through the semigroup of
the discrete Laplacian, diagonalized by the real FFT on the periodic grid
(eigenvalue ``-sum_axis (4/h^2) sin^2(pi k / n0)`` per mode). The propagator
multiplies each mode by ``exp(dt D lambda_k)``, so the zero mode (total mass)
is untouched and every other multiplier lies in (0, 1]; positivity follows
from the maximum principle of the exact semigroup.

Density-dependent diffusion ``d rho/dt = div(D(rho) grad rho)`` with
``D(rho) = alpha_exp D0 rho^(alpha_exp - 1)`` (the flux form
``D0 Lap(rho^alpha_exp)``) is advanced by a mobility-form Crank-Nicolson
step. A semi-implicit predictor freezes the coefficient at the old state,

    (rho_hat - rho_n)/dt = div( avg(D(rho_n)) grad rho_hat ),

then the face mobility ``M = avg(D(rho_mid) rho_mid)`` with
``rho_mid = (rho_n + rho_hat)/2`` is frozen and the update solves

    (rho_new - rho_n)/dt = div( M grad mu ),
    mu = G1(rho_n, rho_new) + (C - 1) + dt (ln rho_new - ln rho_n),

where G1 is the stable slope of x ln x. Multiplying by mu and summing cells
telescopes the G1 term into the free energy ``<rho ln rho + (C-1) rho, 1>``,
so the step dissipates it by at least ``dt <M grad mu, grad mu>``; the dt
term only strengthens the inequality. Mass is conserved because the right
side is a discrete divergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidInput, NonConvergence, PositivityViolation
from .grid import Field, Grid, average_to_faces, inner_product

__all__ = [
    "DiffusionLaw", "EtdOperator", "NonlinearDiffusionConfig",
    "etd_step", "semi_implicit_predictor", "nonlinear_cn_step",
    "nonlinear_cn_step_counted", "diffusion_energy", "divgrad_matrix",
]


@dataclass(frozen=True)
class DiffusionLaw:
    """How one species diffuses: not at all, linearly, or by a power law.

    ``power(D0, alpha_exp)`` means the flux form ``D0 Lap(rho^alpha_exp)``,
    i.e. coefficient ``D(rho) = alpha_exp D0 rho^(alpha_exp-1)`` and mobility
    ``M(rho) = D(rho) rho = alpha_exp D0 rho^alpha_exp``.
    """

    kind: str
    D: float = 0.0
    D0: float = 0.0
    alpha_exp: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "constant", "power"):
            raise InvalidInput(f"unknown diffusion kind {self.kind!r}")
        if self.kind == "constant" and not self.D > 0:
            raise InvalidInput("constant diffusion needs D > 0")
        if self.kind == "power" and not (self.D0 > 0 and self.alpha_exp >= 1):
            raise InvalidInput("power diffusion needs D0 > 0 and alpha_exp >= 1")

    @classmethod
    def none(cls) -> "DiffusionLaw":
        return cls(kind="none")

    @classmethod
    def constant(cls, D: float) -> "DiffusionLaw":
        return cls(kind="constant", D=float(D))

    @classmethod
    def power(cls, D0: float, alpha_exp: float) -> "DiffusionLaw":
        return cls(kind="power", D0=float(D0), alpha_exp=float(alpha_exp))

    def coefficient(self, rho: np.ndarray) -> np.ndarray:
        """Diffusion coefficient D(rho), elementwise."""
        if self.kind == "constant":
            return np.full_like(rho, self.D)
        if self.kind == "power":
            return self.alpha_exp * self.D0 * rho ** (self.alpha_exp - 1.0)
        return np.zeros_like(rho)

    def mobility(self, rho: np.ndarray) -> np.ndarray:
        """Mobility D(rho) * rho, elementwise."""
        return self.coefficient(rho) * rho


def _laplacian_symbol(grid: Grid) -> np.ndarray:
    """Eigenvalues of the periodic discrete Laplacian on the rfft mode grid."""
    n0, h = grid.n0, grid.h
    full = -(4.0 / h ** 2) * np.sin(np.pi * np.arange(n0) / n0) ** 2
    half = full[: n0 // 2 + 1]
    if grid.dim == 1:
        return half
    return full[:, None] + half[None, :]


@lru_cache(maxsize=64)
def _etd_multipliers(grid: Grid, D: float, dt: float):
    mult = np.exp(dt * D * _laplacian_symbol(grid))
    mult.setflags(write=False)
    return mult


class EtdOperator:
    """Exact propagator ``exp(dt D Lap_h)`` applied mode-wise via the real FFT.

    Multipliers are computed once per (grid, D, dt) and cached; the zero
    frequency multiplier is exactly 1 and all of them lie in (0, 1].
    """

    def __init__(self, grid: Grid, D: float, dt: float):
        if not D > 0:
            raise InvalidInput("ETD needs a positive constant diffusion coefficient")
        if not dt > 0:
            raise InvalidInput("dt must be positive")
        self.grid = grid
        self.D = float(D)
        self.dt = float(dt)
        self.multipliers = _etd_multipliers(grid, self.D, self.dt)
        flat0 = self.multipliers.ravel()[0]
        # mathematically in (0, 1]; heavily damped modes may underflow to +0
        if flat0 != 1.0 or self.multipliers.max() > 1.0 or self.multipliers.min() < 0.0:
            raise InvalidInput("propagator multipliers left (0, 1]")

    def apply(self, values: np.ndarray) -> np.ndarray:
        if self.grid.dim == 1:
            return np.fft.irfft(np.fft.rfft(values) * self.multipliers, n=self.grid.n0)
        return np.fft.irfft2(np.fft.rfft2(values) * self.multipliers, s=self.grid.shape)


def etd_step(rho: Field, law: DiffusionLaw, dt: float) -> Field:
    """One exact diffusion step for a constant-coefficient law."""
    if law.kind != "constant":
        raise InvalidInput("etd_step applies to constant-coefficient diffusion only")
    if np.any(rho.values <= 0):
        raise PositivityViolation("etd_step needs a strictly positive field")
    out = EtdOperator(rho.grid, law.D, dt).apply(rho.values)
    if out.min() <= 0:
        raise PositivityViolation("exponential step lost positivity")
    return Field(rho.grid, out)


@dataclass(frozen=True)
class NonlinearDiffusionConfig:
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    linear_tol: float = 1e-12
    max_halvings: int = 60

    def __post_init__(self):
        if not (self.newton_tol > 0 and self.newton_max_iter > 0
                and self.linear_tol > 0 and self.max_halvings > 0):
            raise InvalidInput("solver tolerances and caps must be positive")


_DEFAULT_CFG = NonlinearDiffusionConfig()


def divgrad_matrix(grid: Grid, face_weights: list[np.ndarray]) -> sp.csr_matrix:
    """Sparse matrix of ``f -> div(m grad f)`` for given positive face weights.

    ``face_weights[ax][idx]`` is the weight on the face between cell ``idx``
    and its +1 neighbor along ``ax``. Symmetric with zero row sums.
    """
    if len(face_weights) != grid.dim:
        raise InvalidInput("need one face weight array per axis")
    n = grid.n_cells
    idx = np.arange(n).reshape(grid.shape)
    rows, cols, vals = [], [], []
    inv_h2 = 1.0 / grid.h ** 2
    for ax in range(grid.dim):
        w = np.asarray(face_weights[ax], dtype=float).reshape(grid.shape).ravel() * inv_h2
        left = idx.ravel()
        right = np.roll(idx, -1, axis=ax).ravel()
        rows += [left, left, right, right]
        cols += [left, right, right, left]
        vals += [-w, w, -w, w]
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))
    return mat.tocsr()


def semi_implicit_predictor(rho_n: Field, law: DiffusionLaw, dt: float,
                            cfg: NonlinearDiffusionConfig | None = None) -> Field:
    """Backward-Euler-type predictor with the coefficient frozen at rho_n.

    Solves ``(I/dt - div(avg(D(rho_n)) grad)) rho_hat = rho_n/dt``. The matrix
    is an M-matrix, so the solution is unique, cellwise positive, and
    conserves mass up to the direct solve's roundoff.
    """
    if law.kind == "none":
        raise InvalidInput("predictor needs a diffusing species")
    if not dt > 0:
        raise InvalidInput("dt must be positive")
    if np.any(rho_n.values <= 0):
        raise PositivityViolation("predictor needs a strictly positive field")
    grid = rho_n.grid
    coeff = Field(grid, law.coefficient(rho_n.values))
    faces = [average_to_faces(coeff, ax).values for ax in range(grid.dim)]
    A = sp.identity(grid.n_cells, format="csr") / dt - divgrad_matrix(grid, faces)
    rho_hat = spla.spsolve(A.tocsc(), rho_n.values.ravel() / dt)
    if rho_hat.min() <= 0:
        raise PositivityViolation("semi-implicit predictor lost positivity")
    return Field(grid, rho_hat.reshape(grid.shape))


def _xlnx_slope_and_deriv(a: np.ndarray, x: np.ndarray):
    """G1(a, x) = slope of x ln x between a and x, and its x-derivative G2."""
    d = x - a
    small1 = np.abs(d) <= 1e-8 * np.maximum(1.0, a)
    dsafe = np.where(small1, 1.0, d)
    loga = np.log(a)
    ratio = np.log1p(d / a)
    g1 = np.where(small1, loga + 1.0 + d / (2.0 * a), loga + (x / dsafe) * ratio)
    # G2 = (d - a log1p(d/a))/d^2 cancels badly for small d; switch earlier.
    small2 = np.abs(d) <= 1e-6 * np.maximum(1.0, a)
    dsafe2 = np.where(small2, 1.0, d)
    g2 = np.where(small2,
                  1.0 / (2.0 * a) - d / (3.0 * a ** 2),
                  (d - a * ratio) / dsafe2 ** 2)
    return g1, g2


def nonlinear_cn_step(rho_n: Field, law: DiffusionLaw, dt: float,
                      cfg: NonlinearDiffusionConfig | None = None,
                      energy_constant: float = 0.0) -> Field:
    """One mobility-form Crank-Nicolson step for density-dependent diffusion."""
    out, _ = nonlinear_cn_step_counted(rho_n, law, dt, cfg, energy_constant)
    return out


def nonlinear_cn_step_counted(rho_n: Field, law: DiffusionLaw, dt: float,
                              cfg: NonlinearDiffusionConfig | None = None,
                              energy_constant: float = 0.0
                              ) -> tuple[Field, int]:
    """Like :func:`nonlinear_cn_step`, also returning the Newton iteration count.

    ``energy_constant`` is the C in the dissipated energy
    ``<rho ln rho + (C-1) rho, 1>``; it shifts mu by a constant and therefore
    never changes the dynamics, only how mu is reported.
    """
    cfg = cfg or _DEFAULT_CFG
    if not dt > 0:
        raise InvalidInput("dt must be positive")
    if np.any(rho_n.values <= 0):
        raise PositivityViolation("nonlinear step needs a strictly positive field")
    grid = rho_n.grid
    rho_hat = semi_implicit_predictor(rho_n, law, dt, cfg)
    rho_mid = 0.5 * (rho_n.values + rho_hat.values)
    mob = Field(grid, law.mobility(rho_mid))
    faces = [average_to_faces(mob, ax).values for ax in range(grid.dim)]
    L = divgrad_matrix(grid, faces)

    rn = rho_n.values.ravel()
    log_rn = np.log(rn)
    c_shift = energy_constant - 1.0
    x = rho_hat.values.ravel().copy()
    tol = cfg.newton_tol * max(1.0, float(np.abs(rn).max()))
    eye = sp.identity(grid.n_cells, format="csr")

    def residual(x):
        g1, g2 = _xlnx_slope_and_deriv(rn, x)
        mu = g1 + c_shift + dt * (np.log(x) - log_rn)
        mu_prime = g2 + dt / x
        return x - rn - dt * (L @ mu), mu_prime

    n_iter = 0
    r, mu_prime = residual(x)
    while float(np.abs(r).max()) > tol:
        n_iter += 1
        if n_iter > cfg.newton_max_iter:
            raise NonConvergence(
                f"nonlinear diffusion Newton stalled at residual {float(np.abs(r).max()):.3e}",
                residual=float(np.abs(r).max()), iterations=cfg.newton_max_iter)
        J = eye - dt * (L @ sp.diags(mu_prime))
        delta = spla.spsolve(J.tocsc(), -r)
        s = 1.0
        for _ in range(cfg.max_halvings):
            if (x + s * delta).min() > 0:
                break
            s *= 0.5
        else:
            raise PositivityViolation(
                "nonlinear diffusion line search could not restore positivity")
        x = x + s * delta
        r, mu_prime = residual(x)
    out = x.reshape(grid.shape)
    if out.min() <= 0:
        raise PositivityViolation("nonlinear diffusion step lost positivity")
    return Field(grid, out), n_iter


def diffusion_energy(rho: Field, C: float = 0.0) -> float:
    """Entropy-type energy ``<rho ln rho + C rho, 1>`` of a positive field."""
    if np.any(rho.values <= 0):
        raise PositivityViolation("energy needs a strictly positive field")
    v = rho.values
    return float(rho.grid.cell_volume * np.sum(v * np.log(v) + C * v))
