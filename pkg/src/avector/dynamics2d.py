"""The 2+1/2-dimensional reduction on the 2-D torus.

A z-independent divergence-free field is determined by a stream function j
and the vertical component bz through B = (-dj/dy, dj/dx, bz).  The closed
system for the pair is

    d(bz)/dt = - perp_grad(Gamma bz) . grad bz - perp_grad(j) . grad(Gamma Lap j),
    d(j)/dt  = - perp_grad(Gamma bz) . grad j,

with perp_grad = (-d/dy, d/dx) and Lap = -Lambda^2.  Setting j = 0 leaves
the generalized SQG transport equation for bz alone, and j = 0 is preserved
exactly by the discretization (every j-tendency term carries a factor of j).

The 2-D Euler equations are the Gamma = |k|^-2 sub-case up to the sign
convention: the advecting velocity of theta equals the Biot-Savart velocity
of the vorticity field -theta.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diagnostics import _embedded_hat_2d, make_record_2d
from .dynamics3d import BlowUpError, SimConfig
from .multipliers import MultiplierSpec, gamma_hat
from .spectral import (
    Grid,
    NonZeroMeanError,
    SpectralScalarField,
    SpectralVectorField,
    _forward_multi,
    _inverse_multi,
    dealias_hat,
)


@dataclass(frozen=True)
class ReducedState:
    t: float
    bz: SpectralScalarField
    j: SpectralScalarField

    def __post_init__(self):
        if self.bz.grid != self.j.grid:
            raise ValueError("bz and j must share one grid")
        if self.bz.grid.ndim != 2:
            raise ValueError("reduced states live on 2-D grids")
        for name, f in (("bz", self.bz), ("j", self.j)):
            if not np.all(np.isfinite(f.coeffs)):
                raise BlowUpError(f"non-finite coefficients in {name}", self.t, None)
            scale = float(np.max(np.abs(f.coeffs)))
            if scale > 0 and abs(f.coeffs.flat[0]) > 1e-13 * scale:
                raise NonZeroMeanError(f"{name} must be mean-zero")

    @property
    def grid(self) -> Grid:
        return self.bz.grid


def _perp_grad_hat(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    kx, ky = grid.kd
    return np.stack([-1j * ky * fhat, 1j * kx * fhat])


def _grad_hat(grid: Grid, fhat: np.ndarray) -> np.ndarray:
    kx, ky = grid.kd
    return np.stack([1j * kx * fhat, 1j * ky * fhat])


def _rhs_reduced_hat(grid, gamma, bzhat, jhat, use_dealias):
    u = _inverse_multi(_perp_grad_hat(grid, gamma * bzhat), 2)
    grad_bz = _inverse_multi(_grad_hat(grid, bzhat), 2)
    grad_j = _inverse_multi(_grad_hat(grid, jhat), 2)
    w = _inverse_multi(_perp_grad_hat(grid, jhat), 2)
    glapj_hat = -grid.k2 * gamma * jhat
    grad_glapj = _inverse_multi(_grad_hat(grid, glapj_hat), 2)

    dbz = -np.sum(u * grad_bz, axis=0) - np.sum(w * grad_glapj, axis=0)
    dj = -np.sum(u * grad_j, axis=0)
    dbz_hat = _forward_multi(dbz[None], 2)[0]
    dj_hat = _forward_multi(dj[None], 2)[0]
    if use_dealias:
        dbz_hat = dealias_hat(grid, dbz_hat)
        dj_hat = dealias_hat(grid, dj_hat)
    dbz_hat.flat[0] = 0.0
    dj_hat.flat[0] = 0.0
    return dbz_hat, dj_hat


def rhs_reduced(spec: MultiplierSpec, state: ReducedState):
    """Tendencies (dbz, dj); both transport terms integrate to zero."""
    grid = state.grid
    gamma = gamma_hat(spec, grid)
    dbz, dj = _rhs_reduced_hat(grid, gamma, state.bz.coeffs, state.j.coeffs, True)
    return SpectralScalarField(grid, dbz), SpectralScalarField(grid, dj)


def rhs_gsqg(spec: MultiplierSpec, theta: SpectralScalarField) -> SpectralScalarField:
    """Generalized SQG tendency -perp_grad(Gamma theta) . grad theta."""
    scale = float(np.max(np.abs(theta.coeffs)))
    if scale > 0 and abs(theta.coeffs.flat[0]) > 1e-13 * scale:
        raise NonZeroMeanError("theta must be mean-zero")
    grid = theta.grid
    gamma = gamma_hat(spec, grid)
    dbz, _ = _rhs_reduced_hat(grid, gamma, theta.coeffs, np.zeros_like(theta.coeffs), True)
    return SpectralScalarField(grid, dbz)


# --------------------------------------------------------------------------
# embedding
# --------------------------------------------------------------------------


def embed_to_3d(state: ReducedState, Nz: int) -> SpectralVectorField:
    """z-independent 3-D field B = (-dj/dy, dj/dx, bz) on an (Nx, Ny, Nz) grid."""
    if Nz < 4 or Nz % 2:
        raise ValueError(f"Nz must be even and >= 4, got {Nz}")
    g2 = state.grid
    g3 = Grid(g2.dims + (Nz,))
    plane = _embedded_hat_2d(state.bz, state.j)
    coeffs = np.zeros((3,) + g3.dims, dtype=np.complex128)
    coeffs[:, :, :, 0] = plane
    return SpectralVectorField(g3, coeffs)


def restrict_to_2d(B: SpectralVectorField, t: float = 0.0) -> ReducedState:
    """Invert the embedding; B must be z-independent and divergence-free."""
    g3 = B.grid
    if g3.ndim != 3:
        raise ValueError("restrict_to_2d expects a 3-D field")
    other = np.delete(B.coeffs, 0, axis=-1)
    if np.max(np.abs(other)) > 1e-12 * max(np.max(np.abs(B.coeffs)), 1e-300):
        raise ValueError("field is not z-independent")
    g2 = Grid(g3.dims[:2])
    plane = B.coeffs[:, :, :, 0]
    kx, ky = g2.k
    curl2 = 1j * kx * plane[1] - 1j * ky * plane[0]
    jhat = -curl2 * g2.inv_k2
    return ReducedState(
        t=t,
        bz=SpectralScalarField(g2, plane[2].copy()),
        j=SpectralScalarField(g2, jhat),
    )


# --------------------------------------------------------------------------
# stepping (mirrors dynamics3d)
# --------------------------------------------------------------------------


class _Stepper2D:
    def __init__(self, cfg: SimConfig):
        if cfg.grid.ndim != 2:
            raise ValueError("reduced stepping requires a 2-D grid")
        self.cfg = cfg
        self.grid = cfg.grid
        self.gamma = gamma_hat(cfg.multiplier, cfg.grid)
        self._factors: dict[float, tuple[np.ndarray, np.ndarray] | None] = {}

    def factors(self, dt: float):
        if dt not in self._factors:
            d = self.cfg.dissipation
            if d is None:
                self._factors[dt] = None
            else:
                lam = -d.nu * self.grid.kmag**d.b
                self._factors[dt] = (np.exp(lam * dt), np.exp(lam * (dt / 2.0)))
        return self._factors[dt]

    def rhs(self, pair: np.ndarray) -> np.ndarray:
        dbz, dj = _rhs_reduced_hat(self.grid, self.gamma, pair[0], pair[1], self.cfg.dealias)
        return np.stack([dbz, dj])

    def step_hat(self, pair: np.ndarray, dt: float) -> np.ndarray:
        fac = self.factors(dt)
        if fac is None:
            k1 = self.rhs(pair)
            k2 = self.rhs(pair + (dt / 2.0) * k1)
            k3 = self.rhs(pair + (dt / 2.0) * k2)
            k4 = self.rhs(pair + dt * k3)
            return pair + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        e1, e2 = fac
        k1 = self.rhs(pair)
        k2 = self.rhs(e2 * (pair + (dt / 2.0) * k1))
        k3 = self.rhs(e2 * pair + (dt / 2.0) * k2)
        k4 = self.rhs(e1 * pair + dt * (e2 * k3))
        return e1 * pair + (dt / 6.0) * (e1 * k1 + 2.0 * e2 * (k2 + k3) + k4)


def _advance2d(stepper: _Stepper2D, state: ReducedState, dt: float) -> ReducedState:
    pair = np.stack([state.bz.coeffs, state.j.coeffs])
    out = stepper.step_hat(pair, dt)
    t_new = state.t + dt
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite coefficients after step", t_new, state)
    grid = state.grid
    return ReducedState(
        t=t_new,
        bz=SpectralScalarField(grid, out[0]),
        j=SpectralScalarField(grid, out[1]),
    )


def step_reduced(cfg: SimConfig, state: ReducedState) -> ReducedState:
    """One RK4 (or integrating-factor RK4, if dissipation is set) step."""
    return _advance2d(_Stepper2D(cfg), state, cfg.dt)


def _y1_embedded(state: ReducedState) -> float:
    bhat = _embedded_hat_2d(state.bz, state.j)
    return float(np.sum((1.0 + state.grid.kmag) * np.sum(np.abs(bhat), axis=0)))


def run_reduced(cfg: SimConfig, state0: ReducedState, sink=None, snapshot_sink=None) -> ReducedState:
    """Integrate the reduced system to t_end; mirrors dynamics3d.run."""
    stepper = _Stepper2D(cfg)
    state = state0

    g = gamma_hat(cfg.multiplier, cfg.grid)
    kx, ky = cfg.grid.kd
    vhat = np.stack([-1j * ky * g * state.bz.coeffs, 1j * kx * g * state.bz.coeffs])
    maxv = float(np.max(np.abs(_inverse_multi(vhat, 2))))
    dx = min(cfg.grid.spacing)
    if maxv > 0 and cfg.dt > dx / maxv:
        warnings.warn(
            f"dt={cfg.dt:g} exceeds the advective heuristic dx/max|V| = {dx / maxv:.3g}",
            stacklevel=2,
        )

    n_full = int(np.floor(cfg.t_end / cfg.dt + 1e-12))
    rem = cfg.t_end - n_full * cfg.dt
    step_sizes = [cfg.dt] * n_full
    if rem > 1e-12 * cfg.dt:
        step_sizes.append(rem)

    int_y1 = 0.0
    y1_prev = _y1_embedded(state)

    def emit(step_idx: int, st: ReducedState):
        if sink is not None:
            sink(make_record_2d(cfg.multiplier, st.t, st.bz, st.j, cfg.hs_norms, int_y1))
        if snapshot_sink is not None and cfg.snapshot_every > 0 and step_idx % cfg.snapshot_every == 0:
            snapshot_sink(step_idx, st)

    emit(0, state)
    n_steps = len(step_sizes)
    for i, dt in enumerate(step_sizes, start=1):
        state = _advance2d(stepper, state, dt)
        y1_cur = _y1_embedded(state)
        int_y1 += 0.5 * dt * (y1_prev + y1_cur)
        y1_prev = y1_cur
        if y1_cur > cfg.y1_ceiling:
            emit(i, state)
            raise BlowUpError(
                f"Y1 norm {y1_cur:.3e} exceeded ceiling {cfg.y1_ceiling:.3e}",
                state.t,
                state,
            )
        if i % cfg.output_every == 0 or i == n_steps:
            emit(i, state)
    return state
