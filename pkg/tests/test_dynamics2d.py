"""The reduced (bz, j) system, gSQG sub-case, embedding, cross-solver checks."""

import numpy as np
import pytest

from avector.diagnostics import l2_norm
from avector.dynamics2d import (
    ReducedState,
    embed_to_3d,
    restrict_to_2d,
    rhs_gsqg,
    rhs_reduced,
    run_reduced,
    step_reduced,
)
from avector.dynamics3d import SimConfig, SimState, run, step_rk4
from avector.multipliers import MultiplierSpec
from avector.presets import random_scalar_field
from avector.spectral import (
    Grid,
    SpectralScalarField,
    _forward_multi,
    _inverse_multi,
    dealias_hat,
)

POW15 = MultiplierSpec.power(1.5)
POW2 = MultiplierSpec.power(2.0)


def cos_x(grid, n=1):
    x = grid.axes()[0]
    return SpectralScalarField.from_physical(grid, np.broadcast_to(np.cos(n * x), grid.dims).copy())


def euler_vorticity_rhs(omega: SpectralScalarField) -> SpectralScalarField:
    """Independent 2-D Euler oracle: d(omega)/dt = -u . grad omega,
    u = perp-grad of the streamfunction psi solving Lap psi = omega."""
    grid = omega.grid
    psi_hat = np.zeros_like(omega.coeffs)
    nz = grid.k2 > 0
    psi_hat[nz] = -omega.coeffs[nz] / grid.k2[nz]
    kx, ky = grid.kd
    u = _inverse_multi(np.stack([-1j * ky * psi_hat, 1j * kx * psi_hat]), 2)
    gw = _inverse_multi(np.stack([1j * kx * omega.coeffs, 1j * ky * omega.coeffs]), 2)
    adv = -(u[0] * gw[0] + u[1] * gw[1])
    out = dealias_hat(grid, _forward_multi(adv[None], 2)[0])
    out.flat[0] = 0.0
    return SpectralScalarField(grid, out)


class TestRhsReduced:
    def test_one_dimensional_profile_steady(self, grid2d):
        state = ReducedState(0.0, cos_x(grid2d), SpectralScalarField.zeros(grid2d))
        dbz, dj = rhs_reduced(POW15, state)
        assert np.max(np.abs(dbz.coeffs)) == 0.0
        assert np.max(np.abs(dj.coeffs)) == 0.0

    def test_zero_bz_leaves_j_frozen(self, grid2d):
        j = random_scalar_field(grid2d, seed=10)
        state = ReducedState(0.0, SpectralScalarField.zeros(grid2d), j)
        dbz, dj = rhs_reduced(POW15, state)
        assert np.max(np.abs(dj.coeffs)) == 0.0
        assert np.max(np.abs(dbz.coeffs)) > 0.0  # the j-coupling term survives

    def test_two_mode_convolution_oracle(self, grid2d):
        # single distinct modes: compare against the bilinear form summed by hand
        g = grid2d
        bz_hat = np.zeros(g.dims, dtype=np.complex128)
        j_hat = np.zeros(g.dims, dtype=np.complex128)
        p, q = (1, 2), (3, -1)
        bz_hat[p] = 0.5
        bz_hat[tuple(-np.array(p) % g.dims)] = 0.5
        j_hat[q] = 0.25j
        j_hat[tuple(-np.array(q) % g.dims)] = -0.25j
        state = ReducedState(
            0.0, SpectralScalarField(g, bz_hat), SpectralScalarField(g, j_hat)
        )
        dbz, dj = rhs_reduced(POW15, state)

        def gamma(k):
            return float(np.linalg.norm(k)) ** -1.5 if np.any(k) else 0.0

        # d(j)/dt = -perp_grad(Gamma bz) . grad j:
        # mode pair contribution: -(i perp(ka) gamma(ka) bz_a) . (i kb j_b)
        terms = {}
        for ka_idx, ca in [(p, 0.5), (tuple(-np.array(p) % g.dims), 0.5)]:
            ka = np.array([g.k[0].ravel()[ka_idx[0]], g.k[1].ravel()[ka_idx[1]]])
            for kb_idx, cb in [(q, 0.25j), (tuple(-np.array(q) % g.dims), -0.25j)]:
                kb = np.array([g.k[0].ravel()[kb_idx[0]], g.k[1].ravel()[kb_idx[1]]])
                perp_a = np.array([-ka[1], ka[0]])
                val = -(1j * perp_a * gamma(ka) * ca) @ (1j * kb * cb)
                kk = tuple(((ka + kb).astype(int)) % np.array(g.dims))
                terms[kk] = terms.get(kk, 0.0) + val
        expected = np.zeros(g.dims, dtype=np.complex128)
        for kk, val in terms.items():
            expected[kk] += val
        assert np.max(np.abs(dj.coeffs - expected)) < 1e-14


class TestGsqg:
    def test_cos_x_steady(self, grid2d):
        assert np.max(np.abs(rhs_gsqg(POW15, cos_x(grid2d)).coeffs)) == 0.0

    def test_zero(self, grid2d):
        out = rhs_gsqg(POW15, SpectralScalarField.zeros(grid2d))
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_matches_reduced_with_zero_j(self, grid2d):
        theta = random_scalar_field(grid2d, seed=12)
        state = ReducedState(0.0, theta, SpectralScalarField.zeros(grid2d))
        dbz, _ = rhs_reduced(POW15, state)
        out = rhs_gsqg(POW15, theta)
        assert np.array_equal(out.coeffs, dbz.coeffs)

    @pytest.mark.parametrize("seed", range(5))
    def test_power2_matches_euler_oracle(self, grid2d, seed):
        # with Gamma = |k|^-2 the advecting velocity of theta equals the
        # Biot-Savart velocity of the vorticity field omega = -theta
        theta = random_scalar_field(grid2d, seed=500 + seed)
        lhs = rhs_gsqg(POW2, theta)
        neg_theta = SpectralScalarField(grid2d, -theta.coeffs)
        rhs = euler_vorticity_rhs(neg_theta)
        assert np.max(np.abs(lhs.coeffs + rhs.coeffs)) < 1e-11


class TestEmbedding:
    def test_direct_formula(self, grid2d):
        state = ReducedState(0.0, cos_x(grid2d), SpectralScalarField.zeros(grid2d))
        B = embed_to_3d(state, 4)
        vals = B.to_physical()
        x = Grid(grid2d.dims + (4,)).axes()[0]
        assert np.max(np.abs(vals[0])) < 1e-14
        assert np.max(np.abs(vals[1])) < 1e-14
        assert np.max(np.abs(vals[2] - np.broadcast_to(np.cos(x), vals[2].shape))) < 1e-13

    def test_j_only(self, grid2d):
        y = grid2d.axes()[1]
        j = SpectralScalarField.from_physical(
            grid2d, np.broadcast_to(np.cos(y), grid2d.dims).copy()
        )
        state = ReducedState(0.0, SpectralScalarField.zeros(grid2d), j)
        vals = embed_to_3d(state, 4).to_physical()
        yy = Grid(grid2d.dims + (4,)).axes()[1]
        assert np.max(np.abs(vals[0] - np.broadcast_to(np.sin(yy), vals[0].shape))) < 1e-13
        assert np.max(np.abs(vals[1])) < 1e-14

    def test_round_trip(self, grid2d):
        bz = random_scalar_field(grid2d, seed=13)
        j = random_scalar_field(grid2d, seed=14, amplitude=0.2)
        state = ReducedState(0.0, bz, j)
        back = restrict_to_2d(embed_to_3d(state, 8))
        assert np.max(np.abs(back.bz.coeffs - bz.coeffs)) < 1e-14
        assert np.max(np.abs(back.j.coeffs - j.coeffs)) < 1e-14

    def test_embedded_field_divergence_free(self, grid2d):
        from avector.spectral import divergence_residual

        state = ReducedState(
            0.0, random_scalar_field(grid2d, seed=15), random_scalar_field(grid2d, seed=16)
        )
        assert divergence_residual(embed_to_3d(state, 4)) < 1e-13

    def test_nz_validation(self, grid2d):
        state = ReducedState(0.0, cos_x(grid2d), SpectralScalarField.zeros(grid2d))
        with pytest.raises(ValueError, match="Nz"):
            embed_to_3d(state, 3)


class TestStepRun:
    def test_j_zero_invariant_manifold(self, grid2d):
        cfg = SimConfig(grid=grid2d, multiplier=POW15, dt=1e-3, t_end=0.05)
        state = ReducedState(0.0, random_scalar_field(grid2d, seed=17),
                             SpectralScalarField.zeros(grid2d))
        out = run_reduced(cfg, state)
        assert np.max(np.abs(out.j.coeffs)) == 0.0

    def test_gsqg_steady_under_stepping(self, grid2d):
        cfg = SimConfig(grid=grid2d, multiplier=POW15, dt=1e-3, t_end=0.02)
        state = ReducedState(0.0, cos_x(grid2d), SpectralScalarField.zeros(grid2d))
        out = run_reduced(cfg, state)
        assert np.max(np.abs(out.bz.coeffs - state.bz.coeffs)) < 1e-12

    def test_means_conserved_exactly(self, grid2d):
        cfg = SimConfig(grid=grid2d, multiplier=POW15, dt=1e-3, t_end=0.02)
        state = ReducedState(0.0, random_scalar_field(grid2d, seed=18),
                             random_scalar_field(grid2d, seed=19, amplitude=0.2))
        out = run_reduced(cfg, state)
        assert out.bz.coeffs.flat[0] == 0.0
        assert out.j.coeffs.flat[0] == 0.0

    def test_theta_l2_conserved_euler(self, grid2d):
        # transported scalar: L2 norm conserved for Gamma = power(2)
        cfg = SimConfig(grid=grid2d, multiplier=POW2, dt=1e-3, t_end=0.1)
        theta = random_scalar_field(grid2d, seed=20)
        out = run_reduced(cfg, ReducedState(0.0, theta, SpectralScalarField.zeros(grid2d)))
        assert abs(l2_norm(out.bz) - l2_norm(theta)) / l2_norm(theta) < 1e-8

    def test_cross_solver_agreement(self, grid2d):
        state = ReducedState(0.0, random_scalar_field(grid2d, seed=21),
                             random_scalar_field(grid2d, seed=22, amplitude=0.2))
        cfg2 = SimConfig(grid=grid2d, multiplier=POW15, dt=1e-3, t_end=0.02)
        out2 = run_reduced(cfg2, state)
        g3 = Grid(grid2d.dims + (4,))
        cfg3 = SimConfig(grid=g3, multiplier=POW15, dt=1e-3, t_end=0.02)
        out3 = run(cfg3, embed_to_3d(state, 4))
        assert np.max(np.abs(out3.B.coeffs - embed_to_3d(out2, 4).coeffs)) < 1e-11

    def test_euler_subcase_cross_module(self, grid2d):
        # z-independent (0, 0, theta) data with power(2) is the 2-D Euler
        # sub-case; the 3-D solver must track the reduced one
        theta = random_scalar_field(grid2d, seed=25)
        state = ReducedState(0.0, theta, SpectralScalarField.zeros(grid2d))
        cfg2 = SimConfig(grid=grid2d, multiplier=POW2, dt=1e-3, t_end=0.02)
        out2 = run_reduced(cfg2, state)
        g3 = Grid(grid2d.dims + (4,))
        cfg3 = SimConfig(grid=g3, multiplier=POW2, dt=1e-3, t_end=0.02)
        out3 = run(cfg3, embed_to_3d(state, 4))
        assert np.max(np.abs(out3.B.coeffs - embed_to_3d(out2, 4).coeffs)) < 1e-11

    def test_evolve_then_embed_commutes(self, grid2d):
        # single steps done both ways land on the same field
        state = ReducedState(0.0, random_scalar_field(grid2d, seed=23),
                             random_scalar_field(grid2d, seed=24, amplitude=0.2))
        cfg2 = SimConfig(grid=grid2d, multiplier=POW15, dt=1e-3, t_end=1e-3)
        g3 = Grid(grid2d.dims + (4,))
        cfg3 = SimConfig(grid=g3, multiplier=POW15, dt=1e-3, t_end=1e-3)
        a = embed_to_3d(step_reduced(cfg2, state), 4)
        b = step_rk4(cfg3, SimState(0.0, embed_to_3d(state, 4)))
        assert np.max(np.abs(a.coeffs - b.B.coeffs)) < 1e-12
