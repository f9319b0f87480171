"""Fourier infrastructure: transforms, calculus, projections, snapshots."""

import numpy as np
import pytest

from avector.presets import abc_field, random_divfree_field, random_scalar_field, single_mode_field
from avector.spectral import (
    Grid,
    GridMismatchError,
    NonZeroMeanError,
    SpectralScalarField,
    SpectralVectorField,
    check_curl_times_identity,
    curl,
    dealias,
    divergence,
    divergence_residual,
    gradient,
    lambda_power,
    leray_project,
    load_snapshot_2d,
    load_snapshot_3d,
    resample,
    save_snapshot_2d,
    save_snapshot_3d,
)


class TestGrid:
    def test_dims_validation(self):
        with pytest.raises(ValueError):
            Grid((15, 16, 16))
        with pytest.raises(ValueError):
            Grid((2, 16, 16))
        with pytest.raises(ValueError):
            Grid((16,))

    def test_wavenumbers_integer_lattice(self):
        g = Grid((8, 8, 8))
        kx = g.k[0].ravel()
        assert set(kx.astype(int)) == {0, 1, 2, 3, -4, -3, -2, -1}
        # lattice closed under negation: -k is on the lattice for every k
        assert set(-kx.astype(int) % 8) == set(np.arange(8))

    def test_nyquist_zeroed_in_derivatives(self):
        g = Grid((8, 8, 8))
        assert np.max(np.abs(g.kd[0])) == 3.0
        assert np.max(np.abs(g.k[0])) == 4.0

    def test_dealias_mask_two_thirds(self):
        g = Grid((16, 16, 16))
        kept = np.abs(g.k[0].ravel()[g.dealias_mask[:, 0, 0]])
        assert kept.max() == 5  # 16/3 = 5.33

    def test_grid_equality_and_hash(self):
        assert Grid((8, 8, 8)) == Grid((8, 8, 8))
        assert Grid((8, 8, 8)) != Grid((8, 8, 16))
        assert hash(Grid((8, 8, 8))) == hash(Grid((8, 8, 8)))


class TestTransforms:
    def test_roundtrip(self, grid16, rng):
        vals = rng.standard_normal(grid16.dims)
        f = SpectralScalarField.from_physical(grid16, vals)
        back = f.to_physical()
        assert np.max(np.abs(back - vals)) <= 1e-13 * np.max(np.abs(vals))

    def test_coefficient_convention(self, grid16):
        # cos x has coefficients 1/2 at k = (+-1, 0, 0)
        x = grid16.axes()[0]
        f = SpectralScalarField.from_physical(
            grid16, np.broadcast_to(np.cos(x), grid16.dims).copy()
        )
        assert abs(f.coeffs[1, 0, 0] - 0.5) < 1e-14
        assert abs(f.coeffs[-1, 0, 0] - 0.5) < 1e-14

    def test_hermitian_symmetry_of_real_fields(self, grid16, rng):
        f = SpectralScalarField.from_physical(grid16, rng.standard_normal(grid16.dims))
        c = f.coeffs
        idx = [(-np.arange(n)) % n for n in grid16.dims]
        flipped = c[np.ix_(*idx)]
        assert np.max(np.abs(np.conj(flipped) - c)) < 1e-12 * np.max(np.abs(c))

    def test_shape_mismatch(self, grid16):
        with pytest.raises(GridMismatchError):
            SpectralScalarField.from_physical(grid16, np.zeros((8, 8, 8)))


class TestCurl:
    def test_single_mode(self, grid16):
        # curl (sin y, 0, 0) = (0, 0, -cos y)
        y = grid16.axes()[1]
        F = SpectralVectorField.from_physical(
            grid16,
            np.stack([
                np.broadcast_to(np.sin(y), grid16.dims),
                np.zeros(grid16.dims),
                np.zeros(grid16.dims),
            ]),
        )
        out = curl(F).to_physical()
        assert np.max(np.abs(out[0])) < 1e-13
        assert np.max(np.abs(out[1])) < 1e-13
        assert np.max(np.abs(out[2] + np.broadcast_to(np.cos(y), grid16.dims))) < 1e-13

    def test_curl_of_gradient_vanishes(self, grid16, rng):
        f = random_scalar_field(grid16, seed=11)
        out = curl(gradient(f))
        assert np.max(np.abs(out.coeffs)) < 1e-13

    def test_abc_eigenfield_mode_by_mode(self, grid16):
        B = abc_field(grid16)
        C = curl(B)
        assert np.max(np.abs(C.coeffs - B.coeffs)) < 1e-13

    def test_divergence_of_curl_vanishes(self, grid16):
        F = random_divfree_field(grid16, seed=3)
        # curl of anything is divergence-free
        G = SpectralVectorField(grid16, np.stack([
            random_scalar_field(grid16, seed=s).coeffs for s in (5, 6, 7)
        ]))
        assert np.max(np.abs(divergence(curl(G)).coeffs)) < 1e-13
        assert divergence_residual(F) < 1e-13

    def test_component_grid_mismatch(self, grid16):
        f16 = random_scalar_field(grid16, seed=1)
        f8 = random_scalar_field(Grid((8, 8, 8)), seed=1)
        with pytest.raises(GridMismatchError):
            SpectralVectorField.from_components(f16, f16, f8)


class TestLambdaPower:
    def test_identity_on_unit_shell(self, grid16):
        x = grid16.axes()[0]
        f = SpectralScalarField.from_physical(
            grid16, np.broadcast_to(np.cos(x), grid16.dims).copy()
        )
        out = lambda_power(f, 1.0)
        assert np.max(np.abs(out.coeffs - f.coeffs)) < 1e-14

    def test_inverse_square_law(self, grid16):
        y = grid16.axes()[1]
        f = SpectralScalarField.from_physical(
            grid16, np.broadcast_to(np.cos(2 * y), grid16.dims).copy()
        )
        out = lambda_power(f, -2.0).to_physical()
        assert np.max(np.abs(out - np.broadcast_to(np.cos(2 * y), grid16.dims) / 4)) < 1e-13

    def test_zero_mode_convention(self, grid16):
        f = SpectralScalarField.from_physical(grid16, np.ones(grid16.dims))
        out = lambda_power(f, 0.5)
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_negative_power_requires_mean_zero(self, grid16):
        f = SpectralScalarField.from_physical(grid16, 1.0 + np.zeros(grid16.dims))
        with pytest.raises(NonZeroMeanError, match="mean-zero"):
            lambda_power(f, -1.0)

    def test_power_roundtrip(self, grid16):
        f = random_scalar_field(grid16, seed=9)
        back = lambda_power(lambda_power(f, 1.3), -1.3)
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12 * np.max(np.abs(f.coeffs))


class TestLerayProjection:
    def test_gradient_projects_to_zero(self, grid16):
        x, y = grid16.axes()[:2]
        f = SpectralScalarField.from_physical(grid16, np.sin(x) * np.cos(y) * np.ones(grid16.dims))
        out = leray_project(gradient(f))
        assert np.max(np.abs(out.coeffs)) < 1e-13

    def test_divfree_unchanged(self, grid16):
        y = grid16.axes()[1]
        F = SpectralVectorField.from_physical(
            grid16,
            np.stack([
                np.broadcast_to(np.sin(y), grid16.dims),
                np.zeros(grid16.dims),
                np.zeros(grid16.dims),
            ]),
        )
        out = leray_project(F)
        assert np.max(np.abs(out.coeffs - F.coeffs)) < 1e-14

    def test_parallel_single_mode_killed(self, grid16):
        # (cos x, 0, 0): coefficient parallel to k = (+-1, 0, 0)
        x = grid16.axes()[0]
        F = SpectralVectorField.from_physical(
            grid16,
            np.stack([
                np.broadcast_to(np.cos(x), grid16.dims),
                np.zeros(grid16.dims),
                np.zeros(grid16.dims),
            ]),
        )
        out = leray_project(F)
        assert np.max(np.abs(out.coeffs)) < 1e-14

    def test_idempotent(self, grid16, rng):
        F = SpectralVectorField.from_physical(grid16, rng.standard_normal((3,) + grid16.dims))
        P1 = leray_project(F)
        P2 = leray_project(P1)
        assert np.max(np.abs(P2.coeffs - P1.coeffs)) < 1e-13 * np.max(np.abs(P1.coeffs))


class TestDealias:
    def test_inside_band_unchanged(self, grid16):
        f = random_scalar_field(grid16, seed=2)  # already band-limited by construction
        out = dealias(f)
        assert np.array_equal(out.coeffs, f.coeffs)

    def test_outside_band_zeroed(self):
        g = Grid((16, 16, 16))
        c = np.zeros(g.dims, dtype=np.complex128)
        c[7, 0, 0] = 1.0  # k = N/2 - 1 = 7 > 16/3
        c[-7, 0, 0] = 1.0
        out = dealias(SpectralScalarField(g, c))
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_support_inside_two_thirds_ball(self, grid16, rng):
        f = SpectralScalarField.from_physical(grid16, rng.standard_normal(grid16.dims))
        out = dealias(f)
        for ax in range(3):
            k = np.abs(grid16.k[ax])
            mask = k > grid16.dims[ax] / 3.0
            assert np.max(np.abs(np.moveaxis(out.coeffs, ax, 0)[mask.ravel() > 0])) == 0.0


class TestCurlTimesIdentity:
    def test_equal_fields_vanish(self, grid16):
        B = random_divfree_field(grid16, seed=4)
        assert check_curl_times_identity(B, B) < 1e-13

    def test_single_distinct_modes(self, grid16):
        B = single_mode_field(grid16, component=2, axis=0)
        F = single_mode_field(grid16, component=0, axis=1)
        assert check_curl_times_identity(B, F) < 1e-12

    def test_random_divfree_pairs(self, grid16):
        for s in range(5):
            B = random_divfree_field(grid16, seed=100 + s)
            F = random_divfree_field(grid16, seed=200 + s)
            assert check_curl_times_identity(B, F) < 1e-12

    def test_grid_mismatch(self, grid16):
        B = random_divfree_field(grid16, seed=1)
        F = random_divfree_field(Grid((8, 8, 8)), seed=1)
        with pytest.raises(GridMismatchError):
            check_curl_times_identity(B, F)


class TestResample:
    def test_upsample_exact_for_band_limited(self, grid16):
        f = random_scalar_field(grid16, seed=5)
        up = resample(f, (32, 32, 32))
        down = resample(up, (16, 16, 16))
        assert np.max(np.abs(down.coeffs - f.coeffs)) < 1e-14


class TestSnapshots:
    def test_roundtrip_3d(self, tmp_path, grid16):
        B = random_divfree_field(grid16, seed=8)
        p = tmp_path / "snap.bin"
        save_snapshot_3d(p, B)
        B2 = load_snapshot_3d(p)
        assert B2.grid == B.grid
        assert np.array_equal(B2.coeffs, B.coeffs)

    def test_header_layout(self, tmp_path, grid16):
        B = random_divfree_field(grid16, seed=8)
        p = tmp_path / "snap.bin"
        save_snapshot_3d(p, B)
        raw = p.read_bytes()
        assert raw[:5] == b"AVEC1"
        dims = np.frombuffer(raw[5:29], dtype="<u8")
        assert tuple(dims) == (16, 16, 16)
        assert len(raw) == 5 + 24 + 3 * 16**3 * 16

    def test_roundtrip_2d(self, tmp_path, grid2d):
        bz = random_scalar_field(grid2d, seed=1)
        j = random_scalar_field(grid2d, seed=2)
        p = tmp_path / "snap2.bin"
        save_snapshot_2d(p, bz, j)
        bz2, j2 = load_snapshot_2d(p)
        assert np.array_equal(bz2.coeffs, bz.coeffs)
        assert np.array_equal(j2.coeffs, j.coeffs)
        assert p.read_bytes()[:5] == b"AVEC2"

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.bin"
        p.write_bytes(b"NOPE!" + b"\0" * 64)
        with pytest.raises(ValueError, match="magic"):
            load_snapshot_3d(p)
