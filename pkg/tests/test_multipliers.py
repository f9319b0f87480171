"""Symbol families, multiplier application, derived velocity, assumptions."""

import numpy as np
import pytest

from avector.diagnostics import y1_norm
from avector.multipliers import (
    AssumptionReport,
    MultiplierSpec,
    apply_gamma,
    compute_V,
    eval_symbol,
    validate_assumptions,
)
from avector.presets import abc_field, random_divfree_field, single_mode_field
from avector.spectral import (
    NonZeroMeanError,
    SpectralScalarField,
    SpectralVectorField,
    divergence_residual,
    lambda_power,
)

RADII = np.logspace(-2, 3, 61)


class TestEvalSymbol:
    def test_power_law(self):
        assert eval_symbol(MultiplierSpec.power(2.0), 2.0) == pytest.approx(0.25, abs=1e-15)
        assert eval_symbol(MultiplierSpec.power(1.0), 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_power_log(self):
        spec = MultiplierSpec.power_log(1.5, 1.0)
        assert eval_symbol(spec, 1.0) == pytest.approx(np.log(11.0), rel=1e-14)

    def test_zero_mode_convention(self):
        for spec in (MultiplierSpec.power(1.5), MultiplierSpec.power_log(1.5, 2.0)):
            assert eval_symbol(spec, 0.0) == 0.0

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            eval_symbol(MultiplierSpec.power(1.0), -1.0)

    def test_exact_scaling_of_power(self):
        spec = MultiplierSpec.power(1.3)
        r = np.array([0.1, 1.0, 7.5, 123.0])
        lam = 3.7
        lhs = eval_symbol(spec, lam * r)
        rhs = lam**-1.3 * eval_symbol(spec, r)
        assert np.max(np.abs(lhs - rhs) / rhs) < 1e-13

    def test_log_range_warning(self):
        with pytest.warns(UserWarning, match="1 < a < 2"):
            MultiplierSpec.power_log(0.5, 1.0)

    def test_tabulated_interpolates(self):
        spec = MultiplierSpec.tabulated([0.5, 1.0, 2.0, 4.0], [4.0, 1.0, 0.25, 0.0625])
        # table is gamma = r^-2; log-log interpolation is exact on power laws
        assert eval_symbol(spec, 1.5) == pytest.approx(1.5**-2, rel=1e-12)

    def test_tabulated_validation(self):
        with pytest.raises(ValueError, match="positive"):
            MultiplierSpec.tabulated([1.0, 2.0], [1.0, -1.0])
        with pytest.raises(ValueError, match="increasing"):
            MultiplierSpec.tabulated([2.0, 1.0], [1.0, 1.0])


class TestApplyGamma:
    def test_unit_shell(self, grid16):
        x = grid16.axes()[0]
        f = SpectralScalarField.from_physical(grid16, np.broadcast_to(np.cos(x), grid16.dims).copy())
        out = apply_gamma(MultiplierSpec.power(2.0), f)
        assert np.max(np.abs(out.coeffs - f.coeffs)) < 1e-14

    def test_second_shell(self, grid16):
        y = grid16.axes()[1]
        f = SpectralScalarField.from_physical(grid16, np.broadcast_to(np.cos(2 * y), grid16.dims).copy())
        out = apply_gamma(MultiplierSpec.power(1.0), f).to_physical()
        assert np.max(np.abs(out - np.broadcast_to(np.cos(2 * y), grid16.dims) / 2)) < 1e-13

    def test_zero_field(self, grid16):
        f = SpectralScalarField.zeros(grid16)
        out = apply_gamma(MultiplierSpec.power_loglog(1.5, 1.0, 1.0), f)
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_commutes_with_lambda_power(self, grid16):
        B = random_divfree_field(grid16, seed=21)
        spec = MultiplierSpec.power(1.5)
        a = lambda_power(apply_gamma(spec, B), 0.7)
        b = apply_gamma(spec, lambda_power(B, 0.7))
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-13 * np.max(np.abs(a.coeffs))


class TestComputeV:
    def test_abc_eigenfield(self, grid16):
        for a in (1.0, 1.5, 2.0):
            B = abc_field(grid16)
            V = compute_V(MultiplierSpec.power(a), B)
            assert np.max(np.abs(V.coeffs + B.coeffs)) < 1e-13  # V = -gamma(1) B

    def test_single_mode(self, grid16):
        B = single_mode_field(grid16)  # (0, 0, cos x)
        V = compute_V(MultiplierSpec.power(1.0), B).to_physical()
        x = grid16.axes()[0]
        assert np.max(np.abs(V[0])) < 1e-13
        assert np.max(np.abs(V[1] + np.broadcast_to(np.sin(x), grid16.dims))) < 1e-13
        assert np.max(np.abs(V[2])) < 1e-13

    def test_zero_field(self, grid16):
        V = compute_V(MultiplierSpec.power(1.0), SpectralVectorField.zeros(grid16))
        assert np.max(np.abs(V.coeffs)) == 0.0

    def test_divergence_free(self, grid16):
        V = compute_V(MultiplierSpec.power(1.5), random_divfree_field(grid16, seed=31))
        assert divergence_residual(V) < 1e-12

    def test_mean_zero_required(self, grid16):
        c = np.zeros((3,) + grid16.dims, dtype=np.complex128)
        c[2, 0, 0, 0] = 1.0
        with pytest.raises(NonZeroMeanError):
            compute_V(MultiplierSpec.power(1.0), SpectralVectorField(grid16, c))


class TestValidateAssumptions:
    @pytest.mark.parametrize("a", [1.0, 1.25, 1.5, 2.0])
    def test_power_in_range_passes(self, a):
        rep = validate_assumptions(MultiplierSpec.power(a), RADII)
        assert isinstance(rep, AssumptionReport)
        assert rep.ok
        assert rep.as2_monotone
        assert rep.as2_max_ratio == pytest.approx(a, rel=1e-4)
        assert rep.as3_min_ratio > 0.9

    def test_log_symbols_pass(self):
        rep = validate_assumptions(MultiplierSpec.power_log(1.5, 1.0), RADII)
        assert rep.ok
        rep = validate_assumptions(MultiplierSpec.power_loglog(1.5, 1.0, -2.0), RADII)
        assert rep.ok

    def test_shallow_power_flagged(self):
        rep = validate_assumptions(MultiplierSpec.power(0.5), RADII)
        assert not rep.ok
        assert any("as1" in v for v in rep.violations)

    def test_increasing_symbol_not_monotone(self):
        spec = MultiplierSpec.tabulated(RADII, RADII)  # gamma(r) = r
        rep = validate_assumptions(spec, RADII)
        assert not rep.as2_monotone

    def test_empty_radii(self):
        with pytest.raises(ValueError, match="nonempty"):
            validate_assumptions(MultiplierSpec.power(1.0), [])


class TestY1Consistency:
    def test_abc_y1_value(self, grid16):
        # each component: 4 modes of modulus 1/2 at |k| = 1 -> weight 2 each
        assert y1_norm(abc_field(grid16)) == pytest.approx(12.0, rel=1e-13)
