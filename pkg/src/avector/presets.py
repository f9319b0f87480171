"""Named initial-data presets.

Exact formulas (on [0, 2pi)^3 unless stated):

* ``abc``          B = (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x);
                   a curl eigenfield with eigenvalue 1 for A = B = C.
* ``single_mode``  one divergence-free cosine mode, e.g. (0, 0, cos x).
* ``random``       band-limited divergence-free noise: i.i.d. complex Gaussian
                   coefficients damped by (1 + |k|)^-decay, truncated to the
                   2/3 dealias ball, Hermitian-symmetrized, mean-zeroed,
                   Leray-projected, then rescaled to a target max amplitude.

2-D scalar presets follow the same construction without the projection.
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    Grid,
    SpectralScalarField,
    SpectralVectorField,
    dealias_hat,
    hermitianize_hat,
    leray_project_hat,
)


def abc_field(grid: Grid, A: float = 1.0, B: float = 1.0, C: float = 1.0) -> SpectralVectorField:
    if grid.ndim != 3:
        raise ValueError("ABC field requires a 3-D grid")
    x, y, z = grid.axes()
    shape = grid.dims
    vals = np.stack(
        [
            np.broadcast_to(A * np.sin(z) + C * np.cos(y), shape),
            np.broadcast_to(B * np.sin(x) + A * np.cos(z), shape),
            np.broadcast_to(C * np.sin(y) + B * np.cos(x), shape),
        ]
    )
    return SpectralVectorField.from_physical(grid, vals)


def single_mode_field(
    grid: Grid,
    component: int = 2,
    axis: int = 0,
    wavenumber: int = 1,
    amplitude: float = 1.0,
) -> SpectralVectorField:
    """amplitude * cos(wavenumber * x_axis) in one component, zero elsewhere.

    Divergence-free requires component != axis.
    """
    if grid.ndim != 3:
        raise ValueError("single_mode preset requires a 3-D grid")
    if component == axis:
        raise ValueError("component must differ from the varying axis (divergence-free)")
    coords = grid.axes()
    vals = np.zeros((3,) + grid.dims)
    vals[component] = amplitude * np.cos(wavenumber * coords[axis])
    return SpectralVectorField.from_physical(grid, vals)


def _random_coeffs(grid: Grid, rng: np.random.Generator, decay: float) -> np.ndarray:
    shape = grid.dims
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    weight = (1.0 + grid.kmag) ** (-decay)
    return raw * weight


def random_divfree_field(
    grid: Grid,
    seed: int,
    decay: float = 3.0,
    amplitude: float = 0.5,
) -> SpectralVectorField:
    if grid.ndim != 3:
        raise ValueError("random_divfree_field requires a 3-D grid")
    rng = np.random.default_rng(seed)
    coeffs = np.stack([_random_coeffs(grid, rng, decay) for _ in range(3)])
    coeffs = hermitianize_hat(grid, coeffs)
    coeffs = dealias_hat(grid, coeffs)
    coeffs.reshape(3, -1)[:, 0] = 0.0
    coeffs = leray_project_hat(grid, coeffs)
    B = SpectralVectorField(grid, coeffs)
    peak = float(np.max(np.abs(B.to_physical())))
    if peak > 0:
        B = SpectralVectorField(grid, coeffs * (amplitude / peak))
    return B


def random_scalar_field(
    grid: Grid,
    seed: int,
    decay: float = 3.0,
    amplitude: float = 0.5,
) -> SpectralScalarField:
    rng = np.random.default_rng(seed)
    coeffs = _random_coeffs(grid, rng, decay)
    coeffs = hermitianize_hat(grid, coeffs)
    coeffs = dealias_hat(grid, coeffs)
    coeffs.flat[0] = 0.0
    f = SpectralScalarField(grid, coeffs)
    peak = float(np.max(np.abs(f.to_physical())))
    if peak > 0:
        f = SpectralScalarField(grid, coeffs * (amplitude / peak))
    return f
