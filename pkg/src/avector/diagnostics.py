"""Monitored functionals: energy, helicity, norms, blow-up integrals.

Normalization (follows the coefficient convention of :mod:`avector.spectral`):
L2-based norms carry the box volume so they equal the physical-space
integrals, e.g. ``||f||_L2^2 = (2pi)^d sum_k |c_k|^2``.  The Y1 norm is the
bare lattice sum ``sum_k (1 + |k|) |c_k|`` (components summed for vectors),
the discrete stand-in for the integral of ``(1 + |xi|)|f^(xi)|``; it bounds
``||grad f||_Linf`` from above with constant one.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .multipliers import MultiplierSpec, compute_V, gamma_hat
from .spectral import (
    Grid,
    NonZeroMeanError,
    SpectralScalarField,
    SpectralVectorField,
    _inverse_multi,
)


def _stacked(f) -> np.ndarray:
    c = f.coeffs
    return c if c.ndim > f.grid.ndim else c[None]


def _check_mean_zero(B, what: str = "field") -> None:
    c = _stacked(B)
    mean = np.max(np.abs(c.reshape(c.shape[0], -1)[:, 0]))
    scale = float(np.max(np.abs(c)))
    if scale > 0 and mean > 1e-13 * scale:
        raise NonZeroMeanError(f"{what} must be mean-zero (|mean| = {mean:.3e})")


def energy(spec: MultiplierSpec, B: SpectralVectorField) -> float:
    """E = 1/2 * integral of |Gamma^(1/2) B|^2 over the box."""
    _check_mean_zero(B, "B")
    g = gamma_hat(spec, B.grid)
    return 0.5 * B.grid.volume * float(np.sum(g * np.abs(B.coeffs) ** 2))


def reconstruct_u_hat(grid: Grid, bhat: np.ndarray) -> np.ndarray:
    """u with curl u = B, div u = 0, zero mean: u^ = i k x B^ / |k|^2."""
    kx, ky, kz = grid.kd
    fx, fy, fz = bhat
    inv = grid.inv_k2
    return np.stack(
        [
            1j * (ky * fz - kz * fy) * inv,
            1j * (kz * fx - kx * fz) * inv,
            1j * (kx * fy - ky * fx) * inv,
        ]
    )


def helicity(B: SpectralVectorField) -> float:
    """H = integral of B . u with curl u = B; independent of any multiplier."""
    _check_mean_zero(B, "B")
    uhat = reconstruct_u_hat(B.grid, B.coeffs)
    return B.grid.volume * float(np.real(np.sum(B.coeffs * np.conj(uhat))))


def sobolev_norm(f, s: float) -> float:
    """Discrete H^s norm, sqrt(vol * sum (1+|k|^2)^s |c_k|^2); s >= -2."""
    if s < -2:
        raise ValueError(f"H^s norms are supported for s >= -2, got s={s}")
    c = _stacked(f)
    w = (1.0 + f.grid.k2) ** s
    return float(np.sqrt(f.grid.volume * np.sum(w * np.abs(c) ** 2)))


def l2_norm(f) -> float:
    return sobolev_norm(f, 0.0)


def y1_norm(f) -> float:
    """sum_k (1 + |k|) |c_k|, vector components summed."""
    c = _stacked(f)
    return float(np.sum((1.0 + f.grid.kmag) * np.abs(c)))


def y1_norm_homogeneous(f) -> float:
    """sum_k |k| |c_k| (the homogeneous variant)."""
    c = _stacked(f)
    return float(np.sum(f.grid.kmag * np.abs(c)))


def hm1_norm(B) -> float:
    """Homogeneous H^-1 norm via |k|^-1 weights, zero mode excluded.

    For divergence-free B this equals the L2 norm of the reconstructed u.
    """
    c = _stacked(B)
    return float(np.sqrt(B.grid.volume * np.sum(B.grid.inv_k2 * np.abs(c) ** 2)))


def grad_max_norm(f: SpectralScalarField) -> float:
    """||grad f||_Linf sampled on the grid (Euclidean norm of the gradient)."""
    grid = f.grid
    ghat = np.stack([1j * k * f.coeffs for k in grid.kd])
    g = _inverse_multi(ghat, grid.ndim)
    return float(np.max(np.sqrt(np.sum(g**2, axis=0))))


def max_velocity(spec: MultiplierSpec, B: SpectralVectorField) -> float:
    V = compute_V(spec, B)
    v = V.to_physical()
    return float(np.max(np.sqrt(np.sum(v**2, axis=0))))


def log_sobolev_check(B, s: float) -> float:
    """Ratio ||B||_Y1 / (||B||_H^{5/2} log(10 + ||B||_H^s)) for s > 5/2."""
    if s <= 2.5:
        raise ValueError(f"the logarithmic bound requires s > 5/2, got s={s}")
    h52 = sobolev_norm(B, 2.5)
    if h52 == 0.0:
        raise ValueError("ratio undefined for the zero field")
    return y1_norm(B) / (h52 * np.log(10.0 + sobolev_norm(B, s)))


# --------------------------------------------------------------------------
# records
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of every monitored quantity."""

    t: float
    E: float
    H: float
    l2: float
    hs: dict[float, float]
    y1: float
    hm1: float
    int_y1: float
    maxV: float
    div_residual: float


def make_record_3d(
    spec: MultiplierSpec,
    t: float,
    B: SpectralVectorField,
    hs: tuple[float, ...] = (2.5,),
    int_y1: float = 0.0,
) -> DiagnosticsRecord:
    from .spectral import divergence_residual

    return DiagnosticsRecord(
        t=t,
        E=energy(spec, B),
        H=helicity(B),
        l2=l2_norm(B),
        hs={s: sobolev_norm(B, s) for s in hs},
        y1=y1_norm(B),
        hm1=hm1_norm(B),
        int_y1=int_y1,
        maxV=max_velocity(spec, B),
        div_residual=divergence_residual(B),
    )


def _embedded_hat_2d(bz: SpectralScalarField, j: SpectralScalarField) -> np.ndarray:
    """Coefficients of B = (-dj/dy, dj/dx, bz) on the 2-D lattice."""
    kx, ky = bz.grid.kd
    return np.stack([-1j * ky * j.coeffs, 1j * kx * j.coeffs, bz.coeffs])


def make_record_2d(
    spec: MultiplierSpec,
    t: float,
    bz: SpectralScalarField,
    j: SpectralScalarField,
    hs: tuple[float, ...] = (2.5,),
    int_y1: float = 0.0,
) -> DiagnosticsRecord:
    """Per-unit-length diagnostics of the embedded field B = (-dy j, dx j, bz)."""
    grid = bz.grid
    vol = grid.volume
    bhat = _embedded_hat_2d(bz, j)
    absq = np.sum(np.abs(bhat) ** 2, axis=0)
    g = gamma_hat(spec, grid)
    E = 0.5 * vol * float(np.sum(g * absq))
    # helicity per unit length reduces to -2 * integral of j * bz
    H = -2.0 * vol * float(np.real(np.sum(j.coeffs * np.conj(bz.coeffs))))
    l2 = float(np.sqrt(vol * np.sum(absq)))
    hs_map = {s: float(np.sqrt(vol * np.sum((1.0 + grid.k2) ** s * absq))) for s in hs}
    y1 = float(np.sum((1.0 + grid.kmag) * np.sum(np.abs(bhat), axis=0)))
    hm1 = float(np.sqrt(vol * np.sum(grid.inv_k2 * absq)))
    kx, ky = grid.kd
    vhat = np.stack([-1j * ky * g * bz.coeffs, 1j * kx * g * bz.coeffs])
    v = _inverse_multi(vhat, 2)
    maxV = float(np.max(np.sqrt(np.sum(v**2, axis=0))))
    return DiagnosticsRecord(
        t=t, E=E, H=H, l2=l2, hs=hs_map, y1=y1, hm1=hm1,
        int_y1=int_y1, maxV=maxV, div_residual=0.0,
    )


# --------------------------------------------------------------------------
# blow-up monitor
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BlowupReport:
    """Descriptive accumulations of the two continuation integrals."""

    t: tuple[float, ...]
    int_y1: tuple[float, ...]
    int_h52: tuple[float, ...]
    y1_growth_rate: float
    superexponential: bool


def blowup_monitor(records) -> BlowupReport:
    """Trapezoid accumulations of the Y1 and H^{5/2} time integrals.

    Also fits an exponential growth rate to the Y1 history and flags runs
    whose second-half growth rate exceeds the first-half rate by more than
    10 percent (a super-exponential trend).  Purely descriptive.
    """
    records = list(records)
    if len(records) < 2:
        raise ValueError("blow-up monitoring needs at least 2 records")
    t = np.array([r.t for r in records])
    if np.any(np.diff(t) <= 0):
        raise ValueError("records must be strictly time-ordered")
    y1 = np.array([r.y1 for r in records])
    h52 = np.array([r.hs.get(2.5, np.nan) for r in records])
    if np.any(np.isnan(h52)):
        raise ValueError("records lack the H^2.5 norm needed for the alternate integral")

    def cumtrap(v):
        seg = 0.5 * (v[1:] + v[:-1]) * np.diff(t)
        return np.concatenate([[0.0], np.cumsum(seg)])

    iy1 = cumtrap(y1)
    ih52 = cumtrap(h52)

    pos = y1 > 0
    rate = 0.0
    superexp = False
    if np.count_nonzero(pos) >= 2:
        logy = np.log(y1[pos])
        tt = t[pos]
        rate = float(np.polyfit(tt, logy, 1)[0])
        if logy.size >= 5:
            half = logy.size // 2
            r1 = np.polyfit(tt[:half], logy[:half], 1)[0]
            r2 = np.polyfit(tt[half:], logy[half:], 1)[0]
            superexp = bool(r2 > 0 and r2 > 1.1 * max(r1, 0.0) and r2 - r1 > 1e-12)

    return BlowupReport(
        t=tuple(t), int_y1=tuple(iy1), int_h52=tuple(ih52),
        y1_growth_rate=rate, superexponential=superexp,
    )


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------


def csv_header(hs: tuple[float, ...]) -> str:
    cols = ["t", "E", "H", "L2"] + [f"Hs_{s:g}" for s in hs] + [
        "Y1", "Hm1", "int_Y1", "maxV", "div_residual",
    ]
    return ",".join(cols)


def csv_row(rec: DiagnosticsRecord, hs: tuple[float, ...]) -> str:
    vals = [rec.t, rec.E, rec.H, rec.l2] + [rec.hs[s] for s in hs] + [
        rec.y1, rec.hm1, rec.int_y1, rec.maxV, rec.div_residual,
    ]
    return ",".join(repr(float(v)) for v in vals)


def records_to_csv(records, hs: tuple[float, ...] = (2.5,)) -> str:
    buf = io.StringIO()
    buf.write(csv_header(hs) + "\n")
    for rec in records:
        buf.write(csv_row(rec, hs) + "\n")
    return buf.getvalue()
