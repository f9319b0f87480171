"""Particle trajectories under the derived velocity V and frozen-in transport.

Trajectories solve dX/dt = V(t, X) with RK4; the deformation gradient is
advanced alongside via d/dt (grad X) = (grad X) . (grad V)(X), with the
convention ``grads[a, j] = dX_j / dalpha_a`` so the frozen-in prediction is
``(B0 . grad X)_j = sum_a B0_a grads[a, j]``.

Off-grid evaluation is trilinear on a spectrally upsampled physical grid
(zero-padded inverse transform, so upsampling itself adds no error and the
interpolation error scales like the refined spacing squared).  Exact Fourier
evaluation at points is available behind ``exact=True`` for small seed
counts.  Because trilinear interpolation is linear in the grid samples and
the sampled velocity Jacobian has exactly zero trace on the grid, the
interpolated Jacobian is trace-free everywhere and volume is preserved to
time-integration accuracy.

Seeds are reduced to the fundamental box once at entry and their integer
period offset is added back to the output, so periodic copies of a seed
follow bitwise-identical trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .multipliers import MultiplierSpec, compute_V
from .spectral import TWO_PI, SpectralVectorField, _inverse_multi, resample_hat


class MissingSnapshotError(ValueError):
    """A Runge-Kutta stage time has no matching field snapshot."""


@dataclass(frozen=True)
class FlowMap:
    """Positions and deformation gradients of tracked seeds at time t."""

    t: float
    seeds: np.ndarray       # (n, 3)
    positions: np.ndarray   # (n, 3), unwrapped
    grads: np.ndarray       # (n, 3, 3), grads[:, a, j] = dX_j/dalpha_a

    def __post_init__(self):
        n = self.seeds.shape[0]
        if self.positions.shape != (n, 3) or self.grads.shape != (n, 3, 3):
            raise ValueError("mismatched seed count between positions and gradients")

    def volume_determinants(self) -> np.ndarray:
        return np.linalg.det(self.grads)


class VectorSampler:
    """Evaluate a 3-D vector field (and optionally its Jacobian) at points."""

    def __init__(self, F: SpectralVectorField, upsample: int = 4, exact: bool = False):
        self.grid = F.grid
        self.exact = exact
        self._coeffs = F.coeffs
        self._jac_hat = None
        if exact:
            self._tables = self._mode_table(F.coeffs)
            self._jac_tables = None
        else:
            self.fine_dims = tuple(upsample * n for n in F.grid.dims)
            self._values = self._upsample(F.coeffs)
            self._jac_values = None

    def _upsample(self, stacked_hat: np.ndarray) -> np.ndarray:
        # one component at a time: the fine complex temporaries dominate memory
        out = np.empty((stacked_hat.shape[0],) + self.fine_dims)
        for i, comp in enumerate(stacked_hat):
            fine = resample_hat(self.grid.dims, comp, self.fine_dims)
            out[i] = _inverse_multi(fine[None], 3)[0]
        return out

    def _jacobian_hat(self) -> np.ndarray:
        if self._jac_hat is None:
            kd = self.grid.kd
            self._jac_hat = np.stack(
                [np.stack([1j * kd[a] * self._coeffs[j] for j in range(3)]) for a in range(3)]
            ).reshape(9, *self.grid.dims)
        return self._jac_hat

    @staticmethod
    def _mode_table(coeffs: np.ndarray):
        nd = coeffs.shape[0]
        grid_dims = coeffs.shape[1:]
        ks = np.meshgrid(
            *[np.fft.fftfreq(n) * n for n in grid_dims], indexing="ij"
        )
        kflat = np.stack([k.ravel() for k in ks], axis=1)
        cflat = coeffs.reshape(nd, -1)
        keep = np.any(np.abs(cflat) > 0, axis=0)
        return kflat[keep], cflat[:, keep].T  # (m, 3), (m, nd)

    @staticmethod
    def _eval_modes(tables, pts: np.ndarray) -> np.ndarray:
        kflat, ctab = tables
        phase = np.exp(1j * (pts @ kflat.T))
        return np.real(phase @ ctab)

    def values(self, pts: np.ndarray) -> np.ndarray:
        if self.exact:
            return self._eval_modes(self._tables, pts)
        return _trilinear(self._values, pts, self.fine_dims)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        """(n, 3, 3) array with entry [a, j] = d V_j / d x_a."""
        if self.exact:
            if self._jac_tables is None:
                self._jac_tables = self._mode_table(self._jacobian_hat())
            return self._eval_modes(self._jac_tables, pts).reshape(-1, 3, 3)
        if self._jac_values is None:
            self._jac_values = self._upsample(self._jacobian_hat())
        return _trilinear(self._jac_values, pts, self.fine_dims).reshape(-1, 3, 3)


def _trilinear(values: np.ndarray, pts: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    """Periodic trilinear interpolation of stacked arrays values[(C, *dims)].

    Returns shape (n, C).
    """
    n = pts.shape[0]
    frac = np.empty((n, 3))
    i0 = np.empty((n, 3), dtype=np.intp)
    for ax, m in enumerate(dims):
        x = np.mod(pts[:, ax], TWO_PI) * (m / TWO_PI)
        base = np.floor(x)
        frac[:, ax] = x - base
        i0[:, ax] = base.astype(np.intp) % m
    i1 = (i0 + 1) % np.asarray(dims, dtype=np.intp)
    out = 0.0
    for cx, wx in ((i0[:, 0], 1.0 - frac[:, 0]), (i1[:, 0], frac[:, 0])):
        for cy, wy in ((i0[:, 1], 1.0 - frac[:, 1]), (i1[:, 1], frac[:, 1])):
            for cz, wz in ((i0[:, 2], 1.0 - frac[:, 2]), (i1[:, 2], frac[:, 2])):
                w = (wx * wy * wz)[None, :]
                out = out + w * values[:, cx, cy, cz]
    return out.T


def _normalize_snapshots(spec, snapshots, upsample, exact):
    """Return (sampler_at(time) -> VectorSampler, steady flag)."""
    if isinstance(snapshots, SpectralVectorField):
        sampler = VectorSampler(compute_V(spec, snapshots), upsample, exact)
        return (lambda t: sampler), True
    table = {}
    for t, B in snapshots:
        table[round(float(t), 12)] = B
    samplers: dict[float, VectorSampler] = {}

    def at(t: float) -> VectorSampler:
        key = round(float(t), 12)
        if key not in table:
            raise MissingSnapshotError(
                f"no snapshot at stage time t={t!r}; snapshot cadence must match "
                f"the integrator stage times (spacing dt/2)"
            )
        if key not in samplers:
            samplers[key] = VectorSampler(compute_V(spec, table[key]), upsample, exact)
        return samplers[key]

    return at, False


def advect(
    spec: MultiplierSpec,
    snapshots,
    seeds: np.ndarray,
    dt: float,
    t_end: float,
    upsample: int = 4,
    exact: bool = False,
) -> FlowMap:
    """Integrate seed trajectories and deformation gradients under V.

    ``snapshots`` is either a single (steady) field or a sequence of
    ``(time, field)`` pairs covering every RK4 stage time.  Gradients start
    from the identity; positions are reported unwrapped, seed + displacement.
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
    if seeds.shape[1] != 3:
        raise ValueError("seeds must be (n, 3)")
    sampler_at, _steady = _normalize_snapshots(spec, snapshots, upsample, exact)

    canon = np.mod(seeds, TWO_PI)
    offset = seeds - canon

    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(dt, abs(t_end)):
        raise ValueError("t_end must be an integer number of steps")

    x = canon.copy()
    J = np.broadcast_to(np.eye(3), (seeds.shape[0], 3, 3)).copy()

    def rhs(t, xs, Js):
        s = sampler_at(t)
        v = s.values(xs)
        jv = s.jacobian(xs)
        return v, np.einsum("nam,nmj->naj", Js, jv)

    t = 0.0
    for i in range(n_steps):
        t = i * dt
        k1x, k1j = rhs(t, x, J)
        k2x, k2j = rhs(t + dt / 2.0, x + (dt / 2.0) * k1x, J + (dt / 2.0) * k1j)
        k3x, k3j = rhs(t + dt / 2.0, x + (dt / 2.0) * k2x, J + (dt / 2.0) * k2j)
        k4x, k4j = rhs(t + dt, x + dt * k3x, J + dt * k3j)
        x = x + (dt / 6.0) * (k1x + 2.0 * (k2x + k3x) + k4x)
        J = J + (dt / 6.0) * (k1j + 2.0 * (k2j + k3j) + k4j)

    return FlowMap(t=float(n_steps * dt), seeds=seeds, positions=x + offset, grads=J)


def cauchy_residual(
    flow: FlowMap,
    B0: SpectralVectorField,
    Bt: SpectralVectorField,
    upsample: int = 4,
    exact: bool = False,
) -> float:
    """Max over seeds of |Bt(X(alpha)) - B0(alpha) . grad X(alpha)|."""
    if B0.grid != Bt.grid:
        raise ValueError("B0 and Bt must share one grid")
    s0 = VectorSampler(B0, upsample, exact)
    st = VectorSampler(Bt, upsample, exact)
    b0 = s0.values(flow.seeds)
    bt = st.values(flow.positions)
    pred = np.einsum("na,naj->nj", b0, flow.grads)
    return float(np.max(np.linalg.norm(bt - pred, axis=1)))


# --------------------------------------------------------------------------
# integral curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportReport:
    t: float
    winding: tuple[int, int, int]
    initial_misalignment: float
    final_misalignment: float


def _closed_curve_tangent(samples: np.ndarray, winding: np.ndarray) -> np.ndarray:
    """d/ds of a closed curve sampled uniformly on s in [0, 1).

    The winding part (X(s+1) = X(s) + 2 pi w) is removed before spectral
    differentiation and its constant tangent added back.
    """
    m = samples.shape[0]
    s = np.arange(m) / m
    periodic = samples - np.outer(s, TWO_PI * winding)
    freq = np.fft.fftfreq(m) * m
    freq[np.abs(freq) == m // 2] = 0.0
    dhat = 1j * freq[:, None] * np.fft.fft(periodic, axis=0)
    return np.real(np.fft.ifft(dhat, axis=0)) + TWO_PI * winding


def _misalignment(tangent: np.ndarray, field_vals: np.ndarray) -> float:
    """Max sine of the angle between tangents and field values."""
    cross = np.cross(tangent, field_vals)
    denom = np.linalg.norm(tangent, axis=1) * np.linalg.norm(field_vals, axis=1)
    bad = denom == 0
    denom[bad] = 1.0
    s = np.linalg.norm(cross, axis=1) / denom
    s[bad] = np.inf
    return float(np.max(s))


def transport_integral_curve(
    spec: MultiplierSpec,
    snapshots,
    curve: np.ndarray,
    dt: float,
    t_end: float,
    B0: SpectralVectorField | None = None,
    Bt: SpectralVectorField | None = None,
    upsample: int = 4,
    exact: bool = False,
) -> TransportReport:
    """Advect a closed integral curve of B0 and test it stays one for B(t).

    ``curve`` is an (m+1, 3) array of uniformly-spaced samples whose last
    point must close onto the first modulo whole periods (otherwise an
    open-curve error is raised); the winding vector is inferred from that
    closure.  Alignment is measured as the sine of the angle between the
    s-derivative along the advected curve and the field, which is the
    reparametrization-invariant content of the integral-curve property.
    """
    curve = np.asarray(curve, dtype=np.float64)
    if curve.ndim != 2 or curve.shape[1] != 3 or curve.shape[0] < 5:
        raise ValueError("curve must be (m+1, 3) with m >= 4")
    gap = curve[-1] - curve[0]
    winding = np.round(gap / TWO_PI).astype(int)
    if np.max(np.abs(gap - TWO_PI * winding)) > 1e-9:
        raise ValueError(
            f"open curve: endpoints differ by {gap} which is not a whole period"
        )
    samples = curve[:-1]

    if isinstance(snapshots, SpectralVectorField):
        if B0 is None:
            B0 = snapshots
        if Bt is None:
            Bt = snapshots
    if B0 is None or Bt is None:
        raise ValueError("B0 and Bt fields are required for time-dependent snapshots")

    sampler0 = VectorSampler(B0, upsample, exact)
    tangent0 = _closed_curve_tangent(samples, winding)
    mis0 = _misalignment(tangent0, sampler0.values(samples))

    flow = advect(spec, snapshots, samples, dt, t_end, upsample, exact)
    tangent_t = _closed_curve_tangent(flow.positions, winding)
    sampler_t = VectorSampler(Bt, upsample, exact)
    mis_t = _misalignment(tangent_t, sampler_t.values(flow.positions))

    return TransportReport(
        t=flow.t,
        winding=tuple(int(w) for w in winding),
        initial_misalignment=mis0,
        final_misalignment=mis_t,
    )
