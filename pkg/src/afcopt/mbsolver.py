"""Weak-field Maxwell-Bloch echo simulator for a frequency comb absorber.

Each spectral component of the input pulse propagates independently through
the medium with transfer function ``exp(-L chi(w))``, where ``chi`` is the
steady-state susceptibility of a finite train of teeth. The output is brought
back to the time domain and projected onto delayed copies of the input.

Internally detunings are scaled by ``T`` (``u = w T``) and times by ``1/T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .comb import MemoryParams, ToothShape, check_compatible
from .errors import GridTooCoarse, WindowError
from .spectral import FourierPair, fourier_pair

TWO_PI = 2.0 * np.pi
# regularization of the homogeneous width when gamma == 0 (in units of 1/T)
EPSILON_GAMMA = 1e-6 * TWO_PI
# detunings farther than this from a tooth use the multipole expansion
NEAR_RADIUS = 4.0 * np.pi
MULTIPOLE_TERMS = 40
PULSE_WINDOW_TAUS = 4.0
CONVERGENCE_TOL = 0.01
FIELD_CSV_HEADER = "t_s,re,im"


@dataclass(frozen=True)
class GaussianPulse:
    """``exp(-t^2 / (2 tau^2))`` with ``tau`` in seconds."""

    tau: float

    def __call__(self, t):
        return np.exp(-0.5 * (np.asarray(t, dtype=float) / self.tau) ** 2)

    def spectrum(self, omega):
        """Fourier transform ``int E(t) exp(-i w t) dt``."""
        return math.sqrt(TWO_PI) * self.tau * np.exp(-0.5 * (np.asarray(omega) * self.tau) ** 2)


@dataclass(frozen=True)
class SimGrid:
    """Discretization of the echo simulation.

    Attributes:
        n_z: number of sampled positions in ``[0, L]`` for the amplitude profile.
        n_omega: detuning knots across all teeth (``n_omega // n_teeth`` per period).
        n_teeth: odd number of teeth centered on the carrier.
        n_t: minimum number of output samples in ``[-4 tau, 2T + 4 tau]``.
        pulse_tau_T: pulse duration in units of ``T``.
        field_points_per_period: frequency samples of the field per comb period.
        band_sigmas: half-width of the simulated field band in spectral standard deviations.
    """

    n_z: int = 64
    n_omega: int = 401 * 512
    n_teeth: int = 401
    n_t: int = 2048
    pulse_tau_T: float = 0.05
    field_points_per_period: int = 1024
    band_sigmas: float = 8.0

    def __post_init__(self):
        if self.n_teeth < 1 or self.n_teeth % 2 == 0:
            raise ValueError("n_teeth must be a positive odd number")
        if self.n_omega // self.n_teeth < 8:
            raise ValueError("need at least 8 detuning knots per period")
        if self.n_z < 2 or self.n_t < 16 or self.field_points_per_period < 64:
            raise ValueError("n_z >= 2, n_t >= 16 and field_points_per_period >= 64 required")
        if not 0 < self.pulse_tau_T < 0.125:
            raise ValueError("pulse_tau_T must lie in (0, 1/8) so that echoes separate")
        # +-4 sigma of the pulse spectrum must span at least 5 comb periods
        if PULSE_WINDOW_TAUS / self.pulse_tau_T < 5.0 * TWO_PI:
            raise ValueError("pulse spectrum covers fewer than 5 comb periods")
        # the comb must be at least 3x wider than that spectral extent
        if self.n_teeth * TWO_PI < 3.0 * 2.0 * PULSE_WINDOW_TAUS / self.pulse_tau_T:
            raise ValueError("comb span is narrower than 3x the pulse bandwidth")
        if self.band_sigmas < 6.0:
            raise ValueError("band_sigmas must be at least 6")

    @property
    def knots_per_period(self) -> int:
        return self.n_omega // self.n_teeth

    def refined(self) -> "SimGrid":
        return replace(
            self,
            n_z=2 * self.n_z,
            n_omega=2 * self.n_omega,
            field_points_per_period=2 * self.field_points_per_period,
        )


@dataclass(frozen=True, eq=False)
class EchoRecord:
    """Output of :func:`solve_mb`.

    ``amplitudes[p]`` is the matched-filter coefficient of the input delayed by
    ``pT``; ``profile[k, p]`` is the same coefficient at ``z_axis[k]``.
    """

    times: np.ndarray
    output_field: np.ndarray
    amplitudes: tuple
    efficiency_sim: float
    input_energy: float
    output_energy: float
    z_axis: np.ndarray = field(repr=False)
    profile: np.ndarray = field(repr=False)

    def to_csv(self, path) -> None:
        rows = [FIELD_CSV_HEADER]
        rows += [f"{t!r},{v.real!r},{v.imag!r}" for t, v in zip(self.times.tolist(), self.output_field.tolist())]
        Path(path).write_text("\n".join(rows) + "\n")

    def summary(self, efficiency_analytic: float) -> dict:
        a0, a1 = self.amplitudes[0], self.amplitudes[1]
        rel = abs(self.efficiency_sim - efficiency_analytic) / efficiency_analytic if efficiency_analytic > 0 else None
        return {
            "a0_re": float(a0.real),
            "a0_im": float(a0.imag),
            "a1_re": float(a1.real),
            "a1_im": float(a1.imag),
            "efficiency_sim": float(self.efficiency_sim),
            "efficiency_analytic": float(efficiency_analytic),
            "rel_error": rel,
        }

    def write_summary(self, path, efficiency_analytic: float) -> None:
        Path(path).write_text(json.dumps(self.summary(efficiency_analytic), sort_keys=True, indent=2) + "\n")


def analytic_amplitudes(fourier: FourierPair, z: float, gamma_T: float = 0.0) -> tuple[complex, complex]:
    """Directly transmitted and first-echo amplitudes after a distance ``z``.

    ``a0 = exp(-F0 z / 2)`` and ``a1 = -conj(F_-1) z exp(-F0 z / 2)``; a
    homogeneous width ``gamma`` damps the echo by ``exp(-gamma T)``.
    """
    if z < 0:
        raise ValueError("z must be nonnegative")
    a0 = math.exp(-0.5 * fourier.f0 * z)
    a1 = -fourier.f_minus1.conjugate() * z * a0 * math.exp(-gamma_T)
    return complex(a0), complex(a1)


def _tooth_segments(shape: ToothShape, knots_per_period: int):
    """Piecewise-linear model of one tooth in scaled detuning ``u in [-pi, pi]``.

    Returns arrays ``(a, b, fa, fb)``; zero segments are dropped and runs of
    equal constant segments merged.
    """
    T = shape.period_T
    knots = np.linspace(-np.pi, np.pi, knots_per_period + 1)
    extra = np.asarray(shape.breakpoints(), dtype=float) * T
    knots = np.unique(np.concatenate([knots, extra[(extra > -np.pi) & (extra < np.pi)]]))
    a, b = knots[:-1], knots[1:]
    step = 1e-9 * (b - a)
    fa = np.asarray(shape.evaluate((a + step) / T), dtype=float)
    fb = np.asarray(shape.evaluate((b - step) / T), dtype=float)
    segs = []
    for seg in zip(a, b, fa, fb):
        if seg[2] == 0.0 and seg[3] == 0.0:
            continue
        if segs:
            pa, pb, pfa, pfb = segs[-1]
            if pb == seg[0] and pfa == pfb == seg[2] == seg[3]:
                segs[-1] = (pa, seg[1], pfa, pfb)
                continue
        segs.append(seg)
    if not segs:
        return (np.zeros(0),) * 4
    return tuple(np.array(col) for col in zip(*segs))


def _single_tooth_chi(x: np.ndarray, segs, gamma_s: float, chunk: int = 256) -> np.ndarray:
    """``(1/2pi) int f(u) / (gamma + i(x + u)) du`` over one tooth, for scaled detunings ``x``."""
    a, b, fa, fb = segs
    out = np.zeros(x.shape, dtype=complex)
    if a.size == 0:
        return out
    slope = (fb - fa) / (b - a)
    offset = fa - slope * a
    z = gamma_s + 1j * x

    near = np.abs(z) < NEAR_RADIUS
    idx = np.flatnonzero(near)
    width_term = -1j * np.sum(slope * (b - a))
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        zs = z[sel][:, None]
        d = np.log(zs + 1j * b[None, :]) - np.log(zs + 1j * a[None, :])
        # int (A + s u) / (z + i u) du = -i (A + i s z) [log]_a^b - i s (b - a)
        out[sel] = -1j * (d @ offset) + zs[:, 0] * (d @ slope) + width_term

    far = ~near
    if np.any(far):
        n = np.arange(MULTIPOLE_TERMS)[:, None]
        moments = np.sum(
            offset * (b ** (n + 1) - a ** (n + 1)) / (n + 1) + slope * (b ** (n + 2) - a ** (n + 2)) / (n + 2),
            axis=1,
        )
        zf = z[far]
        q = -1j / zf
        acc = np.zeros(zf.shape, dtype=complex)
        for m in moments[::-1]:
            acc = acc * q + m
        out[far] = acc / zf
    return out / TWO_PI


def comb_susceptibility(shape: ToothShape, grid: SimGrid, gamma_T: float = 0.0):
    """Susceptibility (1/m) of ``grid.n_teeth`` teeth on the field frequency grid.

    Returns:
        ``(u, chi)`` with scaled detunings ``u = w T``.
    """
    npp = grid.field_points_per_period
    h = TWO_PI / npp
    sigma = 1.0 / grid.pulse_tau_T
    J = int(math.ceil(grid.band_sigmas * sigma / h))
    K = (grid.n_teeth - 1) // 2
    gamma_s = gamma_T if gamma_T > 0 else EPSILON_GAMMA
    segs = _tooth_segments(shape, grid.knots_per_period)
    m = np.arange(-J - K * npp, J + K * npp + 1)
    chi_one = _single_tooth_chi(m * h, segs, gamma_s)
    width = 2 * J + 1
    chi = np.zeros(width, dtype=complex)
    # tooth k sits at u = 2 pi k and contributes chi_one(u + 2 pi k)
    for k in range(-K, K + 1):
        start = (k + K) * npp
        chi += chi_one[start : start + width]
    return np.arange(-J, J + 1) * h, chi


def extract_echo(times, output_field, pulse: GaussianPulse, period_T: float, p: int) -> complex:
    """Matched-filter projection of the output onto the input delayed by ``p T``.

    Raises:
        WindowError: if ``[pT - 4 tau, pT + 4 tau]`` is not inside the sampled times.
    """
    times = np.asarray(times, dtype=float)
    centre = p * period_T
    reach = PULSE_WINDOW_TAUS * pulse.tau
    slack = 1e-9 * period_T
    if centre - reach < times[0] - slack or centre + reach > times[-1] + slack:
        raise WindowError(f"echo {p} window [{centre - reach}, {centre + reach}] outside samples")
    ref = pulse(times - centre)
    return complex(np.vdot(ref, output_field) / np.vdot(ref, ref).real)


def _simulate(shape: ToothShape, params: MemoryParams, grid: SimGrid, n_echoes: int) -> EchoRecord:
    T, L = params.period_T, params.length_L
    u, chi = comb_susceptibility(shape, grid, params.gamma * T)
    tau_s = grid.pulse_tau_T
    spec_in = math.sqrt(TWO_PI) * tau_s * np.exp(-0.5 * (u * tau_s) ** 2)
    transfer = np.exp(-L * chi)
    spec_out = spec_in * transfer

    # inverse transform onto a uniform time grid covering the echo window
    h = u[1] - u[0]
    lo, hi = -PULSE_WINDOW_TAUS * tau_s, 2.0 + PULSE_WINDOW_TAUS * tau_s
    n_fft = 1 << int(math.ceil(math.log2(TWO_PI / h * (grid.n_t - 1) / (hi - lo))))
    n_fft = max(n_fft, 4 * u.size)
    ds = TWO_PI / (n_fft * h)
    buf = np.zeros(n_fft, dtype=complex)
    j = np.rint(u / h).astype(int)
    buf[j % n_fft] = spec_out
    signal = np.fft.ifft(buf) * (n_fft * h / TWO_PI)
    n = np.arange(int(math.floor(lo / ds)), int(math.ceil(hi / ds)) + 1)
    s = n * ds
    field_out = signal[n % n_fft]

    pulse = GaussianPulse(tau_s * T)
    times = s * T
    amps = tuple(extract_echo(times, field_out, pulse, T, p) for p in range(n_echoes))

    weight = np.abs(spec_in) ** 2
    energy_in = float(weight.sum() * h / TWO_PI)
    energy_out = float((np.abs(spec_out) ** 2).sum() * h / TWO_PI)

    z_axis = np.linspace(0.0, L, grid.n_z)
    phase = np.exp(1j * np.outer(np.arange(n_echoes), u))
    trans_z = np.exp(-np.outer(z_axis, chi))
    profile = (trans_z * weight) @ phase.T / weight.sum()

    return EchoRecord(
        times=times,
        output_field=field_out,
        amplitudes=amps,
        efficiency_sim=float(abs(amps[1]) ** 2),
        input_energy=energy_in * T,
        output_energy=energy_out * T,
        z_axis=z_axis,
        profile=profile,
    )


def solve_mb(
    shape: ToothShape,
    params: MemoryParams,
    grid: SimGrid | None = None,
    check_convergence: bool = False,
    n_echoes: int = 3,
) -> EchoRecord:
    """Propagate a weak Gaussian pulse through the comb and extract its echoes.

    Args:
        shape: tooth shape, replicated over ``grid.n_teeth`` periods.
        params: memory parameters; ``params.gamma`` sets the homogeneous width.
        grid: discretization; defaults to :class:`SimGrid`.
        check_convergence: rerun on a doubled grid and compare efficiencies.
        n_echoes: number of amplitudes ``a_0 .. a_{n-1}`` to extract (2 or 3).

    Raises:
        GridTooCoarse: if ``check_convergence`` and the first-echo efficiency
            moves by more than 1% on the refined grid.
    """
    check_compatible(shape, params)
    grid = SimGrid() if grid is None else grid
    if n_echoes not in (2, 3):
        raise ValueError("n_echoes must be 2 or 3")
    record = _simulate(shape, params, grid, n_echoes)
    if check_convergence:
        fine = _simulate(shape, params, grid.refined(), n_echoes)
        scale = max(record.efficiency_sim, fine.efficiency_sim)
        if scale > 1e-12 and abs(fine.efficiency_sim - record.efficiency_sim) > CONVERGENCE_TOL * scale:
            raise GridTooCoarse(
                f"efficiency {record.efficiency_sim:.6g} -> {fine.efficiency_sim:.6g} on the refined grid"
            )
    return record


def analytic_efficiency(shape: ToothShape, params: MemoryParams) -> float:
    """``|a1(L)|^2`` from the closed-form amplitudes."""
    _, a1 = analytic_amplitudes(fourier_pair(shape), params.length_L, params.gamma * params.period_T)
    return abs(a1) ** 2
