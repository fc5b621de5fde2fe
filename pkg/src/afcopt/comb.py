"""Comb geometry, memory parameters and tooth-shape representations.

All shapes are absorption profiles ``f(omega)`` (1/m) on one comb period
``[-pi/T, pi/T]`` (rad/s), extended periodically. Shapes are immutable and
validated against their absorption bound when they are built.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf

from .errors import BoundViolation, InvalidShape
from .quadrature import fixed_gauss_legendre, quadrature

TWO_PI = 2.0 * np.pi
BOUND_GRID = 8192
TABULATED_GRID = 2048
CONVOLUTION_GRID = 8192
CONVOLUTION_PERIODS = 5


@dataclass(frozen=True)
class MemoryParams:
    """Physical constraints of an AFC memory.

    Attributes:
        period_T: storage (rephasing) time T in s; the comb period is 2*pi/T rad/s.
        length_L: medium length in m.
        alpha_max: maximum absorption coefficient in 1/m.
        alpha_bg: constant background absorption in 1/m.
        gamma: homogeneous half-width in rad/s (only used by the echo simulator).
    """

    period_T: float
    length_L: float
    alpha_max: float
    alpha_bg: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("period_T", "length_L", "alpha_max", "alpha_bg", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.period_T <= 0 or self.length_L <= 0 or self.alpha_max <= 0:
            raise ValueError("period_T, length_L and alpha_max must be positive")
        if not 0.0 <= self.alpha_bg < self.alpha_max:
            raise ValueError("alpha_bg must satisfy 0 <= alpha_bg < alpha_max")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @property
    def od(self) -> float:
        return self.alpha_max * self.length_L

    @property
    def half_period(self) -> float:
        """Half of the comb period, pi/T (rad/s)."""
        return np.pi / self.period_T

    @property
    def comb_period(self) -> float:
        return TWO_PI / self.period_T

    @classmethod
    def dimensionless(cls, od: float, alpha_bg_od: float = 0.0) -> "MemoryParams":
        """Unit storage time and length, so that ``alpha_max == od``."""
        return cls(period_T=1.0, length_L=1.0, alpha_max=od, alpha_bg=alpha_bg_od)


def wrap_detuning(omega, period_T: float):
    """Map detunings into the fundamental interval ``[-pi/T, pi/T)``."""
    half = np.pi / period_T
    return np.mod(np.asarray(omega, dtype=float) + half, 2.0 * half) - half


class ToothShape:
    """Base class of all tooth shapes.

    Subclasses define ``period_T``, ``bound`` (the absorption ceiling the shape
    promises to respect), ``_values`` on already-wrapped detunings, and
    ``breakpoints``.
    """

    period_T: float

    @property
    def bound(self) -> float:
        raise NotImplementedError

    def _values(self, omega: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Sorted detunings in ``[-pi/T, pi/T]`` where the shape may be non-smooth."""
        half = np.pi / self.period_T
        return np.array([-half, half])

    def evaluate(self, omega):
        """Absorption at detuning ``omega`` (scalar or array), with periodic wraparound."""
        out = self._values(wrap_detuning(omega, self.period_T))
        if np.ndim(omega) == 0:
            return float(out)
        return out

    __call__ = evaluate

    def area(self, rel_tol: float = 1e-10) -> float:
        half = np.pi / self.period_T
        return quadrature(self.evaluate, -half, half, rel_tol, points=self.breakpoints())

    def _check(self) -> None:
        half = np.pi / self.period_T
        grid = np.concatenate([np.linspace(-half, half, BOUND_GRID), self.breakpoints()])
        values = self._values(wrap_detuning(grid, self.period_T))
        if not np.all(np.isfinite(values)):
            raise InvalidShape(f"{type(self).__name__} produced non-finite values")
        low = values.min()
        high = values.max()
        slack = 1e-9 * max(self.bound, 1e-300)
        if low < -slack:
            raise InvalidShape(f"{type(self).__name__} is negative (min {low:.3e})")
        if high > self.bound + slack:
            raise BoundViolation(
                f"{type(self).__name__} reaches {high:.6e} above its bound {self.bound:.6e}"
            )


def _check_period(period_T: float) -> None:
    if not (math.isfinite(period_T) and period_T > 0):
        raise InvalidShape(f"period_T must be positive, got {period_T}")


def _clip_breaks(points, period_T: float) -> np.ndarray:
    half = np.pi / period_T
    pts = np.asarray(list(points) + [-half, half], dtype=float)
    return np.unique(pts[(pts >= -half) & (pts <= half)])


@dataclass(frozen=True)
class Square(ToothShape):
    """``height`` on ``[-half_width, half_width]``, zero elsewhere in the period."""

    half_width: float
    height: float
    period_T: float

    def __post_init__(self):
        _check_period(self.period_T)
        half = np.pi / self.period_T
        if not 0.0 <= self.half_width <= half * (1 + 1e-12):
            raise InvalidShape(f"square half-width {self.half_width} outside [0, pi/T]")
        if self.half_width > half:
            object.__setattr__(self, "half_width", half)
        if not (math.isfinite(self.height) and self.height >= 0):
            raise InvalidShape("square height must be finite and nonnegative")
        self._check()

    @classmethod
    def from_params(cls, params: MemoryParams, half_width: float) -> "Square":
        return cls(half_width, params.alpha_max, params.period_T)

    @property
    def bound(self) -> float:
        return self.height

    def _values(self, omega):
        return np.where(np.abs(omega) <= self.half_width, self.height, 0.0)

    def breakpoints(self):
        return _clip_breaks([-self.half_width, self.half_width], self.period_T)


def _peak_breaks(width: float, period_T: float) -> np.ndarray:
    scales = width * np.array([0.5, 2.0, 8.0, 32.0])
    return _clip_breaks(np.concatenate([[0.0], scales, -scales]), period_T)


@dataclass(frozen=True)
class Lorentzian(ToothShape):
    """``height * fwhm^2 / (fwhm^2 + 4 omega^2)``, truncated to one period."""

    fwhm: float
    height: float
    period_T: float

    def __post_init__(self):
        _check_period(self.period_T)
        if not (math.isfinite(self.fwhm) and self.fwhm > 0):
            raise InvalidShape("Lorentzian fwhm must be positive")
        if not (math.isfinite(self.height) and self.height >= 0):
            raise InvalidShape("Lorentzian height must be finite and nonnegative")
        self._check()

    @classmethod
    def from_params(cls, params: MemoryParams, fwhm: float) -> "Lorentzian":
        return cls(fwhm, params.alpha_max, params.period_T)

    @property
    def bound(self) -> float:
        return self.height

    def _values(self, omega):
        g2 = self.fwhm * self.fwhm
        return self.height * g2 / (g2 + 4.0 * omega * omega)

    def breakpoints(self):
        return _peak_breaks(self.fwhm, self.period_T)


@dataclass(frozen=True)
class Gaussian(ToothShape):
    """``height * exp(-4 ln2 omega^2 / fwhm^2)``, truncated to one period."""

    fwhm: float
    height: float
    period_T: float

    def __post_init__(self):
        _check_period(self.period_T)
        if not (math.isfinite(self.fwhm) and self.fwhm > 0):
            raise InvalidShape("Gaussian fwhm must be positive")
        if not (math.isfinite(self.height) and self.height >= 0):
            raise InvalidShape("Gaussian height must be finite and nonnegative")
        self._check()

    @classmethod
    def from_params(cls, params: MemoryParams, fwhm: float) -> "Gaussian":
        return cls(fwhm, params.alpha_max, params.period_T)

    @property
    def bound(self) -> float:
        return self.height

    def _values(self, omega):
        return self.height * np.exp(-4.0 * math.log(2.0) * (omega / self.fwhm) ** 2)

    def breakpoints(self):
        return _peak_breaks(self.fwhm, self.period_T)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Tabulated(ToothShape):
    """Piecewise-linear shape on explicit knots spanning exactly one period.

    The first knot must sit at ``-pi/T`` and the last at ``pi/T``, with equal
    values at both ends. ``alpha_max`` defaults to the largest knot value.
    """

    omega: np.ndarray
    values: np.ndarray
    alpha_max: float | None = None
    period_T: float = field(init=False)

    def __post_init__(self):
        omega = _readonly(self.omega)
        values = _readonly(self.values)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)
        if omega.ndim != 1 or omega.shape != values.shape or omega.size < 2:
            raise InvalidShape("knots must be two equal-length 1-D sequences")
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(values))):
            raise InvalidShape("knots must be finite")
        if not np.all(np.diff(omega) > 0):
            raise InvalidShape("knot detunings must be strictly increasing")
        half = omega[-1]
        if half <= 0 or not math.isclose(omega[0], -half, rel_tol=1e-12):
            raise InvalidShape("knots must span a symmetric period [-pi/T, pi/T]")
        scale = max(np.abs(values).max(), 1e-300)
        if abs(values[0] - values[-1]) > 1e-12 * scale:
            raise InvalidShape("endpoint values must match (periodicity)")
        object.__setattr__(self, "period_T", np.pi / half)
        if self.alpha_max is not None and not (
            math.isfinite(self.alpha_max) and self.alpha_max >= 0
        ):
            raise InvalidShape("alpha_max must be finite and nonnegative")
        self._check()

    @classmethod
    def from_function(
        cls, func, period_T: float, n: int = TABULATED_GRID, alpha_max: float | None = None
    ) -> "Tabulated":
        """Sample ``func`` on ``n`` uniform intervals of one period."""
        half = np.pi / period_T
        omega = np.linspace(-half, half, n + 1)
        values = np.asarray(func(omega), dtype=float)
        values = values.copy()
        values[-1] = values[0]
        return cls(omega, values, alpha_max)

    @property
    def bound(self) -> float:
        return float(self.values.max()) if self.alpha_max is None else float(self.alpha_max)

    def _values(self, omega):
        return np.interp(omega, self.omega, self.values)

    def breakpoints(self):
        return self.omega


@dataclass(frozen=True, eq=False)
class Shifted(ToothShape):
    """Periodic translation: ``Shifted(s, a)(omega) == s(omega - a)``.

    The tooth centre moves from 0 to ``offset`` (wrapping through ``+-pi/T``).
    """

    inner: ToothShape
    offset: float

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise InvalidShape("offset must be finite")

    @property
    def period_T(self) -> float:
        return self.inner.period_T

    @property
    def bound(self) -> float:
        return self.inner.bound

    def _values(self, omega):
        return self.inner._values(wrap_detuning(omega - self.offset, self.period_T))

    def breakpoints(self):
        half = np.pi / self.period_T
        moved = wrap_detuning(np.append(self.inner.breakpoints(), -half) + self.offset, self.period_T)
        return _clip_breaks(moved, self.period_T)


@dataclass(frozen=True, eq=False)
class WithBackground(ToothShape):
    """Constant background ``alpha_bg`` under ``inner``.

    ``alpha_max`` is the ceiling for the composite; it defaults to
    ``inner.bound + alpha_bg``.
    """

    inner: ToothShape
    alpha_bg: float
    alpha_max: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.alpha_bg) and self.alpha_bg >= 0):
            raise InvalidShape("alpha_bg must be finite and nonnegative")
        self._check()

    @property
    def period_T(self) -> float:
        return self.inner.period_T

    @property
    def bound(self) -> float:
        if self.alpha_max is None:
            return self.inner.bound + self.alpha_bg
        return float(self.alpha_max)

    def _values(self, omega):
        return self.inner._values(omega) + self.alpha_bg

    def breakpoints(self):
        return self.inner.breakpoints()


class LineShapeKernel:
    """Normalized single-atom line shape used to blur a target comb."""

    fwhm: float

    @property
    def is_delta(self) -> bool:
        return self.fwhm == 0.0

    def density(self, omega):
        raise NotImplementedError

    def cdf(self, omega):
        raise NotImplementedError

    def support(self, period_T: float) -> tuple[float, float, np.ndarray]:
        """Finite integration window ``(lo, hi, breakpoints)`` for Fourier integrals."""
        raise NotImplementedError

    def check_width(self, period_T: float) -> None:
        if self.fwhm > 0.2 * TWO_PI / period_T:
            warnings.warn(
                f"line width {self.fwhm:.3e} rad/s exceeds 0.2 of the comb period; "
                "the factorized linewidth approximation is unreliable",
                stacklevel=3,
            )


def _whole_period_window(half_extent: float, period_T: float, extra) -> tuple[float, float, np.ndarray]:
    period = TWO_PI / period_T
    n = max(1, int(math.ceil(half_extent / period)))
    edge = n * period
    breaks = np.concatenate([np.arange(-n, n + 1) * period, extra, -np.asarray(extra)])
    breaks = np.unique(breaks[(breaks > -edge) & (breaks < edge)])
    return -edge, edge, breaks


@dataclass(frozen=True)
class LorentzianLine(LineShapeKernel):
    """Normalized Lorentzian ``(fwhm/2pi) / (omega^2 + fwhm^2/4)``; ``fwhm=0`` is a delta."""

    fwhm: float

    def __post_init__(self):
        if not (math.isfinite(self.fwhm) and self.fwhm >= 0):
            raise InvalidShape("kernel fwhm must be finite and nonnegative")

    def density(self, omega):
        hw = 0.5 * self.fwhm
        return (hw / np.pi) / (np.asarray(omega) ** 2 + hw * hw)

    def cdf(self, omega):
        if self.is_delta:
            return np.where(np.asarray(omega) >= 0, 1.0, 0.0)
        return 0.5 + np.arctan(2.0 * np.asarray(omega) / self.fwhm) / np.pi

    def support(self, period_T):
        # whole periods keep the truncated cosine tail at O(fwhm / (T^2 X^3))
        extent = max(50 * TWO_PI / period_T, 2000 * self.fwhm)
        return _whole_period_window(extent, period_T, self.fwhm * np.array([0.5, 5.0, 50.0]))


@dataclass(frozen=True)
class GaussianLine(LineShapeKernel):
    """Normalized Gaussian with the given FWHM; ``fwhm=0`` is a delta."""

    fwhm: float

    def __post_init__(self):
        if not (math.isfinite(self.fwhm) and self.fwhm >= 0):
            raise InvalidShape("kernel fwhm must be finite and nonnegative")

    @property
    def sigma(self) -> float:
        return self.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))

    def density(self, omega):
        s = self.sigma
        return np.exp(-0.5 * (np.asarray(omega) / s) ** 2) / (s * math.sqrt(TWO_PI))

    def cdf(self, omega):
        if self.is_delta:
            return np.where(np.asarray(omega) >= 0, 1.0, 0.0)
        return 0.5 * (1.0 + erf(np.asarray(omega) / (self.sigma * math.sqrt(2.0))))

    def support(self, period_T):
        s = self.sigma
        lo, hi = -14.0 * s, 14.0 * s
        period = TWO_PI / period_T
        n = int(math.ceil(hi / period))
        breaks = np.concatenate([np.arange(-n, n + 1) * period, s * np.array([-3.0, -1.0, 0.0, 1.0, 3.0])])
        return lo, hi, np.unique(breaks[(breaks > lo) & (breaks < hi)])


@dataclass(frozen=True, eq=False)
class TabulatedLine(LineShapeKernel):
    """Piecewise-linear kernel on knots, zero outside; must integrate to one."""

    omega: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        omega = _readonly(self.omega)
        values = _readonly(self.values)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", values)
        if omega.ndim != 1 or omega.shape != values.shape or omega.size < 2:
            raise InvalidShape("kernel knots must be two equal-length 1-D sequences")
        if not np.all(np.diff(omega) > 0):
            raise InvalidShape("kernel knots must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidShape("kernel values must be finite and nonnegative")
        mass = float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(omega)))
        if abs(mass - 1.0) > 1e-6:
            raise InvalidShape(f"kernel is not normalized (integral {mass:.8f})")

    @property
    def fwhm(self) -> float:
        peak = self.values.max()
        above = self.omega[self.values >= 0.5 * peak]
        return float(above[-1] - above[0])

    @property
    def is_delta(self) -> bool:
        return False

    def density(self, omega):
        return np.interp(omega, self.omega, self.values, left=0.0, right=0.0)

    def cdf(self, omega):
        om, v = self.omega, self.values
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(om))])
        x = np.clip(np.asarray(omega, dtype=float), om[0], om[-1])
        idx = np.clip(np.searchsorted(om, x, side="right") - 1, 0, om.size - 2)
        dx = x - om[idx]
        slope = (v[idx + 1] - v[idx]) / (om[idx + 1] - om[idx])
        return cum[idx] + v[idx] * dx + 0.5 * slope * dx * dx

    def support(self, period_T):
        return float(self.omega[0]), float(self.omega[-1]), self.omega[1:-1]


def cell_integrals(shape: ToothShape, edges: np.ndarray, order: int = 10) -> np.ndarray:
    """Integrals of ``shape`` between consecutive ``edges`` (may extend past one period).

    Cells are split at the shape's periodic breakpoints so every piece is smooth.
    """
    edges = np.asarray(edges, dtype=float)
    period = TWO_PI / shape.period_T
    bp = shape.breakpoints()
    k_lo = math.floor(edges[0] / period) - 1
    k_hi = math.ceil(edges[-1] / period) + 1
    copies = (bp[None, :] + period * np.arange(k_lo, k_hi + 1)[:, None]).ravel()
    copies = copies[(copies > edges[0]) & (copies < edges[-1])]
    pts = np.union1d(edges, copies)
    pieces = fixed_gauss_legendre(shape.evaluate, pts[:-1], pts[1:], order)
    owner = np.searchsorted(edges, pts[:-1], side="right") - 1
    return np.bincount(owner, weights=pieces, minlength=edges.size - 1)[: edges.size - 1]


@dataclass(frozen=True, eq=False)
class Convolved(ToothShape):
    """Target shape blurred by a normalized line-shape kernel.

    The periodic comb is convolved with the kernel truncated to
    ``CONVOLUTION_PERIODS`` comb periods, on a grid of ``n_grid`` cells per period,
    and the result is stored as a piecewise-linear table.
    """

    inner: ToothShape
    kernel: LineShapeKernel
    n_grid: int = CONVOLUTION_GRID
    _table: Tabulated | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if self.n_grid < 16:
            raise InvalidShape("convolution grid needs at least 16 cells")
        self.kernel.check_width(self.period_T)
        if not self.kernel.is_delta:
            object.__setattr__(self, "_table", self._tabulate())
        self._check()

    def _tabulate(self) -> Tabulated:
        period = TWO_PI / self.period_T
        n = self.n_grid
        h = period / n
        knots = -0.5 * period + h * np.arange(n + 1)
        edges = np.concatenate([knots[:-1] - 0.5 * h, [knots[-2] + 0.5 * h]])
        cell_mean = cell_integrals(self.inner, edges) / h
        reach = int(round(0.5 * CONVOLUTION_PERIODS * n))
        lags = np.arange(-reach, reach + 1)
        mass = self.kernel.cdf((lags + 0.5) * h) - self.kernel.cdf((lags - 0.5) * h)
        folded = np.bincount(np.mod(lags, n), weights=mass, minlength=n)
        blurred = np.fft.irfft(np.fft.rfft(cell_mean) * np.fft.rfft(folded), n)
        blurred = np.maximum(blurred, 0.0)  # FFT roundoff only
        values = np.append(blurred, blurred[0])
        return Tabulated(knots, values, alpha_max=self.inner.bound)

    @property
    def period_T(self) -> float:
        return self.inner.period_T

    @property
    def bound(self) -> float:
        return self.inner.bound

    def _values(self, omega):
        if self._table is None:
            return self.inner._values(omega)
        return self._table._values(omega)

    def breakpoints(self):
        if self._table is None:
            return self.inner.breakpoints()
        return self._table.omega


def evaluate(shape: ToothShape, omega):
    """Absorption of ``shape`` at ``omega`` (periodic)."""
    return shape.evaluate(omega)


def area(shape: ToothShape, params: MemoryParams | None = None, rel_tol: float = 1e-10) -> float:
    """Integral of the shape over one full period (absorption x rad/s)."""
    if params is not None:
        check_compatible(shape, params)
    return shape.area(rel_tol)


def check_compatible(shape: ToothShape, params: MemoryParams, *, bound: bool = True) -> None:
    """Ensure a shape lives on the params' comb period and under its absorption ceiling."""
    if not math.isclose(shape.period_T, params.period_T, rel_tol=1e-9):
        raise InvalidShape(
            f"shape period T={shape.period_T:.6e} s differs from params T={params.period_T:.6e} s"
        )
    if bound and shape.bound > params.alpha_max * (1 + 1e-9):
        raise BoundViolation(
            f"shape bound {shape.bound:.6e} exceeds alpha_max {params.alpha_max:.6e}"
        )


SHAPE_CSV_HEADER = ("omega_rad_per_s", "absorption_per_m")


def save_tabulated_csv(shape: Tabulated, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SHAPE_CSV_HEADER)
        for om, val in zip(shape.omega, shape.values):
            writer.writerow((repr(float(om)), repr(float(val))))


def load_tabulated_csv(path, alpha_max: float | None = None) -> Tabulated:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SHAPE_CSV_HEADER:
            raise InvalidShape(f"expected header {','.join(SHAPE_CSV_HEADER)}, got {header}")
        rows = [(float(a), float(b)) for a, b in (r for r in reader if r)]
    if not rows:
        raise InvalidShape(f"{path} holds no knots")
    omega, values = zip(*rows)
    return Tabulated(np.array(omega), np.array(values), alpha_max)
