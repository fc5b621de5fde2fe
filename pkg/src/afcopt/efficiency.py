"""Retrieval efficiency of an AFC memory and its optimization over tooth width.

Dimensionless conventions: ``od = alpha_max * L`` and ``p = width * T``. For
square teeth ``p`` is the half-width times T; for Lorentzian and Gaussian teeth
it is the FWHM times T.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .comb import (
    Convolved,
    LineShapeKernel,
    MemoryParams,
    ToothShape,
    WithBackground,
    check_compatible,
)
from .errors import DomainError
from .quadrature import quadrature
from .search import scan_then_golden
from .spectral import FourierPair, fourier_pair

ETA_FORWARD_MAX = 4.0 / math.e**2
FIGURE_COLOR_MAX = 0.54
P_MAX = 2.0 * np.pi
WIDTH_TOL = 1e-8
BRACKET_POINTS = 64
PROFILE_RTOL = 1e-10
# below this width the cosine is flat across the tooth
SMALL_WIDTH = 1e-8


class ToothFamily(str, Enum):
    SQUARE = "square"
    LORENTZIAN = "lorentzian"
    GAUSSIAN = "gaussian"


class ConvolutionMode(str, Enum):
    EXACT = "exact"
    SCALE_FACTOR = "scale"


class MapKind(str, Enum):
    ETA_SQUARE = "EtaSquare"
    ETA_LORENTZIAN = "EtaLorentzian"
    ETA_GAUSSIAN = "EtaGaussian"
    DIFF_ABS_L = "DiffAbsL"
    DIFF_ABS_G = "DiffAbsG"
    DIFF_REL_L = "DiffRelL"
    DIFF_REL_G = "DiffRelG"

    @property
    def is_eta(self) -> bool:
        return self.value.startswith("Eta")


@dataclass(frozen=True)
class EfficiencyComponents:
    eta_ideal: float
    background_factor: float = 1.0
    linewidth_factor: float = 1.0


@dataclass(frozen=True)
class EfficiencyResult:
    """Efficiency ``eta`` with the Fourier coefficients it came from.

    ``components`` is set when background or linewidth corrections were applied.
    """

    eta: float
    fourier: FourierPair
    components: EfficiencyComponents | None = None


def eta_from_fourier(pair: FourierPair, length_L: float) -> float:
    """``|F_-1 L|^2 exp(-F_0 L)``."""
    return float(abs(pair.f_minus1 * length_L) ** 2 * math.exp(-pair.f0 * length_L))


def efficiency(shape: ToothShape, params: MemoryParams) -> EfficiencyResult:
    """Forward retrieval efficiency of a comb with the given tooth shape."""
    check_compatible(shape, params)
    pair = fourier_pair(shape)
    return EfficiencyResult(eta_from_fourier(pair, params.length_L), pair)


def _check_od(od: float) -> None:
    if not (math.isfinite(od) and od >= 0):
        raise DomainError(f"optical depth must be finite and >= 0, got {od}")


def _check_p(p: float) -> None:
    if not (math.isfinite(p) and 0.0 <= p <= P_MAX * (1 + 1e-12)):
        raise DomainError(f"dimensionless width must lie in [0, 2pi], got {p}")


def eta_square(p: float, od: float) -> float:
    """Square tooth with half-width ``p/T``: ``od^2 sin^2(p)/pi^2 * exp(-p od/pi)``."""
    _check_p(p)
    _check_od(od)
    return od * od * math.sin(p) ** 2 / math.pi**2 * math.exp(-p * od / math.pi)


def _lorentz_profile(p):
    return lambda t: 1.0 / (1.0 + (2.0 * t / p) ** 2)


def _gauss_profile(p):
    c = 4.0 * math.log(2.0)
    return lambda t: np.exp(-c * (t / p) ** 2)


def _narrow_mass(family: ToothFamily, p: float) -> float:
    """``B(p)`` in closed form."""
    if family is ToothFamily.LORENTZIAN:
        return p * math.atan(2.0 * math.pi / p) / (2.0 * math.pi)
    k = 2.0 * math.sqrt(math.log(2.0))
    return p * math.sqrt(math.pi) / k * math.erf(k * math.pi / p) / (2.0 * math.pi)


@functools.lru_cache(maxsize=65536)
def profile_coefficients(family: ToothFamily, p: float) -> tuple[float, float]:
    """Return ``(A, B)`` with ``eta(p, od) = (od A)^2 exp(-od B)`` for a unit-height tooth.

    ``A = (1/2pi) int f cos t dt`` and ``B = (1/2pi) int f dt`` over ``t in [-pi, pi]``.
    """
    family = ToothFamily(family)
    _check_p(p)
    if family is ToothFamily.SQUARE:
        return math.sin(p) / math.pi, p / math.pi
    if p == 0.0:
        return 0.0, 0.0
    if p < SMALL_WIDTH:
        # cos t = 1 - O(p^2) across the whole tooth
        b = _narrow_mass(family, p)
        return b, b
    profile = _lorentz_profile(p) if family is ToothFamily.LORENTZIAN else _gauss_profile(p)
    scales = p * np.array([0.5, 2.0, 8.0, 32.0])
    breaks = np.concatenate([[0.0], scales, -scales])
    a = quadrature(lambda t: profile(t) * np.cos(t), -np.pi, np.pi, PROFILE_RTOL, points=breaks)
    b = quadrature(profile, -np.pi, np.pi, PROFILE_RTOL, points=breaks)
    return a / (2.0 * np.pi), b / (2.0 * np.pi)


def eta_family(family: ToothFamily, p: float, od: float) -> float:
    _check_od(od)
    a, b = profile_coefficients(ToothFamily(family), float(p))
    return (od * a) ** 2 * math.exp(-od * b)


def eta_lorentzian(p: float, od: float) -> float:
    """Lorentzian tooth of FWHM ``p/T``, truncated to one period."""
    return eta_family(ToothFamily.LORENTZIAN, p, od)


def eta_gaussian(p: float, od: float) -> float:
    """Gaussian tooth of FWHM ``p/T``, truncated to one period."""
    return eta_family(ToothFamily.GAUSSIAN, p, od)


def optimal_square_width(od: float) -> float:
    """Optimal square half-width times T, ``arctan(2pi/od)``; ``pi/2`` at ``od = 0``."""
    _check_od(od)
    if od == 0.0:
        return math.pi / 2.0
    return math.atan(2.0 * math.pi / od)


def optimal_square_efficiency(od: float) -> float:
    """Efficiency of the optimally wide square tooth at optical depth ``od > 0``."""
    if not (math.isfinite(od) and od > 0):
        raise DomainError(f"optimal square efficiency needs od > 0, got {od}")
    ratio = 2.0 * math.pi / od
    return 4.0 * math.exp(-math.atan(ratio) / ratio * 2.0) / (1.0 + ratio * ratio)


@functools.lru_cache(maxsize=8)
def _bracket_coefficients(family: ToothFamily) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(0.0, P_MAX, BRACKET_POINTS)
    pairs = np.array([profile_coefficients(family, float(p)) for p in grid])
    return pairs[:, 0], pairs[:, 1]


def optimize_width(family: ToothFamily, od: float, tol: float = WIDTH_TOL) -> tuple[float, float]:
    """Width ``p`` in ``(0, 2pi]`` maximizing the efficiency at fixed ``od``.

    Returns:
        ``(p_opt, eta_opt)``.
    """
    family = ToothFamily(family)
    if not (math.isfinite(od) and od > 0):
        raise DomainError(f"width optimization needs od > 0, got {od}")
    a, b = _bracket_coefficients(family)
    scan = (od * a) ** 2 * np.exp(-od * b)
    return scan_then_golden(
        lambda p: eta_family(family, p, od), 0.0, P_MAX, BRACKET_POINTS, tol, scan_values=scan
    )


def family_maximum(family: ToothFamily, od: float) -> float:
    """``max_p eta_family(p, od)``; zero at ``od = 0``."""
    if od == 0.0:
        return 0.0
    return optimize_width(family, od)[1]


def efficiency_with_background(shape_abg: ToothShape, params: MemoryParams) -> EfficiencyResult:
    """Efficiency of ``shape_abg`` sitting on the constant background ``params.alpha_bg``.

    The composite must stay below ``params.alpha_max``.

    Raises:
        BoundViolation: when background plus shape exceeds ``alpha_max``.
    """
    check_compatible(shape_abg, params)
    composite = WithBackground(shape_abg, params.alpha_bg, alpha_max=params.alpha_max)
    pair = fourier_pair(composite)
    ideal = eta_from_fourier(fourier_pair(shape_abg), params.length_L)
    parts = EfficiencyComponents(ideal, background_factor=math.exp(-params.alpha_bg * params.length_L))
    return EfficiencyResult(eta_from_fourier(pair, params.length_L), pair, parts)


def linewidth_scale_factor(kernel: LineShapeKernel, params: MemoryParams) -> float:
    """``|int L(w) exp(i w T) dw|^2`` over the kernel support."""
    if kernel.is_delta:
        return 1.0
    lo, hi, breaks = kernel.support(params.period_T)
    T = params.period_T
    value = quadrature(lambda w: kernel.density(w) * np.exp(1j * w * T), lo, hi, 1e-10, points=breaks)
    return float(abs(value) ** 2)


def efficiency_convolved(
    shape: ToothShape,
    kernel: LineShapeKernel,
    params: MemoryParams,
    mode: ConvolutionMode = ConvolutionMode.EXACT,
) -> EfficiencyResult:
    """Efficiency of a target shape realized through a finite optical line width.

    ``EXACT`` evaluates the convolved comb directly; ``SCALE_FACTOR`` multiplies
    the ideal efficiency by :func:`linewidth_scale_factor`.
    """
    mode = ConvolutionMode(mode)
    ideal = efficiency(shape, params)
    if mode is ConvolutionMode.SCALE_FACTOR:
        kernel.check_width(params.period_T)
        factor = linewidth_scale_factor(kernel, params)
        parts = EfficiencyComponents(ideal.eta, linewidth_factor=factor)
        return EfficiencyResult(ideal.eta * factor, ideal.fourier, parts)
    blurred = efficiency(Convolved(shape, kernel), params)
    factor = blurred.eta / ideal.eta if ideal.eta > 0 else float("nan")
    return EfficiencyResult(blurred.eta, blurred.fourier, EfficiencyComponents(ideal.eta, linewidth_factor=factor))


_MAP_FAMILY = {
    MapKind.ETA_SQUARE: ToothFamily.SQUARE,
    MapKind.ETA_LORENTZIAN: ToothFamily.LORENTZIAN,
    MapKind.ETA_GAUSSIAN: ToothFamily.GAUSSIAN,
}


@dataclass(frozen=True, eq=False)
class EfficiencyMap:
    """Values on a ``(p, od)`` grid; ``values[i, j]`` belongs to ``(p_axis[i], od_axis[j])``."""

    kind: MapKind
    p_axis: np.ndarray
    od_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))
        p = np.asarray(self.p_axis, dtype=float)
        od = np.asarray(self.od_axis, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        for axis in (p, od):
            if axis.ndim != 1 or axis.size == 0 or np.any(np.diff(axis) <= 0):
                raise ValueError("map axes must be non-empty and strictly increasing")
        if vals.shape != (p.size, od.size):
            raise ValueError(f"values shape {vals.shape} does not match axes ({p.size}, {od.size})")
        for name, arr in (("p_axis", p), ("od_axis", od), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def default_vmax(self) -> float:
        if self.kind.is_eta:
            return FIGURE_COLOR_MAX
        if self.kind in (MapKind.DIFF_REL_L, MapKind.DIFF_REL_G):
            return 1.0
        return 0.2

    def image_array(self, figure_norm: bool = False, vmax: float | None = None) -> np.ndarray:
        """Array as rendered: clamped to ``[0, vmax]``, negatives and NaN zeroed with ``figure_norm``."""
        vmax = self.default_vmax() if vmax is None else vmax
        img = np.array(self.values, dtype=float)
        if figure_norm:
            img = np.where(np.isnan(img) | (img < 0), 0.0, img)
        return np.minimum(img, vmax)

    def to_csv(self, path) -> None:
        lines = ["p,od,value"]
        for i, p in enumerate(self.p_axis):
            for j, od in enumerate(self.od_axis):
                lines.append(f"{float(p)!r},{float(od)!r},{float(self.values[i, j])!r}")
        Path(path).write_text("\n".join(lines) + "\n")

    def to_dict(self) -> dict:
        vals = [[None if math.isnan(v) else float(v) for v in row] for row in self.values]
        return {
            "kind": self.kind.value,
            "p_axis": [float(x) for x in self.p_axis],
            "od_axis": [float(x) for x in self.od_axis],
            "values": vals,
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def from_json(cls, path) -> "EfficiencyMap":
        data = json.loads(Path(path).read_text())
        vals = np.array([[np.nan if v is None else v for v in row] for row in data["values"]], dtype=float)
        return cls(MapKind(data["kind"]), np.array(data["p_axis"]), np.array(data["od_axis"]), vals)

    def to_png(self, path, figure_norm: bool = False, vmax: float | None = None) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        vmax = self.default_vmax() if vmax is None else vmax
        img = self.image_array(figure_norm, vmax)
        fig, ax = plt.subplots(figsize=(5, 4))
        mesh = ax.pcolormesh(self.p_axis, self.od_axis, img.T, vmin=0.0, vmax=vmax, shading="auto")
        ax.set_xlabel("p")
        ax.set_ylabel("OD")
        ax.set_title(self.kind.value)
        fig.colorbar(mesh, ax=ax)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def _check_axes(p_axis, od_axis) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p_axis, dtype=float)
    od = np.asarray(od_axis, dtype=float)
    if p.size and (p.min() < 0 or p.max() > P_MAX * (1 + 1e-12)):
        raise DomainError("p axis must lie within [0, 2pi]")
    if od.size and od.min() < 0:
        raise DomainError("od axis must be nonnegative")
    return p, od


def _eta_grid(family: ToothFamily, p: np.ndarray, od: np.ndarray) -> np.ndarray:
    coeffs = np.array([profile_coefficients(family, float(x)) for x in p]).reshape(-1, 2)
    a, b = coeffs[:, :1], coeffs[:, 1:]
    return (od[None, :] * a) ** 2 * np.exp(-od[None, :] * b)


def build_map(kind: MapKind, p_axis, od_axis) -> EfficiencyMap:
    """Evaluate one map kind on the grid ``p_axis x od_axis``."""
    kind = MapKind(kind)
    p, od = _check_axes(p_axis, od_axis)
    if kind.is_eta:
        return EfficiencyMap(kind, p, od, _eta_grid(_MAP_FAMILY[kind], p, od))
    return difference_maps(p, od)[kind]


def difference_maps(p_axis, od_axis) -> dict[MapKind, EfficiencyMap]:
    """Absolute and relative advantage of square teeth over the best Lorentzian/Gaussian tooth.

    ``D(p, od) = eta_S(p, od) - max_p' eta_X(p', od)`` and ``R = D / max_p' eta_X``;
    ``R`` is NaN where the competitor's maximum is zero (``od = 0``).
    """
    p, od = _check_axes(p_axis, od_axis)
    square = _eta_grid(ToothFamily.SQUARE, p, od)
    out = {}
    for family, abs_kind, rel_kind in (
        (ToothFamily.LORENTZIAN, MapKind.DIFF_ABS_L, MapKind.DIFF_REL_L),
        (ToothFamily.GAUSSIAN, MapKind.DIFF_ABS_G, MapKind.DIFF_REL_G),
    ):
        best = np.array([family_maximum(family, float(x)) for x in od])
        diff = square - best[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(best[None, :] > 0, diff / np.where(best > 0, best, 1.0)[None, :], np.nan)
        out[abs_kind] = EfficiencyMap(abs_kind, p, od, diff)
        out[rel_kind] = EfficiencyMap(rel_kind, p, od, rel)
    return out
