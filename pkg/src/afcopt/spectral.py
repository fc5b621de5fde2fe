"""Comb Fourier coefficients and phase alignment of arbitrary tooth shapes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .comb import MemoryParams, Shifted, ToothShape, check_compatible
from .errors import DegenerateShape
from .quadrature import quadrature

__all__ = ["FourierPair", "fourier_pair", "phase_align", "quadrature", "sine_component"]

DEGENERACY_RATIO = 1e-12


@dataclass(frozen=True)
class FourierPair:
    """Zeroth and minus-first comb Fourier coefficients (1/m).

    ``f0 = (T/2pi) * int f`` and ``f_minus1 = (T/2pi) * int f exp(i omega T)``
    over one period.
    """

    f0: float
    f_minus1: complex

    @property
    def modulus(self) -> float:
        return abs(self.f_minus1)

    @property
    def phase(self) -> float:
        return float(np.angle(self.f_minus1))


def fourier_pair(
    shape: ToothShape, params: MemoryParams | None = None, rel_tol: float = 1e-10
) -> FourierPair:
    """Compute ``FourierPair`` of a shape by adaptive quadrature over one period."""
    if params is not None:
        check_compatible(shape, params, bound=False)
    T = shape.period_T
    half = np.pi / T
    bp = shape.breakpoints()
    total = quadrature(shape.evaluate, -half, half, rel_tol, points=bp)
    first = quadrature(lambda w: shape.evaluate(w) * np.exp(1j * w * T), -half, half, rel_tol, points=bp)
    scale = T / (2.0 * np.pi)
    return FourierPair(float(scale * total), complex(scale * first))


def phase_align(
    shape: ToothShape, params: MemoryParams | None = None
) -> tuple[Shifted, float]:
    """Translate a shape periodically so that its ``f_minus1`` becomes real and positive.

    Returns:
        ``(aligned, omega0)`` where ``omega0 = arg(f_minus1)/T`` in ``(-pi/T, pi/T]``
        is the effective tooth centre and ``aligned(w) == shape(w + omega0)``.

    Raises:
        DegenerateShape: when ``|f_minus1| <= 1e-12 * f0``.
    """
    pair = fourier_pair(shape, params)
    if pair.modulus <= DEGENERACY_RATIO * pair.f0:
        raise DegenerateShape(
            f"|F_-1| = {pair.modulus:.3e} too small against F_0 = {pair.f0:.3e}"
        )
    omega0 = pair.phase / shape.period_T
    return Shifted(shape, -omega0), omega0


def sine_component(shape: ToothShape, rel_tol: float = 1e-10) -> float:
    """``int f(w) sin(w T) dw`` over one period; zero for a phase-aligned shape."""
    T = shape.period_T
    half = np.pi / T
    return quadrature(
        lambda w: shape.evaluate(w) * np.sin(w * T), -half, half, rel_tol, points=shape.breakpoints()
    )
