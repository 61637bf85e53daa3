"""
Fourier design of the x-phase excitation waveform

The waveform is piecewise constant with step Δt = π/N. Its first-order
rotation angle at offset ω is the cosine series 2·Δt·Σ u_k·cos(k·ω·Δt),
which approximates a rectangle of height θ on |ω·Δt| ≤ π/N.
"""

import csv
import io
import logging
import math
from typing import Iterable, List, Optional, Union

import numpy as np
from scipy import integrate

from app.core.errors import InvalidParameterError
from app.core.schema import (
    CoefficientSet,
    DesignParams,
    DesignReportRow,
    PulseSequence,
    Segment,
    SequenceFamily,
)

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("offset", "series_value_rad", "deviation_rad")


def coefficients(p: DesignParams) -> CoefficientSet:
    """u_0 = 1/4 and u_k = sin(kπ/N)/(2kπ/N), rescaled linearly to theta_target"""
    k = np.arange(1, p.M + 1)
    x = k * math.pi / p.N
    u = np.concatenate(([0.25], np.sin(x) / (2.0 * x))) * p.scale
    return CoefficientSet(u=u.tolist())


def waveform(c: CoefficientSet, p: DesignParams) -> PulseSequence:
    """
    Emit (u_M, …, u_1, u_0, u_0, u_1, …, u_M) as x-phase slices of Δt each

    u_0 plays once in each half. A negative coefficient is played with
    phase π so that every segment keeps a non-negative amplitude.
    """
    if c.M != p.M:
        raise InvalidParameterError(f"coefficient set has M = {c.M}, design has M = {p.M}")
    half = list(c.u)
    order = half[::-1] + half
    segments = [
        Segment.rf(amplitude=abs(value), duration=p.dt, phase=0.0 if value >= 0 else math.pi)
        for value in order
    ]
    return PulseSequence(
        segments=segments,
        design=p,
        peak_amplitude=max(abs(value) for value in half),
        label=f"waveform_n{p.n_blocks}_N{p.N}_M{p.M}",
        family=SequenceFamily.WAVEFORM,
    )


def waveform_duration(p: DesignParams) -> float:
    """T = (2M + 2)·Δt"""
    return (2 * p.M + 2) * p.dt


def series_value(
    c: CoefficientSet,
    p: DesignParams,
    offset: Union[float, np.ndarray],
) -> Union[float, np.ndarray]:
    """2·Δt·Σ_{k=0}^{M} u_k·cos(k·ω·Δt); |ω| ≤ N keeps x within one period"""
    offsets = np.asarray(offset, dtype=float)
    if np.any(np.abs(offsets) > p.N):
        raise InvalidParameterError(f"offset must satisfy |ω| ≤ N = {p.N}")
    k = np.arange(c.M + 1)
    u = np.asarray(c.u)
    values = 2.0 * p.dt * np.cos(np.multiply.outer(offsets * p.dt, k)) @ u
    return float(values) if np.ndim(values) == 0 else values


def design_report(c: CoefficientSet, p: DesignParams, offsets: Iterable[float]) -> List[DesignReportRow]:
    grid = np.asarray(list(offsets), dtype=float)
    values = np.atleast_1d(series_value(c, p, grid))
    return [
        DesignReportRow(offset=float(w), series_value_rad=float(v), deviation_rad=float(p.theta_target - v))
        for w, v in zip(grid, values)
    ]


def design_report_csv(rows: Iterable[DesignReportRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([f"{row.offset:.12g}", f"{row.series_value_rad:.15e}", f"{row.deviation_rad:.15e}"])
    return buffer.getvalue()


def _target(p: DesignParams):
    edge = math.pi / p.N

    def rectangle(x: float) -> float:
        return p.theta_target if abs(x) <= edge else 0.0

    return rectangle, edge


def fourier_oracle(p: DesignParams, M: Optional[int] = None) -> CoefficientSet:
    """
    Coefficients from direct quadrature of the target rectangle on [-π, π]

    Independent of the closed form in coefficients(); used as its oracle.
    """
    harmonics = p.M if M is None else M
    rectangle, edge = _target(p)
    u = []
    for k in range(harmonics + 1):
        integral, _ = integrate.quad(
            lambda x: rectangle(x) * math.cos(k * x),
            -math.pi,
            math.pi,
            points=[-edge, edge],
            epsabs=1e-14,
            epsrel=1e-13,
            limit=200,
        )
        fourier = integral / (2.0 * math.pi) if k == 0 else integral / math.pi
        u.append(fourier / (2.0 * p.dt))
    return CoefficientSet(u=u)


def fit_deviation(c: CoefficientSet, p: DesignParams) -> float:
    """∫ (series(x) - target(x))² dx over x ∈ [-π, π]"""
    rectangle, edge = _target(p)
    k = np.arange(c.M + 1)
    u = np.asarray(c.u)

    def squared_error(x: float) -> float:
        series = 2.0 * p.dt * float(np.cos(k * x) @ u)
        return (series - rectangle(x)) ** 2

    value, _ = integrate.quad(squared_error, -math.pi, math.pi, points=[-edge, edge], limit=500)
    logger.debug("fit deviation N=%d M=%d: %.6e", p.N, c.M, value)
    return value
