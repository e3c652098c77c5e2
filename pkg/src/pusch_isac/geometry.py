"""Planar bistatic geometry: delays, ellipse localization and bistatic Doppler.

Angle convention
----------------
The AoA ``theta`` is measured at the gNB, counter-clockwise, from the
direction obtained by rotating the gNB->UE baseline by +90 degrees::

            theta = 0
                ^
                |      target
                |     /
                |    /
               gNB ------------> UE
                   theta = -pi/2

so ``sin(theta) = -cos(psi)`` where ``psi`` is the angle between the
gNB->target and gNB->UE directions.  With this choice the range formula
``d1 = (dp^2 - d0^2) / (2 (dp + d0 sin theta))`` is exact and the radicand of
the Doppler formula, ``d1^2 + d0^2 + 2 d1 d0 sin theta``, equals ``d2^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class BistaticScene:
    gnb_position: tuple[float, float]
    ue_position: tuple[float, float]
    target_position: tuple[float, float]
    target_speed: float = 0.0
    carrier_frequency: float = 3.5e9

    def __post_init__(self):
        if self.baseline <= 0:
            raise GeometryError("gNB and UE positions coincide")

    @property
    def baseline(self) -> float:
        return float(np.hypot(*np.subtract(self.ue_position, self.gnb_position)))

    def aoa(self) -> float:
        """Angle of arrival at the gNB under the module's convention."""
        return aoa_from_positions(self.gnb_position, self.ue_position, self.target_position)


def _baseline_frame(gnb, ue):
    gnb = np.asarray(gnb, dtype=float)
    b = np.asarray(ue, dtype=float) - gnb
    d0 = float(np.hypot(*b))
    if d0 <= 0:
        raise GeometryError("gNB and UE positions coincide")
    ex = b / d0
    ey = np.array([-ex[1], ex[0]])  # baseline rotated by +90 degrees: theta = 0
    return gnb, ex, ey, d0


def aoa_from_positions(gnb, ue, target) -> float:
    gnb, ex, ey, _ = _baseline_frame(gnb, ue)
    r = np.asarray(target, dtype=float) - gnb
    # theta is measured from ey towards -ex
    return float(np.arctan2(-(r @ ex), r @ ey))


def bistatic_delay(scene: BistaticScene) -> tuple[float, float, float]:
    """Return ``(tau0, delta_tau, dp)``: LoS delay, excess delay and path length."""
    gnb = np.asarray(scene.gnb_position, float)
    ue = np.asarray(scene.ue_position, float)
    tgt = np.asarray(scene.target_position, float)
    d0 = float(np.hypot(*(ue - gnb)))
    if d0 <= 0:
        raise GeometryError("gNB and UE positions coincide")
    d1 = float(np.hypot(*(tgt - gnb)))
    d2 = float(np.hypot(*(tgt - ue)))
    dp = d1 + d2
    return d0 / SPEED_OF_LIGHT, max(dp - d0, 0.0) / SPEED_OF_LIGHT, dp


def target_range(dp: float, d0: float, theta: float) -> float:
    """gNB-target distance from the bistatic path length and AoA."""
    if dp < d0:
        raise GeometryError(f"bistatic path length {dp} is shorter than the baseline {d0}")
    denom = 2.0 * (dp + d0 * np.sin(theta))
    if not denom > 0:
        raise GeometryError("degenerate AoA: range denominator is not positive")
    return float((dp * dp - d0 * d0) / denom)


def doppler_from_velocity(v: float, d1: float, d0: float, theta: float, carrier_frequency: float) -> float:
    """Bistatic Doppler shift of a target moving at speed ``v``."""
    if d1 < 0:
        raise GeometryError("target range must be non-negative")
    radicand = d1 * d1 + d0 * d0 + 2.0 * d1 * d0 * np.sin(theta)
    if radicand < 0:
        raise GeometryError("negative radicand in the Doppler relation")
    if radicand == 0:
        # target on the UE: d2 = 0, the bistatic angle is undefined
        raise GeometryError("target coincides with the UE")
    factor = 0.5 + (d1 + d0 * np.sin(theta)) / (2.0 * np.sqrt(radicand))
    if factor < 0:
        raise GeometryError("negative Doppler factor")
    return float(2.0 * carrier_frequency / SPEED_OF_LIGHT * v * np.sqrt(factor))


def localize(delta_tau: float, theta: float, d0: float, gnb=(0.0, 0.0), ue=None) -> tuple[float, np.ndarray]:
    """Target range and position from the excess delay and AoA.

    Without ``ue`` the baseline is taken along +x from ``gnb``.
    """
    if delta_tau < 0:
        raise GeometryError("excess delay must be non-negative")
    if ue is None:
        ue = (gnb[0] + d0, gnb[1])
    origin, ex, ey, d0_frame = _baseline_frame(gnb, ue)
    if not np.isclose(d0_frame, d0, rtol=1e-12, atol=0.0):
        raise GeometryError("d0 does not match the gNB-UE distance")
    dp = SPEED_OF_LIGHT * delta_tau + d0
    d1 = target_range(dp, d0, theta)
    direction = np.cos(theta) * ey - np.sin(theta) * ex
    return d1, origin + d1 * direction
