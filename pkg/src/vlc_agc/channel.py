"""
Lambertian line-of-sight optical channel.

    h = (n+1) A / (2 pi d^2) * cos^n(phi) * Ts * g(psi) * cos(psi),   psi <= FOV
    h = 0                                                             psi >  FOV

with n = -1 / log2(cos(phi_half)) and concentrator gain g = chi^2 / sin^2(FOV).
Also provides the inverse maps (distance or emission angle for a target gain)
used by the dynamic-range analysis.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import NoSolutionError, ParameterError

# Active area of a 3 mm diameter APD; the reference table does not list one.
DEFAULT_RECEIVER_AREA = 7.07e-6


@dataclass(frozen=True)
class ChannelParams:
    half_power_angle: float = np.radians(60.0)
    receiver_area: float = DEFAULT_RECEIVER_AREA
    optical_filter_gain: float = 1.0
    half_fov: float = np.radians(60.0)
    refractive_index: float = 1.5

    def __post_init__(self):
        if not 0.0 < self.half_power_angle < np.pi / 2:
            raise ParameterError("half_power_angle must lie in (0, pi/2)")
        if not 0.0 < self.half_fov <= np.pi / 2:
            raise ParameterError("half_fov must lie in (0, pi/2]")
        if self.receiver_area <= 0:
            raise ParameterError("receiver_area must be positive")
        if self.refractive_index < 1:
            raise ParameterError("refractive_index must be >= 1")
        if self.optical_filter_gain <= 0:
            raise ParameterError("optical_filter_gain must be positive")

    @property
    def lambertian_index(self) -> float:
        return lambertian_index(self.half_power_angle)


@dataclass(frozen=True)
class ChannelGeometry:
    distance: float
    emission_angle: float = 0.0
    incidence_angle: float = 0.0

    def __post_init__(self):
        if self.distance <= 0:
            raise ParameterError("distance must be positive")
        for name in ("emission_angle", "incidence_angle"):
            a = getattr(self, name)
            if not 0.0 <= a <= np.pi / 2:
                raise ParameterError(f"{name} must lie in [0, pi/2]")


def lambertian_index(half_power_angle: float) -> float:
    """Lambertian order n of an emitter with the given half-power semi-angle."""
    if not 0.0 < half_power_angle < np.pi / 2:
        raise ParameterError("half-power angle must lie strictly inside (0, pi/2)")
    c = np.cos(half_power_angle)
    if not 0.0 < c < 1.0:
        raise ParameterError("half-power angle too close to the interval ends")
    return float(-1.0 / np.log2(c))


def concentrator_gain(incidence_angle: float, params: ChannelParams) -> float:
    if incidence_angle > params.half_fov:
        return 0.0
    return float(params.refractive_index ** 2 / np.sin(params.half_fov) ** 2)


def _angular_factor(params: ChannelParams, emission_angle, incidence_angle):
    # cos^n(phi) * Ts * g(psi) * cos(psi), zero outside the FOV
    n = params.lambertian_index
    g = params.refractive_index ** 2 / np.sin(params.half_fov) ** 2
    phi = np.asarray(emission_angle, dtype=float)
    psi = np.asarray(incidence_angle, dtype=float)
    f = np.cos(phi) ** n * params.optical_filter_gain * g * np.cos(psi)
    return np.where(psi > params.half_fov, 0.0, np.maximum(f, 0.0))


def channel_gain(params: ChannelParams, geom: ChannelGeometry) -> float:
    """DC gain h of the line-of-sight link (always >= 0)."""
    n = params.lambertian_index
    pre = (n + 1) * params.receiver_area / (2 * np.pi * geom.distance ** 2)
    return float(pre * _angular_factor(params, geom.emission_angle, geom.incidence_angle))


def channel_gain_array(params: ChannelParams, distance, emission_angle, incidence_angle):
    """Vectorised `channel_gain` over arrays of geometry; no per-element validation."""
    n = params.lambertian_index
    d = np.asarray(distance, dtype=float)
    pre = (n + 1) * params.receiver_area / (2 * np.pi * d ** 2)
    return pre * _angular_factor(params, emission_angle, incidence_angle)


def received_optical_power(params: ChannelParams, geom: ChannelGeometry,
                           bias_voltage: float, conversion_coeff: float) -> float:
    """Average received optical power alpha*h*v_b, ambient light ignored."""
    return conversion_coeff * channel_gain(params, geom) * bias_voltage


def distance_for_gain(params: ChannelParams, target_h: float,
                      emission_angle: float = 0.0, incidence_angle: float = 0.0) -> float:
    """Distance at which the link has gain `target_h` for fixed angles."""
    if target_h <= 0:
        raise NoSolutionError("target gain must be positive")
    n = params.lambertian_index
    k = (n + 1) * params.receiver_area / (2 * np.pi) * float(
        _angular_factor(params, emission_angle, incidence_angle))
    if k <= 0:
        raise NoSolutionError("angles put the transmitter outside the field of view")
    return float(np.sqrt(k / target_h))


def incidence_equals_emission(phi):
    return phi


def normal_incidence(phi):
    return 0.0


ANGLE_COUPLINGS = {
    "normal_incidence": normal_incidence,
    "incidence_equals_emission": incidence_equals_emission,
}


def emission_angle_for_gain(params: ChannelParams, target_h: float, distance: float,
                            incidence_angle_law: Callable[[float], float] = normal_incidence,
                            xtol: float = 1e-9) -> float:
    """
    Smallest emission angle at which the link gain drops to `target_h`.

    The incidence angle follows `incidence_angle_law(phi)`. The default keeps
    the receiver facing the transmitter (psi = 0); pass
    `incidence_equals_emission` for parallel transmitter and receiver planes.
    Solved by bisection, the gain being monotone in phi.
    """
    if target_h <= 0:
        raise NoSolutionError("target gain must be positive")

    def h_of(phi):
        psi = incidence_angle_law(phi)
        return channel_gain(params, ChannelGeometry(distance, phi, psi))

    h0 = h_of(0.0)
    if target_h > h0:
        raise NoSolutionError(
            f"target gain {target_h:.4g} exceeds the on-axis gain {h0:.4g}")
    if target_h == h0:
        return 0.0

    # Upper end of the search: just inside pi/2 and, if psi tracks phi, inside the FOV.
    hi = np.pi / 2 - 1e-12
    if incidence_angle_law(hi) > params.half_fov:
        hi = optimize.bisect(lambda p: incidence_angle_law(p) - params.half_fov,
                             0.0, hi, xtol=1e-15)
    if h_of(hi) > target_h:
        raise NoSolutionError("target gain is not reached before the field-of-view edge")
    return float(optimize.bisect(lambda p: h_of(p) - target_h, 0.0, hi, xtol=xtol))
