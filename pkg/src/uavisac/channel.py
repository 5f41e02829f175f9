"""Sub-THz air-to-ground propagation.

Path losses are returned as linear channel power gains, so free-space
spreading, molecular absorption and the NLoS penalty all sit in the
denominator; the probabilistic blend weighs the LoS and NLoS gains by the
elevation-dependent occurrence probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    GeometryError,
    RotationAngles,
    as_vec3,
    steering_vector,
)

COMM_LOS = "comm_los"
RADAR_LOS = "radar_los"
COMM_NLOS = "comm_nlos"
EXPECTED = "expected"

PATHLOSS_MODES = (COMM_LOS, RADAR_LOS, COMM_NLOS, EXPECTED)


@dataclass
class ChannelParams:
    """Propagation constants.

    kappa1..kappa3 shape the NLoS-probability curve; absorption_per_m is the
    molecular absorption coefficient K_fc (1/m); nlos_attenuation is the
    NLoS amplitude factor K_N in (0, 1].  Defaults for kappa, K_fc and K_N
    are configurable stand-ins, not published values.
    """

    kappa1: float = 0.9
    kappa2: float = 3.5
    kappa3: float = 0.9
    absorption_per_m: float = 0.0033
    nlos_attenuation: float = 0.1
    radar_cross_section_m2: float = 1.0
    noise_mw: float = 1e-11
    bandwidth_hz: float = 100e6
    carrier_hz: float = 0.3e12

    def __post_init__(self) -> None:
        if self.absorption_per_m < 0.0:
            raise ValueError("absorption_per_m must be >= 0")
        if not 0.0 < self.nlos_attenuation <= 1.0:
            raise ValueError("nlos_attenuation must be in (0, 1]")
        if self.noise_mw <= 0.0:
            raise ValueError("noise_mw must be positive")
        if self.radar_cross_section_m2 <= 0.0:
            raise ValueError("radar_cross_section_m2 must be positive")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz


@dataclass(frozen=True)
class ChannelVector:
    """Complex channel entries plus the linear path gain they embed."""

    entries: NDArray[np.complex128]
    pathloss_linear: float


def nlos_probability(params: ChannelParams, uav_pos, dest) -> float:
    """NLoS occurrence probability, clamped to [0, 1].

    Evaluates -k1 exp(-k2 atan(dz / horizontal)) + k3 on the height gap and
    horizontal distance; the argument equals (z - z_i) / (d sin theta).
    """
    u = as_vec3(uav_pos)
    d = as_vec3(dest)
    dz = u[2] - d[2]
    if dz <= 0.0:
        raise GeometryError("UAV must be above the destination")
    horizontal = math.hypot(u[0] - d[0], u[1] - d[1])
    elevation = math.atan2(dz, horizontal)
    raw = -params.kappa1 * math.exp(-params.kappa2 * elevation) + params.kappa3
    return min(1.0, max(0.0, raw))


def los_probability(params: ChannelParams, uav_pos, dest) -> float:
    return 1.0 - nlos_probability(params, uav_pos, dest)


def pathloss(params: ChannelParams, mode: str, uav_pos, dest) -> float:
    """Linear channel power gain between the UAV and a destination.

    comm_los: lam^2 / ((4 pi d)^2 exp(2 K d)); radar_los uses the radar
    range equation lam^2 rho / ((4 pi)^3 d^4 exp(4 K d)); comm_nlos applies
    the K_N^2 penalty; expected blends the comm gains by LoS probability.
    """
    u = as_vec3(uav_pos)
    t = as_vec3(dest)
    d = float(np.linalg.norm(u - t))
    if d <= 0.0:
        raise GeometryError("zero distance between UAV and destination")
    lam = params.wavelength_m
    k_abs = params.absorption_per_m
    if mode == COMM_LOS:
        return lam**2 / ((4.0 * math.pi * d) ** 2 * math.exp(2.0 * k_abs * d))
    if mode == COMM_NLOS:
        return pathloss(params, COMM_LOS, uav_pos, dest) * params.nlos_attenuation**2
    if mode == RADAR_LOS:
        return (
            lam**2
            * params.radar_cross_section_m2
            / ((4.0 * math.pi) ** 3 * d**4 * math.exp(4.0 * k_abs * d))
        )
    if mode == EXPECTED:
        p_nlos = nlos_probability(params, uav_pos, dest)
        gain_los = pathloss(params, COMM_LOS, uav_pos, dest)
        return (1.0 - p_nlos) * gain_los + p_nlos * gain_los * params.nlos_attenuation**2
    raise ValueError(f"unknown pathloss mode {mode!r}")


def channel_vector(
    params: ChannelParams,
    config: ArrayConfig,
    uav_pos,
    angles: RotationAngles,
    dest,
    mode: str,
) -> ChannelVector:
    """Channel vector sqrt(PL) exp(j 2 pi f d / c) a(uav, dest)."""
    gain = pathloss(params, mode, uav_pos, dest)
    d = float(np.linalg.norm(as_vec3(dest) - as_vec3(uav_pos)))
    phase = np.exp(2j * math.pi * params.carrier_hz * d / SPEED_OF_LIGHT)
    a = steering_vector(config, uav_pos, angles, dest)
    return ChannelVector(entries=math.sqrt(gain) * phase * a, pathloss_linear=gain)


def _as_weight_vector(w) -> NDArray[np.complex128]:
    vector = getattr(w, "vector", None)
    if vector is not None:
        return np.asarray(vector, dtype=np.complex128)
    return np.asarray(w, dtype=np.complex128)


def sinr(h_comm: ChannelVector, h_sense: ChannelVector, w_comm, w_sense, noise_mw: float) -> float:
    """Linear SINR |h_c^H w_c|^2 / (noise + |h_s^H w_s|^2).

    Weight arguments may be raw complex vectors or objects exposing a
    .vector attribute (amplitude-scaled beam weights).
    """
    wc = _as_weight_vector(w_comm)
    ws = _as_weight_vector(w_sense)
    if wc.shape != h_comm.entries.shape or ws.shape != h_sense.entries.shape:
        raise ValueError("weight and channel dimensions do not match")
    signal = abs(np.vdot(h_comm.entries, wc)) ** 2
    interference = abs(np.vdot(h_sense.entries, ws)) ** 2
    return signal / (noise_mw + interference)


def achievable_rate(sinr_linear: float, bandwidth_hz: float) -> float:
    """Shannon rate B log2(1 + SINR), bit/s."""
    if sinr_linear < 0.0:
        raise ValueError("sinr must be non-negative")
    return bandwidth_hz * math.log2(1.0 + sinr_linear)
