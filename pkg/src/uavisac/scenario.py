"""World construction, random trajectories, and base-station association.

A scenario bundles the static world (base stations, target, area, channel and
array constants, power limits) and serializes to JSON with explicitly
suffixed unit names.  Trajectories are forward-cone random walks between the
fixed endpoints: every step has the full slot displacement, headings are drawn
inside a cone toward the goal, and the final slot snaps exactly onto the end
point, so the speed bound and endpoint constraints hold by construction.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from .beampattern import BeamWeights
from .channel import (
    EXPECTED,
    RADAR_LOS,
    ChannelParams,
    channel_vector,
    pathloss,
    sinr,
)
from .geometry import (
    ArrayConfig,
    GeometryError,
    Pose,
    RotationAngles,
    as_vec3,
    direction_angles,
    direction_unit,
    rotation_matrix,
    steering_vector,
)
from .units import from_db, to_db

SCENARIO_FORMAT_VERSION = 1

CONE_HALF_ANGLE_RAD = math.radians(30.0)
TURN_LIMIT_RAD = math.radians(10.0)

POLICY_CLOSEST = "closest"
POLICY_MIN_TARGET_ANGLE = "min_target_angle"
POLICY_MAX_SINR = "max_sinr"
POLICY_NN = "nn_model"

# default ground-station layout; positions are not published, so they live in
# the scenario file to keep experiments reproducible
_DEFAULT_GBS_XY = ((200.0, 200.0), (1200.0, 200.0), (700.0, 750.0), (200.0, 1300.0), (1200.0, 1300.0))


class InfeasibleTrajectoryError(RuntimeError):
    """Endpoints cannot be connected within the step budget."""


@dataclass
class Scenario:
    """Static world plus simulation constants."""

    area_m: tuple[float, float] = (1500.0, 1500.0)
    gbs_m: NDArray[np.float64] = field(
        default_factory=lambda: np.array([(x, y, 2.0) for x, y in _DEFAULT_GBS_XY])
    )
    target_m: NDArray[np.float64] = field(default_factory=lambda: np.array([350.0, 400.0, 0.0]))
    start_m: NDArray[np.float64] = field(default_factory=lambda: np.array([0.0, 0.0, 100.0]))
    end_m: NDArray[np.float64] = field(default_factory=lambda: np.array([700.0, 800.0, 100.0]))
    uav_altitude_m: float = 100.0
    v_max_mps: float = 10.0
    slot_s: float = 1.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    num_elements: int = 100
    p_max_mw: float = 1000.0
    gamma_sinr_db: float = 0.3
    eirp_max_dbm: float = 37.0
    sll_min_az_db: float = 20.0
    sll_min_el_db: float = 20.0
    num_trajectories: int = 100
    cost_k1: float = 1.0
    cost_k2: float = 1.0
    cost_threshold: float = 0.05
    counter_max: int = 200

    def __post_init__(self) -> None:
        self.gbs_m = np.atleast_2d(np.asarray(self.gbs_m, dtype=np.float64))
        self.target_m = as_vec3(self.target_m)
        self.start_m = as_vec3(self.start_m)
        self.end_m = as_vec3(self.end_m)
        if self.gbs_m.shape[0] < 1 or self.gbs_m.shape[1] != 3:
            raise ValueError("gbs_m must hold at least one (x, y, z) row")
        if self.uav_altitude_m <= float(np.max(self.gbs_m[:, 2])):
            raise ValueError("UAV altitude must exceed the base-station height")
        for name, point in (("start", self.start_m), ("end", self.end_m)):
            if not (0.0 <= point[0] <= self.area_m[0] and 0.0 <= point[1] <= self.area_m[1]):
                raise ValueError(f"{name} point lies outside the area")

    @property
    def num_gbs(self) -> int:
        return int(self.gbs_m.shape[0])

    @property
    def array(self) -> ArrayConfig:
        return ArrayConfig(num_elements=self.num_elements, carrier_hz=self.channel.carrier_hz)

    @property
    def gamma_sinr_linear(self) -> float:
        return from_db(self.gamma_sinr_db)

    @property
    def eirp_max_mw(self) -> float:
        return from_db(self.eirp_max_dbm)

    def to_json_dict(self) -> dict:
        ch = self.channel
        return {
            "format_version": SCENARIO_FORMAT_VERSION,
            "area_m": [float(v) for v in self.area_m],
            "gbs_m": [[float(v) for v in row] for row in self.gbs_m],
            "target_m": [float(v) for v in self.target_m],
            "start_m": [float(v) for v in self.start_m],
            "end_m": [float(v) for v in self.end_m],
            "uav_altitude_m": float(self.uav_altitude_m),
            "v_max_mps": float(self.v_max_mps),
            "slot_s": float(self.slot_s),
            "carrier_hz": float(ch.carrier_hz),
            "bandwidth_hz": float(ch.bandwidth_hz),
            "noise_power_dbm": to_db(ch.noise_mw),
            "kappa1": float(ch.kappa1),
            "kappa2": float(ch.kappa2),
            "kappa3": float(ch.kappa3),
            "absorption_per_m": float(ch.absorption_per_m),
            "nlos_attenuation": float(ch.nlos_attenuation),
            "radar_cross_section_m2": float(ch.radar_cross_section_m2),
            "num_elements": int(self.num_elements),
            "p_max_mw": float(self.p_max_mw),
            "gamma_sinr_db": float(self.gamma_sinr_db),
            "eirp_max_dbm": float(self.eirp_max_dbm),
            "sll_min_az_db": float(self.sll_min_az_db),
            "sll_min_el_db": float(self.sll_min_el_db),
            "num_trajectories": int(self.num_trajectories),
            "cost_k1": float(self.cost_k1),
            "cost_k2": float(self.cost_k2),
            "cost_threshold": float(self.cost_threshold),
            "counter_max": int(self.counter_max),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Scenario":
        channel = ChannelParams(
            kappa1=data["kappa1"],
            kappa2=data["kappa2"],
            kappa3=data["kappa3"],
            absorption_per_m=data["absorption_per_m"],
            nlos_attenuation=data["nlos_attenuation"],
            radar_cross_section_m2=data["radar_cross_section_m2"],
            noise_mw=from_db(data["noise_power_dbm"]),
            bandwidth_hz=data["bandwidth_hz"],
            carrier_hz=data["carrier_hz"],
        )
        return cls(
            area_m=tuple(data["area_m"]),
            gbs_m=np.asarray(data["gbs_m"], dtype=np.float64),
            target_m=np.asarray(data["target_m"], dtype=np.float64),
            start_m=np.asarray(data["start_m"], dtype=np.float64),
            end_m=np.asarray(data["end_m"], dtype=np.float64),
            uav_altitude_m=data["uav_altitude_m"],
            v_max_mps=data["v_max_mps"],
            slot_s=data["slot_s"],
            channel=channel,
            num_elements=data["num_elements"],
            p_max_mw=data["p_max_mw"],
            gamma_sinr_db=data["gamma_sinr_db"],
            eirp_max_dbm=data["eirp_max_dbm"],
            sll_min_az_db=data["sll_min_az_db"],
            sll_min_el_db=data["sll_min_el_db"],
            num_trajectories=data["num_trajectories"],
            cost_k1=data["cost_k1"],
            cost_k2=data["cost_k2"],
            cost_threshold=data["cost_threshold"],
            counter_max=data["counter_max"],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def content_hash(self) -> str:
        canonical = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class TrajectoryPoint:
    slot: int
    position: NDArray[np.float64]
    orientation: RotationAngles

    @property
    def pose(self) -> Pose:
        return Pose(position=self.position, angles=self.orientation)


@dataclass(frozen=True)
class Trajectory:
    id: int
    points: tuple[TrajectoryPoint, ...]

    def __len__(self) -> int:
        return len(self.points)


def orientation_from_motion(prev, nxt) -> RotationAngles:
    """Heading-from-motion orientation: yaw toward the step, pitch from climb.

    The third angle stays zero (no roll).  Zero displacement is degenerate;
    the caller keeps the previous orientation in that case.
    """
    p = as_vec3(prev)
    n = as_vec3(nxt)
    delta = n - p
    if float(np.linalg.norm(delta)) == 0.0:
        raise GeometryError("zero displacement has no heading")
    yaw = math.atan2(delta[1], delta[0])
    pitch = math.atan2(delta[2], math.hypot(delta[0], delta[1]))
    return RotationAngles(alpha=yaw, beta=pitch, gamma=0.0)


def _walk_positions(scenario: Scenario, rng: np.random.Generator) -> list[NDArray[np.float64]]:
    step = scenario.v_max_mps * scenario.slot_s
    if step <= 0.0:
        raise InfeasibleTrajectoryError("non-positive step budget")
    start = scenario.start_m.copy()
    end = scenario.end_m.copy()
    positions = [start.copy()]
    pos = start.copy()
    total = float(np.linalg.norm(end - start))
    max_slots = 100 * max(1, math.ceil(total / step)) + 100
    w, h = scenario.area_m
    heading = math.atan2(end[1] - start[1], end[0] - start[0])
    while float(np.linalg.norm(end - pos)) > step:
        if len(positions) > max_slots:
            raise InfeasibleTrajectoryError("endpoints too far apart for the step budget")
        base = math.atan2(end[1] - pos[1], end[0] - pos[0])
        nxt = None
        for _ in range(20):
            # forward cone toward the goal, with a per-slot turn-rate limit
            desired = base + rng.uniform(-CONE_HALF_ANGLE_RAD, CONE_HALF_ANGLE_RAD)
            turn = _wrap_angle(desired - heading)
            cand_heading = heading + max(-TURN_LIMIT_RAD, min(TURN_LIMIT_RAD, turn))
            off_base = _wrap_angle(cand_heading - base)
            cand_heading = base + max(
                -CONE_HALF_ANGLE_RAD, min(CONE_HALF_ANGLE_RAD, off_base)
            )
            cand = pos + step * np.array(
                [math.cos(cand_heading), math.sin(cand_heading), 0.0]
            )
            if 0.0 <= cand[0] <= w and 0.0 <= cand[1] <= h:
                nxt = cand
                heading = cand_heading
                break
        if nxt is None:
            # straight step toward the goal stays inside the convex area
            nxt = pos + step * np.array([math.cos(base), math.sin(base), 0.0])
            heading = base
        positions.append(nxt.copy())
        pos = nxt
    positions.append(end.copy())
    return positions


def generate_trajectories(scenario: Scenario, count: int, seed: int) -> list[Trajectory]:
    """Seeded forward-cone walks from the start point to the end point."""
    if count < 1:
        raise ValueError("count must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(count)
    trajectories = []
    for idx in range(count):
        rng = np.random.default_rng(seeds[idx])
        positions = _walk_positions(scenario, rng)
        points = []
        orientation = RotationAngles(0.0, 0.0, 0.0)
        for slot, pos in enumerate(positions):
            if slot + 1 < len(positions):
                orientation = orientation_from_motion(pos, positions[slot + 1])
            # the final point keeps the inbound heading
            points.append(TrajectoryPoint(slot=slot, position=pos, orientation=orientation))
        trajectories.append(Trajectory(id=idx, points=tuple(points)))
    return trajectories


def _wrap_angle(angle: float) -> float:
    return math.atan2(math.sin(angle), math.cos(angle))


def _matched_weights(scenario: Scenario, point: TrajectoryPoint, dest, eirp_dbm: float) -> BeamWeights:
    """Phase-matched full-aperture beam whose EIRP toward dest is eirp_dbm."""
    config = scenario.array
    entries = steering_vector(config, point.position, point.orientation, dest)
    direction = direction_angles(point.position, dest)
    rot_t = rotation_matrix(point.orientation).T
    ge = ((1.0 + (rot_t @ direction_unit(direction))[1]) / 2.0) ** 2
    gain = config.num_elements**2 * ge
    ppe = from_db(eirp_dbm) / gain if gain > 0.0 else 1e-12
    return BeamWeights(entries=entries, power_per_element_mw=ppe)


def associate(
    scenario: Scenario,
    point: TrajectoryPoint,
    policy: str,
    predictor: Callable[[TrajectoryPoint], int] | None = None,
) -> int:
    """Pick the serving ground station for one trajectory point.

    closest: smallest 3D distance.  min_target_angle: azimuth closest to the
    target azimuth.  max_sinr: highest SINR probing each station with a
    matched beam at the EIRP cap against the matched sensing beam.  Ties go
    to the lowest index.
    """
    if policy == POLICY_NN:
        if predictor is None:
            raise ValueError("nn_model association needs a predictor")
        return int(predictor(point))
    pos = point.position
    if policy == POLICY_CLOSEST:
        dists = np.linalg.norm(scenario.gbs_m - pos, axis=1)
        return int(np.argmin(dists))
    if policy == POLICY_MIN_TARGET_ANGLE:
        phi_target = direction_angles(pos, scenario.target_m).phi
        gaps = [
            abs(_wrap_angle(direction_angles(pos, gbs).phi - phi_target))
            for gbs in scenario.gbs_m
        ]
        return int(np.argmin(gaps))
    if policy == POLICY_MAX_SINR:
        w_sense = _matched_weights(scenario, point, scenario.target_m, scenario.eirp_max_dbm)
        h_sense = channel_vector(
            scenario.channel, scenario.array, pos, point.orientation, scenario.target_m, RADAR_LOS
        )
        best_idx, best_sinr = 0, -math.inf
        for idx, gbs in enumerate(scenario.gbs_m):
            w_comm = _matched_weights(scenario, point, gbs, scenario.eirp_max_dbm)
            h_comm = channel_vector(
                scenario.channel, scenario.array, pos, point.orientation, gbs, EXPECTED
            )
            value = sinr(h_comm, h_sense, w_comm, w_sense, scenario.channel.noise_mw)
            if value > best_sinr:
                best_idx, best_sinr = idx, value
        return best_idx
    raise ValueError(f"unknown association policy {policy!r}")


def min_required_eirp_dbm(
    scenario: Scenario,
    point: TrajectoryPoint,
    gbs_index: int,
    interference_mw: float = 0.0,
) -> float:
    """Minimum EIRP (dBm, uncapped) meeting the SINR threshold at one station.

    For a beam pointed at the station the pattern gain cancels between the
    radiated EIRP and the received power, leaving
    EIRP_min = gamma * (noise + interference) * g_e / PL.
    """
    gbs = scenario.gbs_m[gbs_index]
    gain = pathloss(scenario.channel, EXPECTED, point.position, gbs)
    direction = direction_angles(point.position, gbs)
    rot_t = rotation_matrix(point.orientation).T
    ge = ((1.0 + (rot_t @ direction_unit(direction))[1]) / 2.0) ** 2
    required_mw = (
        scenario.gamma_sinr_linear
        * (scenario.channel.noise_mw + interference_mw)
        * ge
        / gain
    )
    return to_db(required_mw)


class AssociationLabel(NamedTuple):
    gbs_index: int
    min_eirp_dbm: float
    feasible: bool


def label_optimal_association(
    scenario: Scenario,
    point: TrajectoryPoint,
    interference_mw: float = 0.0,
) -> AssociationLabel:
    """Best station in rate with the smallest required EIRP as tie-break.

    Every station feasible under the EIRP cap achieves the SINR threshold
    exactly at its minimum EIRP, so feasible candidates tie in rate and the
    tie-break selects the smallest requirement, then the lowest index.  When
    no station is feasible the highest-SINR station at the cap is returned,
    flagged infeasible.
    """
    noise = scenario.channel.noise_mw
    gamma = scenario.gamma_sinr_linear
    best: tuple | None = None
    best_label: AssociationLabel | None = None
    for idx in range(scenario.num_gbs):
        required_dbm = min_required_eirp_dbm(scenario, point, idx, interference_mw)
        feasible = required_dbm <= scenario.eirp_max_dbm
        if feasible:
            value = gamma
            eirp_dbm = required_dbm
        else:
            # SINR actually reached when transmitting at the cap
            value = gamma * from_db(scenario.eirp_max_dbm - required_dbm)
            eirp_dbm = scenario.eirp_max_dbm
        rate = scenario.channel.bandwidth_hz * math.log2(1.0 + value)
        key = (not feasible, -rate, eirp_dbm, idx)
        if best is None or key < best:
            best = key
            best_label = AssociationLabel(gbs_index=idx, min_eirp_dbm=eirp_dbm, feasible=feasible)
    assert best_label is not None
    return best_label


def nearest_other_gbs(scenario: Scenario, point: TrajectoryPoint, exclude: int, count: int = 2) -> list[int]:
    """Indices of the nearest stations other than the serving one."""
    dists = np.linalg.norm(scenario.gbs_m - point.position, axis=1)
    order = [int(i) for i in np.argsort(dists, kind="stable") if i != exclude]
    return order[:count]
