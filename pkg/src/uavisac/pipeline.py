"""End-to-end orchestration: dataset synthesis, dual-network training, evaluation.

Dataset generation walks seeded trajectories, associates a ground station per
slot, synthesizes the sensing and communication beams with the optimizer, and
stores features, encoded weight targets and the optimal association label.
Training fits the beamforming-weight network on pooled comm/sensing rows and
the association network on the optimal labels, splitting at the trajectory
point level so each point's beam pair stays on one side of the split.  All
stages are deterministic under a fixed master seed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from .beampattern import (
    BeamformingMatrix,
    BeamWeights,
    NullConflictError,
    SynthesisRequest,
    SynthesisResult,
    beampattern_gain,
    chebyshev_taper,
    eirp,
    element_gain,
    synthesize,
)
from .channel import EXPECTED, RADAR_LOS, achievable_rate, channel_vector, sinr
from .geometry import (
    DirectionAngles,
    Pose,
    RotationAngles,
    angular_separation,
    centered_grid_offsets,
    direction_angles,
    direction_unit,
    rotation_matrix,
)
from .neuralnet import Network, NetworkConfig, TrainConfig, TrainReport, forward, train
from .scenario import (
    POLICY_NN,
    AssociationLabel,
    Scenario,
    Trajectory,
    TrajectoryPoint,
    associate,
    generate_trajectories,
    label_optimal_association,
    min_required_eirp_dbm,
    nearest_other_gbs,
)
from .units import from_db, to_db

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
BUNDLE_FORMAT_VERSION = 1

POLICY_ALIASES = {
    "closest": "closest",
    "angle": "min_target_angle",
    "sinr": "max_sinr",
    "optimal": "optimal",
    "nn": POLICY_NN,
}

OPTIMIZER_SOURCE = "optimizer"
NN_SOURCE = "nn"

# beams steered behind the aperture plane (element gain under 0.02, roughly
# 136 degrees off broadside) are unserviceable for a front-facing patch panel
MIN_ELEMENT_GAIN = 0.02


@dataclass(frozen=True)
class Sample:
    """One trajectory point: features and optimizer weight targets."""

    trajectory_id: int
    slot: int
    position: NDArray[np.float64]
    orientation: RotationAngles
    gbs_index: int
    comm_features: NDArray[np.float64]
    sensing_features: NDArray[np.float64]
    comm_weights: NDArray[np.float64]
    sensing_weights: NDArray[np.float64]
    optimal_gbs: int

    def to_json_dict(self) -> dict:
        return {
            "trajectory_id": self.trajectory_id,
            "slot": self.slot,
            "position": [float(v) for v in self.position],
            "orientation": [float(v) for v in self.orientation],
            "gbs_index": self.gbs_index,
            "comm_features": [float(v) for v in self.comm_features],
            "sensing_features": [float(v) for v in self.sensing_features],
            "comm_weights": [float(v) for v in self.comm_weights],
            "sensing_weights": [float(v) for v in self.sensing_weights],
            "optimal_gbs": self.optimal_gbs,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Sample":
        return cls(
            trajectory_id=data["trajectory_id"],
            slot=data["slot"],
            position=np.asarray(data["position"], dtype=np.float64),
            orientation=RotationAngles(*data["orientation"]),
            gbs_index=data["gbs_index"],
            comm_features=np.asarray(data["comm_features"], dtype=np.float64),
            sensing_features=np.asarray(data["sensing_features"], dtype=np.float64),
            comm_weights=np.asarray(data["comm_weights"], dtype=np.float64),
            sensing_weights=np.asarray(data["sensing_weights"], dtype=np.float64),
            optimal_gbs=data["optimal_gbs"],
        )


@dataclass
class ModelBundle:
    """Both trained networks plus provenance metadata."""

    beamformer: Network
    association: Network
    scenario_hash: str
    num_gbs: int
    num_elements: int
    created: str
    beamformer_report: TrainReport
    association_report: TrainReport

    def save(self, path) -> None:
        data = {
            "format_version": BUNDLE_FORMAT_VERSION,
            "scenario_hash": self.scenario_hash,
            "num_gbs": self.num_gbs,
            "num_elements": self.num_elements,
            "created": self.created,
            "beamformer": self.beamformer.to_dict(),
            "association": self.association.to_dict(),
            "reports": {
                "beamformer": {
                    "train_loss": self.beamformer_report.train_loss,
                    "val_loss": self.beamformer_report.val_loss,
                    "val_beampattern_error": self.beamformer_report.val_metric,
                },
                "association": {
                    "train_loss": self.association_report.train_loss,
                    "val_loss": self.association_report.val_loss,
                },
            },
        }
        with open(path, "w") as fh:
            json.dump(data, fh)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ModelBundle":
        with open(path) as fh:
            data = json.load(fh)
        reports = data["reports"]
        bf_report = TrainReport(
            train_loss=reports["beamformer"]["train_loss"],
            val_loss=reports["beamformer"]["val_loss"],
            val_metric=reports["beamformer"]["val_beampattern_error"],
        )
        as_report = TrainReport(
            train_loss=reports["association"]["train_loss"],
            val_loss=reports["association"]["val_loss"],
        )
        return cls(
            beamformer=Network.from_dict(data["beamformer"]),
            association=Network.from_dict(data["association"]),
            scenario_hash=data["scenario_hash"],
            num_gbs=data["num_gbs"],
            num_elements=data["num_elements"],
            created=data["created"],
            beamformer_report=bf_report,
            association_report=as_report,
        )


@dataclass(frozen=True)
class EvalRecord:
    slot: int
    policy: str
    gbs_index: int
    eirp_dbm: float
    sinr_db: float
    rate_bps: float
    beampattern_gain: float


class EirpStats(NamedTuple):
    ecdf_values: NDArray[np.float64]
    ecdf_fractions: NDArray[np.float64]
    outage: dict[float, float]
    mean_rate_bps: float


def encode_complex(vec: NDArray[np.complex128]) -> NDArray[np.float64]:
    """Interleave (Re, Im) per element into a 2M real vector."""
    out = np.empty(2 * vec.size)
    out[0::2] = vec.real
    out[1::2] = vec.imag
    return out


def decode_complex(arr: NDArray[np.float64]) -> NDArray[np.complex128]:
    arr = np.asarray(arr, dtype=np.float64)
    return arr[0::2] + 1j * arr[1::2]


def _beam_from_vector(vec: NDArray[np.complex128]) -> BeamWeights:
    """Split an amplitude-scaled weight vector into entries and PPE."""
    peak = float(np.max(np.abs(vec)))
    if peak <= 0.0:
        return BeamWeights(entries=np.zeros_like(vec), power_per_element_mw=1e-12)
    scale = max(1.0, peak)
    return BeamWeights(entries=vec / scale, power_per_element_mw=scale**2)


def array_frame_direction(point: TrajectoryPoint, dest) -> DirectionAngles:
    """Direction angles of a destination expressed in the rotated array frame.

    The synthesized weights depend on the beam direction relative to the
    aperture, so network features carry array-frame angles; the platform
    rotation is absorbed here instead of being an unseen latent variable.
    """
    direction = direction_angles(point.position, dest)
    unit = rotation_matrix(point.orientation).T @ direction_unit(direction)
    theta = math.acos(min(1.0, max(-1.0, unit[2])))
    return DirectionAngles(theta=theta, phi=math.atan2(unit[1], unit[0]))


def comm_feature_vector(gbs_dir: DirectionAngles, nulls: Sequence[DirectionAngles],
                        eirp_dbm: float) -> NDArray[np.float64]:
    """(phi_gbs, theta_gbs, phi_n1, theta_n1, phi_n2, theta_n2, eirp_dbm)."""
    out = np.zeros(7)
    out[0], out[1] = gbs_dir.phi, gbs_dir.theta
    for i, null in enumerate(nulls[:2]):
        out[2 + 2 * i] = null.phi
        out[3 + 2 * i] = null.theta
    out[6] = eirp_dbm
    return out


def sensing_feature_vector(target_dir: DirectionAngles, eirp_dbm: float) -> NDArray[np.float64]:
    """(phi_target, theta_target, eirp_dbm, 0, 0, 0, 0)."""
    out = np.zeros(7)
    out[0], out[1], out[2] = target_dir.phi, target_dir.theta, eirp_dbm
    return out


def association_features(scenario: Scenario, point: TrajectoryPoint) -> NDArray[np.float64]:
    """Normalized planar position plus target direction angles."""
    target_dir = direction_angles(point.position, scenario.target_m)
    return np.array(
        [
            point.position[0] / scenario.area_m[0],
            point.position[1] / scenario.area_m[1],
            target_dir.phi / math.pi,
            target_dir.theta / math.pi,
        ]
    )


def _synthesis_request(scenario: Scenario, pointing: DirectionAngles, eirp_dbm: float,
                       nulls: Sequence[DirectionAngles]) -> SynthesisRequest:
    return SynthesisRequest(
        pointing=pointing,
        sll_min_az_db=scenario.sll_min_az_db,
        sll_min_el_db=scenario.sll_min_el_db,
        eirp_target_dbm=eirp_dbm,
        nulls=tuple(nulls),
        k1=scenario.cost_k1,
        k2=scenario.cost_k2,
        threshold=scenario.cost_threshold,
        counter_max=scenario.counter_max,
    )


def sensing_eirp_target_dbm(scenario: Scenario, point: TrajectoryPoint) -> float:
    """EIRP target for the sensing beam: half the power budget, EIRP-capped.

    The sensing beam spends the available transmit power on the target, so
    its per-element power is sized from half the slot budget; the equivalent
    EIRP follows from the nominal full-aperture taper sums and the element
    gain toward the target, clamped to the scenario EIRP cap.
    """
    side = scenario.array.side
    tx = chebyshev_taper(side, scenario.sll_min_az_db)
    tz = chebyshev_taper(side, scenario.sll_min_el_db)
    sum_amp = float(tx.sum() * tz.sum())
    sum_sq = float((tx**2).sum() * (tz**2).sum())
    ge = element_gain(array_frame_direction(point, scenario.target_m))
    eirp_mw = 0.5 * scenario.p_max_mw * sum_amp**2 * ge / sum_sq
    return min(scenario.eirp_max_dbm, to_db(eirp_mw))


def _sensing_interference_mw(scenario: Scenario, point: TrajectoryPoint,
                             sensing: BeamWeights) -> float:
    h_sense = channel_vector(
        scenario.channel,
        scenario.array,
        point.position,
        point.orientation,
        scenario.target_m,
        RADAR_LOS,
    )
    return float(abs(np.vdot(h_sense.entries, sensing.vector)) ** 2)


def _enforce_power_budget(matrix: BeamformingMatrix, p_max_mw: float) -> BeamformingMatrix:
    """Scale both beams down proportionally when the slot exceeds the budget."""
    total = matrix.total_power_mw
    if total <= p_max_mw:
        return matrix
    ratio = p_max_mw / total
    return BeamformingMatrix(
        sensing=BeamWeights(matrix.sensing.entries,
                            matrix.sensing.power_per_element_mw * ratio),
        comm=BeamWeights(matrix.comm.entries,
                         matrix.comm.power_per_element_mw * ratio),
    )


@dataclass(frozen=True)
class PointSynthesis:
    """Both optimizer beams for one trajectory point plus bookkeeping."""

    gbs_index: int
    sensing: SynthesisResult
    comm: SynthesisResult
    matrix: BeamformingMatrix
    nulls: tuple[DirectionAngles, ...]
    comm_eirp_dbm: float
    sensing_eirp_dbm: float
    interference_mw: float
    label: AssociationLabel

    @property
    def converged(self) -> bool:
        return self.sensing.converged and self.comm.converged


def synthesize_point(
    scenario: Scenario,
    point: TrajectoryPoint,
    gbs_index: int,
    lenient: bool = False,
) -> PointSynthesis:
    """Run the optimizer for both beams of one trajectory point.

    The sensing beam takes half the power budget toward the target (EIRP
    capped); the communication beam gets the minimum EIRP meeting the SINR
    constraint at the serving station given the sensing interference, capped
    at the scenario maximum.  With lenient=True a null conflicting with the
    pointing direction is dropped instead of raised.
    """
    pose = point.pose
    config = scenario.array
    target_dir = direction_angles(point.position, scenario.target_m)
    prelim_dbm = sensing_eirp_target_dbm(scenario, point)
    sensing_res = synthesize(_synthesis_request(scenario, target_dir, prelim_dbm, ()), config, pose)
    interference = _sensing_interference_mw(scenario, point, sensing_res.weights)
    comm_eirp = min(
        min_required_eirp_dbm(scenario, point, gbs_index, interference),
        scenario.eirp_max_dbm,
    )
    gbs_dir = direction_angles(point.position, scenario.gbs_m[gbs_index])
    null_indices = nearest_other_gbs(scenario, point, gbs_index, count=2)
    nulls = tuple(
        direction_angles(point.position, scenario.gbs_m[i]) for i in null_indices
    )
    try:
        comm_res = synthesize(
            _synthesis_request(scenario, gbs_dir, comm_eirp, nulls), config, pose
        )
    except NullConflictError:
        if not lenient:
            raise
        kept = tuple(
            n for n in nulls if math.degrees(angular_separation(n, gbs_dir)) >= 1.0
        )
        logger.warning("dropping null conflicting with pointing at slot %d", point.slot)
        comm_res = synthesize(
            _synthesis_request(scenario, gbs_dir, comm_eirp, kept), config, pose
        )
        nulls = kept
    label = label_optimal_association(scenario, point, interference)
    matrix = _enforce_power_budget(
        BeamformingMatrix(sensing=sensing_res.weights, comm=comm_res.weights),
        scenario.p_max_mw,
    )
    return PointSynthesis(
        gbs_index=gbs_index,
        sensing=sensing_res,
        comm=comm_res,
        matrix=matrix,
        nulls=nulls,
        comm_eirp_dbm=comm_eirp,
        sensing_eirp_dbm=prelim_dbm,
        interference_mw=interference,
        label=label,
    )


def _associate_for_policy(scenario: Scenario, point: TrajectoryPoint, policy: str,
                          predictor=None) -> int:
    if policy == "optimal":
        return label_optimal_association(scenario, point, 0.0).gbs_index
    return associate(scenario, point, policy, predictor)


def generate_dataset(
    scenario: Scenario, num_trajectories: int, policy: str, seed: int
) -> list[Sample]:
    """Optimizer-labeled dataset over seeded trajectories.

    Points where either beam synthesis fails to converge are skipped and
    logged; an entirely empty dataset raises.
    """
    policy = POLICY_ALIASES.get(policy, policy)
    trajectories = generate_trajectories(scenario, num_trajectories, seed)
    samples: list[Sample] = []
    skipped = 0
    for traj in trajectories:
        for point in traj.points:
            k = _associate_for_policy(scenario, point, policy)
            if (
                element_gain(array_frame_direction(point, scenario.target_m)) < MIN_ELEMENT_GAIN
                or element_gain(array_frame_direction(point, scenario.gbs_m[k])) < MIN_ELEMENT_GAIN
            ):
                skipped += 1
                logger.warning(
                    "trajectory %d slot %d: beam outside the serviceable field of view, skipping",
                    traj.id,
                    point.slot,
                )
                continue
            try:
                ps = synthesize_point(scenario, point, k)
            except NullConflictError:
                skipped += 1
                logger.warning(
                    "trajectory %d slot %d: null conflict, skipping", traj.id, point.slot
                )
                continue
            if not ps.converged:
                skipped += 1
                logger.warning(
                    "trajectory %d slot %d: optimizer did not converge, skipping",
                    traj.id,
                    point.slot,
                )
                continue
            gbs_dir = array_frame_direction(point, scenario.gbs_m[k])
            target_dir = array_frame_direction(point, scenario.target_m)
            null_dirs = [
                array_frame_direction(point, scenario.gbs_m[i])
                for i in nearest_other_gbs(scenario, point, k, count=2)
            ][: len(ps.nulls)]
            samples.append(
                Sample(
                    trajectory_id=traj.id,
                    slot=point.slot,
                    position=point.position,
                    orientation=point.orientation,
                    gbs_index=k,
                    comm_features=comm_feature_vector(gbs_dir, null_dirs, ps.comm_eirp_dbm),
                    sensing_features=sensing_feature_vector(target_dir, ps.sensing_eirp_dbm),
                    comm_weights=encode_complex(ps.matrix.comm.vector),
                    sensing_weights=encode_complex(ps.matrix.sensing.vector),
                    optimal_gbs=ps.label.gbs_index,
                )
            )
    if not samples:
        raise RuntimeError("dataset is empty: no trajectory point converged")
    if skipped:
        logger.info("dataset generation skipped %d non-converged points", skipped)
    return samples


def write_dataset_jsonl(path, samples: Sequence[Sample], scenario: Scenario,
                        policy: str, seed: int) -> None:
    """First line carries metadata (scenario, policy, seed); then one Sample per line."""
    with open(path, "w") as fh:
        meta = {
            "meta": {
                "format_version": DATASET_FORMAT_VERSION,
                "policy": policy,
                "seed": seed,
                "scenario": scenario.to_json_dict(),
            }
        }
        fh.write(json.dumps(meta) + "\n")
        for sample in samples:
            fh.write(json.dumps(sample.to_json_dict()) + "\n")


def read_dataset_jsonl(path) -> tuple[list[Sample], Scenario, dict]:
    with open(path) as fh:
        first = json.loads(fh.readline())
        if "meta" not in first:
            raise ValueError("dataset file lacks the metadata header line")
        meta = first["meta"]
        scenario = Scenario.from_json_dict(meta["scenario"])
        samples = [Sample.from_json_dict(json.loads(line)) for line in fh if line.strip()]
    return samples, scenario, meta


def _target_steering_phases(scenario: Scenario, sample: Sample) -> NDArray[np.complex128]:
    config = scenario.array
    direction = direction_angles(sample.position, scenario.target_m)
    rot_t = rotation_matrix(sample.orientation).T
    unit = rot_t @ direction_unit(direction)
    return np.exp(1j * config.wavenumber * (centered_grid_offsets(config) @ unit))


def train_models(samples: Sequence[Sample], scenario: Scenario,
                 config: TrainConfig) -> ModelBundle:
    """Train the beamformer and association networks on one dataset.

    The seeded 70/30 split is taken over trajectory points; the beamformer
    sees two rows per point (comm then sensing) and is scored each epoch by
    the normalized beampattern-gain mismatch at the target over the
    validation points.
    """
    n = len(samples)
    if n < 10:
        raise ValueError("dataset too small to train on")
    m = scenario.num_elements
    perm = np.random.default_rng(config.seed).permutation(n)
    n_train = max(1, min(n - 1, int(round(config.train_fraction * n))))
    train_points = np.sort(perm[:n_train])
    val_points = np.sort(perm[n_train:])

    x_rows = np.zeros((2 * n, 7))
    y_rows = np.zeros((2 * n, 2 * m))
    for i, sample in enumerate(samples):
        x_rows[2 * i] = sample.comm_features
        x_rows[2 * i + 1] = sample.sensing_features
        y_rows[2 * i] = sample.comm_weights
        y_rows[2 * i + 1] = sample.sensing_weights
    train_rows = np.sort(np.concatenate([2 * train_points, 2 * train_points + 1]))
    val_rows = np.sort(np.concatenate([2 * val_points, 2 * val_points + 1]))

    steering = {int(i): _target_steering_phases(scenario, samples[i]) for i in val_points}
    b_star = {}
    for i in val_points:
        a = steering[int(i)]
        wc = decode_complex(samples[i].comm_weights)
        ws = decode_complex(samples[i].sensing_weights)
        b_star[int(i)] = abs(np.vdot(a, ws)) ** 2 + abs(np.vdot(a, wc)) ** 2
    b_star_sq_mean = float(np.mean([v**2 for v in b_star.values()])) if b_star else 1.0

    def beampattern_metric(net: Network, xv, yv, val_idx) -> float:
        preds = forward(net, xv)
        row_of = {int(r): j for j, r in enumerate(val_idx)}
        errors = []
        for i in val_points:
            i = int(i)
            a = steering[i]
            wc = decode_complex(preds[row_of[2 * i]])
            ws = decode_complex(preds[row_of[2 * i + 1]])
            b = abs(np.vdot(a, ws)) ** 2 + abs(np.vdot(a, wc)) ** 2
            errors.append((b_star[i] - b) ** 2)
        if not errors:
            return float("nan")
        return float(np.mean(errors) / max(b_star_sq_mean, 1e-300))

    bf_config = NetworkConfig(layer_sizes=(7, 50, 2 * m), hidden_activation="relu",
                              seed=config.seed)
    beamformer = Network(bf_config)
    beamformer, bf_report = train(
        beamformer,
        x_rows,
        y_rows,
        config,
        val_metric=beampattern_metric if val_points.size else None,
        split=(train_rows, val_rows),
    )

    k = scenario.num_gbs
    denom = float(max(k - 1, 1))
    xa = np.stack([association_features(scenario, _sample_point(s)) for s in samples])
    ya = np.array([[s.optimal_gbs / denom] for s in samples])
    assoc_config = NetworkConfig(layer_sizes=(4, 64, 32, 1), hidden_activation="relu",
                                 seed=config.seed + 1)
    association = Network(assoc_config)
    association, assoc_report = train(
        association, xa, ya, config, split=(train_points, val_points)
    )

    return ModelBundle(
        beamformer=beamformer,
        association=association,
        scenario_hash=scenario.content_hash(),
        num_gbs=k,
        num_elements=m,
        created=datetime.now(timezone.utc).isoformat(),
        beamformer_report=bf_report,
        association_report=assoc_report,
    )


def _sample_point(sample: Sample) -> TrajectoryPoint:
    return TrajectoryPoint(
        slot=sample.slot, position=sample.position, orientation=sample.orientation
    )


def predict_association(bundle: ModelBundle, scenario: Scenario,
                        point: TrajectoryPoint) -> int:
    """Forward pass, de-normalize and clamp to a valid station index."""
    features = association_features(scenario, point)
    raw = float(forward(bundle.association, features)[0])
    k = scenario.num_gbs
    index = int(round(raw * max(k - 1, 1)))
    return min(max(index, 0), k - 1)


def predict_matrix(
    bundle: ModelBundle,
    scenario: Scenario,
    point: TrajectoryPoint,
    gbs_index: int,
) -> tuple[BeamformingMatrix, float]:
    """Beamforming matrix from the weight network for one point.

    Returns the matrix and the commanded EIRP (dBm).  Predicted beams are
    rescaled if they exceed the EIRP cap or the power budget.
    """
    pose = point.pose
    target_dir = direction_angles(point.position, scenario.target_m)
    gbs_dir = direction_angles(point.position, scenario.gbs_m[gbs_index])
    prelim_dbm = sensing_eirp_target_dbm(scenario, point)
    sens_feat = sensing_feature_vector(
        array_frame_direction(point, scenario.target_m), prelim_dbm
    )
    sensing = _beam_from_vector(decode_complex(forward(bundle.beamformer, sens_feat)))
    sensing = _cap_beam(sensing, scenario, pose, target_dir)
    interference = _sensing_interference_mw(scenario, point, sensing)
    comm_eirp = min(
        min_required_eirp_dbm(scenario, point, gbs_index, interference),
        scenario.eirp_max_dbm,
    )
    null_indices = nearest_other_gbs(scenario, point, gbs_index, count=2)
    null_dirs = [array_frame_direction(point, scenario.gbs_m[i]) for i in null_indices]
    comm_feat = comm_feature_vector(
        array_frame_direction(point, scenario.gbs_m[gbs_index]), null_dirs, comm_eirp
    )
    comm = _beam_from_vector(decode_complex(forward(bundle.beamformer, comm_feat)))
    comm = _cap_beam(comm, scenario, pose, gbs_dir)
    return (
        _enforce_power_budget(
            BeamformingMatrix(sensing=sensing, comm=comm), scenario.p_max_mw
        ),
        comm_eirp,
    )


def _cap_beam(beam: BeamWeights, scenario: Scenario, pose: Pose,
              pointing: DirectionAngles) -> BeamWeights:
    achieved = eirp(beam, scenario.array, pose, pointing)
    if achieved <= scenario.eirp_max_dbm or math.isinf(achieved):
        return beam
    factor = from_db(scenario.eirp_max_dbm - achieved)
    return BeamWeights(entries=beam.entries,
                       power_per_element_mw=beam.power_per_element_mw * factor)


def evaluate_trajectory(
    scenario: Scenario,
    trajectory: Trajectory,
    policy: str,
    weight_source: str = OPTIMIZER_SOURCE,
    bundle: ModelBundle | None = None,
    matrices_out: list | None = None,
) -> list[EvalRecord]:
    """Per-slot association, beamforming and link metrics along one trajectory.

    The recorded EIRP is the minimum required by the chosen station (capped);
    SINR, rate, and beampattern gain come from the actually emitted matrix.
    """
    policy = POLICY_ALIASES.get(policy, policy)
    if weight_source not in (OPTIMIZER_SOURCE, NN_SOURCE):
        raise ValueError(f"unknown weight source {weight_source!r}")
    if (weight_source == NN_SOURCE or policy == POLICY_NN) and bundle is None:
        raise ValueError("a trained bundle is required for NN evaluation")
    predictor = None
    if policy == POLICY_NN:
        predictor = lambda point: predict_association(bundle, scenario, point)
    records = []
    for point in trajectory.points:
        k = _associate_for_policy(scenario, point, policy, predictor)
        if weight_source == OPTIMIZER_SOURCE:
            ps = synthesize_point(scenario, point, k, lenient=True)
            matrix = ps.matrix
            required_dbm = ps.comm_eirp_dbm
        else:
            matrix, required_dbm = predict_matrix(bundle, scenario, point, k)
        if matrices_out is not None:
            matrices_out.append(matrix)
        h_comm = channel_vector(
            scenario.channel, scenario.array, point.position, point.orientation,
            scenario.gbs_m[k], EXPECTED,
        )
        h_sense = channel_vector(
            scenario.channel, scenario.array, point.position, point.orientation,
            scenario.target_m, RADAR_LOS,
        )
        value = sinr(h_comm, h_sense, matrix.comm, matrix.sensing, scenario.channel.noise_mw)
        rate = achievable_rate(value, scenario.channel.bandwidth_hz)
        bgain = beampattern_gain(matrix, scenario.array, point.pose, scenario.target_m)
        records.append(
            EvalRecord(
                slot=point.slot,
                policy=policy,
                gbs_index=k,
                eirp_dbm=required_dbm,
                sinr_db=to_db(value),
                rate_bps=rate,
                beampattern_gain=bgain,
            )
        )
    return records


def eirp_stats(records: Sequence[EvalRecord], thresholds: Sequence[float]) -> EirpStats:
    """ECDF of per-slot EIRP, outage per threshold, and the mean rate."""
    if not records:
        raise ValueError("no records to summarize")
    eirps = np.array([r.eirp_dbm for r in records], dtype=np.float64)
    order = np.sort(eirps)
    fractions = np.arange(1, eirps.size + 1) / eirps.size
    outage = {float(t): float(np.mean(eirps > t)) for t in thresholds}
    mean_rate = float(np.mean([r.rate_bps for r in records]))
    return EirpStats(
        ecdf_values=order, ecdf_fractions=fractions, outage=outage, mean_rate_bps=mean_rate
    )


RECORD_FIELDS = ("slot", "policy", "gbs_index", "eirp_dbm", "sinr_db", "rate_bps", "beampattern_gain")


def write_records_csv(path, records: Sequence[EvalRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.slot,
                    r.policy,
                    r.gbs_index,
                    repr(r.eirp_dbm),
                    repr(r.sinr_db),
                    repr(r.rate_bps),
                    repr(r.beampattern_gain),
                ]
            )


def read_records_csv(path) -> list[EvalRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                EvalRecord(
                    slot=int(row["slot"]),
                    policy=row["policy"],
                    gbs_index=int(row["gbs_index"]),
                    eirp_dbm=float(row["eirp_dbm"]),
                    sinr_db=float(row["sinr_db"]),
                    rate_bps=float(row["rate_bps"]),
                    beampattern_gain=float(row["beampattern_gain"]),
                )
            )
    return records


def write_stats_csv(path, stats: EirpStats) -> None:
    """`kind,key,value` rows: ecdf points, outage fractions, mean rate."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "key", "value"])
        for value, fraction in zip(stats.ecdf_values, stats.ecdf_fractions):
            writer.writerow(["ecdf", repr(float(value)), repr(float(fraction))])
        for threshold, fraction in stats.outage.items():
            writer.writerow(["outage", repr(threshold), repr(fraction)])
        writer.writerow(["mean_rate_bps", "", repr(stats.mean_rate_bps)])
