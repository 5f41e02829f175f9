"""Array radiation patterns and the dual-beam synthesis loop.

The synthesizer builds Chebyshev-tapered, phase-steered weights for a g-by-v
active block of the planar array, projects nulls out of the weight vector,
solves the per-element power from the EIRP target in closed form, and scores
each candidate by the relative sidelobe-level and EIRP mismatch.  Candidates
are swept deterministically: taper setpoints first at the full aperture, then
per-plane refinement, reducing the active block only when the full aperture
cannot meet the sidelobe minima.

Pattern cuts, SLL extraction and EIRP evaluation share one code path, so the
achieved values reported by a synthesis result can be re-derived from its
weights.  Everything here is pure given its inputs; results are immutable.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .geometry import (
    ArrayConfig,
    DirectionAngles,
    Pose,
    angular_separation,
    centered_grid_offsets,
    direction_angles,
    direction_unit,
    rotation_matrix,
)
from .units import from_db, to_db

GRID_STEP_DEG = 0.05
NULL_CONFLICT_DEG = 1.0
MIN_TAPER_SLL_DB = 5.0
MAIN_LOBE_MIN_DEPTH_DB = 6.0
_DB_FLOOR = 1e-40


class NullConflictError(ValueError):
    """A requested null lies within one degree of the pointing direction."""


@dataclass(frozen=True)
class BeamWeights:
    """Normalized complex excitations plus the per-element power scale."""

    entries: NDArray[np.complex128]
    power_per_element_mw: float

    def __post_init__(self) -> None:
        if self.power_per_element_mw <= 0.0:
            raise ValueError("power_per_element_mw must be positive")
        if np.max(np.abs(self.entries)) > 1.0 + 1e-9:
            raise ValueError("weight amplitudes must not exceed 1")

    @property
    def vector(self) -> NDArray[np.complex128]:
        """Amplitude-scaled weights sqrt(PPE) * entries."""
        return math.sqrt(self.power_per_element_mw) * self.entries

    @property
    def total_power_mw(self) -> float:
        return self.power_per_element_mw * float(np.sum(np.abs(self.entries) ** 2))


@dataclass(frozen=True)
class BeamformingMatrix:
    """Sensing and communication beams transmitted in the same slot."""

    sensing: BeamWeights
    comm: BeamWeights

    @property
    def total_power_mw(self) -> float:
        return self.sensing.total_power_mw + self.comm.total_power_mw

    def satisfies_budget(self, p_max_mw: float) -> bool:
        return self.total_power_mw <= p_max_mw * (1.0 + 1e-12)


@dataclass(frozen=True)
class SynthesisRequest:
    """Inputs of one synthesis run: pointing, SLL minima, EIRP target, nulls."""

    pointing: DirectionAngles
    sll_min_az_db: float
    sll_min_el_db: float
    eirp_target_dbm: float
    nulls: tuple[DirectionAngles, ...] = ()
    k1: float = 1.0
    k2: float = 1.0
    threshold: float = 0.05
    counter_max: int = 200

    def __post_init__(self) -> None:
        if self.sll_min_az_db <= 0.0 or self.sll_min_el_db <= 0.0:
            raise ValueError("sidelobe minima must be positive dB values")
        if self.counter_max < 1:
            raise ValueError("counter_max must be at least 1")


@dataclass(frozen=True)
class SynthesisResult:
    weights: BeamWeights
    achieved_sll_az_db: float
    achieved_sll_el_db: float
    achieved_eirp_dbm: float
    active_rows: int
    active_cols: int
    iterations: int
    cost: float
    converged: bool

    @property
    def active_elements(self) -> int:
        return self.active_rows * self.active_cols


@dataclass(frozen=True)
class PatternCut:
    """One principal cut: strictly increasing angles with peak at 0 dB."""

    plane: str
    angles_rad: NDArray[np.float64]
    gains_db: NDArray[np.float64]


def element_gain(direction: DirectionAngles) -> float:
    """Cardioid element power pattern about the unrotated broadside (+y)."""
    cos_off = math.sin(direction.phi) * math.sin(direction.theta)
    return ((1.0 + cos_off) / 2.0) ** 2


def _element_gain_units(units_in_array_frame: NDArray[np.float64]) -> NDArray[np.float64]:
    # cos of the off-broadside angle is the y component of the array-frame unit
    return ((1.0 + units_in_array_frame[:, 1]) / 2.0) ** 2


def _weight_entries(weights) -> NDArray[np.complex128]:
    entries = getattr(weights, "entries", weights)
    return np.asarray(entries, dtype=np.complex128)


def array_gain(
    weights, config: ArrayConfig, uav_pos, angles, direction: DirectionAngles
) -> float:
    """Linear power gain |a(dir)^H w|^2 g_e(dir) of the posed array.

    Far-field evaluation: only the element offsets matter, not the absolute
    array position.  Accepts BeamWeights or a raw complex vector (normalized
    excitations, not amplitude-scaled).
    """
    w = _weight_entries(weights)
    if w.shape[0] != config.num_elements:
        raise ValueError("weight length does not match the array size")
    rot = rotation_matrix(angles)
    unit_arr = rot.T @ direction_unit(direction)
    phases = config.wavenumber * (centered_grid_offsets(config) @ unit_arr)
    a = np.exp(1j * phases)
    ge = ((1.0 + unit_arr[1]) / 2.0) ** 2
    return float(abs(np.vdot(a, w)) ** 2 * ge)


def _cut_grid(plane: str, pointing: DirectionAngles, step_deg: float):
    """Angle samples and global-frame unit vectors for one principal cut."""
    step = math.radians(step_deg)
    if plane == "azimuth":
        angles = np.arange(-math.pi, math.pi, step)
        theta = pointing.theta
        units = np.column_stack(
            [
                np.cos(angles) * math.sin(theta),
                np.sin(angles) * math.sin(theta),
                np.full_like(angles, math.cos(theta)),
            ]
        )
    elif plane == "elevation":
        angles = np.arange(0.0, math.pi + step / 2, step)
        phi = pointing.phi
        units = np.column_stack(
            [
                math.cos(phi) * np.sin(angles),
                math.sin(phi) * np.sin(angles),
                np.cos(angles),
            ]
        )
    else:
        raise ValueError(f"unknown cut plane {plane!r}")
    return angles, units


def _cut_arc(angles, units_arr, point_index: int, circular: bool):
    """Contiguous run of cut samples belonging to the beam.

    Keeps samples within 90 degrees of the pointing along the cut parameter
    and inside the beam's own half-space: a planar aperture radiates an exact
    mirror image through its own plane, which a ground plane suppresses in
    hardware, so the mirror hemisphere never enters the sidelobe accounting.
    Returns (angles, row indices) with strictly increasing angles (azimuth
    arcs crossing the wrap point are unwrapped past pi).
    """
    n = angles.size
    side = 1.0 if units_arr[point_index, 1] >= 0.0 else -1.0
    keep = side * units_arr[:, 1] >= -1e-12
    delta = angles - angles[point_index]
    if circular:
        delta = np.arctan2(np.sin(delta), np.cos(delta))
    keep &= np.abs(delta) <= math.pi / 2 + 1e-12
    if keep.all():
        return angles, np.arange(n)
    if not circular:
        lo = point_index
        while lo > 0 and keep[lo - 1]:
            lo -= 1
        hi = point_index
        while hi < n - 1 and keep[hi + 1]:
            hi += 1
        idx = np.arange(lo, hi + 1)
        return angles[idx], idx
    lo = point_index
    while keep[(lo - 1) % n] and (point_index - lo) < n - 1:
        lo -= 1
    hi = point_index
    while keep[(hi + 1) % n] and (hi - lo) < n - 1:
        hi += 1
    idx = np.arange(lo, hi + 1) % n
    arc_angles = angles[idx].copy()
    wrapped = np.nonzero(np.diff(arc_angles) < 0)[0]
    if wrapped.size:
        arc_angles[wrapped[0] + 1 :] += 2.0 * math.pi
    return arc_angles, idx


class _PatternEvaluator:
    """Caches posed steering matrices for both principal cuts of one request."""

    def __init__(
        self,
        config: ArrayConfig,
        pose: Pose,
        pointing: DirectionAngles,
        step_deg: float = GRID_STEP_DEG,
    ):
        self.config = config
        self.pointing = pointing
        rot = rotation_matrix(pose.angles)
        self.offsets = centered_grid_offsets(config)
        self.cuts: dict[str, tuple] = {}
        for plane in ("azimuth", "elevation"):
            angles, units = _cut_grid(plane, pointing, step_deg)
            units_arr = units @ rot  # row i is R^T u_i
            if plane == "azimuth":
                point_angle = math.atan2(math.sin(pointing.phi), math.cos(pointing.phi))
                point_index = int(np.argmin(np.abs(angles - point_angle)))
            else:
                point_index = int(np.argmin(np.abs(angles - pointing.theta)))
            arc_angles, idx = _cut_arc(angles, units_arr, point_index, plane == "azimuth")
            units_arc = units_arr[idx]
            emat = _kernels.steering_matrix(units_arc, self.offsets, config.wavenumber)
            gains = _element_gain_units(units_arc)
            self.cuts[plane] = (arc_angles, emat, gains)
        unit_point = rot.T @ direction_unit(pointing)
        self.point_steering = np.exp(1j * config.wavenumber * (self.offsets @ unit_point))
        self.point_element_gain = ((1.0 + unit_point[1]) / 2.0) ** 2

    def cut_gains_db(self, plane: str, weights: NDArray[np.complex128]):
        angles, emat, ge = self.cuts[plane]
        power = _kernels.cut_power(emat, weights) * ge
        peak = power.max()
        if peak <= 0.0:
            return angles, np.full(power.shape, -400.0)
        norm = np.maximum(power / peak, _DB_FLOOR)
        return angles, 10.0 * np.log10(norm)

    def gain_at_pointing(self, weights: NDArray[np.complex128]) -> float:
        af = abs(np.vdot(self.point_steering, weights)) ** 2
        return float(af * self.point_element_gain)


def pattern_cut(
    weights,
    config: ArrayConfig,
    pose: Pose,
    plane: str,
    pointing: DirectionAngles,
    step_deg: float = GRID_STEP_DEG,
) -> PatternCut:
    """Principal cut through the pointing direction, normalized to 0 dB peak.

    The azimuth cut fixes theta at the pointing value and sweeps phi; the
    elevation cut fixes phi and sweeps theta.  Both cover up to 90 degrees on
    each side of the beam within its own hemisphere (the mirror image through
    the aperture plane is excluded, as a ground plane would enforce).
    """
    if step_deg > 0.1:
        raise ValueError("cut grid step must be at most 0.1 degrees")
    ev = _PatternEvaluator(config, pose, pointing, step_deg)
    angles, gains_db = ev.cut_gains_db(plane, _weight_entries(weights))
    return PatternCut(plane=plane, angles_rad=angles, gains_db=gains_db)


def _sll_from_gains(gains_db: NDArray[np.float64]) -> float:
    gains = np.asarray(gains_db, dtype=np.float64)
    n = gains.size
    peak = int(np.argmax(gains))
    # a boundary minimum must sit well below the peak; shallower dips are
    # main-lobe ripple (element-pattern lift near the cut edge), not nulls
    thresh = gains[peak] - MAIN_LOBE_MIN_DEPTH_DB
    left = peak
    while left > 0 and not (gains[left - 1] > gains[left] and gains[left] <= thresh):
        left -= 1
    right = peak
    while right < n - 1 and not (gains[right + 1] > gains[right] and gains[right] <= thresh):
        right += 1
    outside = np.concatenate([gains[:left], gains[right + 1 :]])
    if outside.size == 0:
        return math.inf
    return float(gains[peak] - outside.max())


def extract_sll(cut: PatternCut) -> float:
    """Sidelobe level in dB below the peak; +inf when no sidelobe exists.

    The main lobe spans the contiguous region around the global peak down to
    the first sufficiently deep local minimum on each side; everything beyond
    counts as sidelobe.
    """
    return _sll_from_gains(cut.gains_db)


def eirp(
    weights: BeamWeights, config: ArrayConfig, pose: Pose, pointing: DirectionAngles
) -> float:
    """Radiated EIRP toward the pointing direction, dBm.

    Per-element power times the array power gain; -inf when the pattern has a
    null at the pointing direction.
    """
    gain = array_gain(weights, config, pose.position, pose.angles, pointing)
    return to_db(weights.power_per_element_mw * gain)


def chebyshev_taper(n: int, sll_db: float) -> NDArray[np.float64]:
    """Dolph-Chebyshev amplitude taper, max-normalized, equiripple at -sll_db."""
    if n < 2:
        raise ValueError("taper needs at least two elements")
    if sll_db <= 0.0:
        raise ValueError("sidelobe level must be positive dB")
    from scipy.signal.windows import chebwin

    with warnings.catch_warnings():
        # chebwin warns below 45 dB attenuation; low setpoints are intended here
        warnings.simplefilter("ignore")
        return np.asarray(chebwin(n, at=float(sll_db)), dtype=np.float64)


def _null_basis(
    config: ArrayConfig, pose: Pose, nulls: Sequence[DirectionAngles]
) -> NDArray[np.complex128]:
    rot_t = rotation_matrix(pose.angles).T
    offsets = centered_grid_offsets(config)
    cols = [
        np.exp(1j * config.wavenumber * (offsets @ (rot_t @ direction_unit(null))))
        for null in nulls
    ]
    return np.column_stack(cols)


def _project_out(
    w: NDArray[np.complex128],
    basis: NDArray[np.complex128],
    active: NDArray[np.bool_] | None = None,
) -> NDArray[np.complex128]:
    """Least-squares projection of w onto the orthogonal complement of basis.

    With an active-element mask the projection runs inside the active
    subspace, so switched-off elements stay at zero.
    """
    if basis.shape[1] == 0:
        return w
    if active is None:
        coeff = np.linalg.lstsq(basis, w, rcond=None)[0]
        return w - basis @ coeff
    out = w.copy()
    sub = basis[active]
    coeff = np.linalg.lstsq(sub, w[active], rcond=None)[0]
    out[active] = w[active] - sub @ coeff
    return out


def apply_nulls(
    weights: BeamWeights,
    config: ArrayConfig,
    pose: Pose,
    nulls: Sequence[DirectionAngles],
    pointing: DirectionAngles | None = None,
) -> BeamWeights:
    """Project the weights onto the complement of the null steering vectors.

    Zeroes a(null)^H w for every requested null while perturbing the input
    weights as little as possible.  When the pointing direction is supplied,
    a null within one degree of it is rejected.
    """
    nulls = tuple(nulls)
    if not nulls:
        return weights
    if len(nulls) >= config.num_elements:
        raise ValueError("cannot null as many directions as array elements")
    if pointing is not None:
        for null in nulls:
            if math.degrees(angular_separation(null, pointing)) < NULL_CONFLICT_DEG:
                raise NullConflictError(
                    "null direction conflicts with the pointing direction"
                )
    basis = _null_basis(config, pose, nulls)
    projected = _project_out(_weight_entries(weights), basis)
    scale = max(1.0, float(np.max(np.abs(projected))))
    return BeamWeights(
        entries=projected / scale,
        power_per_element_mw=weights.power_per_element_mw * scale**2,
    )


@dataclass
class _Candidate:
    entries: NDArray[np.complex128]
    ppe_mw: float
    sll_az_db: float
    sll_el_db: float
    eirp_dbm: float
    rows: int
    cols: int
    s_az: float
    s_el: float
    cost: float
    feasible: bool


def _sll_cost_term(measured_db: float, requested_db: float) -> float:
    """Relative sidelobe deficit against the requested minimum.

    The minima are inequality constraints, so surplus SLL carries no penalty;
    only falling short of the request contributes to the cost.
    """
    if math.isinf(measured_db):
        return 0.0
    return max(0.0, (requested_db - measured_db) / requested_db)


class _Synthesizer:
    def __init__(self, request: SynthesisRequest, config: ArrayConfig, pose: Pose):
        self.request = request
        self.config = config
        if len(request.nulls) >= config.num_elements:
            raise ValueError("too many nulls for the array size")
        for null in request.nulls:
            if math.degrees(angular_separation(null, request.pointing)) < NULL_CONFLICT_DEG:
                raise NullConflictError(
                    "null direction conflicts with the pointing direction"
                )
        self.evaluator = _PatternEvaluator(config, pose, request.pointing)
        self.null_basis = (
            _null_basis(config, pose, request.nulls)
            if request.nulls
            else np.zeros((config.num_elements, 0), dtype=np.complex128)
        )
        self.eirp_target_mw = from_db(request.eirp_target_dbm)
        side = config.side
        self.side = side
        mi = np.arange(config.num_elements)
        self.row_index = mi // side  # x axis
        self.col_index = mi % side  # z axis
        self.counter = 0
        self.best: _Candidate | None = None
        self.best_any: _Candidate | None = None
        self._seen: set[tuple[int, int, float, float]] = set()

    def _build_entries(self, rows: int, cols: int, s_az: float, s_el: float):
        active = (self.row_index < rows) & (self.col_index < cols)
        tx = chebyshev_taper(rows, s_az) if rows > 1 else np.ones(1)
        tz = chebyshev_taper(cols, s_el) if cols > 1 else np.ones(1)
        amp = np.zeros(self.config.num_elements)
        amp[active] = tx[self.row_index[active]] * tz[self.col_index[active]]
        w = amp.astype(np.complex128) * self.evaluator.point_steering
        w = _project_out(w, self.null_basis, active)
        scale = max(1.0, float(np.max(np.abs(w))))
        return w / scale

    def _evaluate(self, rows: int, cols: int, s_az: float, s_el: float) -> _Candidate | None:
        key = (rows, cols, round(s_az, 6), round(s_el, 6))
        if key in self._seen:
            return None
        self._seen.add(key)
        self.counter += 1
        req = self.request
        entries = self._build_entries(rows, cols, s_az, s_el)
        gain_point = self.evaluator.gain_at_pointing(entries)
        if gain_point <= 0.0:
            return None
        ppe = self.eirp_target_mw / gain_point
        eirp_dbm = to_db(ppe * gain_point)
        _, az_db = self.evaluator.cut_gains_db("azimuth", entries)
        _, el_db = self.evaluator.cut_gains_db("elevation", entries)
        sll_az = _sll_from_gains(az_db)
        sll_el = _sll_from_gains(el_db)
        z1 = req.k1 * (
            _sll_cost_term(sll_az, req.sll_min_az_db)
            + _sll_cost_term(sll_el, req.sll_min_el_db)
        )
        denom = max(abs(req.eirp_target_dbm), 1.0)
        z2 = req.k2 * abs(eirp_dbm - req.eirp_target_dbm) / denom
        cand = _Candidate(
            entries=entries,
            ppe_mw=ppe,
            sll_az_db=sll_az,
            sll_el_db=sll_el,
            eirp_dbm=eirp_dbm,
            rows=rows,
            cols=cols,
            s_az=s_az,
            s_el=s_el,
            cost=z1 + z2,
            feasible=(sll_az >= req.sll_min_az_db and sll_el >= req.sll_min_el_db),
        )
        if cand.feasible and (self.best is None or cand.cost < self.best.cost):
            self.best = cand
        if self.best_any is None or cand.cost < self.best_any.cost:
            self.best_any = cand
        return cand

    def _converged(self) -> bool:
        return self.best is not None and self.best.cost < self.request.threshold

    def _budget_left(self) -> bool:
        return self.counter < self.request.counter_max

    @staticmethod
    def _better(cand: _Candidate, incumbent: _Candidate) -> bool:
        if cand.feasible != incumbent.feasible:
            return cand.feasible
        return cand.cost < incumbent.cost

    def _coarse_sweep(self, rows: int, cols: int) -> None:
        for offset in (0.0, 5.0, 10.0, 15.0, 20.0):
            if self._converged() or not self._budget_left():
                return
            self._evaluate(
                rows,
                cols,
                max(MIN_TAPER_SLL_DB, self.request.sll_min_az_db + offset),
                max(MIN_TAPER_SLL_DB, self.request.sll_min_el_db + offset),
            )

    def _refine(self, rows: int, cols: int) -> None:
        incumbent = self.best if self.best is not None else self.best_any
        if incumbent is None or incumbent.rows != rows or incumbent.cols != cols:
            return
        s_az, s_el = incumbent.s_az, incumbent.s_el
        for step in (2.0, 1.0, 0.5, 0.25):
            improved = True
            while improved and self._budget_left() and not self._converged():
                improved = False
                for d_az, d_el in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
                    if not self._budget_left() or self._converged():
                        break
                    cand = self._evaluate(
                        rows,
                        cols,
                        max(MIN_TAPER_SLL_DB, s_az + d_az),
                        max(MIN_TAPER_SLL_DB, s_el + d_el),
                    )
                    if cand is not None and self._better(cand, incumbent):
                        incumbent = cand
                        s_az, s_el = cand.s_az, cand.s_el
                        improved = True

    def run(self) -> SynthesisResult:
        side = self.side
        self._coarse_sweep(side, side)
        if not self._converged():
            self._refine(side, side)
        if self.best is None:
            # the full aperture cannot meet the minima; shrink the active block
            block_sizes = [
                (g, v)
                for g in (side, side - 1, side - 2)
                for v in (side, side - 1, side - 2)
                if (g, v) != (side, side) and g >= 1 and v >= 1
            ]
            for rows, cols in block_sizes:
                if self._converged() or not self._budget_left():
                    break
                self._coarse_sweep(rows, cols)
                if self.best is not None:
                    self._refine(rows, cols)
                    break
        chosen = self.best if self.best is not None else self.best_any
        if chosen is None:
            raise RuntimeError("synthesis produced no candidates")
        return SynthesisResult(
            weights=BeamWeights(entries=chosen.entries, power_per_element_mw=chosen.ppe_mw),
            achieved_sll_az_db=chosen.sll_az_db,
            achieved_sll_el_db=chosen.sll_el_db,
            achieved_eirp_dbm=chosen.eirp_dbm,
            active_rows=chosen.rows,
            active_cols=chosen.cols,
            iterations=self.counter,
            cost=chosen.cost,
            converged=self._converged(),
        )


def synthesize(request: SynthesisRequest, config: ArrayConfig, pose: Pose) -> SynthesisResult:
    """Run the beam-pattern optimizer for one pointing request.

    Returns the best candidate found; `converged` is False when the cost never
    dropped below the threshold within the iteration budget, in which case the
    result is best-effort.
    """
    return _Synthesizer(request, config, pose).run()


def beampattern_gain(
    matrix: BeamformingMatrix, config: ArrayConfig, pose: Pose, target
) -> float:
    """Transmit power density radiated toward the target location.

    Sum of the two rank-one beam contributions |a^H w|^2 with amplitude-scaled
    weight vectors; invariant under per-beam global phase rotation.
    """
    direction = direction_angles(pose.position, target)
    rot_t = rotation_matrix(pose.angles).T
    unit = rot_t @ direction_unit(direction)
    a = np.exp(1j * config.wavenumber * (centered_grid_offsets(config) @ unit))
    total = 0.0
    for beam in (matrix.sensing, matrix.comm):
        total += abs(np.vdot(a, beam.vector)) ** 2
    return float(total)


def beampattern_error(
    poses: Sequence[Pose],
    predicted: Sequence[BeamformingMatrix],
    reference: Sequence[BeamformingMatrix],
    config: ArrayConfig,
    target,
) -> float:
    """Squared beampattern-gain mismatch accumulated along a trajectory."""
    if len(predicted) != len(reference) or len(predicted) != len(poses):
        raise ValueError("pose, predicted and reference lengths must match")
    total = 0.0
    for pose, pred, ref in zip(poses, predicted, reference):
        b_ref = beampattern_gain(ref, config, pose, target)
        b_pred = beampattern_gain(pred, config, pose, target)
        total += (b_ref - b_pred) ** 2
    return total


def export_cut_csv(cut: PatternCut, path) -> None:
    """Write one cut as `angle_deg,gain_db` rows with a header line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", "gain_db"])
        for angle, gain in zip(cut.angles_rad, cut.gains_db):
            writer.writerow([repr(math.degrees(float(angle))), repr(float(gain))])


def export_grid_csv(
    weights,
    config: ArrayConfig,
    pose: Pose,
    path,
    az_step_deg: float = 1.0,
    el_step_deg: float = 1.0,
) -> None:
    """Write the 2-D pattern as `az_deg,el_deg,gain_db` rows (peak at 0 dB)."""
    entries = _weight_entries(weights)
    az = np.arange(-180.0, 180.0, az_step_deg)
    el = np.arange(0.0, 180.0 + el_step_deg / 2, el_step_deg)
    rot = rotation_matrix(pose.angles)
    offsets = centered_grid_offsets(config)
    az_rad, el_rad = np.radians(az), np.radians(el)
    sin_el = np.sin(el_rad)[:, None]
    units = np.stack(
        [
            sin_el * np.cos(az_rad)[None, :],
            sin_el * np.sin(az_rad)[None, :],
            np.broadcast_to(np.cos(el_rad)[:, None], (el.size, az.size)).copy(),
        ],
        axis=-1,
    ).reshape(-1, 3)
    units_arr = units @ rot
    emat = _kernels.steering_matrix(units_arr, offsets, config.wavenumber)
    power = _kernels.cut_power(emat, entries) * _element_gain_units(units_arr)
    peak = max(float(power.max()), _DB_FLOOR)
    gains_db = 10.0 * np.log10(np.maximum(power / peak, _DB_FLOOR)).reshape(el.size, az.size)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["az_deg", "el_deg", "gain_db"])
        for i, e in enumerate(el):
            for j, a in enumerate(az):
                writer.writerow([repr(float(a)), repr(float(e)), repr(float(gains_db[i, j]))])
