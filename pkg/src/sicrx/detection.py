"""Symbol detectors: scalar ML slicing, joint ML, MMSE and SIC pipelines.

All beamformer weights depend only on the scenario geometry and noise
statistics, never on the received samples, so each detector is compiled
once into a list of linear stages (``build_detector``) and then applied
to single symbol vectors or whole batches.

Interferer satellites are never detected or subtracted: SIC cancels the
desired signals only, and residual interference stays in the received
vector so error floors emerge naturally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .beamforming import CovarianceSet, ar_weights, car_weights, mrc_weights
from .numerics import inverse
from .scenario import ArrayResponse, NoiseModel

__all__ = [
    "Constellation",
    "DetectionResult",
    "CarParams",
    "Detector",
    "DETECTOR_IDS",
    "slicer_ml",
    "jml_detect",
    "mmse_detect",
    "sic_hy_ml",
    "sic_mrc_ml",
    "sic_dml",
    "build_detector",
]

DETECTOR_IDS = ("sic-hy-ml", "sic-mrc-ml", "sic-dml", "jml", "mrc-jml", "mmse")


@dataclass(frozen=True)
class Constellation:
    """Symbol alphabet with Gray-coded bit labels.

    ``points`` is a complex array, ``bit_labels`` the matching (Q, k)
    uint8 bit matrix; mean symbol energy must equal ``energy``.
    """

    points: np.ndarray
    bit_labels: np.ndarray
    energy: float

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.complex128)
        labels = np.asarray(self.bit_labels, dtype=np.uint8)
        if len(points) != len(labels):
            raise ValueError("one bit label per constellation point required")
        mean_energy = float((np.abs(points) ** 2).mean())
        if abs(mean_energy - self.energy) > 1e-12 * max(self.energy, 1.0):
            raise ValueError("mean symbol energy does not match declared energy")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "bit_labels", labels)

    @classmethod
    def qpsk(cls, energy: float = 1.0) -> "Constellation":
        """Gray-labelled QPSK: {(+-1 +-1j)/sqrt(2)} * sqrt(energy)."""
        base = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)
        labels = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)
        return cls(points=base * np.sqrt(energy), bit_labels=labels, energy=float(energy))

    @property
    def bits_per_symbol(self) -> int:
        return self.bit_labels.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class DetectionResult:
    """Hard decisions for the desired signals, aligned with the desired
    ordering of the array response."""

    decisions: np.ndarray
    decided_bits: np.ndarray
    detector_id: str


@dataclass(frozen=True)
class CarParams:
    """CAR search parameters.

    The search interval spans the target and main-satellite angles; the
    paper restricts the solution to exactly that span, so the default
    expansion is zero (expanding pushes the optimum to noise-amplifying
    edge angles under the aperture pattern model).
    """

    expand_deg: float = 0.0
    grid_step_deg: float = 0.01


def _slice_indices(values: np.ndarray, coeff: complex, points: np.ndarray) -> np.ndarray:
    """Nearest-point indices of ``values`` against ``coeff * points``.

    Ties resolve to the lowest constellation index (argmin keeps the
    first minimum).
    """
    d = np.abs(values[None, :] - coeff * points[:, None])
    return np.argmin(d, axis=0)


def slicer_ml(p: complex, channel_coeff: complex, constellation: Constellation) -> complex:
    """Scalar ML decision: the point s minimizing |p - coeff * s|^2."""
    if channel_coeff == 0:
        raise ValueError("channel coefficient must be nonzero")
    k = _slice_indices(np.array([p], dtype=complex), channel_coeff, constellation.points)
    return complex(constellation.points[k[0]])


class _SicStage(NamedTuple):
    w: np.ndarray
    target_col: int
    desired_pos: int
    coeff: complex
    beam: object = None        # BeamWeights that produced w, when any
    closest_col: int | None = None


def _detection_order(a: ArrayResponse) -> list[int]:
    """Algorithm-1 order over desired positions: main first, then the
    remaining positions ascending."""
    main = a.main_desired_pos
    return [main] + [p for p in range(a.num_desired) if p != main]


def _closest_not_detected(a: ArrayResponse, target_col: int, cancelled: set[int]) -> int | None:
    """Closest satellite (by angle) to the target among those still on air."""
    angles = a.satellite_angles_deg
    candidates = [
        j for j in range(len(angles)) if j != target_col and j not in cancelled
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda j: (abs(angles[j] - angles[target_col]), j))


def _stages_hybrid(a: ArrayResponse, cov: CovarianceSet, car: CarParams) -> list[_SicStage]:
    """MRC for the main desired signal, CAR for the rest."""
    order = _detection_order(a)
    angles = a.satellite_angles_deg
    main_col = a.desired_indices[order[0]]
    stages = []
    cancelled: set[int] = set()
    for step, pos in enumerate(order):
        col = a.desired_indices[pos]
        closest = None
        if step == 0:
            bw = mrc_weights(cov, col)
        else:
            closest = _closest_not_detected(a, col, cancelled)
            if closest is None:
                bw = ar_weights(a, col)
            else:
                lo = min(angles[col], angles[main_col]) - car.expand_deg
                hi = max(angles[col], angles[main_col]) + car.expand_deg
                bw = car_weights(a, col, closest, lo, hi, car.grid_step_deg)
        stages.append(
            _SicStage(bw.w, col, pos, complex(np.vdot(bw.w, a.a[:, col])), bw, closest)
        )
        cancelled.add(col)
    return stages


def _stages_mrc(a: ArrayResponse, cov: CovarianceSet) -> list[_SicStage]:
    """MRC beams for every desired signal, all taken from the full model
    covariance (the beams the paper derives once from R)."""
    stages = []
    for pos in _detection_order(a):
        col = a.desired_indices[pos]
        bw = mrc_weights(cov, col)
        stages.append(
            _SicStage(bw.w, col, pos, complex(np.vdot(bw.w, a.a[:, col])), bw)
        )
    return stages


def _stages_dml(a: ArrayResponse) -> list[_SicStage]:
    """No spatial combining: each stage reads the single LNB with the
    largest pattern gain toward its target."""
    stages = []
    for pos in _detection_order(a):
        col = a.desired_indices[pos]
        lnb = int(np.argmax(np.abs(a.a[:, col])))
        w = np.zeros(a.num_lnbs, dtype=np.complex128)
        w[lnb] = 1.0
        stages.append(_SicStage(w, col, pos, complex(a.a[lnb, col])))
    return stages


def _apply_sic(stages, columns: np.ndarray, rx: np.ndarray,
               constellation: Constellation) -> tuple[np.ndarray, np.ndarray]:
    """Run the SIC loop on an (M, T) batch.

    Returns (indices, residual): the (num_desired, T) constellation
    indices and the received batch after all subtractions.
    """
    work = np.array(rx, dtype=np.complex128)
    out = np.empty((len(stages), work.shape[1]), dtype=np.int64)
    for stage in stages:
        p = stage.w.conj() @ work
        k = _slice_indices(p, stage.coeff, constellation.points)
        out[stage.desired_pos] = k
        work -= np.outer(columns[:, stage.target_col], constellation.points[k])
    return out, work


def _result(idx: np.ndarray, constellation: Constellation, detector_id: str) -> DetectionResult:
    return DetectionResult(
        decisions=constellation.points[idx],
        decided_bits=constellation.bit_labels[idx],
        detector_id=detector_id,
    )


def sic_hy_ml(r, a: ArrayResponse, cov: CovarianceSet, noise: NoiseModel,
              constellation: Constellation, car_params: CarParams | None = None) -> DetectionResult:
    """Hybrid SIC: MRC beam and scalar ML for the main desired signal,
    subtract, then CAR beam and scalar ML for each remaining desired
    signal in ascending order.  ``noise`` is part of the interface for
    completeness; its statistics already live in ``cov``."""
    del noise
    stages = _stages_hybrid(a, cov, car_params or CarParams())
    idx, _ = _apply_sic(stages, a.a, np.asarray(r, dtype=complex).reshape(-1, 1), constellation)
    return _result(idx[:, 0], constellation, "sic-hy-ml")


def sic_mrc_ml(r, a: ArrayResponse, cov: CovarianceSet, noise: NoiseModel,
               constellation: Constellation) -> DetectionResult:
    """SIC with the fixed full-covariance MRC beam bank for all signals."""
    del noise
    stages = _stages_mrc(a, cov)
    idx, _ = _apply_sic(stages, a.a, np.asarray(r, dtype=complex).reshape(-1, 1), constellation)
    return _result(idx[:, 0], constellation, "sic-mrc-ml")


def sic_dml(r, a: ArrayResponse, constellation: Constellation) -> DetectionResult:
    """SIC with per-stage single-LNB scalar ML (no beamforming)."""
    stages = _stages_dml(a)
    idx, _ = _apply_sic(stages, a.a, np.asarray(r, dtype=complex).reshape(-1, 1), constellation)
    return _result(idx[:, 0], constellation, "sic-dml")


def _jml_hypotheses(constellation: Constellation, m: int, cap: int) -> np.ndarray:
    count = len(constellation) ** m
    if count > cap:
        raise ValueError(
            f"JML hypothesis space {count} exceeds the configured cap {cap}"
        )
    return np.array(
        list(itertools.product(range(len(constellation)), repeat=m)), dtype=np.int64
    )


def _jml_batch(p: np.ndarray, eff: np.ndarray, hyp: np.ndarray,
               constellation: Constellation) -> np.ndarray:
    # cost_h = ||p - y_h||^2 up to the hypothesis-independent ||p||^2 term
    y = eff @ constellation.points[hyp].T
    energy = (np.abs(y) ** 2).sum(axis=0)
    gain = (y.conj().T @ p).real
    best = np.argmin(energy[:, None] - 2.0 * gain, axis=0)
    return hyp[best].T


def jml_detect(p, w_bank: np.ndarray, a_desired: np.ndarray,
               constellation: Constellation, max_hypotheses: int = 65536) -> DetectionResult:
    """Joint ML over all desired signals by exhaustive search.

    ``p`` is the beamformer output W^H r; the metric is
    ||p - W^H A_d s_d||^2 over every constellation combination.
    """
    p = np.asarray(p, dtype=complex)
    m = p.shape[0]
    w_bank = np.asarray(w_bank, dtype=complex)
    if w_bank.shape != (m, m):
        raise ValueError("weight bank must be square, one column per desired signal")
    eff = w_bank.conj().T @ np.asarray(a_desired, dtype=complex)
    hyp = _jml_hypotheses(constellation, m, max_hypotheses)
    idx = _jml_batch(p.reshape(-1, 1), eff, hyp, constellation)
    return _result(idx[:, 0], constellation, "jml")


def mmse_detect(r, cov: CovarianceSet, a: ArrayResponse,
                constellation: Constellation) -> DetectionResult:
    """Linear MMSE estimate sliced per component.

    The soft estimate is E_s A_d^H R^-1 r, computed straight from the
    received vector: no beamformer enters (and none is accepted).
    """
    gain = constellation.energy * a.desired_matrix.conj().T @ inverse(cov.total)
    soft = gain @ np.asarray(r, dtype=complex)
    idx = np.array(
        [_slice_indices(soft[i:i + 1], 1.0, constellation.points)[0] for i in range(len(soft))]
    )
    return _result(idx, constellation, "mmse")


@dataclass(frozen=True)
class Detector:
    """A compiled detector: weights precomputed, ready for batches."""

    detector_id: str
    constellation: Constellation
    _batch: Callable[[np.ndarray], np.ndarray]

    def decide_batch(self, rx: np.ndarray) -> np.ndarray:
        """Constellation indices, shape (num_desired, T), for an (M, T)
        batch of received vectors."""
        return self._batch(np.asarray(rx, dtype=np.complex128))

    def decide(self, r) -> DetectionResult:
        idx = self.decide_batch(np.asarray(r, dtype=complex).reshape(-1, 1))
        return _result(idx[:, 0], self.constellation, self.detector_id)


def build_detector(detector_id: str, a: ArrayResponse, cov: CovarianceSet,
                   noise: NoiseModel, constellation: Constellation,
                   car_params: CarParams | None = None,
                   max_hypotheses: int = 65536) -> Detector:
    """Compile a detector by string id (see ``DETECTOR_IDS``)."""
    del noise
    if detector_id in ("sic-hy-ml", "sic-mrc-ml", "sic-dml"):
        if detector_id == "sic-hy-ml":
            stages = _stages_hybrid(a, cov, car_params or CarParams())
        elif detector_id == "sic-mrc-ml":
            stages = _stages_mrc(a, cov)
        else:
            stages = _stages_dml(a)
        columns = a.a

        def batch(rx, _stages=stages, _cols=columns):
            return _apply_sic(_stages, _cols, rx, constellation)[0]

    elif detector_id in ("jml", "mrc-jml"):
        m = a.num_desired
        if detector_id == "jml":
            w_bank = np.eye(m, dtype=np.complex128)
        else:
            w_bank = np.column_stack(
                [mrc_weights(cov, col).w for col in a.desired_indices]
            )
        eff = w_bank.conj().T @ a.desired_matrix
        hyp = _jml_hypotheses(constellation, m, max_hypotheses)
        wh = w_bank.conj().T

        def batch(rx, _wh=wh, _eff=eff, _hyp=hyp):
            return _jml_batch(_wh @ rx, _eff, _hyp, constellation)

    elif detector_id == "mmse":
        gain = constellation.energy * a.desired_matrix.conj().T @ inverse(cov.total)

        def batch(rx, _gain=gain):
            soft = _gain @ rx
            points = constellation.points
            return np.array(
                [_slice_indices(soft[i], 1.0, points) for i in range(soft.shape[0])]
            )

    else:
        raise ValueError(f"unknown detector id {detector_id!r}")

    return Detector(detector_id=detector_id, constellation=constellation, _batch=batch)
