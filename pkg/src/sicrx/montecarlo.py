"""Monte-Carlo BER engine: frames, per-point runs and SNR sweeps.

Reproducibility contract: trials are split into fixed-size chunks and
chunk ``i`` draws from ``numpy.random.default_rng([seed, i])`` (PCG64
seeded through SeedSequence).  Chunk results are integer error counts
merged by chunk index, so the output is a pure function of
(config, detector, grid, trials, seed) no matter how many workers run.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .beamforming import build_covariances
from .detection import CarParams, Constellation, build_detector
from .scenario import (
    NoiseModel,
    ScenarioConfig,
    build_array_response,
    make_noise_model,
    sample_noise,
)

__all__ = [
    "SymbolFrame",
    "BerRecord",
    "CHUNK_SYMBOLS",
    "generate_frame",
    "run_point",
    "run_sweep",
    "resolve_workers",
]

CHUNK_SYMBOLS = 4096
THREADS_ENV_VAR = "SICRX_THREADS"


@dataclass(frozen=True)
class SymbolFrame:
    """One batch of transmissions: all satellites, desired and interferers."""

    tx_symbols: np.ndarray  # (N_s, T) complex
    tx_bits: np.ndarray     # (N_s, T, bits_per_symbol) uint8
    rx: np.ndarray          # (M, T) complex


@dataclass(frozen=True)
class BerRecord:
    """Bit-error counts for one (detector, signal, SNR) cell.

    ``signal`` is "s1".."sM" (desired ordering, angle ascending) or
    "avg" for the aggregate over all desired signals.
    """

    detector_id: str
    signal: str
    snr_db: float
    bit_errors: int
    bits_total: int
    seed: int

    def __post_init__(self):
        if self.bits_total <= 0:
            raise ValueError("bits_total must be positive")
        if not 0 <= self.bit_errors <= self.bits_total:
            raise ValueError("bit_errors out of range")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """The documented per-chunk generator: PCG64 over (seed, chunk)."""
    return np.random.default_rng([int(seed), int(chunk_index)])


def generate_frame(cfg: ScenarioConfig, noise: NoiseModel,
                   constellation: Constellation, count: int,
                   rng: np.random.Generator) -> SymbolFrame:
    """Draw ``count`` symbol vectors and push them through the channel.

    Every satellite (desired and interferer) transmits i.i.d. uniform
    symbols; rx = A s + n with fresh correlated noise per time index.
    Draw order is fixed: symbol indices first, then the noise block.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    a = build_array_response(cfg)
    idx = rng.integers(0, len(constellation), size=(cfg.num_satellites, count))
    tx = constellation.points[idx]
    rx = a.a @ tx + sample_noise(noise, rng, count)
    return SymbolFrame(tx_symbols=tx, tx_bits=constellation.bit_labels[idx], rx=rx)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else SICRX_THREADS, else 1.
    A value of 0 means one worker per CPU."""
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV_VAR, "1"))
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError("workers must be >= 1 (or 0 for auto)")
    return workers


def _chunk_sizes(trials: int, chunk_size: int) -> list[int]:
    full, rem = divmod(trials, chunk_size)
    return [chunk_size] * full + ([rem] if rem else [])


def _point_records(detector_id, snr_db, seed, errors, bits_per_signal) -> list[BerRecord]:
    records = [
        BerRecord(
            detector_id=detector_id,
            signal=f"s{pos + 1}",
            snr_db=snr_db,
            bit_errors=int(errors[pos]),
            bits_total=bits_per_signal,
            seed=seed,
        )
        for pos in range(len(errors))
    ]
    records.append(
        BerRecord(
            detector_id=detector_id,
            signal="avg",
            snr_db=snr_db,
            bit_errors=int(errors.sum()),
            bits_total=bits_per_signal * len(errors),
            seed=seed,
        )
    )
    return records


def run_point(cfg: ScenarioConfig, detector_id: str, snr_db: float,
              trials: int, seed: int, *,
              constellation: Constellation | None = None,
              car_params: CarParams | None = None,
              chunk_size: int = CHUNK_SYMBOLS,
              workers: int | None = None,
              early_stop_errors: int | None = None) -> list[BerRecord]:
    """Measure BER for one detector at one SNR.

    Returns one record per desired signal plus the "avg" aggregate.
    ``early_stop_errors`` optionally stops after the chunk in which the
    aggregate error count reaches the threshold (runs chunks in order,
    so the result is still deterministic, but depends on the threshold).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    constellation = constellation or Constellation.qpsk(cfg.symbol_energy)
    a = build_array_response(cfg)
    noise = make_noise_model(cfg, a, snr_db)
    cov = build_covariances(a, noise, cfg.symbol_energy)
    detector = build_detector(detector_id, a, cov, noise, constellation, car_params)
    desired = list(a.desired_indices)
    bits_per_sym = constellation.bits_per_symbol

    def run_chunk(args):
        index, count = args
        rng = chunk_rng(seed, index)
        frame = generate_frame(cfg, noise, constellation, count, rng)
        decided = detector.decide_batch(frame.rx)
        wrong = constellation.bit_labels[decided] != frame.tx_bits[desired]
        return wrong.sum(axis=(1, 2)).astype(np.int64)

    sizes = _chunk_sizes(trials, chunk_size)
    errors = np.zeros(len(desired), dtype=np.int64)

    if early_stop_errors is not None:
        done_trials = 0
        for job in enumerate(sizes):
            errors += run_chunk(job)
            done_trials += job[1]
            if errors.sum() >= early_stop_errors:
                break
        bits_per_signal = done_trials * bits_per_sym
        return _point_records(detector_id, snr_db, seed, errors, bits_per_signal)

    n_workers = resolve_workers(workers)
    if n_workers == 1 or len(sizes) == 1:
        for job in enumerate(sizes):
            errors += run_chunk(job)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for partial in pool.map(run_chunk, enumerate(sizes)):
                errors += partial
    bits_per_signal = trials * bits_per_sym
    return _point_records(detector_id, snr_db, seed, errors, bits_per_signal)


def run_sweep(cfg: ScenarioConfig, detector_ids: Sequence[str],
              snr_grid_db: Iterable[float], trials: int, seed: int, *,
              on_record: Callable[[BerRecord], None] | None = None,
              **point_kwargs) -> list[BerRecord]:
    """Cartesian product of detectors and SNR points.

    Records are handed to ``on_record`` as each point completes and also
    returned as one list (detectors outer, SNR inner).
    """
    records: list[BerRecord] = []
    for detector_id in detector_ids:
        for snr_db in snr_grid_db:
            point = run_point(cfg, detector_id, float(snr_db), trials, seed,
                              **point_kwargs)
            for record in point:
                records.append(record)
                if on_record is not None:
                    on_record(record)
    return records
