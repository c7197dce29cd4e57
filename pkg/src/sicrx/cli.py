"""Command-line harness: config parsing, BER sweeps and beam scans.

Config format is flat ``key = value`` text with dotted section keys;
``#`` starts a comment.  Keys:

    satellites.angles_deg   required, comma-separated degrees
    noise.K                 required, row-major M*M correlation entries
    lnb.boresights_deg      optional, defaults to the desired angles
    lnb.phases_deg          optional, defaults to zeros
    dish.diameter_m         optional, default 0.35
    dish.freq_ghz           optional, default 11.7
    mod.scheme              optional, default qpsk (only qpsk supported)
    mod.symbol_energy       optional, default 1.0

CSV outputs start with a ``#`` provenance comment (seed and config
hash, never timestamps), so identical run specs give byte-identical
files.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .beamforming import ar_weights, build_covariances, car_objective, mrc_weights
from .detection import DETECTOR_IDS, CarParams, _closest_not_detected, _detection_order
from .montecarlo import run_sweep
from .scenario import ScenarioConfig, build_array_response, make_noise_model

__all__ = [
    "ConfigError",
    "RunSpec",
    "parse_config",
    "bundled_config_path",
    "run",
    "main",
]

MODES = ("ber-sweep", "pattern-scan", "car-scan")
GAIN_FLOOR_DB = -120.0  # rendering floor for exactly-zero gains

_KNOWN_KEYS = {
    "satellites.angles_deg",
    "lnb.boresights_deg",
    "lnb.phases_deg",
    "dish.diameter_m",
    "dish.freq_ghz",
    "noise.K",
    "mod.scheme",
    "mod.symbol_energy",
}


class ConfigError(ValueError):
    """Unparseable or invalid scenario configuration."""


def bundled_config_path() -> Path:
    """Path of the packaged reference scenario (paper.cfg)."""
    return Path(resources.files("sicrx") / "configs" / "paper.cfg")


def _parse_float_list(key: str, raw: str) -> list[float]:
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected numbers, got {raw!r}") from exc


def parse_config(path) -> ScenarioConfig:
    """Parse and validate a scenario config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = raw

    for key in ("satellites.angles_deg", "noise.K"):
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")

    scheme = values.get("mod.scheme", "qpsk").lower()
    if scheme != "qpsk":
        raise ConfigError(f"key 'mod.scheme': only qpsk is supported, got {scheme!r}")

    k_entries = _parse_float_list("noise.K", values["noise.K"])
    m = math.isqrt(len(k_entries))
    if m * m != len(k_entries):
        raise ConfigError(
            f"key 'noise.K': expected a square row-major matrix, got {len(k_entries)} entries"
        )
    kwargs = {
        "satellite_angles_deg": _parse_float_list(
            "satellites.angles_deg", values["satellites.angles_deg"]
        ),
        "noise_corr": np.array(k_entries).reshape(m, m),
    }
    if "lnb.boresights_deg" in values:
        kwargs["lnb_boresights_deg"] = _parse_float_list(
            "lnb.boresights_deg", values["lnb.boresights_deg"]
        )
    if "lnb.phases_deg" in values:
        kwargs["element_phases_deg"] = _parse_float_list(
            "lnb.phases_deg", values["lnb.phases_deg"]
        )
    if "dish.diameter_m" in values:
        kwargs["dish_diameter_m"] = float(values["dish.diameter_m"])
    if "dish.freq_ghz" in values:
        kwargs["carrier_freq_ghz"] = float(values["dish.freq_ghz"])
    if "mod.symbol_energy" in values:
        kwargs["symbol_energy"] = float(values["mod.symbol_energy"])
    try:
        return ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_grid(spec: str, what: str) -> tuple[float, float, float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{what} must be START:STEP:STOP, got {spec!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{what} must be numeric START:STEP:STOP") from exc
    if step <= 0.0:
        raise ConfigError(f"{what}: step must be positive")
    if start > stop:
        raise ConfigError(f"{what}: start must not exceed stop")
    return start, step, stop


def _grid_values(grid: tuple[float, float, float]) -> list[float]:
    start, step, stop = grid
    count = int(math.floor((stop - start) / step + 1e-9))
    return [start + i * step for i in range(count + 1)]


@dataclass
class RunSpec:
    """One CLI invocation: what to run and where to write it."""

    config_path: Path
    mode: str
    out_path: Path
    detectors: tuple[str, ...] = ()
    snr_db: tuple[float, float, float] = (14.0, 1.0, 14.0)
    theta_deg: tuple[float, float, float] = (-8.0, 0.05, 8.0)
    trials: int = 100_000
    seed: int = 1
    workers: int | None = None
    car_target: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.mode == "ber-sweep":
            if not self.detectors:
                raise ConfigError("ber-sweep needs at least one detector")
            unknown = set(self.detectors) - set(DETECTOR_IDS)
            if unknown:
                raise ConfigError(
                    f"unknown detectors {sorted(unknown)}; choose from {DETECTOR_IDS}"
                )


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _provenance(spec: RunSpec) -> str:
    digest = hashlib.sha256(Path(spec.config_path).read_bytes()).hexdigest()[:16]
    return f"# seed={spec.seed} config_sha256={digest}\n"


def _write_ber_csv(spec: RunSpec, cfg: ScenarioConfig) -> None:
    rows: list[str] = []
    run_sweep(
        cfg,
        spec.detectors,
        _grid_values(spec.snr_db),
        spec.trials,
        spec.seed,
        workers=spec.workers,
        on_record=lambda r: rows.append(
            f"{_fmt(r.snr_db)},{r.detector_id},{r.signal},"
            f"{r.bit_errors},{r.bits_total},{_fmt(r.ber)}\n"
        ),
    )
    with open(spec.out_path, "w", newline="\n") as fh:
        fh.write(_provenance(spec))
        fh.write("snr_db,detector,signal,bit_errors,bits,ber\n")
        fh.writelines(rows)


def _gain_db(value: float) -> float:
    if value <= 0.0:
        return GAIN_FLOOR_DB
    return max(20.0 * math.log10(value), GAIN_FLOOR_DB)


def _write_pattern_csv(spec: RunSpec, cfg: ScenarioConfig) -> None:
    # Raw LNB patterns plus the MRC and AR beams for every desired
    # signal; MRC beams are computed at the start of the --snr grid.
    a = build_array_response(cfg)
    noise = make_noise_model(cfg, a, spec.snr_db[0])
    cov = build_covariances(a, noise, cfg.symbol_energy)
    thetas = _grid_values(spec.theta_deg)
    steer = np.column_stack([a.steering(t) for t in thetas])

    beams: list[tuple[str, np.ndarray]] = []
    for lnb in range(a.num_lnbs):
        unit = np.zeros(a.num_lnbs, dtype=complex)
        unit[lnb] = 1.0
        beams.append((f"lnb{lnb + 1}", unit))
    for pos, col in enumerate(a.desired_indices):
        beams.append((f"mrc-s{pos + 1}", mrc_weights(cov, col).w))
    for pos, col in enumerate(a.desired_indices):
        beams.append((f"ar-s{pos + 1}", ar_weights(a, col).w))

    with open(spec.out_path, "w", newline="\n") as fh:
        fh.write(_provenance(spec))
        fh.write("theta_deg,beam_id,gain_db\n")
        for beam_id, w in beams:
            gains = np.abs(w.conj() @ steer)
            for theta, g in zip(thetas, gains):
                fh.write(f"{_fmt(theta)},{beam_id},{_fmt(_gain_db(float(g)))}\n")


def _car_stage(spec: RunSpec, cfg: ScenarioConfig):
    """Resolve the CAR stage to scan: target, closest interferer, range."""
    a = build_array_response(cfg)
    order = _detection_order(a)
    targets = [a.desired_indices[pos] for pos in order[1:]]
    if not targets:
        raise ConfigError("scenario has a single desired signal; no CAR stage")
    labels = {f"s{pos + 1}": a.desired_indices[pos] for pos in order[1:]}
    if spec.car_target is None:
        target = targets[0]
    else:
        if spec.car_target not in labels:
            raise ConfigError(
                f"--target must be one of {sorted(labels)}, got {spec.car_target!r}"
            )
        target = labels[spec.car_target]
    cancelled = {a.desired_indices[order[0]]}
    for col in targets:
        if col == target:
            break
        cancelled.add(col)
    closest = _closest_not_detected(a, target, cancelled)
    angles = a.satellite_angles_deg
    main_col = a.desired_indices[order[0]]
    lo = min(angles[target], angles[main_col])
    hi = max(angles[target], angles[main_col])
    return a, target, closest, lo, hi


def _write_car_csv(spec: RunSpec, cfg: ScenarioConfig) -> None:
    a, target, closest, lo, hi = _car_stage(spec, cfg)
    car = CarParams()
    step = car.grid_step_deg
    thetas = _grid_values((lo, step, hi))
    with open(spec.out_path, "w", newline="\n") as fh:
        fh.write(_provenance(spec))
        fh.write("theta_deg,objective\n")
        for theta in thetas:
            obj = car_objective(a, theta, target, closest)
            fh.write(f"{_fmt(theta)},{_fmt(obj)}\n")


def run(spec: RunSpec) -> int:
    """Execute a run spec; returns a process exit status."""
    try:
        cfg = parse_config(spec.config_path)
        if spec.mode == "ber-sweep":
            _write_ber_csv(spec, cfg)
        elif spec.mode == "pattern-scan":
            _write_pattern_csv(spec, cfg)
        else:
            _write_car_csv(spec, cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"sicrx: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sicrx",
        description="Overloaded satellite receiver Monte-Carlo simulator.",
    )
    parser.add_argument("--config", required=True, help="scenario config file")
    parser.add_argument("--mode", required=True, choices=MODES)
    parser.add_argument(
        "--detectors",
        default="",
        help="comma-separated detector ids for ber-sweep "
        f"(available: {', '.join(DETECTOR_IDS)})",
    )
    parser.add_argument("--snr", default="14:1:14", help="SNR grid START:STEP:STOP in dB")
    parser.add_argument(
        "--theta", default="-8:0.05:8", help="pattern-scan angle grid START:STEP:STOP"
    )
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument(
        "--target", default=None, help="car-scan target signal (s1..sM)"
    )
    args = parser.parse_args(argv)
    try:
        spec = RunSpec(
            config_path=Path(args.config),
            mode=args.mode,
            out_path=Path(args.out),
            detectors=tuple(d for d in args.detectors.split(",") if d),
            snr_db=_parse_grid(args.snr, "--snr"),
            theta_deg=_parse_grid(args.theta, "--theta"),
            trials=args.trials,
            seed=args.seed,
            car_target=args.target,
        )
    except ConfigError as exc:
        print(f"sicrx: {exc}", file=sys.stderr)
        return 2
    return run(spec)


if __name__ == "__main__":
    raise SystemExit(main())
