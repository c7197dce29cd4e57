"""Beamformer weight computation: MRC, AR and compromised-AR (CAR).

MRC solves the generalized Rayleigh quotient max w^H R_m w / w^H (R-R_m) w
through the equivalent Hermitian problem: factor R - R_m = L L^H, take the
dominant eigenvector u of L^-1 R_m L^-H and map back with w = L^-H u.

CAR steers an AR-style beam a(theta)/||a(theta)||^2 to the grid angle that
maximizes |w^H a_target| - |w^H a_closest|.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import (
    cholesky_lower,
    hermitian_dominant_eigvec,
    solve_lower,
    solve_upper,
)
from .scenario import ArrayResponse, NoiseModel, pattern_gain

__all__ = [
    "BeamWeights",
    "CovarianceSet",
    "build_covariances",
    "mrc_weights",
    "ar_weights",
    "car_weights",
]


@dataclass(frozen=True)
class BeamWeights:
    """One beamformer weight vector and how it was produced.

    ``sinr`` is set by MRC (the dominant generalized eigenvalue);
    ``steer_angle_deg`` and ``objective`` are set by AR/CAR.  The
    ``inseparable`` flag marks a CAR search whose objective was
    nonpositive everywhere (warning, not an error).
    """

    w: np.ndarray
    kind: str
    target_index: int
    steer_angle_deg: float | None = None
    sinr: float | None = None
    objective: float | None = None
    inseparable: bool = False


@dataclass(frozen=True)
class CovarianceSet:
    """Model covariances R = sum_m R_m + R_n for one scenario and SNR.

    ``per_signal`` holds the rank-one R_m = E_s a_m a_m^H for every
    satellite column; ``columns`` keeps the array-response columns so the
    MRC phase convention (w^H a_m real positive) is well defined.
    """

    total: np.ndarray
    per_signal: tuple[np.ndarray, ...]
    noise: np.ndarray
    columns: np.ndarray
    symbol_energy: float

    def without(self, cancelled) -> "CovarianceSet":
        """Covariances with the given satellite columns' R_m removed."""
        cancelled = set(cancelled)
        total = self.total.copy()
        for m in cancelled:
            total = total - self.per_signal[m]
        return CovarianceSet(
            total=total,
            per_signal=self.per_signal,
            noise=self.noise,
            columns=self.columns,
            symbol_energy=self.symbol_energy,
        )


def build_covariances(a: ArrayResponse, noise: NoiseModel, symbol_energy: float) -> CovarianceSet:
    """Assemble R_m = E_s a_m a_m^H, R_n = sigma^2 K, and their sum."""
    per_signal = tuple(
        symbol_energy * np.outer(a.a[:, m], a.a[:, m].conj())
        for m in range(a.a.shape[1])
    )
    r_noise = noise.covariance
    total = sum(per_signal) + r_noise
    return CovarianceSet(
        total=total,
        per_signal=per_signal,
        noise=r_noise,
        columns=a.a,
        symbol_energy=symbol_energy,
    )


def mrc_weights(cov: CovarianceSet, m: int) -> BeamWeights:
    """Max-SINR weights for satellite column ``m``.

    Returns weights normalized so w^H a_m is real positive; ``sinr``
    carries the achieved generalized eigenvalue.  Raises ``LinAlgError``
    when R - R_m is not positive definite (vanishing noise).
    """
    r_m = cov.per_signal[m]
    rest = cov.total - r_m
    lower = cholesky_lower(rest)
    a_m = cov.columns[:, m]
    y = solve_lower(lower, a_m)
    similar = cov.symbol_energy * np.outer(y, y.conj())
    sinr, u = hermitian_dominant_eigvec(similar)
    w = solve_upper(lower.conj().T, u)
    c = np.vdot(w, a_m)
    if abs(c) > 0.0:
        w = w * (c / abs(c))
    return BeamWeights(w=w, kind="mrc", target_index=m, sinr=float(sinr))


def ar_weights(a: ArrayResponse, n: int) -> BeamWeights:
    """Array-response weights a_n / ||a_n||^2 (unit response: w^H a_n = 1)."""
    col = a.a[:, n]
    norm_sq = float(np.vdot(col, col).real)
    if norm_sq == 0.0:
        raise ValueError(f"array response column {n} is zero")
    return BeamWeights(
        w=col / norm_sq,
        kind="ar",
        target_index=n,
        steer_angle_deg=a.satellite_angles_deg[n],
    )


def car_search_grid(search_lo_deg: float, search_hi_deg: float,
                    grid_step_deg: float, target_angle_deg: float) -> np.ndarray:
    """Angle grid for the CAR search, guaranteed to contain the target
    (AR) angle when it lies inside the interval."""
    if search_hi_deg < search_lo_deg:
        raise ValueError("empty CAR search interval")
    if grid_step_deg <= 0.0:
        raise ValueError("grid_step_deg must be positive")
    count = int(np.floor((search_hi_deg - search_lo_deg) / grid_step_deg + 1e-9))
    grid = search_lo_deg + grid_step_deg * np.arange(count + 1)
    if search_lo_deg - 1e-12 <= target_angle_deg <= search_hi_deg + 1e-12:
        if not np.any(np.abs(grid - target_angle_deg) < 1e-9):
            grid = np.sort(np.append(grid, target_angle_deg))
    return grid


def _steering_matrix(a: ArrayResponse, thetas: np.ndarray) -> np.ndarray:
    """Steering vectors for many angles at once, shape (M, len(thetas))."""
    gains = np.array(
        [
            pattern_gain(b, thetas, a.dish_diameter_m, a.carrier_freq_ghz)
            for b in a.lnb_boresights_deg
        ]
    )
    phases = np.exp(1j * np.radians(np.array(a.element_phases_deg)))
    return gains.astype(np.complex128) * phases[:, None]


def _objective_values(a: ArrayResponse, thetas: np.ndarray, target: int,
                      closest: int) -> np.ndarray:
    steer = _steering_matrix(a, thetas)
    norms = (steer.real * steer.real + steer.imag * steer.imag).sum(axis=0)
    gap = np.abs(steer.conj().T @ a.a[:, target]) - np.abs(
        steer.conj().T @ a.a[:, closest]
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norms > 0.0, gap / norms, -np.inf)


def car_objective(a: ArrayResponse, theta_deg: float, target: int, closest: int) -> float:
    """|w^H a_target| - |w^H a_closest| for w = a(theta)/||a(theta)||^2."""
    return float(_objective_values(a, np.array([theta_deg]), target, closest)[0])


def car_weights(a: ArrayResponse, target: int, closest_interferer: int,
                search_lo_deg: float, search_hi_deg: float,
                grid_step_deg: float = 0.01) -> BeamWeights:
    """Compromised-AR weights for satellite ``target``.

    Scans the angle grid for the largest gap between the target and
    closest-interferer response magnitudes; ties break toward the angle
    nearest the target's true position.  A nonpositive best objective
    sets the ``inseparable`` flag (and warns) instead of failing.
    """
    target_angle = a.satellite_angles_deg[target]
    grid = car_search_grid(search_lo_deg, search_hi_deg, grid_step_deg, target_angle)
    objectives = _objective_values(a, grid, target, closest_interferer)
    best_obj = float(objectives.max())
    if not np.isfinite(best_obj):
        raise ValueError("steering vector vanishes on the whole CAR grid")
    ties = np.flatnonzero(objectives == best_obj)
    best_theta = float(grid[ties[np.argmin(np.abs(grid[ties] - target_angle))]])
    inseparable = best_obj <= 0.0
    if inseparable:
        warnings.warn(
            f"CAR search for satellite {target}: objective nonpositive on the "
            "whole grid (signals inseparable)",
            RuntimeWarning,
            stacklevel=2,
        )
    steer = a.steering(best_theta)
    norm_sq = float(np.vdot(steer, steer).real)
    return BeamWeights(
        w=steer / norm_sq,
        kind="car",
        target_index=target,
        steer_angle_deg=best_theta,
        objective=float(best_obj),
        inseparable=inseparable,
    )
