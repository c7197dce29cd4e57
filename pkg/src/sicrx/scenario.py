"""Physical setup: satellite geometry, LNB patterns, array response, noise.

The paper's GRASP-computed LNB patterns are replaced by a uniformly
illuminated circular-aperture model |2 J1(u)/u| with
u = pi (D/lambda) sin(theta - boresight); amplitudes below a -30 dB floor
(relative to the boresight peak) are clamped to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import cholesky_lower, frobenius_norm_sq

__all__ = [
    "ScenarioConfig",
    "ArrayResponse",
    "NoiseModel",
    "pattern_gain",
    "build_array_response",
    "noise_power",
    "make_noise_model",
    "sample_noise",
]

SPEED_OF_LIGHT_M_S = 299792458.0
PATTERN_FLOOR_DB = -30.0
_PATTERN_FLOOR = 10.0 ** (PATTERN_FLOOR_DB / 20.0)

# Hankel asymptotic coefficients a_k(nu=1) = prod(4 - (2i-1)^2, i=1..k) / (k! 8^k)
_J1_ASYMPTOTIC_CUT = 20.0
_A1 = 3.0 / 8.0
_A2 = -15.0 / 128.0
_A3 = 105.0 / 1024.0
_A4 = -4725.0 / 32768.0
_A5 = 1091475.0 / 3932160.0
_A6 = _A5 * (4.0 - 121.0) / 48.0
_A7 = _A6 * (4.0 - 169.0) / 56.0


def _j1_series(x):
    # Maclaurin series sum_k (-1)^k (x/2)^(2k+1) / (k! (k+1)!); for |x| <= 20
    # the largest term is ~5e7 so the absolute error stays below ~1e-8.
    half = 0.5 * x
    term = half
    total = half
    hh = half * half
    for k in range(1, 40):
        term = term * (-hh) / (k * (k + 1))
        total = total + term
    return total

def _j1_asymptotic(x):
    # Hankel expansion, valid for x >= 20 to ~1e-9 absolute.
    inv = 1.0 / x
    inv2 = inv * inv
    p = 1.0 - _A2 * inv2 + _A4 * inv2 * inv2 - _A6 * inv2 * inv2 * inv2
    q = inv * (_A1 - _A3 * inv2 + _A5 * inv2 * inv2 - _A7 * inv2 * inv2 * inv2)
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """Bessel function of the first kind, order one (|error| < 1e-8)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(
        ax <= _J1_ASYMPTOTIC_CUT,
        _j1_series(np.minimum(ax, _J1_ASYMPTOTIC_CUT)),
        _j1_asymptotic(np.maximum(ax, _J1_ASYMPTOTIC_CUT)),
    )
    return np.sign(x) * out


def pattern_gain(boresight_deg, theta_deg, dish_diameter_m, carrier_freq_ghz):
    """Amplitude gain of one LNB beam toward angle ``theta_deg``.

    Uniform circular-aperture pattern, peak 1.0 at the boresight, even
    symmetric about it; values below the -30 dB floor are clamped to 0.
    Accepts scalar or array ``theta_deg``.
    """
    if dish_diameter_m <= 0.0 or carrier_freq_ghz <= 0.0:
        raise ValueError("dish diameter and carrier frequency must be positive")
    theta = np.asarray(theta_deg, dtype=float)
    wavelength = SPEED_OF_LIGHT_M_S / (carrier_freq_ghz * 1e9)
    u = np.pi * dish_diameter_m / wavelength * np.sin(np.radians(theta - boresight_deg))
    au = np.abs(u)
    safe = np.where(au < 1e-9, 1.0, au)
    amp = np.where(au < 1e-9, 1.0, np.abs(2.0 * bessel_j1(safe) / safe))
    amp = np.where(amp < _PATTERN_FLOOR, 0.0, amp)
    if np.ndim(theta_deg) == 0:
        return float(amp)
    return amp


def _desired_partition(angles: tuple[float, ...], m: int):
    # Desired set: the m satellites closest to boresight 0, each partition
    # ordered by angle ascending; ties on |angle| break to the lower index.
    by_closeness = sorted(range(len(angles)), key=lambda j: (abs(angles[j]), j))
    desired = sorted(by_closeness[:m], key=lambda j: angles[j])
    interferers = sorted(
        (j for j in range(len(angles)) if j not in desired), key=lambda j: angles[j]
    )
    return tuple(desired), tuple(interferers)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description (immutable after construction).

    ``noise_corr`` fixes the LNB count M; the system must be overloaded
    (more satellites than LNBs).  Omitted boresights default to the
    angles of the M desired satellites; omitted phases default to zero.
    """

    satellite_angles_deg: tuple[float, ...]
    noise_corr: np.ndarray
    lnb_boresights_deg: tuple[float, ...] | None = None
    element_phases_deg: tuple[float, ...] | None = None
    dish_diameter_m: float = 0.35
    carrier_freq_ghz: float = 11.7
    symbol_energy: float = 1.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.satellite_angles_deg)
        object.__setattr__(self, "satellite_angles_deg", angles)
        if len(set(angles)) != len(angles):
            raise ValueError("satellite_angles_deg must be pairwise distinct")

        corr = np.array(self.noise_corr, dtype=float)
        if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
            raise ValueError("noise_corr must be a square matrix")
        m = corr.shape[0]
        if np.abs(corr - corr.T).max() > 1e-12:
            raise ValueError("noise_corr must be symmetric")
        if np.abs(np.diag(corr) - 1.0).max() > 1e-12:
            raise ValueError("noise_corr must have a unit diagonal")
        try:
            cholesky_lower(corr)
        except ValueError as exc:
            raise ValueError(f"noise_corr must be positive definite: {exc}") from exc
        corr.setflags(write=False)
        object.__setattr__(self, "noise_corr", corr)

        if len(angles) <= m:
            raise ValueError(
                f"not overloaded: need more satellites than LNBs "
                f"(got {len(angles)} satellites, {m} LNBs)"
            )
        if self.dish_diameter_m <= 0.0:
            raise ValueError("dish_diameter_m must be positive")
        if self.carrier_freq_ghz <= 0.0:
            raise ValueError("carrier_freq_ghz must be positive")
        if self.symbol_energy <= 0.0:
            raise ValueError("symbol_energy must be positive")

        if self.lnb_boresights_deg is None:
            desired, _ = _desired_partition(angles, m)
            bores = tuple(angles[j] for j in desired)
        else:
            bores = tuple(float(b) for b in self.lnb_boresights_deg)
            if len(bores) != m:
                raise ValueError(
                    f"lnb_boresights_deg must have {m} entries (one per LNB)"
                )
        object.__setattr__(self, "lnb_boresights_deg", bores)

        if self.element_phases_deg is None:
            phases = (0.0,) * m
        else:
            phases = tuple(float(p) for p in self.element_phases_deg)
            if len(phases) != m:
                raise ValueError(
                    f"element_phases_deg must have {m} entries (one per LNB)"
                )
        object.__setattr__(self, "element_phases_deg", phases)

    @property
    def num_lnbs(self) -> int:
        return self.noise_corr.shape[0]

    @property
    def num_satellites(self) -> int:
        return len(self.satellite_angles_deg)


@dataclass(frozen=True)
class ArrayResponse:
    """Array response matrix A (M x N_s) plus the desired/interferer split.

    Carries the pattern parameters so steering vectors for arbitrary
    angles can be rebuilt with the exact same model.
    """

    a: np.ndarray
    desired_indices: tuple[int, ...]
    interferer_indices: tuple[int, ...]
    satellite_angles_deg: tuple[float, ...]
    lnb_boresights_deg: tuple[float, ...]
    element_phases_deg: tuple[float, ...]
    dish_diameter_m: float
    carrier_freq_ghz: float

    def __post_init__(self):
        arr = np.asarray(self.a, dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def num_lnbs(self) -> int:
        return self.a.shape[0]

    @property
    def num_desired(self) -> int:
        return len(self.desired_indices)

    def column(self, j: int) -> np.ndarray:
        return self.a[:, j]

    @property
    def desired_matrix(self) -> np.ndarray:
        """A_d: desired columns, ordered by angle ascending."""
        return self.a[:, list(self.desired_indices)]

    @property
    def main_desired_pos(self) -> int:
        """Position (within the desired ordering) of the satellite closest
        to boresight zero -- the main desired signal."""
        angles = self.satellite_angles_deg
        return min(
            range(len(self.desired_indices)),
            key=lambda p: (abs(angles[self.desired_indices[p]]), self.desired_indices[p]),
        )

    def steering(self, theta_deg: float) -> np.ndarray:
        """Complex array response toward an arbitrary angle."""
        gains = np.array(
            [
                pattern_gain(b, theta_deg, self.dish_diameter_m, self.carrier_freq_ghz)
                for b in self.lnb_boresights_deg
            ]
        )
        return gains * np.exp(1j * np.radians(np.array(self.element_phases_deg)))


def build_array_response(cfg: ScenarioConfig) -> ArrayResponse:
    """Build A from the scenario: a[i, j] = gain_i(theta_j) * exp(j phase_i)."""
    gains = np.array(
        [
            pattern_gain(b, np.array(cfg.satellite_angles_deg),
                         cfg.dish_diameter_m, cfg.carrier_freq_ghz)
            for b in cfg.lnb_boresights_deg
        ]
    )
    phases = np.exp(1j * np.radians(np.array(cfg.element_phases_deg)))
    a = gains.astype(np.complex128) * phases[:, None]
    if np.any(np.abs(a).sum(axis=0) == 0.0):
        raise ValueError("array response has an all-zero satellite column")
    desired, interferers = _desired_partition(cfg.satellite_angles_deg, cfg.num_lnbs)
    return ArrayResponse(
        a=a,
        desired_indices=desired,
        interferer_indices=interferers,
        satellite_angles_deg=cfg.satellite_angles_deg,
        lnb_boresights_deg=cfg.lnb_boresights_deg,
        element_phases_deg=cfg.element_phases_deg,
        dish_diameter_m=cfg.dish_diameter_m,
        carrier_freq_ghz=cfg.carrier_freq_ghz,
    )


def noise_power(a: ArrayResponse, snr_db: float, symbol_energy: float) -> float:
    """Noise power sigma^2 = E_s ||A||_F^2 / (SNR * M), SNR given in dB."""
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    snr = 10.0 ** (snr_db / 10.0)
    return symbol_energy * frobenius_norm_sq(a.a) / (snr * a.num_lnbs)


@dataclass(frozen=True)
class NoiseModel:
    """Noise power and the Cholesky factor of the spatial correlation."""

    sigma_sq: float
    corr_chol: np.ndarray

    def __post_init__(self):
        if self.sigma_sq < 0.0:
            raise ValueError("sigma_sq must be nonnegative")
        object.__setattr__(self, "corr_chol", np.asarray(self.corr_chol, dtype=np.complex128))

    @property
    def correlation(self) -> np.ndarray:
        """K reconstructed from its Cholesky factor."""
        return self.corr_chol @ self.corr_chol.conj().T

    @property
    def covariance(self) -> np.ndarray:
        """R_n = sigma^2 K."""
        return self.sigma_sq * self.correlation


def make_noise_model(cfg: ScenarioConfig, a: ArrayResponse, snr_db: float) -> NoiseModel:
    return NoiseModel(
        sigma_sq=noise_power(a, snr_db, cfg.symbol_energy),
        corr_chol=cholesky_lower(cfg.noise_corr),
    )


def sample_noise(model: NoiseModel, rng: np.random.Generator, count: int | None = None):
    """Draw spatially correlated circular complex Gaussian noise.

    n = sqrt(sigma^2) L z with z standard circular normal, so
    E[n n^H] = sigma^2 K.  Returns an M-vector, or an (M, count) matrix
    when ``count`` is given.  Draw order (real block then imaginary
    block) is fixed for reproducibility.
    """
    m = model.corr_chol.shape[0]
    n = 1 if count is None else int(count)
    z = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2.0)
    out = np.sqrt(model.sigma_sq) * (model.corr_chol @ z)
    if count is None:
        return out[:, 0]
    return out
