"""Shared fixtures for the test suite: the bundled paper scenario plus
hand-built array responses for edge cases."""

import math

import numpy as np

from sicrx.beamforming import build_covariances
from sicrx.numerics import cholesky_lower
from sicrx.scenario import (
    ArrayResponse,
    NoiseModel,
    ScenarioConfig,
    build_array_response,
    make_noise_model,
)

K_PAPER = [[1.0, 0.1, 0.05], [0.1, 1.0, 0.1], [0.05, 0.1, 1.0]]
PAPER_ANGLES = (-2.8, 0.0, 3.0, -5.9, 5.7)


def paper_config(**overrides):
    kwargs = dict(satellite_angles_deg=PAPER_ANGLES, noise_corr=K_PAPER)
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def paper_setup(snr_db=14.0):
    cfg = paper_config()
    a = build_array_response(cfg)
    noise = make_noise_model(cfg, a, snr_db)
    cov = build_covariances(a, noise, cfg.symbol_energy)
    return cfg, a, noise, cov


def synthetic_response(a_matrix, angles, desired, interferers):
    """ArrayResponse with hand-picked columns (pattern steering unused)."""
    a_matrix = np.asarray(a_matrix, dtype=complex)
    m = a_matrix.shape[0]
    return ArrayResponse(
        a=a_matrix,
        desired_indices=tuple(desired),
        interferer_indices=tuple(interferers),
        satellite_angles_deg=tuple(angles),
        lnb_boresights_deg=tuple(angles[j] for j in desired),
        element_phases_deg=(0.0,) * m,
        dish_diameter_m=0.35,
        carrier_freq_ghz=11.7,
    )


def white_noise_model(sigma_sq, m):
    return NoiseModel(sigma_sq=sigma_sq, corr_chol=cholesky_lower(np.eye(m)))


def qfunc(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def random_scenario(rng, snr_db=None):
    """Random overloaded scenario with a valid unit-diagonal correlation.

    Redraws geometries in which some satellite is invisible to every LNB
    (an all-zero array-response column).
    """
    while True:
        m = int(rng.integers(2, 5))
        n_s = m + int(rng.integers(1, 4))
        angles = np.round(rng.uniform(-7.0, 7.0, size=n_s), 3)
        if len(set(angles)) != n_s:
            continue
        x = rng.standard_normal((m, m))
        corr = x @ x.T + m * np.eye(m)
        d = np.sqrt(np.diag(corr))
        corr = corr / np.outer(d, d)
        cfg = ScenarioConfig(
            satellite_angles_deg=tuple(angles),
            noise_corr=corr,
            lnb_boresights_deg=tuple(np.round(rng.uniform(-5.0, 5.0, size=m), 3)),
        )
        try:
            a = build_array_response(cfg)
        except ValueError:
            continue
        break
    if snr_db is None:
        snr_db = float(rng.uniform(0.0, 25.0))
    noise = make_noise_model(cfg, a, snr_db)
    cov = build_covariances(a, noise, cfg.symbol_energy)
    return cfg, a, noise, cov
