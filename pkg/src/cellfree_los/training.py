"""Orthogonal uplink pilots: construction, received training signal, de-spreading."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ConfigError


def make_pilot_book(T_p: int) -> np.ndarray:
    """DFT pilot book, shape (T_p, T_p); row ``n`` is pilot ``n`` with squared norm T_p."""
    if T_p < 1:
        raise ConfigError("T_p must be at least 1")
    t = np.arange(T_p)
    return np.exp(-2j * np.pi * np.outer(t, t) / T_p)


def assign_pilots(K: int, T_p: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Injective UE-to-pilot map. Identity order unless ``rng`` is given."""
    if T_p < K:
        raise ConfigError(f"T_p={T_p} < K={K}: pilot reuse is not supported")
    if rng is None:
        return np.arange(K)
    return rng.permutation(T_p)[:K]


def complex_normal(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given total variance."""
    scale = np.sqrt(variance / 2)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def rx_pilot_matrix(channels, pilots, P_u: float, noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """Received training block Y = sum_k sqrt(P_u) h_k p_k^T + Z.

    Args:
        channels: shape (..., K, N) -- channels of all UEs at one AP (leading
            axes batch over APs or realizations).
        pilots: shape (K, T_p), the pilot assigned to each UE.
        P_u: transmit power per channel use.
        noise_power: per-entry noise variance.
        rng: generator for the noise.

    Returns:
        Array of shape (..., N, T_p).
    """
    channels = np.asarray(channels)
    signal = np.sqrt(P_u) * np.einsum("...kn,kt->...nt", channels, pilots)
    if noise_power == 0:
        return signal
    return signal + complex_normal(rng, signal.shape, noise_power)


@dataclass(frozen=True)
class PilotObservation:
    y_tilde: np.ndarray
    ue: int
    ap: int


def despread(Y, pilot) -> np.ndarray:
    """Correlate a training block with the conjugate of one pilot: Y p^*."""
    return np.asarray(Y) @ np.conj(pilot)


def despread_all(Y, pilots) -> np.ndarray:
    """De-spread every UE at once: (..., N, T_p) x (K, T_p) -> (..., K, N)."""
    return np.einsum("...nt,kt->...kn", Y, np.conj(pilots))
