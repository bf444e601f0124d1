"""Free-space line-of-sight channels.

Two models are provided: the exact spherical-wavefront channel, which uses
the true distance to every element, and the far-field local model in which a
single distance/direction pair at the reference element drives a planar
steering vector.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .scenario import ApDescriptor, GeometryError, GlobalConfig, Scenario, UeDescriptor, element_positions


class UpaGeometry(NamedTuple):
    rows: int
    cols: int
    spacing: float
    wavelength: float

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @classmethod
    def from_config(cls, cfg: GlobalConfig) -> "UpaGeometry":
        return cls(cfg.upa_side, cfg.upa_side, cfg.spacing, cfg.wavelength)


def _check_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be strictly positive")
    return d


def attenuation(d, wavelength: float):
    """Free-space amplitude gain lambda / (4 pi d)."""
    d = _check_distance(d)
    return wavelength / (4 * np.pi * d)


def prop_phase(d, wavelength: float):
    """Propagation phase -2 pi d / lambda (not wrapped)."""
    d = _check_distance(d)
    return -2 * np.pi * d / wavelength


def _unit_phasor_of_path(d, wavelength: float):
    # wrap in cycles before scaling; raw phases reach ~1e5 rad at 500 m and 1 cm
    return np.exp(-2j * np.pi * np.mod(d / wavelength, 1.0))


def exact_channel(ap: ApDescriptor, ue: UeDescriptor, psi: float, cfg: GlobalConfig) -> np.ndarray:
    """Spherical-wavefront channel from ``ue`` to every element of ``ap``."""
    r = element_positions(ap, cfg.spacing)
    d = np.linalg.norm(np.asarray(ue.position) - r, axis=-1)
    if np.any(d == 0):
        raise GeometryError("UE coincides with an antenna element")
    return attenuation(d, cfg.wavelength) * _unit_phasor_of_path(d, cfg.wavelength) * np.exp(1j * psi)


def channel_tensor(scenario: Scenario) -> np.ndarray:
    """Synchronisation-free exact channels for every link, shape (K, M, N_ap).

    Multiply UE ``k``'s slice by ``exp(1j * psi_k)`` to obtain the channel of
    a coherence block.
    """
    cfg = scenario.config
    elems = np.stack([element_positions(ap, cfg.spacing) for ap in scenario.aps])  # (M, N, 3)
    ue = scenario.ue_positions
    d = np.linalg.norm(ue[:, None, None, :] - elems[None], axis=-1)
    if np.any(d == 0):
        raise GeometryError("UE coincides with an antenna element")
    return attenuation(d, cfg.wavelength) * _unit_phasor_of_path(d, cfg.wavelength)


def direction_cosines(theta_az, theta_el):
    """Map (azimuth, elevation) to the in-plane direction cosines (u, v)."""
    theta_az = np.asarray(theta_az, dtype=float)
    theta_el = np.asarray(theta_el, dtype=float)
    return np.cos(theta_el) * np.sin(theta_az), np.sin(theta_el)


def angles_from_cosines(u, v):
    """Inverse of :func:`direction_cosines` restricted to the front hemisphere."""
    u = np.asarray(u, dtype=float)
    v = np.clip(np.asarray(v, dtype=float), -1.0, 1.0)
    w = np.sqrt(np.clip(1.0 - u**2 - v**2, 0.0, None))
    return np.arctan2(u, w), np.arcsin(v)


def steering_from_cosines(array: UpaGeometry, u, v) -> np.ndarray:
    """Far-field steering vectors for direction cosines; broadcasts over u, v.

    Returns an array of shape ``broadcast(u, v).shape + (N_ap,)``.
    """
    px, qz = (
        np.arange(array.n_elements) % array.cols,
        np.arange(array.n_elements) // array.cols,
    )
    kappa = 2 * np.pi * array.spacing / array.wavelength
    u = np.asarray(u, dtype=float)[..., None]
    v = np.asarray(v, dtype=float)[..., None]
    return np.exp(1j * kappa * (px * u + qz * v))


def steering_farfield(rows: int, cols: int, spacing: float, wavelength: float, theta_az, theta_el) -> np.ndarray:
    u, v = direction_cosines(theta_az, theta_el)
    return steering_from_cosines(UpaGeometry(rows, cols, spacing, wavelength), u, v)


def local_channel(d, theta_az, theta_el, psi, array: UpaGeometry) -> np.ndarray:
    """Far-field local model: common amplitude and phase times a steering vector."""
    rho = attenuation(d, array.wavelength)
    common = rho * _unit_phasor_of_path(np.asarray(d, dtype=float), array.wavelength) * np.exp(1j * np.asarray(psi))
    alpha = steering_farfield(array.rows, array.cols, array.spacing, array.wavelength, theta_az, theta_el)
    return np.asarray(common)[..., None] * alpha
