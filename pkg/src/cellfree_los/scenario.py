"""Network geometry: system constants, AP/UE placement and UPA element layout.

Coordinates are global Cartesian metres with z pointing up. Each AP carries a
wall-mounted square UPA whose plane is spanned by a horizontal in-array axis
and the vertical axis; the panel is rotated about z by its orientation angle.
Element ``n`` (0-based) sits at column ``p = n % cols`` and row
``q = n // cols``; element 0 is the reference element.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN = 1.380649e-23
REFERENCE_TEMPERATURE = 290.0

AP_HEIGHT = (12.0, 13.0)
UE_HEIGHT = (1.0, 2.0)
BS_HEIGHT = 12.5


class ConfigError(ValueError):
    """Raised for invalid system or campaign configuration."""


class GeometryError(ValueError):
    """Raised when a link geometry is degenerate (coincident points)."""


@dataclass(frozen=True)
class GlobalConfig:
    """System-wide constants shared by every placement.

    ``T_p`` defaults to ``K`` (one orthogonal pilot per UE) and ``spacing``
    defaults to half a wavelength.
    """

    M: int = 25
    N_ap: int = 4
    K: int = 40
    area_side: float = 500.0
    carrier_freq: float = 30e9
    bandwidth: float = 20e6
    tx_power_dbm: float = 13.0
    noise_figure_db: float = 7.0
    T_p: int | None = None
    T_u: int = 100
    spacing: float | None = None

    def __post_init__(self):
        for name in ("M", "N_ap", "K", "T_u"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.T_p is None:
            object.__setattr__(self, "T_p", int(self.K))
        if not isinstance(self.T_p, (int, np.integer)) or self.T_p < 1:
            raise ConfigError(f"T_p must be a positive integer, got {self.T_p!r}")
        side = math.isqrt(int(self.N_ap))
        if side * side != self.N_ap:
            raise ConfigError(f"N_ap={self.N_ap} is not a perfect square")
        for name in ("area_side", "carrier_freq", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2)
        elif not self.spacing > 0:
            raise ConfigError("spacing must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def tx_power(self) -> float:
        """Uplink transmit power P_u in watts."""
        return 10 ** ((self.tx_power_dbm - 30.0) / 10)

    @property
    def noise_power(self) -> float:
        """Thermal noise power over the band, including the noise figure (W)."""
        return BOLTZMANN * REFERENCE_TEMPERATURE * self.bandwidth * 10 ** (self.noise_figure_db / 10)

    @property
    def T_c(self) -> int:
        return self.T_p + self.T_u

    @property
    def upa_side(self) -> int:
        return math.isqrt(self.N_ap)


@dataclass(frozen=True)
class ApDescriptor:
    position: tuple[float, float, float]
    orientation: float
    rows: int
    cols: int

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    @property
    def reference_index(self) -> int:
        return 0


@dataclass(frozen=True)
class UeDescriptor:
    position: tuple[float, float, float]


@dataclass(frozen=True)
class Scenario:
    config: GlobalConfig
    aps: tuple[ApDescriptor, ...]
    ues: tuple[UeDescriptor, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.aps) != self.config.M or len(self.ues) != self.config.K:
            raise ConfigError("scenario AP/UE counts do not match the configuration")

    @property
    def ap_positions(self) -> np.ndarray:
        return np.array([ap.position for ap in self.aps], dtype=float)

    @property
    def ue_positions(self) -> np.ndarray:
        return np.array([ue.position for ue in self.ues], dtype=float)

    @property
    def orientations(self) -> np.ndarray:
        return np.array([ap.orientation for ap in self.aps], dtype=float)

    def distances(self) -> np.ndarray:
        """Reference-element distances, shape (M, K)."""
        diff = self.ue_positions[None, :, :] - self.ap_positions[:, None, :]
        return np.linalg.norm(diff, axis=-1)

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "seed": self.seed,
            "aps": [asdict(ap) for ap in self.aps],
            "ues": [asdict(ue) for ue in self.ues],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        aps = tuple(
            ApDescriptor(tuple(a["position"]), a["orientation"], a["rows"], a["cols"]) for a in data["aps"]
        )
        ues = tuple(UeDescriptor(tuple(u["position"])) for u in data["ues"])
        return cls(GlobalConfig(**data["config"]), aps, ues, data.get("seed"))

    def save(self, path: str | Path) -> None:
        # json writes floats with repr(), which round-trips exactly
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _sub_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def generate_scenario(config: GlobalConfig, seed: int) -> Scenario:
    """Draw one random placement of APs and UEs.

    UE and AP draws use separate sub-streams of ``seed`` so that the UE
    layout does not depend on how many APs are deployed. A single AP
    (``M == 1``) is the co-located m-MIMO base station and sits at the area
    centre at 12.5 m height with a random orientation.
    """
    side = config.area_side
    ue_rng = _sub_rng(seed, 0)
    ue_xy = ue_rng.uniform(0.0, side, size=(config.K, 2))
    ue_z = ue_rng.uniform(*UE_HEIGHT, size=config.K)

    ap_rng = _sub_rng(seed, 1)
    if config.M == 1:
        ap_xyz = np.array([[side / 2, side / 2, BS_HEIGHT]])
    else:
        ap_xy = ap_rng.uniform(0.0, side, size=(config.M, 2))
        ap_z = ap_rng.uniform(*AP_HEIGHT, size=config.M)
        ap_xyz = np.column_stack([ap_xy, ap_z])
    orient = ap_rng.uniform(0.0, 2 * np.pi, size=config.M)

    n = config.upa_side
    aps = tuple(
        ApDescriptor(tuple(float(c) for c in ap_xyz[m]), float(orient[m]), n, n) for m in range(config.M)
    )
    ues = tuple(UeDescriptor((float(x), float(y), float(z))) for (x, y), z in zip(ue_xy, ue_z))
    return Scenario(config, aps, ues, int(seed))


def local_axes(orientation: float) -> np.ndarray:
    """Rows are the AP's in-array horizontal axis, broadside normal and vertical axis."""
    c, s = math.cos(orientation), math.sin(orientation)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def element_offsets(rows: int, cols: int, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    """Lattice coordinates (p, q) of every element scaled by the spacing."""
    n = np.arange(rows * cols)
    return (n % cols) * spacing, (n // cols) * spacing


def element_positions(ap: ApDescriptor, spacing: float) -> np.ndarray:
    """Global coordinates of all elements of ``ap``, shape (N_ap, 3)."""
    px, qz = element_offsets(ap.rows, ap.cols, spacing)
    axes = local_axes(ap.orientation)
    return np.asarray(ap.position) + px[:, None] * axes[0] + qz[:, None] * axes[2]


def element_position(ap: ApDescriptor, n: int, spacing: float) -> np.ndarray:
    if not 0 <= n < ap.n_elements:
        raise IndexError(f"element index {n} out of range for {ap.n_elements} elements")
    return element_positions(ap, spacing)[n]


def link_geometry(ap: ApDescriptor, ue: UeDescriptor) -> tuple[float, float, float]:
    """Distance, azimuth and elevation of ``ue`` seen from the reference element.

    Angles are in the AP's local frame: azimuth is measured from the broadside
    normal towards the in-array horizontal axis, elevation from the horizontal
    plane. Broadside is (0, 0).
    """
    r = np.asarray(ue.position, dtype=float) - np.asarray(ap.position, dtype=float)
    d = float(np.linalg.norm(r))
    if d == 0.0:
        raise GeometryError("UE coincides with the AP reference element")
    x, y, z = local_axes(ap.orientation) @ r
    theta_el = math.asin(max(-1.0, min(1.0, z / d)))
    theta_az = math.atan2(x, y)
    return d, theta_az, theta_el
