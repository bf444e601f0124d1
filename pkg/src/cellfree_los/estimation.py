"""Channel estimation from de-spread pilot observations.

* perfect CSI: the true channel is passed through;
* UCE: per-element least squares, ``y_tilde / (T_p sqrt(P_u))``;
* SCE: maximum-likelihood fit of the far-field local model
  ``h_L(d, theta, psi)`` by alternating optimisation.

SCE works on direction cosines ``(u, v)`` of the planar array. The angular
step maximises ``|alpha(u, v)^H y|^2`` on a coarse grid followed by nested
local grids; it does not depend on range or phase, so it is computed once
per observation. Range and phase are then closed form given the angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import UpaGeometry, angles_from_cosines, attenuation, local_channel, prop_phase, steering_from_cosines


@dataclass(frozen=True)
class SceGrids:
    """Search settings for SCE.

    Attributes:
        resolution: coarse grid points per direction-cosine axis over [-1, 1].
        levels: number of local refinements around the running maximum.
        shrink: cell shrink factor per refinement; each local grid spans
            plus/minus one parent cell with ``2 * shrink + 1`` points per axis.
        tol: stop when the residual improves by less than ``tol`` (relative).
        max_iter: cap on outer iterations.
    """

    resolution: int = 64
    levels: int = 2
    shrink: int = 8
    tol: float = 1e-6
    max_iter: int = 10

    def __post_init__(self):
        if self.resolution < 2 or self.shrink < 2:
            raise ValueError("grid resolution and shrink factor must be at least 2")
        if self.levels < 0 or self.max_iter < 1 or not self.tol > 0:
            raise ValueError("invalid SCE iteration settings")

    @property
    def coarse_cell(self) -> float:
        return 2.0 / (self.resolution - 1)

    @property
    def final_cell(self) -> float:
        return self.coarse_cell / self.shrink**self.levels


@dataclass(frozen=True)
class ChannelEstimate:
    h_hat: np.ndarray
    kind: str
    distance: float | None = None
    theta: tuple[float, float] | None = None
    psi: float | None = None
    residuals: tuple[float, ...] = ()
    degenerate: bool = False


@dataclass
class SceBatch:
    """Vectorised SCE output for a batch of observations."""

    h_hat: np.ndarray
    distance: np.ndarray
    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    residuals: np.ndarray  # (B, iterations run)
    degenerate: np.ndarray
    theta_az: np.ndarray = field(init=False)
    theta_el: np.ndarray = field(init=False)

    def __post_init__(self):
        self.theta_az, self.theta_el = angles_from_cosines(self.u, self.v)


def perfect_csi(h) -> ChannelEstimate:
    return ChannelEstimate(np.array(h, dtype=complex, copy=True), "perfect")


def uce(y_tilde, T_p: int, P_u: float) -> np.ndarray:
    """Least-squares estimate; works on any array of observations."""
    return np.asarray(y_tilde) / (T_p * np.sqrt(P_u))


def uce_estimate(obs, T_p: int, P_u: float) -> ChannelEstimate:
    return ChannelEstimate(uce(obs.y_tilde, T_p, P_u), "UCE")


def _grid_power(Y, eu, ev):
    # Y: (B, rows, cols); eu: (B|1, Gu, cols); ev: (B|1, Gv, rows) -> (B, Gv, Gu)
    S = ev @ (Y @ np.swapaxes(eu, -1, -2))
    return S.real**2 + S.imag**2


def _angle_search(Y, array: UpaGeometry, grids: SceGrids, chunk: int = 256):
    """Grid-then-refine maximisation of the beamformed power; returns (u, v)."""
    B = Y.shape[0]
    kappa = 2 * np.pi * array.spacing / array.wavelength
    p = np.arange(array.cols)
    q = np.arange(array.rows)
    g = np.linspace(-1.0, 1.0, grids.resolution)
    eu0 = np.exp(-1j * kappa * np.outer(g, p)).astype(np.complex64)[None]
    ev0 = np.exp(-1j * kappa * np.outer(g, q)).astype(np.complex64)[None]
    outside = (g[:, None] ** 2 + g[None, :] ** 2) > 1.0 + 1e-12  # (v, u)

    u = np.empty(B)
    v = np.empty(B)
    Y64 = Y.astype(np.complex64)
    for s in range(0, B, chunk):
        P = _grid_power(Y64[s : s + chunk], eu0, ev0)
        P[:, outside] = -np.inf
        flat = P.reshape(P.shape[0], -1).argmax(axis=1)
        iv, iu = np.unravel_index(flat, outside.shape)
        u[s : s + chunk] = g[iu]
        v[s : s + chunk] = g[iv]

    cell = grids.coarse_cell
    offsets = np.arange(-grids.shrink, grids.shrink + 1)
    for _ in range(grids.levels):
        cell /= grids.shrink
        uc = u[:, None] + cell * offsets  # (B, L)
        vc = v[:, None] + cell * offsets
        eu = np.exp(-1j * kappa * uc[:, :, None] * p)
        ev = np.exp(-1j * kappa * vc[:, :, None] * q)
        P = _grid_power(Y, eu, ev)
        bad = (vc[:, :, None] ** 2 + uc[:, None, :] ** 2 > 1.0 + 1e-12) | (np.abs(uc[:, None, :]) > 1) | (
            np.abs(vc[:, :, None]) > 1
        )
        P[bad] = -np.inf
        flat = P.reshape(B, -1).argmax(axis=1)
        iv, iu = np.unravel_index(flat, P.shape[1:])
        u = uc[np.arange(B), iu]
        v = vc[np.arange(B), iv]
    return u, v


def _model(scale, d, u, v, psi, array):
    theta_az, theta_el = angles_from_cosines(u, v)
    return scale * local_channel(d, theta_az, theta_el, psi, array)


def sce_batch(y_tilde, T_p: int, P_u: float, array: UpaGeometry, grids: SceGrids = SceGrids()) -> SceBatch:
    """Structured ML estimates for a batch of observations of shape (B, N_ap).

    Per outer iteration: angle by grid search; range by matching the
    observed energy to the model energy; phase in closed form; range refined
    to the least-squares amplitude with the phase re-fitted. The residual
    ``||y - T_p sqrt(P_u) h_L||^2`` after every outer iteration is recorded.
    """
    y = np.atleast_2d(np.asarray(y_tilde, dtype=complex))
    B, N = y.shape
    if N != array.n_elements:
        raise ValueError("observation length does not match the array")
    c = T_p * np.sqrt(P_u)
    lam = array.wavelength

    energy = np.sum(np.abs(y) ** 2, axis=1)
    degenerate = energy == 0.0
    live = ~degenerate

    u = np.zeros(B)
    v = np.zeros(B)
    d = np.full(B, np.inf)
    psi = np.zeros(B)
    h_hat = np.zeros((B, N), dtype=complex)
    history = []

    if np.any(live):
        yl = y[live]
        el = energy[live]
        ul, vl = _angle_search(yl.reshape(-1, array.rows, array.cols), array, grids)
        alpha = steering_from_cosines(array, ul, vl)
        b = np.einsum("bn,bn->b", np.conj(alpha), yl)
        prev = None
        res_hist = []
        for _ in range(grids.max_iter):
            # range from energy matching: ||y||^2 = N (c rho(d))^2
            dl = lam * c * np.sqrt(N) / (4 * np.pi * np.sqrt(el))
            psil = np.mod(np.angle(b) - prop_phase(dl, lam), 2 * np.pi)
            # least-squares amplitude |alpha^H y| / N with the phase re-fitted
            amp = np.abs(b) / N
            dl = np.where(amp > 0, lam * c / (4 * np.pi * np.where(amp > 0, amp, 1.0)), dl)
            psil = np.mod(np.angle(b) - prop_phase(dl, lam), 2 * np.pi)
            model = _model(c, dl, ul, vl, psil, array)
            res = np.sum(np.abs(yl - model) ** 2, axis=1)
            res_hist.append(res)
            if prev is not None and np.all(prev - res <= grids.tol * prev):
                break
            prev = res
        u[live], v[live], d[live], psi[live] = ul, vl, dl, psil
        h_hat[live] = model / c
        history = np.zeros((B, len(res_hist)))
        history[live] = np.column_stack(res_hist)
    else:
        history = np.zeros((B, 0))
    return SceBatch(h_hat, d, u, v, psi, np.asarray(history), degenerate)


def sce(obs, T_p: int, P_u: float, array: UpaGeometry, grids: SceGrids = SceGrids()) -> ChannelEstimate:
    """Structured ML estimate for one observation (``PilotObservation`` or vector)."""
    y = getattr(obs, "y_tilde", obs)
    out = sce_batch(np.asarray(y)[None], T_p, P_u, array, grids)
    return ChannelEstimate(
        out.h_hat[0],
        "SCE",
        float(out.distance[0]),
        (float(out.theta_az[0]), float(out.theta_el[0])),
        float(out.psi[0]),
        tuple(float(r) for r in out.residuals[0]),
        bool(out.degenerate[0]),
    )


def nmse(h_hat, h, axis=-1):
    """Normalised squared error ||h_hat - h||^2 / ||h||^2 along ``axis``."""
    h = np.asarray(h)
    return np.sum(np.abs(np.asarray(h_hat) - h) ** 2, axis=axis) / np.sum(np.abs(h) ** 2, axis=axis)
