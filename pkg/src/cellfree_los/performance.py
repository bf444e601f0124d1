"""Use-and-then-forget SINR bounds and spectral efficiency.

The expectations in the bounds are estimated by Monte Carlo with geometry
fixed: each inner realization redraws the UE synchronisation phases and the
pilot noise, re-estimates the channels and rebuilds the combiners.

Notation (per UE k):
    zeta_{k,j}[m] = v_{k,m}^H A_{k,m} h_{j,m}     (decentralized, length M)
    xi_{k,j}      = sum_m zeta_{k,j}[m]            (centralized, stacked v_k)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .association import ServiceMap
from .channel import UpaGeometry, channel_tensor
from .combining import central_combiners, local_combiners
from .estimation import SceGrids, sce_batch, uce
from .scenario import Scenario
from .training import assign_pilots, despread_all, make_pilot_book, rx_pilot_matrix

CSI_KINDS = ("perfect", "uce", "sce")


@dataclass(frozen=True)
class MomentSet:
    """Monte Carlo moments for one UE.

    Attributes:
        k: UE index.
        serving: (M,) bool, the APs serving this UE.
        zeta_kk_mean: E{zeta_{k,k}}, shape (M,).
        zeta_outer_sum: sum_j E{zeta_{k,j} zeta_{k,j}^H}, shape (M, M).
        f_diag: diagonal of F_k = (sigma^2/P_u) diag(E||vbar_{k,m}||^2).
        xi_kk_mean: E{xi_{k,k}}.
        xi_abs2: E{|xi_{k,j}|^2} for every j, shape (K,).
        vbar_norm2: E{||vbar_k||^2}.
        noise_ratio: sigma^2 / P_u.
        n_exp: number of inner realizations.
    """

    k: int
    serving: np.ndarray
    zeta_kk_mean: np.ndarray
    zeta_outer_sum: np.ndarray
    f_diag: np.ndarray
    xi_kk_mean: complex
    xi_abs2: np.ndarray
    vbar_norm2: float
    noise_ratio: float
    n_exp: int

    @property
    def xi_matrix(self) -> np.ndarray:
        """Xi_k = sum_j E{zeta zeta^H} - E{zeta_kk} E{zeta_kk}^H + F_k."""
        b = self.zeta_kk_mean
        return self.zeta_outer_sum - np.outer(b, b.conj()) + np.diag(self.f_diag)


@dataclass
class Realizations:
    """Inner Monte Carlo draws for one placement: true and estimated channels,
    both shaped (n_exp, K, M, N)."""

    H: np.ndarray
    H_hat: np.ndarray
    psi: np.ndarray


def draw_realizations(
    scenario: Scenario,
    csi: str,
    n_exp: int,
    rng: np.random.Generator,
    grids: SceGrids = SceGrids(),
    base_channels: np.ndarray | None = None,
) -> Realizations:
    """Draw ``n_exp`` coherence blocks and estimate every UE-AP channel.

    Phases are drawn first, then pilot noise, so the phase sequence for a
    given generator state does not depend on ``csi``.
    """
    if csi not in CSI_KINDS:
        raise ValueError(f"unknown CSI mode {csi!r}")
    cfg = scenario.config
    g = channel_tensor(scenario) if base_channels is None else base_channels
    psi = rng.uniform(0.0, 2 * np.pi, size=(n_exp, cfg.K))
    H = g[None] * np.exp(1j * psi)[:, :, None, None]
    if csi == "perfect":
        return Realizations(H, H, psi)

    pilots = make_pilot_book(cfg.T_p)[assign_pilots(cfg.K, cfg.T_p)]
    Y = rx_pilot_matrix(np.swapaxes(H, 1, 2), pilots, cfg.tx_power, cfg.noise_power, rng)  # (T, M, N, T_p)
    y_tilde = np.swapaxes(despread_all(Y, pilots), 1, 2)  # (T, K, M, N)
    if csi == "uce":
        return Realizations(H, uce(y_tilde, cfg.T_p, cfg.tx_power), psi)
    est = sce_batch(y_tilde.reshape(-1, cfg.N_ap), cfg.T_p, cfg.tx_power, UpaGeometry.from_config(cfg), grids)
    return Realizations(H, est.h_hat.reshape(H.shape), psi)


def combiners_for(real: Realizations, service: ServiceMap, combiner: str, proc: str, P_u: float, noise_power: float):
    if proc == "dec":
        return local_combiners(real.H_hat, service, combiner, P_u, noise_power)
    if proc == "cen":
        return central_combiners(real.H_hat, service, combiner, P_u, noise_power)
    raise ValueError(f"unknown processing mode {proc!r}")


def moments_from_draws(V, H, service: ServiceMap, noise_ratio: float) -> list[MomentSet]:
    """Sample moments from combiners ``V`` and true channels ``H``, both (T, K, M, N).

    Expectations use the 1/T sample mean so the centred second moments are
    positive semidefinite exactly for the empirical distribution.
    """
    T = V.shape[0]
    zeta = np.einsum("tkmn,tjmn->tkjm", V.conj(), H)  # (T, K, K, M)
    K = zeta.shape[1]
    idx = np.arange(K)
    zeta_kk = zeta[:, idx, idx, :].mean(axis=0)  # (K, M)
    outer = np.einsum("tkjm,tkjl->kml", zeta, zeta.conj()) / T
    vnorm = np.mean(np.sum(np.abs(V) ** 2, axis=-1), axis=0)  # (K, M)
    xi = zeta.sum(axis=-1)  # (T, K, K)
    xi_kk = xi[:, idx, idx].mean(axis=0)
    xi_abs2 = np.mean(np.abs(xi) ** 2, axis=0)
    return [
        MomentSet(
            k=k,
            serving=service.serve[:, k].copy(),
            zeta_kk_mean=zeta_kk[k],
            zeta_outer_sum=outer[k],
            f_diag=noise_ratio * vnorm[k],
            xi_kk_mean=complex(xi_kk[k]),
            xi_abs2=xi_abs2[k],
            vbar_norm2=float(vnorm[k].sum()),
            noise_ratio=noise_ratio,
            n_exp=T,
        )
        for k in range(K)
    ]


def estimate_moments(
    scenario: Scenario,
    service: ServiceMap,
    csi: str,
    combiner: str,
    proc: str,
    n_exp: int,
    rng: np.random.Generator,
    grids: SceGrids = SceGrids(),
) -> list[MomentSet]:
    if n_exp < 2:
        raise ValueError("n_exp must be at least 2")
    cfg = scenario.config
    real = draw_realizations(scenario, csi, n_exp, rng, grids)
    V = combiners_for(real, service, combiner, proc, cfg.tx_power, cfg.noise_power)
    return moments_from_draws(V, real.H, service, cfg.noise_power / cfg.tx_power)


def sinr_decentralized(moments: MomentSet, eta) -> float:
    """SINR of the decentralized bound for an arbitrary LSFD weight vector."""
    eta = np.asarray(eta, dtype=complex)
    num = abs(np.vdot(eta, moments.zeta_kk_mean)) ** 2
    den = float(np.real(np.vdot(eta, moments.xi_matrix @ eta)))
    if num == 0:
        return 0.0
    if den <= 0:
        return math.inf
    return num / den


def sinr_decentralized_opt(moments: MomentSet, P_u: float) -> float:
    """SINR of the decentralized bound at the optimal LSFD weights.

    Evaluated on the serving block only; the modified-identity term decouples
    the non-serving APs, whose contribution to the quadratic form is zero.
    """
    s = moments.serving
    if not s.any():
        return 0.0
    b = moments.zeta_kk_mean[s]
    Xi = moments.xi_matrix[np.ix_(s, s)]
    try:
        x = np.linalg.solve(Xi, b)
    except np.linalg.LinAlgError:
        return math.inf if np.any(b != 0) else 0.0
    return max(float(np.real(np.vdot(b, x))), 0.0)


def sinr_centralized(moments: MomentSet) -> float:
    num = abs(moments.xi_kk_mean) ** 2
    den = float(np.sum(moments.xi_abs2)) - num + moments.noise_ratio * moments.vbar_norm2
    if num == 0:
        return 0.0
    if den <= 0:
        return math.inf
    return num / den


def spectral_efficiency(gamma, T_u: int, T_c: int):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SINR must be nonnegative")
    return (T_u / T_c) * np.log2(1.0 + gamma)
