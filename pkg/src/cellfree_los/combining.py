"""Receive combining vectors and large-scale fading decoding (LSFD) weights.

Channel estimates are laid out as ``(..., K, M, N)``: leading axes are free
batch axes (typically Monte Carlo realizations), then UE, AP and antenna.
Centralized combiners use the same layout, with the ``(M, N)`` block read as
the stacked ``M * N`` vector. All combiners are exactly zero on the blocks of
APs that do not serve the UE.
"""

from __future__ import annotations

import numpy as np

from .association import ServiceMap, strong_interferers


def mr_decentralized(estimates, service: ServiceMap, k: int, m: int) -> np.ndarray:
    return np.asarray(estimates)[..., k, m, :] * float(service.serve[m, k])


def mr_centralized(estimates, service: ServiceMap, k: int) -> np.ndarray:
    return np.asarray(estimates)[..., k, :, :] * service.serve[:, k, None]


def _hermitian_solve(G, rhs):
    # np.linalg.solve is batched; G is Hermitian positive definite for noise_power > 0
    try:
        return np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("singular P-RZF system; noise_power must be positive") from exc


def przf_decentralized(estimates, service: ServiceMap, k: int, m: int, P_u: float, noise_power: float) -> np.ndarray:
    """Local P-RZF vector of UE k at AP m, regularised over the UEs AP m serves."""
    est = np.asarray(estimates)
    N = est.shape[-1]
    if not service.serve[m, k]:
        return np.zeros(est.shape[:-3] + (N,), dtype=complex)
    H = est[..., service.ues_of(m), m, :]  # (..., |K_m|, N)
    G = P_u * np.einsum("...jn,...jl->...nl", H, H.conj()) + noise_power * np.eye(N)
    return P_u * _hermitian_solve(G, est[..., k, m, :, None])[..., 0]


def przf_centralized(estimates, service: ServiceMap, k: int, P_u: float, noise_power: float) -> np.ndarray:
    """Centralized P-RZF vector of UE k, regularised over its strong interferers."""
    est = np.asarray(estimates)
    aps = service.aps_of(k)
    out = np.zeros(est.shape[:-3] + est.shape[-2:], dtype=complex)
    if aps.size == 0:
        return out
    Z = strong_interferers(service, k)
    H = est[..., Z, :, :][..., aps, :]
    H = H.reshape(H.shape[:-2] + (-1,))  # (..., |Z|, |M_k| N)
    G = P_u * np.einsum("...jn,...jl->...nl", H, H.conj()) + noise_power * np.eye(H.shape[-1])
    rhs = est[..., k, aps, :].reshape(est.shape[:-3] + (-1, 1))
    v = P_u * _hermitian_solve(G, rhs)[..., 0]
    out[..., aps, :] = v.reshape(v.shape[:-1] + (aps.size, est.shape[-1]))
    return out


def local_combiners(estimates, service: ServiceMap, combiner: str, P_u: float, noise_power: float) -> np.ndarray:
    """All decentralized combiners v_{k,m} at once, shape (..., K, M, N)."""
    est = np.asarray(estimates)
    mask = service.serve.T[:, :, None]  # (K, M, 1)
    if combiner == "mr":
        return est * mask
    if combiner != "przf":
        raise ValueError(f"unknown combiner {combiner!r}")
    N = est.shape[-1]
    # one Gram matrix per AP: sum over the UEs that AP serves
    G = P_u * np.einsum("...kmn,...kml,mk->...mnl", est, est.conj(), service.serve.astype(float))
    G = G + noise_power * np.eye(N)
    rhs = np.moveaxis(est, -3, -1)  # (..., M, N, K)
    V = P_u * _hermitian_solve(G, rhs)
    return np.moveaxis(V, -1, -3) * mask


def central_combiners(estimates, service: ServiceMap, combiner: str, P_u: float, noise_power: float) -> np.ndarray:
    """All centralized combiners v_k at once, shape (..., K, M, N).

    For P-RZF, UEs with identical serving sets and interferer sets share one
    Gram matrix and are solved together.
    """
    est = np.asarray(estimates)
    if combiner == "mr":
        return est * service.serve.T[:, :, None]
    if combiner != "przf":
        raise ValueError(f"unknown combiner {combiner!r}")
    N = est.shape[-1]
    out = np.zeros(est.shape, dtype=complex)
    groups: dict[tuple, list[int]] = {}
    for k in range(service.K):
        aps = service.aps_of(k)
        if aps.size:
            groups.setdefault((tuple(aps), tuple(strong_interferers(service, k))), []).append(k)
    for (aps, Z), ks in groups.items():
        aps, Z, ks = list(aps), list(Z), np.array(ks)
        H = est[..., Z, :, :][..., aps, :]
        H = H.reshape(H.shape[:-2] + (-1,))
        G = P_u * np.einsum("...jn,...jl->...nl", H, H.conj()) + noise_power * np.eye(H.shape[-1])
        rhs = est[..., ks, :, :][..., aps, :].reshape(est.shape[:-3] + (ks.size, -1))
        V = P_u * _hermitian_solve(G, np.swapaxes(rhs, -1, -2))
        V = np.swapaxes(V, -1, -2).reshape(est.shape[:-3] + (ks.size, len(aps), N))
        sub = out[..., ks, :, :]
        sub[..., aps, :] = V
        out[..., ks, :, :] = sub
    return out


def lsfd_weights(moments, P_u: float) -> np.ndarray:
    """Optimal LSFD weights for one UE from its :class:`MomentSet`.

    Solved on the serving APs only and zero-padded; equivalent to the full
    M x M system regularised by the modified identity on non-serving APs.
    """
    s = moments.serving
    eta = np.zeros(s.size, dtype=complex)
    if not s.any():
        return eta
    A = moments.zeta_outer_sum[np.ix_(s, s)] + np.diag(moments.f_diag[s])
    eta[s] = P_u * np.linalg.solve(A, moments.zeta_kk_mean[s])
    return eta
