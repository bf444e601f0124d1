import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cellfree_los.association import ServiceMap, fully_connected, strong_interferers
from cellfree_los.combining import (
    central_combiners,
    local_combiners,
    lsfd_weights,
    mr_centralized,
    mr_decentralized,
    przf_centralized,
    przf_decentralized,
)
from cellfree_los.performance import MomentSet, sinr_decentralized
from cellfree_los.training import complex_normal

P, S2 = 1.0, 0.1


def _est(rng, K, M, N, batch=()):
    return complex_normal(rng, batch + (K, M, N), 1.0)


def test_mr_is_masked_estimate():
    rng = np.random.default_rng(0)
    est = _est(rng, 3, 2, 4)
    sm = ServiceMap(np.array([[True, False, True], [False, True, True]]))
    np.testing.assert_array_equal(mr_decentralized(est, sm, 0, 0), est[0, 0])
    np.testing.assert_array_equal(mr_decentralized(est, sm, 0, 1), 0)
    v = mr_centralized(est, sm, 2)
    np.testing.assert_array_equal(v, est[2])
    np.testing.assert_array_equal(mr_centralized(est, sm, 1)[0], 0)


def test_single_ue_przf_is_collinear_with_estimate():
    rng = np.random.default_rng(1)
    est = _est(rng, 1, 1, 4)
    sm = fully_connected(1, 1)
    v = przf_decentralized(est, sm, 0, 0, P, S2)
    h = est[0, 0]
    cos = abs(np.vdot(v, h)) / (np.linalg.norm(v) * np.linalg.norm(h))
    assert cos == pytest.approx(1.0, abs=1e-12)


def test_przf_tends_to_mr_direction_at_high_noise():
    rng = np.random.default_rng(2)
    est = _est(rng, 3, 2, 4)
    sm = fully_connected(2, 3)
    v = przf_centralized(est, sm, 1, P, 1e12).ravel()
    h = est[1].ravel()
    cos = abs(np.vdot(v, h)) / (np.linalg.norm(v) * np.linalg.norm(h))
    assert cos == pytest.approx(1.0, abs=1e-9)


def test_przf_suppresses_interference_at_high_snr():
    rng = np.random.default_rng(3)
    est = _est(rng, 3, 1, 8)
    sm = fully_connected(1, 3)
    v = przf_decentralized(est, sm, 0, 0, P, 1e-8)
    own = abs(np.vdot(v, est[0, 0])) ** 2
    for j in (1, 2):
        assert abs(np.vdot(v, est[j, 0])) ** 2 / own < 1e-2


def test_fully_connected_central_equals_full_rzf():
    rng = np.random.default_rng(4)
    K, M, N = 4, 3, 2
    est = _est(rng, K, M, N)
    sm = fully_connected(M, K)
    H = est.reshape(K, M * N)
    G = P * H.T @ H.conj() + S2 * np.eye(M * N)
    for k in range(K):
        v = przf_centralized(est, sm, k, P, S2).ravel()
        np.testing.assert_allclose(v, P * np.linalg.solve(G, H[k]), rtol=1e-10)
        assert np.linalg.norm(G @ v / P - H[k]) / np.linalg.norm(H[k]) < 1e-10


def test_combiner_zero_on_non_serving_blocks():
    rng = np.random.default_rng(5)
    sm = ServiceMap(rng.random((4, 5)) < 0.5)
    est = _est(rng, 5, 4, 3)
    for fn in (local_combiners, central_combiners):
        V = fn(est, sm, "przf", P, S2)
        np.testing.assert_array_equal(V[~sm.serve.T], 0)


@settings(max_examples=25, deadline=None)
@given(arrays(bool, (3, 4)), st.integers(0, 2**31), st.sampled_from(["mr", "przf"]))
def test_batched_combiners_match_per_ue(serve, seed, combiner):
    sm = ServiceMap(serve)
    rng = np.random.default_rng(seed)
    est = _est(rng, 4, 3, 2, batch=(2,))
    V_loc = local_combiners(est, sm, combiner, P, S2)
    V_cen = central_combiners(est, sm, combiner, P, S2)
    for k in range(4):
        single_c = przf_centralized(est, sm, k, P, S2) if combiner == "przf" else mr_centralized(est, sm, k)
        np.testing.assert_allclose(V_cen[:, k], single_c, rtol=1e-10, atol=1e-14)
        for m in range(3):
            single_d = (
                przf_decentralized(est, sm, k, m, P, S2) if combiner == "przf" else mr_decentralized(est, sm, k, m)
            )
            np.testing.assert_allclose(V_loc[:, k, m], single_d, rtol=1e-10, atol=1e-14)


def test_central_przf_uses_only_strong_interferers():
    rng = np.random.default_rng(6)
    serve = np.array([[1, 1, 0], [0, 0, 1]], dtype=bool)
    sm = ServiceMap(serve)
    est = _est(rng, 3, 2, 2)
    assert strong_interferers(sm, 0).tolist() == [0, 1]
    perturbed = est.copy()
    perturbed[2] *= 5.0  # UE 2 is not a strong interferer of UE 0
    np.testing.assert_allclose(przf_centralized(est, sm, 0, P, S2), przf_centralized(perturbed, sm, 0, P, S2))


def test_non_positive_noise_singular_system():
    est = np.zeros((2, 1, 3), dtype=complex)
    with pytest.raises(np.linalg.LinAlgError):
        przf_decentralized(est, fully_connected(1, 2), 0, 0, P, 0.0)
    with pytest.raises(ValueError):
        local_combiners(est, fully_connected(1, 2), "zf", P, S2)


def _random_moments(rng, serving, K=3):
    M = serving.size
    zeta = complex_normal(rng, (200, K, M), 1.0) + 0.8
    zeta[:, :, ~serving] = 0
    outer = np.einsum("tjm,tjl->ml", zeta, zeta.conj()) / 200
    f = np.where(serving, rng.uniform(0.1, 1.0, M), 0.0)
    return MomentSet(
        k=0,
        serving=serving,
        zeta_kk_mean=zeta[:, 0].mean(axis=0),
        zeta_outer_sum=outer,
        f_diag=f,
        xi_kk_mean=0j,
        xi_abs2=np.zeros(K),
        vbar_norm2=0.0,
        noise_ratio=S2,
        n_exp=200,
    )


def test_lsfd_is_optimal_among_random_weights():
    rng = np.random.default_rng(7)
    mom = _random_moments(rng, np.array([True, True, False, True]))
    best = sinr_decentralized(mom, lsfd_weights(mom, P))
    for _ in range(100):
        eta = complex_normal(rng, 4, 1.0)
        assert sinr_decentralized(mom, eta) <= best * (1 + 1e-10)
    assert sinr_decentralized(mom, np.ones(4)) <= best * (1 + 1e-10)


def test_lsfd_zero_on_non_serving_and_matches_full_system():
    rng = np.random.default_rng(8)
    serving = np.array([False, True, True, False, True])
    mom = _random_moments(rng, serving)
    eta = lsfd_weights(mom, P)
    np.testing.assert_array_equal(eta[~serving], 0)
    A_bar = np.diag((~serving).astype(float))
    full = P * np.linalg.solve(mom.zeta_outer_sum + np.diag(mom.f_diag) + A_bar, mom.zeta_kk_mean)
    np.testing.assert_allclose(eta, full, rtol=1e-10, atol=1e-14)


def test_lsfd_unserved_is_zero():
    rng = np.random.default_rng(9)
    mom = _random_moments(rng, np.zeros(3, dtype=bool))
    np.testing.assert_array_equal(lsfd_weights(mom, P), 0)
