"""UE-AP service relations for the AP-centric, UE-centric, fully connected and
co-located (single-AP) architectures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario


@dataclass(frozen=True)
class ServiceMap:
    """Boolean serving matrix ``serve[m, k]``: AP m serves UE k."""

    serve: np.ndarray

    def __post_init__(self):
        s = np.array(self.serve, dtype=bool)
        if s.ndim != 2:
            raise ValueError("serve must be an (M, K) matrix")
        s.setflags(write=False)
        object.__setattr__(self, "serve", s)

    @property
    def M(self) -> int:
        return self.serve.shape[0]

    @property
    def K(self) -> int:
        return self.serve.shape[1]

    def aps_of(self, k: int) -> np.ndarray:
        """Indices of the APs serving UE k (the set M_k)."""
        return np.flatnonzero(self.serve[:, k])

    def ues_of(self, m: int) -> np.ndarray:
        """Indices of the UEs served by AP m (the set K_m)."""
        return np.flatnonzero(self.serve[m])

    def is_served(self, k: int) -> bool:
        return bool(self.serve[:, k].any())

    def mask(self, k: int, m: int, N: int) -> np.ndarray:
        """A_{k,m}: identity if m serves k, zero matrix otherwise."""
        return np.eye(N) * float(self.serve[m, k])

    def block_mask(self, k: int, N: int) -> np.ndarray:
        """A_k = blockdiag(A_{k,1}, ..., A_{k,M})."""
        return np.diag(np.repeat(self.serve[:, k].astype(float), N))

    def complement(self, k: int) -> np.ndarray:
        """Modified identity with zero diagonal entries on the serving APs of k."""
        return np.diag((~self.serve[:, k]).astype(float))

    def serving_lists(self) -> list[list[int]]:
        return [self.aps_of(k).tolist() for k in range(self.K)]


def fully_connected(M: int, K: int) -> ServiceMap:
    return ServiceMap(np.ones((M, K), dtype=bool))


def ap_centric(scenario: Scenario, K_n: int) -> ServiceMap:
    """Each AP serves its K_n nearest UEs (ties go to the lower UE index)."""
    dist = scenario.distances()
    M, K = dist.shape
    if not 1 <= K_n <= K:
        raise ValueError(f"K_n must lie in [1, {K}]")
    order = np.argsort(dist, axis=1, kind="stable")[:, :K_n]
    serve = np.zeros((M, K), dtype=bool)
    np.put_along_axis(serve, order, True, axis=1)
    return ServiceMap(serve)


def ue_centric(scenario: Scenario, M_n: int) -> ServiceMap:
    """Each UE is served by its M_n nearest APs (ties go to the lower AP index)."""
    dist = scenario.distances()
    M, K = dist.shape
    if not 1 <= M_n <= M:
        raise ValueError(f"M_n must lie in [1, {M}]")
    order = np.argsort(dist, axis=0, kind="stable")[:M_n]
    serve = np.zeros((M, K), dtype=bool)
    np.put_along_axis(serve, order, True, axis=0)
    return ServiceMap(serve)


def strong_interferers(service: ServiceMap, k: int) -> np.ndarray:
    """UEs sharing at least one serving AP with UE k (trace(A_k A_j) != 0)."""
    overlap = service.serve[:, [k]] & service.serve
    return np.flatnonzero(overlap.any(axis=0))
