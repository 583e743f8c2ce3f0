"""Random instances.  Every draw comes from one ``numpy`` generator seeded once."""

from __future__ import annotations

import numpy as np

from .core import Instance, ParameterError, feasible_counts

GEOMETRIES = ("square", "clustered", "line")


def check_counts(n_facilities: int, n_clients: int, lower: int, upper: int) -> None:
    """Raise ParameterError naming the counting condition that fails."""
    if lower < 1 or upper < 1:
        raise ParameterError("L and U must be positive")
    if lower > upper:
        raise ParameterError(f"L={lower} exceeds U={upper}")
    if n_facilities < 1:
        raise ParameterError("need at least one facility")
    if not feasible_counts(n_clients, n_facilities, lower, upper):
        raise ParameterError(
            f"no k <= |F|={n_facilities} with k*L <= |C| <= k*U "
            f"(|C|={n_clients}, L={lower}, U={upper})")


def _points(rng: np.random.Generator, n: int, geometry: str, centres=None) -> np.ndarray:
    if geometry == "square":
        return rng.random((n, 2))
    if geometry == "line":
        return np.column_stack([rng.random(n), np.zeros(n)])
    if geometry == "clustered":
        k = len(centres)
        pick = rng.integers(0, k, size=n)
        return np.clip(centres[pick] + rng.normal(0, 0.05, size=(n, 2)), 0, 1)
    raise ParameterError(f"unknown geometry {geometry!r}; choose from {GEOMETRIES}")


def random_instance(seed: int, n_facilities: int, n_clients: int, lower: int, upper: int,
                    geometry: str = "square", cost_scale: float = 1.0) -> Instance:
    """Points in the unit square (or on a line / in blobs), costs uniform in [0, cost_scale]."""
    check_counts(n_facilities, n_clients, lower, upper)
    rng = np.random.default_rng(seed)
    centres = rng.random((max(2, n_facilities // 2), 2)) if geometry == "clustered" else None
    fxy = _points(rng, n_facilities, geometry, centres)
    cxy = _points(rng, n_clients, geometry, centres)
    f = rng.random(n_facilities) * cost_scale
    return Instance.from_coords(fxy, cxy, f, lower, upper)


def random_parameters(seed: int, max_facilities: int = 15, max_clients: int = 120,
                      min_facilities: int = 2) -> tuple[int, int, int, int]:
    """A feasible (|F|, |C|, L, U) drawn from ``seed``."""
    rng = np.random.default_rng([seed, 7])
    while True:
        nf = int(rng.integers(min_facilities, max_facilities + 1))
        nc = int(rng.integers(2, max_clients + 1))
        lower = int(rng.integers(1, max(2, nc // 2) + 1))
        upper = int(rng.integers(lower, max(lower, nc) + 1))
        if feasible_counts(nc, nf, lower, upper):
            return nf, nc, lower, upper


def suite_instance(seed: int, max_facilities: int = 15, max_clients: int = 120,
                   geometry: str = "square") -> Instance:
    nf, nc, lower, upper = random_parameters(seed, max_facilities, max_clients)
    return random_instance(seed, nf, nc, lower, upper, geometry)
