"""Laplace-weighted consensus point of a particle ensemble."""
from dataclasses import dataclass

import numpy as np

from .errors import EmptyEnsemble, NonFiniteEnergy


@dataclass
class ConsensusPoint:
    point: np.ndarray
    log_normalizer: float
    """log of (1/N) sum_j exp(-alpha E_j)."""
    argmin_index: int
    weights: np.ndarray


def consensus_weights(energies, alpha):
    """Normalized weights exp(-alpha E_j) / sum_k exp(-alpha E_k).

    Energies are shifted by their minimum first, so nothing overflows or
    underflows to an all-zero vector for any alpha. Returns
    ``(weights, argmin_index, log_normalizer)``.
    """
    energies = np.asarray(energies, dtype=np.float64)
    if energies.shape[0] == 0:
        raise EmptyEnsemble("consensus point of an empty ensemble")
    if not np.all(np.isfinite(energies)):
        raise NonFiniteEnergy("objective returned a non-finite value")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    j = int(np.argmin(energies))
    e_min = energies[j]
    w = np.exp(-alpha * (energies - e_min))
    total = w.sum()
    log_norm = -alpha * e_min + np.log(total / energies.shape[0])
    return w / total, j, float(log_norm)


def consensus_point(positions, energies, alpha):
    """Weighted barycenter sum_j w_j V^j with Laplace weights.

    The reduction runs in numpy's fixed pairwise order over particles, so
    seeded runs reproduce bit for bit.
    """
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape[0] == 0:
        raise EmptyEnsemble("consensus point of an empty ensemble")
    w, j, log_norm = consensus_weights(energies, alpha)
    point = np.sum(w[:, None] * positions, axis=0)
    return ConsensusPoint(point, log_norm, j, w)


def consensus_growth_bound_check(positions, energies, alpha):
    """Check |v_alpha| <= (1/N) exp(alpha (max E - min E)) sum_j |V^j|."""
    positions = np.asarray(positions, dtype=np.float64)
    energies = np.asarray(energies, dtype=np.float64)
    cp = consensus_point(positions, energies, alpha)
    n = positions.shape[0]
    spread = alpha * (energies.max() - energies.min())
    total = np.sum(np.linalg.norm(positions, axis=1))
    lhs = np.linalg.norm(cp.point)
    if spread > 700.0:  # the bound is +inf
        return True
    return bool(lhs <= np.exp(spread) * total / n + 1e-9)


def consensus_stability_check(measure_a, measure_b, alpha, objective):
    """Consensus-point difference and exact W1 distance of two small measures.

    Both measures are equal-weight atoms (arrays of shape ``(m, d)``, m <= 8).
    Returns ``(difference_norm, w1_distance)``; callers compare the two.
    """
    from .meanfield import wasserstein1_exact

    a = np.atleast_2d(np.asarray(measure_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(measure_b, dtype=np.float64))
    w1 = wasserstein1_exact(a, b)
    va = consensus_point(a, objective.eval_batch(a), alpha).point
    vb = consensus_point(b, objective.eval_batch(b), alpha).point
    return float(np.linalg.norm(va - vb)), w1
