"""Monte-Carlo harness for the O(1/N) mean-field rates, plus an exact
Wasserstein-1 oracle for tiny equal-weight measures."""
import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._accel import parallel_map
from .consensus import consensus_point
from .errors import InsufficientRepeats, OracleLimitExceeded, ReferencePathMissing, UnequalSupport, ValidationError
from .rng import derive_seed

ORACLE_MAX_ATOMS = 8


@dataclass
class RateEstimate:
    n_values: list
    mse_values: list
    slope: float
    intercept: float
    n_repeats: int
    half_width: float = float("nan")
    """95% confidence half-width of the slope from the log-log regression."""
    extra: dict = field(default_factory=dict)


def fit_rate(n_values, mse_values, n_repeats):
    """Least-squares line through (log N, log MSE)."""
    n = np.asarray(n_values, dtype=np.float64)
    mse = np.asarray(mse_values, dtype=np.float64)
    if len(n) < 2 or np.any(np.diff(n) <= 0):
        raise ValidationError("n_values must be strictly increasing with at least two entries")
    if np.any(mse <= 0):
        # exact zeros (frozen dynamics, constant test functions) have no slope
        return RateEstimate(list(map(int, n)), list(map(float, mse)), float("nan"), float("nan"), n_repeats)
    fit = stats.linregress(np.log(n), np.log(mse))
    hw = float("nan")
    if len(n) > 2:
        hw = float(stats.t.ppf(0.975, len(n) - 2) * fit.stderr)
    return RateEstimate(list(map(int, n)), list(map(float, mse)), float(fit.slope), float(fit.intercept), n_repeats, hw)


def wasserstein1_exact(a, b):
    """W1 between two uniform measures with the same number m <= 8 of atoms,
    by enumerating all m! couplings that are permutations."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    m = a.shape[0]
    if m != b.shape[0]:
        raise UnequalSupport(f"measures have {m} and {b.shape[0]} atoms")
    if m > ORACLE_MAX_ATOMS:
        raise OracleLimitExceeded(f"exact oracle supports at most {ORACLE_MAX_ATOMS} atoms, got {m}")
    if m == 0:
        raise UnequalSupport("empty measures")
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    perms = np.array(list(itertools.permutations(range(m))))
    totals = cost[np.arange(m), perms].sum(axis=1)
    return float(totals.min() / m)


def consensus_lln_rate(manifold, objective, alpha, n_values, n_repeats, m_reference, seed=0):
    """MSE of the N-sample consensus point against a large-sample proxy.

    Samples are i.i.d. uniform on the surface (the initial law); the proxy
    for the exact consensus point uses ``m_reference`` samples.
    """
    if n_repeats < 10:
        raise InsufficientRepeats("at least 10 repeats are required")
    n_values = sorted(int(n) for n in n_values)
    ref_rng = np.random.default_rng(derive_seed(seed, 0, 0))
    ref_pos = _sample_chunked(manifold, m_reference, ref_rng)
    v_ref = consensus_point(ref_pos, objective.eval_batch(ref_pos), alpha).point
    mse = []
    for n in n_values:
        rng = np.random.default_rng(derive_seed(seed, n, 1))
        pos = manifold.sample_uniform(n * n_repeats, rng).reshape(n_repeats, n, manifold.dim)
        energies = objective.eval_batch(pos.reshape(-1, manifold.dim)).reshape(n_repeats, n)
        err = np.empty(n_repeats)
        for r in range(n_repeats):
            v = consensus_point(pos[r], energies[r], alpha).point
            err[r] = np.sum((v - v_ref) ** 2)
        mse.append(float(err.mean()))
    est = fit_rate(n_values, mse, n_repeats)
    est.extra["reference_consensus"] = v_ref.tolist()
    return est


def _sample_chunked(manifold, n, rng, chunk=1 << 18):
    parts = []
    while n > 0:
        k = min(n, chunk)
        parts.append(manifold.sample_uniform(k, rng))
        n -= k
    return np.concatenate(parts)


def reference_path(cfg, m_reference, n_steps, seed):
    """Consensus-point path of one large run, the proxy for the mean-field one."""
    from .dynamics import initial_ensemble, simulate

    ref_cfg = replace(cfg, seed=seed, n_particles=m_reference)
    pos0 = initial_ensemble(ref_cfg).positions
    pos, path, _ = simulate(ref_cfg, pos0, n_steps)
    return path, pos


def coupled_pair(cfg, n, path, seed, n_steps):
    """Interacting N-particle system and N mean-field copies driven by ``path``.

    Both start from the same keyed initial positions and use the same keyed
    Brownian increments. Returns the two position arrays at step ``n_steps``.
    """
    from .dynamics import initial_ensemble, simulate

    if path.shape[0] < n_steps + 1:
        raise ReferencePathMissing(f"reference path has {path.shape[0]} levels, need {n_steps + 1}")
    run_cfg = replace(cfg, seed=seed, n_particles=n)
    pos0 = initial_ensemble(run_cfg).positions
    interacting, _, _ = simulate(run_cfg, pos0, n_steps)
    copies, _, _ = simulate(run_cfg, pos0, n_steps, consensus_path=path)
    return interacting, copies


def _check_steps(cfg, t_check):
    if not 0 < t_check <= cfg.t_max + 1e-12:
        raise ValidationError("t_check must lie in (0, t_max]")
    n_steps = int(round(t_check / cfg.dt))
    if abs(n_steps * cfg.dt - t_check) > 1e-9:
        raise ValidationError("t_check must be a multiple of dt")
    return n_steps


def coupled_meanfield_rate(cfg, n_values, m_reference, t_check=1.0, n_repeats=100, seed=0, n_jobs=1):
    """max_i E|V_t^i - Vbar_t^i|^2 at ``t_check`` as a function of N."""
    if n_repeats < 10:
        raise InsufficientRepeats("at least 10 repeats are required")
    n_values = sorted(int(n) for n in n_values)
    n_steps = _check_steps(cfg, t_check)
    path, _ = reference_path(cfg, m_reference, n_steps, derive_seed(seed, 0, 0))
    mse = []
    for n in n_values:

        def one(r, n=n):
            a, b = coupled_pair(cfg, n, path, derive_seed(seed, n, r + 1), n_steps)
            return np.sum((a - b) ** 2, axis=1)

        sq = np.sum(parallel_map(one, range(n_repeats), n_jobs), axis=0)
        mse.append(float(np.max(sq / n_repeats)))
    return fit_rate(n_values, mse, n_repeats)


def empirical_measure_convergence(cfg, test_function, n_values, m_reference, t_check=1.0, n_repeats=100, seed=0,
                                  n_jobs=1):
    """E|<rho_t^N, phi> - <rho_t, phi>|^2 at ``t_check`` versus N.

    ``<rho_t, phi>`` is proxied by the average of ``phi`` over the reference
    run. ``test_function`` maps ``(n, d)`` positions to ``n`` values.
    """
    from .dynamics import initial_ensemble, simulate

    if n_repeats < 10:
        raise InsufficientRepeats("at least 10 repeats are required")
    n_values = sorted(int(n) for n in n_values)
    n_steps = _check_steps(cfg, t_check)
    _, ref_pos = reference_path(cfg, m_reference, n_steps, derive_seed(seed, 0, 0))
    ref_mean = float(np.mean(test_function(ref_pos)))
    mse = []
    for n in n_values:

        def one(r, n=n):
            run_cfg = replace(cfg, seed=derive_seed(seed, n, r + 1), n_particles=n)
            pos, _, _ = simulate(run_cfg, initial_ensemble(run_cfg).positions, n_steps)
            return (float(np.mean(test_function(pos))) - ref_mean) ** 2

        err = np.array(parallel_map(one, range(n_repeats), n_jobs))
        mse.append(float(err.mean()))
    est = fit_rate(n_values, mse, n_repeats)
    est.extra["reference_mean"] = ref_mean
    return est


def coordinate(k, power=1):
    """Test function v -> (v_k)^power."""

    def phi(v):
        return np.asarray(v)[:, k] ** power

    phi.__name__ = f"coord{k}" + (f"^{power}" if power != 1 else "")
    return phi


def parse_test_function(text):
    """``coord:k``, ``coordsq:k`` or ``const``."""
    from .errors import ParseError

    kind, _, arg = text.strip().partition(":")
    if kind == "const":
        return lambda v: np.ones(np.asarray(v).shape[0])
    if kind in ("coord", "coordsq"):
        try:
            k = int(arg)
        except ValueError:
            raise ParseError(f"bad coordinate index {arg!r}", field="test_function") from None
        return coordinate(k, 2 if kind == "coordsq" else 1)
    raise ParseError(f"unknown test function {text!r}", field="test_function")
