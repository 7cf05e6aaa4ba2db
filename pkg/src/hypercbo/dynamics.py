"""Time stepping of the constrained consensus-based optimization SDE.

Each step freezes the consensus point from the pre-step positions, moves
every particle with the Euler-Maruyama increment

    dV = -lam P(V)(V - v) dt + sigma |V - v| P(V) dB
         - (sigma^2 / 2) |V - v|^2 lap(gamma)(V) grad(gamma)(V) dt,

and maps the result back onto the surface with the closest-point map. The
last (curvature) term cancels the normal drift that projected isotropic
noise produces at second order, so the increment stays on the surface in
expectation even before projection.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .consensus import consensus_point
from .errors import NonFiniteState, ParseError, ValidationError
from .kernels import diameter, update_particles
from .manifold import KIND_CUSTOM, Manifold
from .objective import Objective
from .rng import KeyedRNG


@dataclass(frozen=True)
class StopRule:
    """``fixed`` runs to t_max; ``diameter`` and ``residual`` stop early once
    the ensemble diameter, or the largest particle distance to the consensus
    point, falls below ``eps``."""

    kind: str = "fixed"
    eps: float = 0.0

    @classmethod
    def parse(cls, text):
        kind, _, eps = text.strip().partition(":")
        kind = kind.strip().lower()
        if kind == "fixed":
            if eps:
                raise ParseError("fixed stop rule takes no argument", field="stop_rule")
            return cls()
        if kind in ("diameter", "residual"):
            try:
                value = float(eps) if eps else 1e-4
            except ValueError:
                raise ParseError(f"bad tolerance {eps!r}", field="stop_rule") from None
            return cls(kind, value)
        raise ParseError(f"unknown stop rule {kind!r}", field="stop_rule")

    def __str__(self):
        return "fixed" if self.kind == "fixed" else f"{self.kind}:{self.eps!r}"


@dataclass
class SimConfig:
    manifold: Manifold
    objective: Objective
    lam: float = 1.0
    sigma: float = 0.25
    alpha: float = 50.0
    dt: float = 0.05
    t_max: float = 5.0
    n_particles: int = 20
    seed: int = 0
    stop_rule: StopRule = field(default_factory=StopRule)

    def validate(self):
        errors = []
        if not self.lam > 0:
            errors.append("lambda must be positive")
        if not self.sigma >= 0:
            errors.append("sigma must be nonnegative")
        if not self.alpha > 0:
            errors.append("alpha must be positive")
        if not self.dt > 0:
            errors.append("dt must be positive")
        if not self.t_max > 0:
            errors.append("t_max must be positive")
        elif self.dt > 0 and self.dt > self.t_max:
            errors.append("dt must not exceed t_max")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            errors.append("n_particles must be a positive integer")
        if self.stop_rule.kind != "fixed" and not self.stop_rule.eps > 0:
            errors.append("stop rule tolerance must be positive")
        km = getattr(self.objective, "known_minimizer", None)
        if km is not None and len(km) != self.manifold.dim:
            errors.append("objective minimizer dimension differs from the manifold dimension")
        if errors:
            raise ValidationError(errors)
        return self

    @property
    def n_steps(self):
        return max(1, math.ceil(self.t_max / self.dt - 1e-9))


@dataclass
class Ensemble:
    positions: np.ndarray
    step: int = 0
    time: float = 0.0
    indices: Optional[np.ndarray] = None
    """Stream keys of the particles; defaults to ``0..N-1``."""

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.indices is None:
            self.indices = np.arange(self.positions.shape[0], dtype=np.int64)


@dataclass
class RunTrace:
    step: np.ndarray
    time: np.ndarray
    consensus: np.ndarray
    consensus_energy: np.ndarray
    diameter: np.ndarray
    max_gamma_defect: np.ndarray
    mean_energy: np.ndarray
    final_positions: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.step)

    @property
    def final_consensus(self):
        return self.consensus[-1]

    @classmethod
    def empty(cls, dim):
        z = np.zeros(0)
        return cls(np.zeros(0, dtype=np.int64), z, np.zeros((0, dim)), z, z, z, z)


def initial_ensemble(cfg, n=None, indices=None):
    """i.i.d. uniform positions on the surface, keyed by particle index."""
    n = cfg.n_particles if n is None else n
    if cfg.manifold.kind == KIND_CUSTOM:
        # user samplers take (n, rng) with a numpy Generator; not index-keyed
        pos = cfg.manifold.sample_uniform(n, np.random.default_rng(cfg.seed))
    else:
        pos = cfg.manifold.sample_uniform(n, KeyedRNG(cfg.seed), indices=indices)
    return Ensemble(pos, indices=indices)


def _advance(cfg, ens, v, rng, project=True, substeps=1, dt=None):
    dt = cfg.dt if dt is None else dt
    pos, defect = update_particles(
        cfg.manifold, ens.positions, v, cfg.lam, cfg.sigma, dt, rng.key, ens.step,
        indices=ens.indices, project=project, substeps=substeps,
    )
    new = Ensemble(pos, ens.step + 1, (ens.step + 1) * dt, ens.indices)
    return new, defect


def em_step(ens, cfg, rng=None):
    """Advance the ensemble by one Euler-Maruyama step with projection.

    The consensus point is computed once from the current positions. Brownian
    increments are keyed by ``(seed, particle index, step)``.
    """
    rng = KeyedRNG(cfg.seed) if rng is None else rng
    energies = cfg.objective.eval_batch(ens.positions)
    v = consensus_point(ens.positions, energies, cfg.alpha).point
    new, _ = _advance(cfg, ens, v, rng)
    return new


def run(cfg, ensemble=None, record_diameter=True):
    """Simulate to ``cfg.t_max`` (or until the stop rule fires).

    The trace holds one record per time level including t = 0; its last
    consensus point is the optimizer output.
    """
    cfg.validate()
    rng = KeyedRNG(cfg.seed)
    ens = initial_ensemble(cfg) if ensemble is None else ensemble
    rows = []
    defect = 0.0
    for k in range(cfg.n_steps + 1):
        energies = cfg.objective.eval_batch(ens.positions)
        cp = consensus_point(ens.positions, energies, cfg.alpha)
        v = cp.point
        diam = diameter(ens.positions) if record_diameter else np.nan
        rows.append((ens.step, ens.time, v, cfg.objective.eval(v), diam, defect, float(np.mean(energies))))
        if k == cfg.n_steps or _should_stop(cfg.stop_rule, ens.positions, v, diam):
            break
        ens, d = _advance(cfg, ens, v, rng)
        defect = float(np.max(d))
        if not np.all(np.isfinite(ens.positions)):
            raise NonFiniteState(f"non-finite state at step {ens.step}")
    return RunTrace(
        step=np.array([r[0] for r in rows], dtype=np.int64),
        time=np.array([r[1] for r in rows]),
        consensus=np.array([r[2] for r in rows]),
        consensus_energy=np.array([r[3] for r in rows]),
        diameter=np.array([r[4] for r in rows]),
        max_gamma_defect=np.array([r[5] for r in rows]),
        mean_energy=np.array([r[6] for r in rows]),
        final_positions=ens.positions,
    )


def _should_stop(rule, positions, v, diam):
    if rule.kind == "diameter":
        d = diam if np.isfinite(diam) else diameter(positions)
        return d < rule.eps
    if rule.kind == "residual":
        return float(np.max(np.linalg.norm(positions - v, axis=1))) < rule.eps
    return False


def simulate(cfg, positions, n_steps, seed=None, indices=None, consensus_path=None, project=True, substeps=1, dt=None):
    """Bare integration loop used by the experiment harness.

    With ``consensus_path`` given, step ``k`` uses ``consensus_path[k]``
    instead of the ensemble's own consensus point: the particles are then
    independent copies of the mean-field SDE driven by that path. Returns
    ``(positions, path, max_defect)`` where ``path`` has ``n_steps + 1`` rows.
    """
    rng = KeyedRNG(cfg.seed if seed is None else seed)
    ens = Ensemble(np.array(positions, dtype=np.float64), indices=indices)
    path = np.empty((n_steps + 1, cfg.manifold.dim))
    max_defect = 0.0
    for k in range(n_steps + 1):
        if consensus_path is None:
            v = consensus_point(ens.positions, cfg.objective.eval_batch(ens.positions), cfg.alpha).point
        else:
            v = consensus_path[k]
        path[k] = v
        if k == n_steps:
            break
        ens, d = _advance(cfg, ens, v, rng, project=project, substeps=substeps, dt=dt)
        max_defect = max(max_defect, float(np.max(d)))
    return ens.positions, path, max_defect


def manifold_defect_scaling(cfg, dt_list, t_end=None, project=True):
    """Largest pre-projection |gamma| for each step size.

    With ``project=True`` (default) the run is the usual projected scheme and
    the recorded defect is |gamma| of each step's point before its
    closest-point projection, i.e. the one-step departure from the surface.
    With ``project=False`` no projection is ever applied and the defect
    accumulates over the whole run. Either way the continuous dynamics keeps
    gamma = 0 exactly, so the defect must shrink with dt.

    All step sizes must be integer multiples of the smallest one: every run
    then sees the same Brownian path.
    """
    cfg.validate()
    dt_list = [float(x) for x in dt_list]
    if any(b >= a for a, b in zip(dt_list, dt_list[1:])):
        raise ValidationError("dt_list must be strictly decreasing")
    t_end = cfg.t_max if t_end is None else float(t_end)
    fine = dt_list[-1]
    ens0 = initial_ensemble(cfg)
    out = []
    for dt in dt_list:
        ratio = dt / fine
        sub = int(round(ratio))
        if abs(ratio - sub) > 1e-9:
            raise ValidationError(f"dt={dt} is not an integer multiple of {fine}")
        n_steps = max(1, math.ceil(t_end / dt - 1e-9))
        # coarse step k consumes the keyed fine streams k*sub .. k*sub+sub-1
        _, _, defect = simulate(cfg, ens0.positions, n_steps, project=project, substeps=sub, dt=dt)
        out.append((dt, defect))
    return out
