"""Counter-based random streams keyed by ``(seed, particle index, stream)``.

Every Gaussian or uniform variate is a pure function of its key, so a
particle's Brownian increments do not depend on how many other particles are
simulated, in what order, or on which backend. This is what makes the
interacting system and its mean-field copies share noise exactly, and what
lets seeded runs be reproduced bit for bit.

The mixing function is the splitmix64 finalizer; uniforms carry 53 random
bits in the open interval (0, 1); normals come from Box-Muller pairs.
"""
import numpy as np

from ._accel import get_backend, njit

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO53 = 1.0 / 9007199254740992.0

# Streams at or above this value are reserved for initial-condition sampling,
# so they never collide with per-step Brownian streams.
INIT_STREAM = 1 << 62


def _mix_py(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(*keys):
    """Fold integer keys into one 64-bit seed (e.g. experiment seed, N, repeat)."""
    h = 0x6A09E667F3BCC909
    for k in keys:
        h = _mix_py(h ^ _mix_py(int(k) & _MASK) + 0x9E3779B97F4A7C15)
    return h


def seed_key(seed):
    """Per-run key used by the kernels."""
    return np.uint64(_mix_py((int(seed) & _MASK) ^ 0x3C6EF372FE94F82B))


# -- numpy implementation ----------------------------------------------------

def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _bits_np(key, index, stream, counter):
    """uint64 hash for broadcastable uint64 arrays ``index, stream, counter``."""
    with np.errstate(over="ignore"):
        h = _mix_np(key + (index + _ONE) * _GOLDEN)
        h = _mix_np(h ^ (stream * _M1 + _GOLDEN))
        h = _mix_np(h + counter * _GOLDEN)
    return h


def _uniform_np(key, index, stream, counter):
    return ((_bits_np(key, index, stream, counter) >> _S11).astype(np.float64) + 0.5) * _TWO53


def keyed_normals_np(key, indices, stream, dim):
    """Standard normals of shape ``(len(indices), dim)`` (numpy path)."""
    idx = np.asarray(indices, dtype=np.int64).astype(np.uint64)[:, None]
    npairs = (dim + 1) // 2
    pair = np.arange(npairs, dtype=np.uint64)[None, :]
    st = np.uint64(stream)
    u1 = _uniform_np(key, idx, st, 2 * pair)
    u2 = _uniform_np(key, idx, st, 2 * pair + _ONE)
    r = np.sqrt(-2.0 * np.log(u1))
    th = 2.0 * np.pi * u2
    out = np.empty((idx.shape[0], 2 * npairs))
    out[:, 0::2] = r * np.cos(th)
    out[:, 1::2] = r * np.sin(th)
    return out[:, :dim]


def keyed_uniforms_np(key, indices, stream, count):
    idx = np.asarray(indices, dtype=np.int64).astype(np.uint64)[:, None]
    ctr = np.arange(count, dtype=np.uint64)[None, :]
    return _uniform_np(key, idx, np.uint64(stream), ctr)


# -- numba implementation ----------------------------------------------------

@njit
def _mix_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit
def uniform_nb(key, index, stream, counter):
    g = np.uint64(0x9E3779B97F4A7C15)
    h = _mix_nb(key + (np.uint64(index) + np.uint64(1)) * g)
    h = _mix_nb(h ^ (np.uint64(stream) * np.uint64(0xBF58476D1CE4E5B9) + g))
    h = _mix_nb(h + np.uint64(counter) * g)
    return (np.float64(h >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@njit
def normal_nb(key, index, stream, component):
    """Component ``component`` of the keyed Gaussian vector (scalar, numba)."""
    pair = component // 2
    u1 = uniform_nb(key, index, stream, 2 * pair)
    u2 = uniform_nb(key, index, stream, 2 * pair + 1)
    r = np.sqrt(-2.0 * np.log(u1))
    if component % 2 == 0:
        return r * np.cos(2.0 * np.pi * u2)
    return r * np.sin(2.0 * np.pi * u2)


@njit
def _keyed_normals_nb(key, indices, stream, dim):
    out = np.empty((indices.shape[0], dim))
    for i in range(indices.shape[0]):
        for k in range(dim):
            out[i, k] = normal_nb(key, indices[i], stream, k)
    return out


def keyed_normals(key, indices, stream, dim):
    """Standard normals keyed by ``(key, index, stream, component)``."""
    if get_backend() == "numba":
        return _keyed_normals_nb(np.uint64(key), np.asarray(indices, dtype=np.int64), np.uint64(stream), int(dim))
    return keyed_normals_np(np.uint64(key), indices, stream, dim)


class KeyedRNG:
    """Random source whose draws are addressed by particle index and stream.

    Unlike :class:`numpy.random.Generator` it holds no mutable state; two
    instances with the same seed produce the same variates for the same keys.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK
        self.key = seed_key(self.seed)

    def normal(self, indices, stream, dim):
        return keyed_normals(self.key, indices, stream, dim)

    def uniform(self, indices, stream, count):
        return keyed_uniforms_np(self.key, indices, stream, count)

    def __repr__(self):
        return f"KeyedRNG(seed={self.seed})"
