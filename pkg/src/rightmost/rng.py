"""Counter-based bond randomness.

Every bond of the lattice gets its uniform from a pure function of
``(seed, trial, level, site, direction)``.  A trial is therefore a fixed
environment on the whole infinite lattice: simulations may evaluate only
the bonds they touch, materialized windows of any width agree where they
overlap, and results never depend on the thread schedule.

Splitting scheme
----------------
``master = SeedSequence(seed).generate_state(1, uint64)[0]``

``trial_key(t) = mix(master ^ mix(t * GOLDEN + GOLDEN))``

``bond_uniform(key, k, x, d) = (mix(mix(key ^ c) + GOLDEN) >> 11) * 2**-53``
with the counter ``c = (k << 33) | ((x + 2**31) << 1) | d`` and
``d = 0`` for the bond to ``x - 1``, ``d = 1`` for the bond to ``x + 1``.

``mix`` is the splitmix64 finalizer.
"""
import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S33 = np.uint64(33)
_ONE = np.uint64(1)
_XBIAS = np.int64(1 << 31)
_INV53 = 1.0 / 9007199254740992.0

LEFT = 0
RIGHT = 1


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def trial_key(master, trial):
    return mix64(master ^ mix64(np.uint64(trial) * GOLDEN + GOLDEN))


@njit(cache=True, inline="always")
def bond_uniform(key, level, x, d):
    c = (np.uint64(level) << _S33) | (np.uint64(np.int64(x) + _XBIAS) << _ONE) | np.uint64(d)
    h = mix64(mix64(key ^ c) + GOLDEN)
    return np.float64(h >> _S11) * _INV53


def master_key(seed: int) -> np.uint64:
    """Derive the 64-bit master key from an arbitrary nonnegative seed."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    return np.random.SeedSequence(seed).generate_state(1, np.uint64)[0]


@njit(cache=True)
def trial_keys(master, first, count):
    out = np.empty(count, dtype=np.uint64)
    for i in range(count):
        out[i] = trial_key(master, first + i)
    return out
