"""Pure numpy versions of the hot loops.

These are the reference implementations; ``_kernels_cy.pyx`` mirrors them
line for line and must produce bit-identical output.
"""

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)

REL_SPACELIKE, REL_PAST, REL_FUTURE, REL_MIXED = 0, 1, 2, 3
_SQRT2 = float(np.sqrt(2.0))


def _mix(z):
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def counter_hash(seed, traj, step):
    """64-bit hash of the triple ``(seed, traj, step)``."""
    h = _mix(seed & MASK64)
    h = _mix(h ^ (traj & MASK64))
    return _mix(h ^ (step & MASK64))


def uniform(seed, traj, step):
    """Uniform double in [0, 1) keyed by ``(seed, traj, step)``."""
    return (counter_hash(seed, traj, step) >> 11) * _INV53


def _mix_arr(z):
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniform_array(seed, traj, step):
    """Vectorised :func:`uniform` over an array of trajectory indices."""
    traj = np.asarray(traj, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _mix_arr(np.full(traj.shape, seed & MASK64, dtype=np.uint64))
        h = _mix_arr(h ^ traj)
        h = _mix_arr(h ^ np.uint64(step & MASK64))
    return (h >> np.uint64(11)).astype(np.float64) * _INV53


def sample_chain(cdf, absorbing, start, count, max_steps, seed):
    """Run ``count`` independent trajectories of a finite Markov chain.

    ``cdf[s]`` is the cumulative transition row of state ``s``; states flagged
    in ``absorbing`` stop a trajectory. Returns ``(final_state, steps)``; a
    trajectory that never absorbs stops after ``max_steps`` transitions.
    """
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    absorbing = np.ascontiguousarray(absorbing, dtype=bool)
    n_states = cdf.shape[0]
    state = np.full(count, start, dtype=np.int64)
    steps = np.zeros(count, dtype=np.int64)
    alive = np.nonzero(~absorbing[state])[0]
    step = 0
    while alive.size and step < max_steps:
        u = uniform_array(seed, alive, step)
        rows = cdf[state[alive]]
        nxt = (rows <= u[:, None]).sum(axis=1)
        np.minimum(nxt, n_states - 1, out=nxt)
        state[alive] = nxt
        steps[alive] += 1
        alive = alive[~absorbing[nxt]]
        step += 1
    return state, steps


def relation_matrix(lo, hi, radius, eps=1e-12):
    """Pairwise causal relation codes for box/ball regions.

    Region ``i`` is the Minkowski sum of the core box ``[lo[i], hi[i]]`` and a
    Euclidean ball of radius ``radius[i]``. Coordinate 0 is time.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    radius = np.asarray(radius, dtype=np.float64)
    d_lo = lo[None, :, :] - hi[:, None, :]
    d_hi = hi[None, :, :] - lo[:, None, :]
    min_dt = d_lo[..., 0]
    max_dt = d_hi[..., 0]
    max_abs_x = np.sqrt((np.maximum(np.abs(d_lo[..., 1:]), np.abs(d_hi[..., 1:])) ** 2).sum(-1))
    gap = np.maximum(np.maximum(d_lo[..., 1:], -d_hi[..., 1:]), 0.0)
    min_abs_x = np.sqrt((gap**2).sum(-1))
    max_abs_t = np.maximum(np.abs(min_dt), np.abs(max_dt))
    thresh = _SQRT2 * (radius[:, None] + radius[None, :]) + eps
    out = np.full(min_dt.shape, REL_MIXED, dtype=np.int8)
    out[min_abs_x - max_abs_t > thresh] = REL_SPACELIKE
    out[-max_dt - max_abs_x > thresh] = REL_FUTURE
    out[min_dt - max_abs_x > thresh] = REL_PAST
    return out
