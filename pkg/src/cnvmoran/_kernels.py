"""JIT-compiled event loops for the two-parent Moran jump process.

The population is stored as one type (copy number) per individual, so that
drawing the dying individual and both parents uniformly with replacement is
three independent integer draws.  Factorial-moment sums are kept up to date
incrementally, which makes observing Phi and rho_2 at every grid point O(1).

Each replicate reseeds numba's per-thread generator from its own seed before
the first draw, so results do not depend on how replicates are scheduled over
threads.
"""
import numpy as np
from numba import config, njit, prange

# Prefer OpenMP/workqueue: the TBB layer is often present but too old to load.
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

BINOMIAL = 0
UNIFORM = 1
ALL_OR_NOTHING = 2
TABLE = 3

OK = 0
EVENT_CAP = 1
TABLE_RANGE = 2
LOG_FULL = 3


@njit(cache=True)
def _offspring(k, code, q, cdf):
    if k == 0:
        return 0
    if code == BINOMIAL:
        return np.random.binomial(k, q)
    if code == UNIFORM:
        return np.random.randint(0, k + 1)
    if code == ALL_OR_NOTHING:
        if np.random.random() < 0.5:
            return k
        return 0
    u = np.random.random()
    j = 0
    while j < k and cdf[k, j] < u:
        j += 1
    return j


@njit(cache=True)
def _falling(k, n):
    out = 1
    for i in range(n):
        out *= k - i
    return out


@njit(cache=True)
def run_replicate(types, code, q, cdf, t_end, grid, snap_slot, seed,
                  max_events, sums_out, snaps_out, log_out):
    """Advance ``types`` in place up to ``t_end``.

    ``sums_out[g]`` receives (sum k, sum k(k-1), sum k(k-1)(k-2)) of the
    state in force just before ``grid[g]``; grid points with
    ``snap_slot[g] >= 0`` also copy the type vector into that row of
    ``snaps_out``.  ``log_out`` rows are (time, n, k, l, j, j', m); pass an
    array with zero rows to disable logging.

    Returns (status, number of events).
    """
    np.random.seed(seed)
    n_ind = types.shape[0]
    kmax = cdf.shape[0] - 1
    scale = 2.0 / (n_ind * n_ind)
    s1 = 0
    s2 = 0
    s3 = 0
    for i in range(n_ind):
        k = types[i]
        s1 += k
        s2 += k * (k - 1)
        s3 += k * (k - 1) * (k - 2)
    n_grid = grid.shape[0]
    g = 0
    t = 0.0
    n_events = 0
    max_log = log_out.shape[0]
    while True:
        t += np.random.exponential(scale)
        while g < n_grid and grid[g] < t and grid[g] <= t_end:
            sums_out[g, 0] = s1
            sums_out[g, 1] = s2
            sums_out[g, 2] = s3
            slot = snap_slot[g]
            if slot >= 0:
                snaps_out[slot, :] = types
            g += 1
        if t > t_end:
            break
        if n_events >= max_events:
            return EVENT_CAP, n_events
        c = np.random.randint(0, n_ind)
        a = np.random.randint(0, n_ind)
        b = np.random.randint(0, n_ind)
        n = types[c]
        k = types[a]
        l = types[b]
        if code == TABLE and (k > kmax or l > kmax):
            return TABLE_RANGE, n_events
        j = _offspring(k, code, q, cdf)
        jj = _offspring(l, code, q, cdf)
        m = j + jj
        if max_log > 0:
            if n_events >= max_log:
                return LOG_FULL, n_events
            log_out[n_events, 0] = t
            log_out[n_events, 1] = n
            log_out[n_events, 2] = k
            log_out[n_events, 3] = l
            log_out[n_events, 4] = j
            log_out[n_events, 5] = jj
            log_out[n_events, 6] = m
        if m != n:
            types[c] = m
            s1 += m - n
            s2 += m * (m - 1) - n * (n - 1)
            s3 += m * (m - 1) * (m - 2) - n * (n - 1) * (n - 2)
        n_events += 1
    return OK, n_events


@njit(parallel=True, cache=True)
def run_batch(types0, code, q, cdf, t_end, grid, snap_slot, seeds,
              max_events, sums_out, snaps_out):
    """Run every row of ``types0`` as an independent replicate."""
    n_rep = types0.shape[0]
    status = np.zeros(n_rep, dtype=np.int64)
    events = np.zeros(n_rep, dtype=np.int64)
    no_log = np.zeros((0, 7), dtype=np.float64)
    for r in prange(n_rep):
        types = types0[r].copy()
        st, ne = run_replicate(types, code, q, cdf, t_end, grid, snap_slot,
                               seeds[r], max_events, sums_out[r],
                               snaps_out[r], no_log)
        status[r] = st
        events[r] = ne
    return status, events


@njit(cache=True)
def run_birth_death(count0, n_ind, t_end, seed, max_events):
    """Gillespie run of the zero-type count under all-or-nothing inheritance.

    Returns (times, counts, hitting time of n_ind or -1, status).
    """
    np.random.seed(seed)
    nn = float(n_ind) * n_ind
    cap = 1024
    times = np.empty(cap)
    counts = np.empty(cap, dtype=np.int64)
    times[0] = 0.0
    counts[0] = count0
    size = 1
    y_count = count0
    t = 0.0
    hit = -1.0
    if y_count == n_ind:
        hit = 0.0
    n_events = 0
    while y_count < n_ind:
        y = y_count / n_ind
        w = 1.0 - y
        up = nn * w * (0.25 * w * w + w * y + y * y)
        down = nn * y * (0.75 * w * w + w * y)
        total = up + down
        t += np.random.exponential(1.0 / total)
        if t > t_end:
            break
        if n_events >= max_events:
            return times[:size], counts[:size], hit, EVENT_CAP
        if np.random.random() * total < up:
            y_count += 1
        else:
            y_count -= 1
        n_events += 1
        if size == cap:
            cap *= 2
            nt = np.empty(cap)
            nc = np.empty(cap, dtype=np.int64)
            nt[:size] = times[:size]
            nc[:size] = counts[:size]
            times = nt
            counts = nc
        times[size] = t
        counts[size] = y_count
        size += 1
        if y_count == n_ind:
            hit = t
    return times[:size], counts[:size], hit, OK
