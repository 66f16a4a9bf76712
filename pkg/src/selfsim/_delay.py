"""Method-of-steps marcher for differential equations with a scaled argument.

The unknowns are advanced segment by segment on a uniform grid.  Within a
segment the scaled-argument values only refer to points that were finished
in earlier segments, so they are read from an interpolating spline of the
stored grid values and the segment itself is an ordinary ODE solved with an
adaptive high-order Runge-Kutta method.
"""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from .errors import NumericalFailure, PreconditionError

OVERFLOW_GUARD = 1e150


def history_spline(x, values, k=7):
    """Interpolating spline through grid samples; ``x`` may be decreasing."""
    x = np.asarray(x)
    values = np.asarray(values)
    if x[0] > x[-1]:
        x, values = x[::-1], values[::-1]
    k = min(k, x.size - 1)
    return make_interp_spline(x, values, k=k, axis=0)


def march(nodes, seed_state, seed_hist, rhs, derive, reach, rtol=1e-12, atol=1e-14, k=7):
    """Advance a delay system along ``nodes``.

    Parameters
    ----------
    nodes : ndarray
        Uniform grid in marching order (increasing or decreasing).
    seed_state : ndarray, shape (m, d)
        State values on ``nodes[:m]``.
    seed_hist : ndarray, shape (m, e)
        History quantities on ``nodes[:m]`` (what the scaled argument reads).
    rhs : callable
        ``rhs(x, y, hist)`` returns dy/dx; ``hist`` is a spline of the
        history quantities over the finished part of the grid.
    derive : callable
        ``derive(xs, Y, hist)`` maps new state rows to history rows.
    reach : callable
        ``reach(x_last)`` gives the farthest coordinate the next segment may
        reach while its scaled arguments stay in the finished region.

    Returns
    -------
    Y, Hs : ndarray
        State and history values on all nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    seed_state = np.atleast_2d(np.asarray(seed_state))
    seed_hist = np.atleast_2d(np.asarray(seed_hist))
    m = seed_state.shape[0]
    if m < k + 1:
        raise PreconditionError(f"seed segment needs at least {k + 1} grid points")
    dtype = np.result_type(seed_state, seed_hist, float)
    Y = np.empty((n, seed_state.shape[1]), dtype=dtype)
    Hs = np.empty((n, seed_hist.shape[1]), dtype=dtype)
    Y[:m] = seed_state
    Hs[:m] = seed_hist
    done = m
    sign = 1.0 if nodes[-1] >= nodes[0] else -1.0
    while done < n:
        x_last = nodes[done - 1]
        limit = reach(x_last)
        # last node index whose coordinate does not pass the limit
        stop = done
        while stop < n and sign * (nodes[stop] - limit) <= 1e-12 * max(1.0, abs(limit)):
            stop += 1
        if stop == done:
            raise PreconditionError("grid step too coarse for the scaling delay")
        hist = history_spline(nodes[:done], Hs[:done], k=k)
        sol = solve_ivp(
            lambda x, y: rhs(x, y, hist),
            (x_last, nodes[stop - 1]),
            Y[done - 1],
            method="DOP853",
            t_eval=nodes[done:stop],
            rtol=rtol,
            atol=atol,
        )
        if sol.status != 0:
            raise NumericalFailure(f"segment integration failed: {sol.message}")
        new = sol.y.T
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > OVERFLOW_GUARD:
            raise NumericalFailure("solution exceeded the overflow guard")
        Y[done:stop] = new
        Hs[done:stop] = derive(nodes[done:stop], new, hist)
        done = stop
    return Y, Hs
