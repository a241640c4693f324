"""Fixed-step implicit trapezoidal time integration and trajectory
error metrics.

The step is

    (E - dt/2 A) x_{k+1} = (E + dt/2 A) x_k + dt/2 B (u_k + u_{k+1}),

so a single factorization of (E - dt/2 A) serves the whole run.  Outputs
include the quadratic terms: y_k = (C x)_k + x^T M_k x.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .exceptions import AllZeroReference, InvalidConfig, NonFiniteState


@dataclass
class SimConfig:
    """Time grid: ``steps`` uniform intervals on [t0, t1]."""

    t0: float = 0.0
    t1: float = 10.0
    steps: int = 1000

    def check(self):
        if self.t1 <= self.t0:
            raise InvalidConfig("need t1 > t0")
        if self.steps < 1:
            raise InvalidConfig("need at least one step")

    @property
    def times(self):
        return np.linspace(self.t0, self.t1, self.steps + 1)


class Trajectory:
    """Sampled simulation result: times (N,), outputs (N, p)."""

    def __init__(self, times, outputs, states=None):
        self.times = np.asarray(times)
        self.outputs = np.atleast_2d(np.asarray(outputs))
        self.states = states

    @property
    def p(self):
        return self.outputs.shape[1]


def simulate(sys, u, cfg=None, x0=None, keep_states=False):
    """Integrate the model for input ``u`` (callable t -> (m,) array,
    or t-array -> (N, m)).  Returns a :class:`Trajectory`.
    """
    if cfg is None:
        cfg = SimConfig()
    cfg.check()
    ts = cfg.times
    dt = ts[1] - ts[0]
    U = _sample_input(u, ts, sys.m)

    if sps.issparse(sys.E):
        lhs = (sys.E - (dt / 2.0) * sys.A).tocsc()
        lu = spsla.splu(lhs)
        solve = lu.solve
    else:
        lhs = sys.E - (dt / 2.0) * sys.A
        fac = spla.lu_factor(lhs)
        solve = lambda b: spla.lu_solve(fac, b)

    x = np.zeros(sys.n) if x0 is None else np.asarray(x0, dtype=float)
    N = len(ts)
    Y = np.empty((N, sys.p))
    X = np.empty((N, sys.n)) if keep_states else None
    Y[0] = _output(sys, x)
    if keep_states:
        X[0] = x
    for k in range(N - 1):
        rhs = sys.E @ x + (dt / 2.0) * (sys.A @ x
                                        + sys.B @ (U[k] + U[k + 1]))
        x = solve(rhs)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state blew up at t = {ts[k + 1]:.6g}")
        Y[k + 1] = _output(sys, x)
        if keep_states:
            X[k + 1] = x
    return Trajectory(ts, Y, states=X)


def _output(sys, x):
    return sys.C @ x + sys.quad_form(x, x)


def _sample_input(u, ts, m):
    if callable(u):
        vals = np.asarray(u(ts))
        if vals.shape == ts.shape:  # scalar-input convenience
            vals = vals[:, None]
        if vals.shape != (len(ts), m):
            # try pointwise evaluation
            vals = np.array([np.atleast_1d(u(t)) for t in ts])
    else:
        vals = np.asarray(u, dtype=float)
    if vals.shape != (len(ts), m):
        raise InvalidConfig(
            f"input samples must have shape {(len(ts), m)}, got {vals.shape}"
        )
    return vals


def u_l2_norm(u, cfg, m=1):
    """L2 norm of the input over the simulation horizon (trapezoidal)."""
    ts = cfg.times
    U = _sample_input(u, ts, m)
    energy = np.trapezoid(np.sum(U ** 2, axis=1), ts)
    return float(np.sqrt(energy))


# ---------------------------------------------------------------------------
# error metrics
# ---------------------------------------------------------------------------

def relerr_pointwise(ref, approx, floor_rtol=1e-12):
    """Pointwise relative error |y - y~| / |y|.

    Samples where the reference magnitude falls below
    floor_rtol * max|ref| are excluded (masked as NaN); the number of
    excluded samples is returned alongside.
    """
    ref = np.asarray(ref)
    approx = np.asarray(approx)
    scale = np.max(np.abs(ref))
    if scale == 0.0:
        raise AllZeroReference("reference trajectory is identically zero")
    mask = np.abs(ref) > floor_rtol * scale
    out = np.full(ref.shape, np.nan)
    out[mask] = np.abs(ref[mask] - approx[mask]) / np.abs(ref[mask])
    return out, int(np.count_nonzero(~mask))


def relerr_linf(ref, approx):
    """max_t |y - y~| / max_t |y| (scale-normalized sup error)."""
    ref = np.asarray(ref)
    scale = np.max(np.abs(ref))
    if scale == 0.0:
        raise AllZeroReference("reference trajectory is identically zero")
    return float(np.max(np.abs(ref - np.asarray(approx))) / scale)


def relerr_l2(ref, approx):
    """sqrt(sum |y - y~|^2 / sum |y|^2) over all samples (and outputs)."""
    ref = np.asarray(ref)
    den = np.sum(np.abs(ref) ** 2)
    if den == 0.0:
        raise AllZeroReference("reference trajectory is identically zero")
    num = np.sum(np.abs(ref - np.asarray(approx)) ** 2)
    return float(np.sqrt(num / den))
