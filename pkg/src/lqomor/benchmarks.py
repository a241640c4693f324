"""Benchmark model builders and test inputs.

The main benchmark is a 1D advection-diffusion equation on (0, 1) with a
controlled Dirichlet condition at the left end and a controlled Neumann
condition at the right end, discretized by upwind finite differences.
The linear output is the negative spatial mean; the quadratic output is
half the squared L2 norm of the state, so together they track the
quadratic tracking cost (1/2)||v - 1||^2 up to a constant.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from .exceptions import InvalidConfig
from .systems import LqoSystem


@dataclass
class AdvecDiffConfig:
    """Discretization parameters for :func:`advection_diffusion`.

    n interior points, diffusion alpha > 0, advection beta >= 0.
    """

    n: int = 3000
    alpha: float = 1.0
    beta: float = 1.0

    def check(self):
        if self.n < 2:
            raise InvalidConfig(f"need at least 2 grid points, got {self.n}")
        if self.alpha <= 0 or self.beta < 0:
            raise InvalidConfig("alpha must be > 0 and beta >= 0")


def advection_diffusion(cfg=None, **kwargs):
    """Upwind finite-difference model of
    v_t = alpha v_xx - beta v_x on (0, 1).

    Boundary data enter as the two inputs: v(0, t) = u_1(t) (Dirichlet)
    and alpha v_x(1, t) = u_2(t) (Neumann, eliminated through a one-sided
    ghost node).  States are the nodal values at x_i = i h, i = 1..n,
    h = 1/n.  Outputs: y_1 linear part -h * sum(v); quadratic part
    (h/2) ||v||^2.
    """
    if cfg is None:
        cfg = AdvecDiffConfig(**kwargs)
    cfg.check()
    n, al, be = cfg.n, cfg.alpha, cfg.beta
    h = 1.0 / n
    d0 = -2.0 * al / h ** 2 - be / h
    dsub = al / h ** 2 + be / h
    dsup = al / h ** 2

    main = np.full(n, d0)
    main[-1] = -al / h ** 2 - be / h   # ghost-node elimination at x = 1
    A = sps.diags(
        [np.full(n - 1, dsub), main, np.full(n - 1, dsup)],
        offsets=[-1, 0, 1], format="csr",
    )
    E = sps.identity(n, format="csr")
    B = np.zeros((n, 2))
    B[0, 0] = dsub          # Dirichlet datum feeds the first node
    B[-1, 1] = 1.0 / h      # Neumann datum feeds the last node
    C = -h * np.ones((1, n))
    M = sps.identity(n, format="csr") * (h / 2.0)
    return LqoSystem(E, A, B, C, [M])


def input_sinc(t):
    """u(t) = 5 sin(pi t) / (pi t), continuously extended through t = 0."""
    t = np.asarray(t, dtype=float)
    x = np.pi * t
    small = np.abs(x) < 1e-6
    out = np.empty_like(t)
    xs = x[small]
    out[small] = 1.0 - xs ** 2 / 6.0 + xs ** 4 / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return 5.0 * out


def input_exp(t):
    """u(t) = exp(-t/5) sin(4 pi t)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-t / 5.0) * np.sin(4.0 * np.pi * t)


def benchmark_inputs():
    """The two benchmark input channels as a callable t -> (2,) array.

    Channel 1 (Dirichlet) takes the chosen signal; channel 2 (Neumann)
    is held at zero.
    """
    def make(signal):
        def u(t):
            t = np.asarray(t, dtype=float)
            vals = np.zeros(t.shape + (2,))
            vals[..., 0] = signal(t)
            return vals
        return u
    return {"sinc": make(input_sinc), "exp": make(input_exp)}


def random_stable_lqo(n, m, p, seed=0, density=1.0):
    """Random dense asymptotically stable test model.

    A is made strictly diagonally dominant with negative diagonal, so all
    eigenvalues lie left of Re = -1/2 by Gershgorin.  M_k are symmetric
    with entries O(1/n).
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    off = np.sum(np.abs(A), axis=1) - np.abs(np.diag(A))
    A[np.diag_indices(n)] = -(off + 0.5)   # Gershgorin: Re(lambda) <= -1/2
    E = np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    Ms = []
    for _ in range(p):
        R = rng.standard_normal((n, n)) / n
        Ms.append(0.5 * (R + R.T))
    return LqoSystem(E, A, B, C, Ms)
