"""H2 inner products, norms and error functionals for quadratic-output
systems.

The H2 norm squared splits into a linear and a quadratic contribution,

    ||G||^2 = (1/2pi) int ||G1(iw)||_F^2 dw
            + (1/2pi)^2 int int ||G2(iw1, iw2)||_F^2 dw1 dw2,

and both pieces admit pole-residue formulas once one factor is
diagonalized: with poles lambda_j and residue directions b_j, c_j,
m_{j,k},

    <G, G~> = sum_i  c_i^T G1(-lambda_i) b_i
            + sum_{j,k} m_{j,k}^T G2(-lambda_j, -lambda_k)(b_j (x) b_k).

A trapezoidal frequency-domain quadrature on a log-clustered grid is
provided as an independent (dense-only) cross-check.
"""

import numpy as np

from .exceptions import InstabilityDetected, SizeCapExceeded
from .systems import (
    DENSE_CAP,
    EIG_CAP,
    _as_dense,
    spectral_decompose,
)


class H2Breakdown:
    """Linear/quadratic split of an H2-type (squared) functional."""

    def __init__(self, linear_part, quadratic_part, imag_residual=0.0):
        self.linear_part = float(linear_part)
        self.quadratic_part = float(quadratic_part)
        self.imag_residual = float(imag_residual)

    @property
    def total(self):
        return self.linear_part + self.quadratic_part

    @property
    def norm(self):
        return float(np.sqrt(max(self.total, 0.0)))

    def __repr__(self):
        return (f"H2Breakdown(linear={self.linear_part:.6e}, "
                f"quadratic={self.quadratic_part:.6e}, "
                f"total={self.total:.6e})")


def _check_spec_stable(spec):
    if not spec.is_stable():
        worst = np.max(spec.lambdas.real)
        raise InstabilityDetected(
            f"pole-residue H2 formulas need Re(lambda) < 0; "
            f"max Re(lambda) = {worst:.3e}"
        )


def h2_inner_product(sys, spec):
    """Pole-residue H2 inner product <G, G~>.

    ``sys`` supplies the transfer functions G1/G2 (evaluated through
    shifted solves); ``spec`` is the :class:`SpectralData` of the second
    (reduced) factor.  Returns an :class:`H2Breakdown` of the real part;
    the discarded imaginary residual (roundoff for conjugate-closed data)
    is recorded on the result.
    """
    _check_spec_stable(spec)
    r = spec.r
    # x_j = (-lambda_j E - A)^{-1} B b_j, reused by both parts
    X = np.empty((sys.n, r), dtype=complex)
    for j in range(r):
        X[:, j] = sys.solve_shifted(-spec.lambdas[j], sys.B @ spec.b[j])
    lin = complex(np.sum(spec.c.T * (sys.C @ X)))
    quad = 0.0 + 0.0j
    for out, M in enumerate(sys.Ms):
        G2mat = X.T @ (M @ X)
        quad += np.sum(spec.mres[:, :, out] * G2mat)
    total_imag = abs(lin.imag) + abs(quad.imag)
    scale = max(abs(lin) + abs(quad), 1e-300)
    return H2Breakdown(lin.real, quad.real, imag_residual=total_imag / scale)


def h2_norm(red, spec=None):
    """H2 norm of a (small, dense) model via its own pole-residue data."""
    if spec is None:
        spec = spectral_decompose(red)
    return h2_inner_product(red, spec)


def h2_norm_full(sys, cap=EIG_CAP):
    """H2 norm of a full-order model by dense eigendecomposition.

    Cost is one dense eigensolve plus two n x n matrix products per
    output; refuses above ``cap``.  Returns (H2Breakdown, SpectralData)
    so callers can reuse the spectral data.
    """
    if sys.n > cap:
        raise SizeCapExceeded(f"full H2 norm at n={sys.n} > cap={cap}")
    spec = spectral_decompose(sys.to_dense() if sys.sparse else sys,
                              min_gap_rtol=0.0, cap=cap)
    _check_spec_stable(spec)
    n = spec.r
    real_spectrum = np.all(spec.lambdas.imag == 0.0)
    X = np.empty((sys.n, n), dtype=float if real_spectrum else complex)
    for j in range(n):
        x = sys.solve_shifted(-spec.lambdas[j], sys.B @ spec.b[j])
        X[:, j] = x.real if real_spectrum and np.iscomplexobj(x) else x
    cT = spec.c.T.real if real_spectrum else spec.c.T
    lin = complex(np.sum(cT * (sys.C @ X)))
    quad = 0.0 + 0.0j
    for out, M in enumerate(sys.Ms):
        G2mat = X.T @ (M @ X)
        # spec.mres already holds S^T M S of the same model
        quad += complex(np.sum(spec.mres[:, :, out] * G2mat))
    scale = max(abs(lin) + abs(quad), 1e-300)
    bd = H2Breakdown(lin.real, quad.real,
                     imag_residual=(abs(lin.imag) + abs(quad.imag)) / scale)
    return bd, spec


def h2_error(sys, red, red_spec=None, full_norm=None):
    """H2 error ||G - G~|| by polarization.

    ||G - G~||^2 = ||G||^2 - 2 Re<G, G~> + ||G~||^2.  Pass a precomputed
    ``full_norm`` (H2Breakdown from :func:`h2_norm_full`) to avoid the
    expensive full eigendecomposition.  Returns (absolute, relative).
    """
    if red_spec is None:
        red_spec = spectral_decompose(red)
    if full_norm is None:
        full_norm, _ = h2_norm_full(sys)
    cross = h2_inner_product(sys, red_spec)
    red_norm = h2_inner_product(red, red_spec)
    err2 = full_norm.total - 2.0 * cross.total + red_norm.total
    # the expansion cancels catastrophically once the error drops to
    # roundoff; floor the result at the cancellation noise level so the
    # reported error (and any bound built on it) never underestimates
    noise = np.finfo(float).eps * (
        abs(full_norm.total) + 2.0 * abs(cross.total) + abs(red_norm.total))
    abs_err = float(np.sqrt(max(err2, noise)))
    return abs_err, abs_err / full_norm.norm


def output_error_bound(h2_error_value, u_l2):
    """A-priori bound on ||y - y~||_inf for a given input energy.

    The quadratic channel sees u (x) u, whose L2 norm squared is the
    square of ||u||_L2^2, hence the bound
    h2_error * sqrt(||u||^2 + ||u||^4).
    """
    u2 = float(u_l2) ** 2
    return float(h2_error_value) * float(np.sqrt(u2 + u2 * u2))


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------

def _log_clustered_grid(lo, hi, n_side):
    g = np.logspace(np.log10(lo), np.log10(hi), n_side)
    return np.concatenate([-g[::-1], [0.0], g])


def h2_norm_quadrature(sys, extent=(1e-3, 1e5), n1=2000, n2=800,
                       cap=DENSE_CAP, refine=False):
    """Trapezoidal frequency-domain H2 norm (independent oracle).

    Integrates ||G1(iw)||_F^2 and ||G2(iw1, iw2)||_F^2 on symmetric
    log-clustered grids with ``n1`` (resp. ``n2``) points per half-axis.
    Dense-only; refuses for n > cap.  With ``refine=True`` the integrals
    are recomputed on a half-resolution grid and the relative difference
    is reported as ``imag_residual`` on the returned breakdown (a cheap
    self-consistency estimate).
    """
    if sys.n > cap:
        raise SizeCapExceeded(f"quadrature oracle at n={sys.n} > cap={cap}")

    lin, quad = _quadrature_parts(sys, extent, n1, n2)
    est = 0.0
    if refine:
        lin2, quad2 = _quadrature_parts(sys, extent, n1 // 2, n2 // 2)
        tot, tot2 = lin + quad, lin2 + quad2
        est = abs(tot - tot2) / max(abs(tot), 1e-300)
    return H2Breakdown(lin, quad, imag_residual=est)


def _quadrature_parts(sys, extent, n1, n2):
    lo, hi = extent
    w1 = _log_clustered_grid(lo, hi, n1)
    # linear part: (1/2pi) int ||G1(iw)||_F^2
    vals = np.empty(len(w1))
    for i, w in enumerate(w1):
        K = sys.solve_shifted(1j * w, sys.B)
        G1 = sys.C @ K
        vals[i] = np.sum(np.abs(G1) ** 2)
    lin = np.trapezoid(vals, w1) / (2.0 * np.pi)

    # quadratic part: (1/2pi)^2 double integral of ||G2||_F^2
    w2 = _log_clustered_grid(lo, hi, n2)
    N = len(w2)
    K = np.empty((N, sys.n, sys.m), dtype=complex)
    for i, w in enumerate(w2):
        K[i] = sys.solve_shifted(1j * w, sys.B)
    F = np.zeros((N, N))
    for M in sys.Ms:
        MK = np.einsum("nk,akv->anv", _as_dense(M), K)
        # T[a,b,u,v] = (K(w_a)^T M K(w_b))[u,v]; moduli are taken after
        block = 256
        for a0 in range(0, N, block):
            a1 = min(a0 + block, N)
            T = np.einsum("anu,bnv->abuv", K[a0:a1], MK,
                          optimize=True)
            F[a0:a1] += np.sum(np.abs(T) ** 2, axis=(2, 3))
    inner = np.trapezoid(F, w2, axis=1)
    quad = np.trapezoid(inner, w2) / (2.0 * np.pi) ** 2
    return lin, quad
