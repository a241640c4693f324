"""State-space containers and transfer-function evaluation for
linear systems with quadratic output maps.

A model is

    E x'(t) = A x(t) + B u(t),
    y_k(t)  = (C x(t))_k + x(t)^T M_k x(t),   k = 1..p,

with real matrices and symmetric M_k.  The linear transfer function is
G1(s) = C (sE - A)^{-1} B and the quadratic one is the two-variable
function whose contraction against input directions u, v is

    G2(s1, s2)(u (x) v)_k = x1^T M_k x2,
    x1 = (s1 E - A)^{-1} B u,   x2 = (s2 E - A)^{-1} B v.

Shifted solves are cached per shift (one LU factorization serves both
(sE - A) and its transpose).
"""

import warnings

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .exceptions import (
    ConjugacyViolation,
    DimensionMismatch,
    NondiagonalizablePencil,
    RepeatedPoles,
    SingularE,
    SingularShift,
    SizeCapExceeded,
)

# dense-only operations (explicit G2 matrices, quadrature) refuse above this
DENSE_CAP = 200
# full-order eigendecompositions refuse above this
EIG_CAP = 5000

_SOLVE_RTOL = 1e-8      # residual tolerance for declaring a shift singular
_CACHE_LIMIT = 64       # factorizations kept per system


def _as_dense(X):
    return X.toarray() if sps.issparse(X) else np.asarray(X)


class _ShiftSolver:
    """LU cache for (s E - A) x = b and (s E - A)^T x = b."""

    def __init__(self, E, A, sparse):
        self.sparse = sparse
        if sparse:
            self.E = sps.csc_matrix(E)
            self.A = sps.csc_matrix(A)
        else:
            self.E = np.asarray(E, dtype=float)
            self.A = np.asarray(A, dtype=float)
        self._cache = {}

    def _factor(self, s):
        key = complex(s)
        fac = self._cache.get(key)
        if fac is None:
            if self.sparse:
                op = (key * self.E - self.A).tocsc()
                try:
                    fac = spsla.splu(op)
                except RuntimeError as exc:
                    raise SingularShift(f"shift {key} is singular: {exc}")
            else:
                op = key * self.E - self.A
                if key.imag == 0.0:
                    op = op.real
                try:
                    with warnings.catch_warnings():
                        # exact singularity surfaces as a failed residual
                        # check in solve(); the warning is redundant
                        warnings.simplefilter("ignore", spla.LinAlgWarning)
                        fac = spla.lu_factor(op)
                except (spla.LinAlgError, ValueError) as exc:
                    raise SingularShift(f"shift {key} is singular: {exc}")
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = fac
        return fac

    def solve(self, s, rhs, adjoint=False):
        """Solve (sE - A) x = rhs, or its transpose when adjoint=True.

        The result is checked against the residual; a large residual after
        one step of iterative refinement raises SingularShift.
        """
        s = complex(s)
        rhs = np.asarray(rhs)
        fac = self._factor(s)
        x = self._apply(fac, s, rhs, adjoint)
        if not np.all(np.isfinite(x)):
            raise SingularShift(f"shift {s} is numerically singular")
        res = self._residual(s, x, rhs, adjoint)
        scale = np.linalg.norm(rhs)
        if scale > 0 and np.linalg.norm(res) > _SOLVE_RTOL * scale:
            # one refinement step, then give up
            x = x + self._apply(fac, s, res, adjoint)
            res = self._residual(s, x, rhs, adjoint)
            if np.linalg.norm(res) > _SOLVE_RTOL * scale:
                raise SingularShift(
                    f"shift {s} is numerically singular "
                    f"(residual {np.linalg.norm(res) / scale:.2e})"
                )
        return x

    def _apply(self, fac, s, rhs, adjoint):
        """Apply the cached inverse; splits complex rhs over a real factor."""
        factor_real = s.imag == 0.0
        if factor_real and np.iscomplexobj(rhs):
            return (self._apply(fac, s, rhs.real, adjoint)
                    + 1j * self._apply(fac, s, rhs.imag, adjoint))
        if self.sparse:
            b = rhs if factor_real else np.asarray(rhs, dtype=complex)
            return fac.solve(b, trans="T" if adjoint else "N")
        b = rhs if factor_real else np.asarray(rhs, dtype=complex)
        return spla.lu_solve(fac, b, trans=1 if adjoint else 0)

    def _residual(self, s, x, rhs, adjoint):
        if adjoint:
            return rhs - (s * (self.E.T @ x) - self.A.T @ x)
        return rhs - (s * (self.E @ x) - self.A @ x)


def _symmetrize(M):
    if sps.issparse(M):
        return ((M + M.T) * 0.5).tocsr()
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


class LqoSystem:
    """Linear system with quadratic output maps.

    Parameters
    ----------
    E, A : (n, n) array_like or sparse
    B : (n, m) array_like
    C : (p, n) array_like
    Ms : sequence of p (n, n) array_like or sparse
        Quadratic output matrices; symmetrized on ingestion (only the
        symmetric part contributes to x^T M x).
    """

    def __init__(self, E, A, B, C, Ms):
        sparse = sps.issparse(E) or sps.issparse(A)
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        n = self.B.shape[0]
        if _shape(E) != (n, n) or _shape(A) != (n, n):
            raise DimensionMismatch(
                f"E/A must be {n}x{n}, got {_shape(E)} and {_shape(A)}"
            )
        if self.C.shape[1] != n:
            raise DimensionMismatch(
                f"C has {self.C.shape[1]} columns, expected {n}"
            )
        if len(Ms) != self.C.shape[0]:
            raise DimensionMismatch(
                f"got {len(Ms)} quadratic maps for {self.C.shape[0]} outputs"
            )
        for k, M in enumerate(Ms):
            if _shape(M) != (n, n):
                raise DimensionMismatch(f"M[{k}] must be {n}x{n}")
        if sparse:
            self.E = sps.csr_matrix(E)
            self.A = sps.csr_matrix(A)
        else:
            self.E = np.asarray(E, dtype=float)
            self.A = np.asarray(A, dtype=float)
        self.Ms = [_symmetrize(M) for M in Ms]
        self.sparse = sparse
        self._solver = _ShiftSolver(self.E, self.A, sparse)

    @property
    def n(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    def solve_shifted(self, s, rhs, adjoint=False):
        """Solve (sE - A) x = rhs (or the transposed system)."""
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.n:
            raise DimensionMismatch(
                f"rhs has leading dimension {rhs.shape[0]}, expected {self.n}"
            )
        return self._solver.solve(s, rhs, adjoint=adjoint)

    def quad_form(self, x1, x2):
        """Vector of x1^T M_k x2 over outputs (plain transpose, no conj)."""
        return np.array([x1 @ (M @ x2) for M in self.Ms])

    def to_dense(self):
        """Return a dense copy of this model (as a ReducedLqoSystem)."""
        return ReducedLqoSystem(
            _as_dense(self.E), _as_dense(self.A), self.B, self.C,
            [_as_dense(M) for M in self.Ms],
        )

    def __repr__(self):
        kind = "sparse" if self.sparse else "dense"
        return (f"{type(self).__name__}(n={self.n}, m={self.m}, "
                f"p={self.p}, {kind})")


class ReducedLqoSystem(LqoSystem):
    """Dense reduced-order model; same interface as LqoSystem."""

    def __init__(self, E, A, B, C, Ms):
        super().__init__(_as_dense(E), _as_dense(A), np.asarray(B),
                         np.asarray(C), [_as_dense(M) for M in Ms])

    @property
    def r(self):
        return self.n


def _shape(X):
    if sps.issparse(X):
        return tuple(X.shape)
    return np.asarray(X).shape


def make_lqo_system(E, A, B, C, Ms):
    """Validate and assemble an :class:`LqoSystem`."""
    return LqoSystem(E, A, B, C, Ms)


# ---------------------------------------------------------------------------
# transfer-function evaluation
# ---------------------------------------------------------------------------

def eval_G1(sys, s):
    """Linear transfer function G1(s) = C (sE - A)^{-1} B, shape (p, m)."""
    X = sys.solve_shifted(s, sys.B)
    return sys.C @ X


def eval_dG1(sys, s):
    """Derivative G1'(s) = -C (sE - A)^{-1} E (sE - A)^{-1} B."""
    X = sys.solve_shifted(s, sys.B)
    Y = sys.solve_shifted(s, sys.E @ X)
    return -(sys.C @ Y)


def eval_G2_contracted(sys, s1, s2, u, v):
    """G2(s1, s2)(u (x) v): p-vector of x1^T M_k x2 with
    x1 = (s1 E - A)^{-1} B u and x2 = (s2 E - A)^{-1} B v."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (sys.m,) or v.shape != (sys.m,):
        raise DimensionMismatch(
            f"direction vectors must have length m={sys.m}"
        )
    x1 = sys.solve_shifted(s1, sys.B @ u)
    x2 = sys.solve_shifted(s2, sys.B @ v)
    return sys.quad_form(x1, x2)


def eval_G2_full(sys, s1, s2, cap=DENSE_CAP):
    """Explicit (p, m*m) matrix of G2(s1, s2).

    Column i*m + j corresponds to the input direction e_i (x) e_j, so that
    ``eval_G2_full(...) @ np.kron(u, v)`` matches the contracted evaluation.
    Dense-only; refuses for n > cap.
    """
    if sys.n > cap:
        raise SizeCapExceeded(
            f"explicit G2 requested at n={sys.n} > cap={cap}"
        )
    K1 = sys.solve_shifted(s1, sys.B)
    K2 = sys.solve_shifted(s2, sys.B)
    rows = [(K1.T @ (M @ K2)).reshape(-1) for M in sys.Ms]
    return np.array(rows)


def eval_dG2_contracted(sys, which, s1, s2, u, v):
    """Partial derivative of the contracted G2 w.r.t. s1 or s2.

    which : {"s1", "s2"}
    """
    x1 = sys.solve_shifted(s1, sys.B @ np.asarray(u))
    x2 = sys.solve_shifted(s2, sys.B @ np.asarray(v))
    if which == "s1":
        d1 = -sys.solve_shifted(s1, sys.E @ x1)
        return sys.quad_form(d1, x2)
    if which == "s2":
        d2 = -sys.solve_shifted(s2, sys.E @ x2)
        return sys.quad_form(x1, d2)
    raise ValueError(f"which must be 's1' or 's2', got {which!r}")


# ---------------------------------------------------------------------------
# spectral decomposition
# ---------------------------------------------------------------------------

class SpectralData:
    """Diagonalized form of a (reduced) model.

    Holds poles ``lambdas`` sorted by (Re asc, |Im| asc, +Im first),
    residue directions ``b`` (r, m), ``c`` (r, p) and ``mres`` (r, r, p)
    with mres[j, k] = s_j^T M~_out s_k, plus a ``pair_index`` array mapping
    each entry to its complex-conjugate partner (self-map for real poles).
    The eigenvector matrices satisfy T^T E S = I, and conjugate closure is
    enforced exactly: lambdas[pair_index[k]] == conj(lambdas[k]).
    """

    def __init__(self, lambdas, b, c, mres, pair_index, S=None, T=None):
        self.lambdas = lambdas
        self.b = b
        self.c = c
        self.mres = mres
        self.pair_index = pair_index
        self.S = S
        self.T = T

    @property
    def r(self):
        return len(self.lambdas)

    def is_stable(self, margin=0.0):
        return bool(np.max(self.lambdas.real) < -margin)


def _pole_sort_order(lam):
    return sorted(range(len(lam)),
                  key=lambda j: (lam[j].real, abs(lam[j].imag), -lam[j].imag))


def spectral_decompose(red, min_gap_rtol=1e-8, cap=EIG_CAP):
    """Eigendecompose the pencil (A, E) of a dense model and extract
    pole-residue data.

    Returns a :class:`SpectralData`.  Raises RepeatedPoles if the minimum
    pole separation falls below ``min_gap_rtol * max|lambda|`` (pass
    ``min_gap_rtol=0`` to skip the check), SingularE for infinite
    eigenvalues, and NondiagonalizablePencil if eigenvector normalization
    breaks down.
    """
    n = red.n
    if n > cap:
        raise SizeCapExceeded(f"dense eigendecomposition at n={n} > cap={cap}")
    E = _as_dense(red.E)
    A = _as_dense(red.A)
    identity_E = np.array_equal(E, np.eye(n))
    if identity_E:
        lam, vl, vr = spla.eig(A, left=True, right=True)
    else:
        lam, vl, vr = spla.eig(A, E, left=True, right=True)
    if not np.all(np.isfinite(lam)):
        raise SingularE("pencil has infinite eigenvalues (singular E)")

    order = _pole_sort_order(lam)
    lam = lam[order]
    S = vr[:, order]
    # scipy's left vectors satisfy vl^H A = lam vl^H E; we want t^T A = lam t^T E
    T = vl[:, order].conj()

    scale = np.max(np.abs(lam)) if n else 0.0
    if min_gap_rtol and n > 1:
        gap = _min_pole_gap(lam)
        if gap < min_gap_rtol * max(scale, 1.0):
            raise RepeatedPoles(
                f"minimum pole separation {gap:.2e} below threshold"
            )

    lam, S, T, pair_index = _enforce_conjugate_closure(lam, S, T, scale)

    real_spectrum = bool(np.all(lam.imag == 0.0))
    if real_spectrum:
        # drop to real arithmetic: halves memory and matmul cost, which
        # matters when this runs on a full-order model
        lam = lam.real + 0j
        S = np.ascontiguousarray(S.real)
        T = np.ascontiguousarray(T.real)

    # normalize T^T E S = I: phase-fix s by its largest entry, then
    # rescale t (vectorized; conjugate partners are overwritten after)
    piv = S[np.argmax(np.abs(S), axis=0), np.arange(n)]
    nz = np.abs(piv) > 0
    phase = np.ones(n, dtype=S.dtype)
    phase[nz] = np.abs(piv[nz]) / piv[nz]
    S = S * phase
    d = np.einsum("ij,ij->j", T, E @ S)
    dfloor = 1e-14 * np.maximum(
        1.0, np.linalg.norm(T, axis=0) * np.linalg.norm(S, axis=0))
    if np.any(np.abs(d) < dfloor):
        k = int(np.argmin(np.abs(d) / dfloor))
        raise NondiagonalizablePencil(
            f"t_{k}^T E s_{k} vanishes; pencil not diagonalizable"
        )
    T = T / d
    # re-impose exact conjugacy on the second member of each pair
    second = np.nonzero(pair_index == np.arange(n) - 1)[0]
    if second.size:
        S[:, second] = np.conj(S[:, second - 1])
        T[:, second] = np.conj(T[:, second - 1])

    b = (red.B.T @ T).T          # b[j] = B^T t_j
    c = (red.C @ S).T            # c[j] = C s_j
    mres = np.empty((n, n, red.p), dtype=S.dtype)
    for out, M in enumerate(red.Ms):
        mres[:, :, out] = S.T @ (M @ S)
    # enforce exact symmetry of the quadratic residues
    mres = 0.5 * (mres + mres.transpose(1, 0, 2))
    return SpectralData(lam, b.astype(complex), c.astype(complex), mres,
                        pair_index, S=S, T=T)


def _min_pole_gap(lam):
    n = len(lam)
    if n <= 1000:
        D = np.abs(lam[:, None] - lam[None, :])
        D[np.diag_indices(n)] = np.inf
        return float(D.min())
    # large n: adjacent gaps in the sorted order (adequate for clustered
    # real spectra; exact pairwise check is O(n^2))
    srt = np.sort_complex(lam)
    return float(np.min(np.abs(np.diff(srt))))


def _enforce_conjugate_closure(lam, S, T, scale):
    """Pair conjugate eigenvalues exactly; real ones become exactly real."""
    n = len(lam)
    ctol = 1e-8 * max(scale, 1.0)
    pair_index = np.arange(n)
    k = 0
    while k < n:
        if abs(lam[k].imag) <= ctol * 1e-4 or lam[k].imag == 0.0:
            lam[k] = lam[k].real + 0j
            pair_index[k] = k
            k += 1
            continue
        if k + 1 >= n or abs(lam[k + 1] - np.conj(lam[k])) > ctol:
            raise ConjugacyViolation(
                f"eigenvalue {lam[k]} has no conjugate partner"
            )
        lam[k + 1] = np.conj(lam[k])
        S[:, k + 1] = np.conj(S[:, k])
        T[:, k + 1] = np.conj(T[:, k])
        pair_index[k] = k + 1
        pair_index[k + 1] = k
        k += 2
    return lam, S, T, pair_index


def is_asymptotically_stable(sys, margin=1e-12, cap=EIG_CAP):
    """True iff all eigenvalues of (A, E) satisfy Re(lambda) < -margin.

    Dense eigenvalues up to ``cap``; beyond that the few rightmost
    eigenvalues are estimated iteratively.
    """
    if sys.n <= cap:
        E = _as_dense(sys.E)
        A = _as_dense(sys.A)
        if np.array_equal(E, np.eye(sys.n)):
            lam = spla.eigvals(A)
        else:
            lam = spla.eigvals(A, E)
        if not np.all(np.isfinite(lam)):
            raise SingularE("pencil has infinite eigenvalues")
        return bool(np.max(lam.real) < -margin)
    try:
        lam = spsla.eigs(sps.csc_matrix(sys.A), k=6,
                         M=sps.csc_matrix(sys.E), which="LR",
                         return_eigenvectors=False)
    except spsla.ArpackError as exc:  # pragma: no cover
        from .exceptions import EigSolverFailure
        raise EigSolverFailure(f"rightmost-eigenvalue estimate failed: {exc}")
    return bool(np.max(lam.real) < -margin)
