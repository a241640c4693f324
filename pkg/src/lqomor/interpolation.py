"""Rational interpolation machinery: tangential data, projection bases,
Petrov-Galerkin projection and interpolation verification.

Given interpolation points sigma_k with right tangent directions r_k,
left directions l_k and symmetric quadratic directions q_{j,k}, the
primitive bases

    v_k = (sigma_k E - A)^{-1} B r_k,
    w_k = (sigma_k E^T - A^T)^{-1}
          (2 sum_l [M_1 v_l ... M_p v_l] q_{k,l} + C^T l_k),

yield a projected reduced model matching the full model in four families
of (mixed, Hermite) tangential conditions.  Complex data must come in
conjugate-closed pairs; the bases are then realified columnwise so the
projection stays real.
"""

import numpy as np

from .exceptions import (
    ConjugacyViolation,
    DimensionMismatch,
    LengthMismatch,
    RankDeficient,
)
from .systems import ReducedLqoSystem, eval_dG1, spectral_decompose

_RANK_RTOL = 1e-10
_CONJ_RTOL = 1e-10


class InterpolationData:
    """Conjugate-closed tangential interpolation data of order r.

    Attributes
    ----------
    sigmas : (r,) complex
        Interpolation points (open right half-plane for the fixed point).
    right : (r, m) complex
        Right tangent directions r_k.
    left : (r, p) complex
        Left tangent directions l_k.
    q : (r, r, p) complex
        Quadratic directions q_{j,k}; must be symmetric in (j, k).
    pair_index : (r,) int
        Conjugate partner of each datum (self-map for real points).
        Pairs are adjacent, ordered so that sigma_{k+1} = conj(sigma_k).
    """

    def __init__(self, sigmas, right, left, q, pair_index=None):
        self.sigmas = np.asarray(sigmas, dtype=complex)
        self.right = np.atleast_2d(np.asarray(right, dtype=complex))
        self.left = np.atleast_2d(np.asarray(left, dtype=complex))
        self.q = np.asarray(q, dtype=complex)
        r = len(self.sigmas)
        if self.right.shape[0] != r or self.left.shape[0] != r:
            raise LengthMismatch(
                "direction arrays must have one row per interpolation point"
            )
        if self.q.shape[:2] != (r, r):
            raise DimensionMismatch(
                f"q must be (r, r, p) with r={r}, got {self.q.shape}"
            )
        if pair_index is None:
            pair_index = _infer_pairs(self.sigmas)
        self.pair_index = np.asarray(pair_index, dtype=int)

    @property
    def r(self):
        return len(self.sigmas)

    def validate(self, rtol=_CONJ_RTOL):
        """Check conjugate closure and q-symmetry; raise on violation."""
        sig = self.sigmas
        pi = self.pair_index
        scale = max(np.max(np.abs(sig)), 1.0)
        for k in range(self.r):
            j = pi[k]
            if pi[j] != k or abs(j - k) > 1:
                raise ConjugacyViolation("pair_index is not an adjacent "
                                         "involution")
            if j == k:
                if abs(sig[k].imag) > rtol * scale:
                    raise ConjugacyViolation(
                        f"point {k} marked real but sigma={sig[k]}"
                    )
                for arr in (self.right[k], self.left[k]):
                    if np.max(np.abs(arr.imag)) > rtol * _dirscale(arr):
                        raise ConjugacyViolation(
                            f"directions of real point {k} must be real"
                        )
            else:
                if abs(np.conj(sig[k]) - sig[j]) > rtol * scale:
                    raise ConjugacyViolation(
                        f"sigma[{j}] is not the conjugate of sigma[{k}]"
                    )
                if (np.max(np.abs(np.conj(self.right[k]) - self.right[j]))
                        > rtol * _dirscale(self.right[k])):
                    raise ConjugacyViolation(f"right directions of pair "
                                             f"({k},{j}) not conjugate")
                if (np.max(np.abs(np.conj(self.left[k]) - self.left[j]))
                        > rtol * _dirscale(self.left[k])):
                    raise ConjugacyViolation(f"left directions of pair "
                                             f"({k},{j}) not conjugate")
        qscale = max(np.max(np.abs(self.q)), 1e-300)
        if np.max(np.abs(self.q - self.q.transpose(1, 0, 2))) > rtol * qscale:
            raise ConjugacyViolation("q is not symmetric in (j, k)")
        qc = self.q[np.ix_(pi, pi)]  # qc[j,k] = q[pi[j], pi[k]]
        if np.max(np.abs(np.conj(self.q) - qc)) > rtol * qscale:
            raise ConjugacyViolation("q is not conjugate-closed")

    def conjugated_copy_ok(self):
        try:
            self.validate()
            return True
        except ConjugacyViolation:
            return False


def _dirscale(v):
    return max(np.max(np.abs(v)), 1e-300)


def _infer_pairs(sigmas):
    """Derive the adjacent-pair involution from the point list."""
    r = len(sigmas)
    pair = np.arange(r)
    scale = max(np.max(np.abs(sigmas)) if r else 0.0, 1.0)
    k = 0
    while k < r:
        if abs(sigmas[k].imag) <= _CONJ_RTOL * scale:
            k += 1
            continue
        if (k + 1 >= r
                or abs(np.conj(sigmas[k]) - sigmas[k + 1]) > _CONJ_RTOL * scale):
            raise ConjugacyViolation(
                f"point {sigmas[k]} lacks an adjacent conjugate partner"
            )
        pair[k], pair[k + 1] = k + 1, k
        k += 2
    return pair


def data_from_spectrum(spec, reflect=True):
    """Interpolation data induced by reduced spectral data:
    sigma = -lambda, r = b, l = c, q = mres.

    With ``reflect=True`` points derived from unstable poles are mirrored
    into the right half-plane (real part negated).  Returns the data and
    the number of reflected points.
    """
    sig = -spec.lambdas
    n_reflect = 0
    if reflect:
        n_reflect = int(np.count_nonzero(sig.real < 0.0))
        sig = reflect_unstable_points(sig)
    return (InterpolationData(sig, spec.b, spec.c, spec.mres,
                              pair_index=spec.pair_index),
            n_reflect)


def reflect_unstable_points(sigmas):
    """Mirror interpolation points with nonpositive real part into the
    open right half-plane by negating their real parts."""
    sig = np.asarray(sigmas, dtype=complex)
    return np.where(sig.real < 0.0, -sig.real + 1j * sig.imag, sig)


# ---------------------------------------------------------------------------
# bases
# ---------------------------------------------------------------------------

def build_v_basis(sys, data):
    """Primitive right basis; column k is (sigma_k E - A)^{-1} B r_k."""
    V = np.empty((sys.n, data.r), dtype=complex)
    for k in range(data.r):
        V[:, k] = sys.solve_shifted(data.sigmas[k], sys.B @ data.right[k])
    return V


def build_w_basis(sys, data, v_prim):
    """Primitive left basis enforcing the mixed/Hermite conditions.

    Column k solves the transposed shifted system against
    2 sum_l sum_out q[k, l, out] M_out v_l + C^T l_k.
    """
    r = data.r
    # MV[out, l] = M_out v_l
    MV = np.empty((sys.p, r, sys.n), dtype=complex)
    for out, M in enumerate(sys.Ms):
        MV[out] = (M @ v_prim).T
    W = np.empty((sys.n, r), dtype=complex)
    for k in range(r):
        rhs = sys.C.T @ data.left[k]
        rhs = rhs + 2.0 * np.einsum("lo,oln->n", data.q[k], MV)
        W[:, k] = sys.solve_shifted(data.sigmas[k], rhs, adjoint=True)
    return W


def realify_bases(v_prim, w_prim, data, rtol=_CONJ_RTOL):
    """Real bases spanning the same subspaces as the primitive ones.

    Real interpolation points pass their (real) column through; each
    conjugate pair contributes the real and imaginary parts of its first
    member.  The data must validate as conjugate-closed.
    """
    data.validate(rtol)
    V = _realify(v_prim, data, rtol)
    W = _realify(w_prim, data, rtol)
    return V, W


def _realify(Z, data, rtol):
    cols = []
    k = 0
    while k < data.r:
        if data.pair_index[k] == k:
            col = Z[:, k]
            if np.max(np.abs(col.imag)) > rtol * _dirscale(col):
                raise ConjugacyViolation(
                    f"column {k} of a real interpolation point is not real"
                )
            cols.append(col.real)
            k += 1
        else:
            cols.append(Z[:, k].real)
            cols.append(Z[:, k].imag)
            k += 2
    return np.column_stack(cols)


def _orthonormalize(X, rtol=_RANK_RTOL):
    """Thin QR with a deterministic sign convention and rank check.

    Columns are normalized first so the rank test reflects angles
    between directions, not the (often wildly different) column scales
    produced by widely spread interpolation points.
    """
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0.0):
        raise RankDeficient("projection basis contains a zero column")
    Q, R = np.linalg.qr(X / norms)
    d = np.abs(np.diag(R))
    if d.size and np.min(d) < rtol * max(np.max(d), 1e-300):
        raise RankDeficient(
            f"projection basis is rank deficient "
            f"(min/max R diagonal = {np.min(d):.2e}/{np.max(d):.2e})"
        )
    # sign convention: first sufficiently large entry of each column > 0
    for j in range(Q.shape[1]):
        col = Q[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            Q[:, j] = -col
    return Q


def petrov_galerkin_project(sys, V, W, rank_rtol=_RANK_RTOL):
    """Orthonormalize V, W and project:
    E~ = W^T E V, A~ = W^T A V, B~ = W^T B, C~ = C V, M~_k = V^T M_k V.

    ``rank_rtol`` tunes the rank-deficiency detection; iterative callers
    may relax it since transient near-degeneracy self-corrects.
    """
    V = _orthonormalize(np.asarray(V, dtype=float), rtol=rank_rtol)
    W = _orthonormalize(np.asarray(W, dtype=float), rtol=rank_rtol)
    if V.shape != W.shape:
        raise DimensionMismatch("V and W must have identical shapes")
    Er = W.T @ (sys.E @ V)
    Ar = W.T @ (sys.A @ V)
    Br = W.T @ sys.B
    Cr = sys.C @ V
    Mrs = [V.T @ (M @ V) for M in sys.Ms]
    return ReducedLqoSystem(Er, Ar, Br, Cr, Mrs), V, W


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

class InterpResiduals:
    """Residuals of the four tangential interpolation condition families.

    Arrays hold absolute residuals; the ``*_rel`` companions divide by the
    magnitude of the corresponding full-order quantity.  ``max_relative``
    aggregates everything into a single number.
    """

    def __init__(self, right_linear, right_quadratic, left_mixed, hermite,
                 right_linear_rel, right_quadratic_rel, left_mixed_rel,
                 hermite_rel):
        self.right_linear = right_linear
        self.right_quadratic = right_quadratic
        self.left_mixed = left_mixed
        self.hermite = hermite
        self.right_linear_rel = right_linear_rel
        self.right_quadratic_rel = right_quadratic_rel
        self.left_mixed_rel = left_mixed_rel
        self.hermite_rel = hermite_rel

    @property
    def max_relative(self):
        return float(max(np.max(self.right_linear_rel),
                         np.max(self.right_quadratic_rel),
                         np.max(self.left_mixed_rel),
                         np.max(self.hermite_rel)))

    def to_dict(self):
        return {
            "right_linear": self.right_linear.tolist(),
            "right_quadratic": self.right_quadratic.tolist(),
            "left_mixed": self.left_mixed.tolist(),
            "hermite": self.hermite.tolist(),
            "right_linear_rel": self.right_linear_rel.tolist(),
            "right_quadratic_rel": self.right_quadratic_rel.tolist(),
            "left_mixed_rel": self.left_mixed_rel.tolist(),
            "hermite_rel": self.hermite_rel.tolist(),
            "max_relative": self.max_relative,
        }

    def __repr__(self):
        return f"InterpResiduals(max_relative={self.max_relative:.3e})"


def _interp_state(sys, data):
    """Solve states shared by the verification formulas."""
    r = data.r
    X = np.empty((sys.n, r), dtype=complex)    # x_k = (s_k E - A)^{-1} B r_k
    K = np.empty((r, sys.n, sys.m), dtype=complex)
    D = np.empty((sys.n, r), dtype=complex)    # -(s_k E - A)^{-1} E x_k
    for k in range(r):
        K[k] = sys.solve_shifted(data.sigmas[k], sys.B)
        X[:, k] = K[k] @ data.right[k]
        D[:, k] = -sys.solve_shifted(data.sigmas[k], sys.E @ X[:, k])
    return X, K, D


def verify_interpolation(sys, red, data):
    """Evaluate all four families of interpolation residuals.

    Returns an :class:`InterpResiduals`.  The families are, for each k
    (and all j for the pairwise quadratic family):

    1. G1(s_k) r_k
    2. G2(s_j, s_k)(r_j (x) r_k)
    3. l_k^T G1(s_k) + sum_l q_{k,l}^T G2(s_k, s_l)(I (x) r_l)
                      + sum_l q_{l,k}^T G2(s_l, s_k)(r_l (x) I)
    4. the s-derivative of family 3 contracted with r_k
    """
    r = data.r
    tiny = 1e-300
    Xf, Kf, Df = _interp_state(sys, data)
    Xr, Kr, Dr = _interp_state(red, data)

    # family 1: right linear
    rl = np.empty(r)
    rl_rel = np.empty(r)
    for k in range(r):
        full = sys.C @ Xf[:, k]
        diff = full - red.C @ Xr[:, k]
        rl[k] = np.linalg.norm(diff)
        rl_rel[k] = rl[k] / max(np.linalg.norm(full), tiny)

    # family 2: right quadratic, all pairs
    rq = np.empty((r, r))
    rq_rel = np.empty((r, r))
    for j in range(r):
        for k in range(r):
            full = sys.quad_form(Xf[:, j], Xf[:, k])
            diff = full - red.quad_form(Xr[:, j], Xr[:, k])
            rq[j, k] = np.linalg.norm(diff)
            rq_rel[j, k] = rq[j, k] / max(np.linalg.norm(full), tiny)

    # families 3 and 4
    lm = np.empty(r)
    lm_rel = np.empty(r)
    hm = np.empty(r)
    hm_rel = np.empty(r)
    for k in range(r):
        f3 = _mixed_value(sys, data, k, Xf, Kf)
        g3 = _mixed_value(red, data, k, Xr, Kr)
        lm[k] = np.linalg.norm(f3 - g3)
        lm_rel[k] = lm[k] / max(np.linalg.norm(f3), tiny)

        f4 = _hermite_value(sys, data, k, Xf, Df)
        g4 = _hermite_value(red, data, k, Xr, Dr)
        hm[k] = abs(f4 - g4)
        hm_rel[k] = hm[k] / max(abs(f4), tiny)

    return InterpResiduals(rl, rq, lm, hm, rl_rel, rq_rel, lm_rel, hm_rel)


def _mixed_value(sys, data, k, X, K):
    """m-vector l_k^T G1(s_k) + sum_l q_{k,l}^T G2(s_k, s_l)(I (x) r_l)
    + sum_l q_{l,k}^T G2(s_l, s_k)(r_l (x) I)."""
    val = data.left[k] @ (sys.C @ K[k])
    for el in range(data.r):
        for out, M in enumerate(sys.Ms):
            Mx = M @ X[:, el]
            val = val + data.q[k, el, out] * (K[k].T @ Mx)
            val = val + data.q[el, k, out] * (Mx @ K[k])
    return val


def _hermite_value(sys, data, k, X, D):
    """Scalar derivative condition at point k."""
    dG1 = eval_dG1(sys, data.sigmas[k])
    val = data.left[k] @ (dG1 @ data.right[k])
    for el in range(data.r):
        for out, M in enumerate(sys.Ms):
            val = val + data.q[k, el, out] * (D[:, k] @ (M @ X[:, el]))
            val = val + data.q[el, k, out] * (X[:, el] @ (M @ D[:, k]))
    return val


def verify_h2_optimality(sys, red, spec=None):
    """Interpolatory first-order optimality residuals of a reduced model.

    Decomposes the reduced model and checks the tangential conditions at
    the mirrored poles with its own residue directions.
    """
    if spec is None:
        spec = spectral_decompose(red)
    data, _ = data_from_spectrum(spec, reflect=False)
    data.validate()
    return verify_interpolation(sys, red, data)
