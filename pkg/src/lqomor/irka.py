"""Fixed-point iteration driving the interpolatory first-order
optimality conditions for quadratic-output H2 reduction.

Each sweep builds the primitive bases from the current interpolation
data, realifies and orthonormalizes them, projects, re-diagonalizes the
reduced pencil and reads the next data off the mirrored poles and
residue directions.  Convergence is declared on the relative change of
the (sorted) reduced poles.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .exceptions import (
    EigSolverFailure,
    InstabilityDetected,
    InvalidConfig,
    LengthMismatch,
    RepeatedPoles,
)
from .h2 import h2_error, h2_norm_full
from .interpolation import (
    InterpolationData,
    _orthonormalize,
    build_v_basis,
    build_w_basis,
    data_from_spectrum,
    petrov_galerkin_project,
    realify_bases,
)
from .systems import _as_dense, _pole_sort_order, spectral_decompose

_INIT_EIGS_DENSE_CAP = 600


@dataclass
class IrkaConfig:
    """Settings for :func:`lqo_irka`.

    init may be "eigs", "imag", or an explicit :class:`InterpolationData`.
    ``tol`` bounds the relative pole change declared converged;
    ``imag_decades`` spans the log-spaced magnitudes of the "imag"
    initialization.
    """

    r: int = 10
    tol: float = 1e-10
    max_iter: int = 200
    init: object = "eigs"
    reflect_unstable: bool = True
    track_h2: bool = False
    imag_decades: tuple = (0.0, 3.0)
    seed: int = 0

    def check(self):
        if self.r < 1:
            raise InvalidConfig(f"order r must be positive, got {self.r}")
        if self.tol <= 0 or self.max_iter < 1:
            raise InvalidConfig("tol must be > 0 and max_iter >= 1")
        if isinstance(self.init, str) and self.init not in ("eigs", "imag"):
            raise InvalidConfig(f"unknown init strategy {self.init!r}")


@dataclass
class IrkaReport:
    """Iteration diagnostics of a :func:`lqo_irka` run."""

    converged: bool = False
    iterations: int = 0
    pole_history: list = field(default_factory=list)
    pole_change_history: list = field(default_factory=list)
    h2_history: list = field(default_factory=list)
    reflection_history: list = field(default_factory=list)
    repeated_pole_events: int = 0
    final_residuals: object = None

    def to_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "pole_history": [
                [{"re": z.real, "im": z.imag} for z in poles]
                for poles in self.pole_history
            ],
            "pole_change_history": list(self.pole_change_history),
            "h2_history": list(self.h2_history),
            "reflection_history": list(self.reflection_history),
            "repeated_pole_events": self.repeated_pole_events,
            "final_max_relative_residual": (
                self.final_residuals.max_relative
                if self.final_residuals is not None else None
            ),
        }


def pole_change(prev, new, relative=True):
    """Max absolute (or relative) difference of two sorted pole sets."""
    prev = np.asarray(prev, dtype=complex)
    new = np.asarray(new, dtype=complex)
    if prev.shape != new.shape:
        raise LengthMismatch(
            f"pole sets of sizes {prev.size} and {new.size}"
        )
    a = prev[_pole_sort_order(prev)]
    b = new[_pole_sort_order(new)]
    d = float(np.max(np.abs(a - b)))
    if relative:
        d /= max(float(np.max(np.abs(a))), 1e-300)
    return d


# ---------------------------------------------------------------------------
# initializations
# ---------------------------------------------------------------------------

def init_imag(sys, r, decades=(0.0, 3.0)):
    """Interpolation data on the imaginary axis.

    Even r: r/2 conjugate pairs +-i z with z log-spaced over the given
    decades.  Odd r adds one real point at the geometric mean magnitude.
    Directions cycle through canonical basis vectors; quadratic
    directions are constant e_1 (symmetric and conjugate-closed).
    """
    n_pairs = r // 2
    sig = []
    if n_pairs:
        mags = np.logspace(decades[0], decades[1], n_pairs)
        for z in mags:
            sig.extend([1j * z, -1j * z])
    if r % 2:
        sig.append(10.0 ** (0.5 * (decades[0] + decades[1])) + 0j)
    sig = np.asarray(sig, dtype=complex)
    right = np.zeros((r, sys.m), dtype=complex)
    left = np.zeros((r, sys.p), dtype=complex)
    # one canonical direction per conjugate pair (both members equal, so
    # the data stays conjugate-closed)
    for j in range(n_pairs):
        right[2 * j:2 * j + 2, j % sys.m] = 1.0
        left[2 * j:2 * j + 2, j % sys.p] = 1.0
    if r % 2:
        right[r - 1, n_pairs % sys.m] = 1.0
        left[r - 1, n_pairs % sys.p] = 1.0
    q = np.zeros((r, r, sys.p), dtype=complex)
    q[:, :, 0] = 1.0
    return InterpolationData(sig, right, left, q)


def init_eigs(sys, r, dense_cap=_INIT_EIGS_DENSE_CAP):
    """Interpolation data from a one-sided projection onto the invariant
    subspace of the r smallest-magnitude eigenvalues of (A, E).

    The Galerkin-reduced model is diagonalized and its mirrored poles and
    residue directions seed the iteration.
    """
    lam, vecs = _smallest_eigs(sys, r, dense_cap)
    sel = _conjugate_closed_selection(lam, r)
    V = _real_span(lam[sel], vecs[:, sel])
    V = _orthonormalize(V)
    red, _, _ = petrov_galerkin_project(sys, V, V)
    spec = spectral_decompose(red)
    data, _ = data_from_spectrum(spec, reflect=True)
    return data


def _smallest_eigs(sys, r, dense_cap):
    n = sys.n
    if n <= dense_cap:
        lam, vecs = spla.eig(_as_dense(sys.A), _as_dense(sys.E))
        return lam, vecs
    k = min(r + 4, n - 2)
    try:
        lam, vecs = spsla.eigs(sps.csc_matrix(sys.A), k=k,
                               M=sps.csc_matrix(sys.E), sigma=0.0,
                               which="LM")
    except spsla.ArpackError as exc:
        raise EigSolverFailure(f"shift-invert eigensolve failed: {exc}")
    return lam, vecs


def _conjugate_closed_selection(lam, r):
    """Indices of r smallest-|lambda| eigenvalues, kept conjugate-closed.

    Complex pairs are taken or skipped as a unit; if the budget ends in
    the middle of a pair the next real eigenvalue (if any) fills the gap.
    """
    order = np.argsort(np.abs(lam), kind="stable")
    ctol = 1e-8 * max(np.max(np.abs(lam)), 1.0)
    used = np.zeros(len(lam), dtype=bool)
    sel = []
    for idx in order:
        if used[idx] or len(sel) >= r:
            continue
        if abs(lam[idx].imag) <= ctol:
            sel.append(idx)
            used[idx] = True
            continue
        # find the conjugate partner
        partner = None
        for jdx in order:
            if jdx != idx and not used[jdx] and \
                    abs(np.conj(lam[idx]) - lam[jdx]) <= ctol:
                partner = jdx
                break
        if partner is None or len(sel) + 2 > r:
            continue  # cannot place this pair
        sel.extend([idx, partner])
        used[idx] = used[partner] = True
    if len(sel) != r:
        raise EigSolverFailure(
            f"could not assemble a conjugate-closed set of {r} eigenvalues"
        )
    return np.asarray(sel)


def _real_span(lam, vecs):
    """Real basis of the span of a conjugate-closed eigenvector set."""
    cols = []
    skip = set()
    ctol = 1e-8 * max(np.max(np.abs(lam)), 1.0)
    for k in range(len(lam)):
        if k in skip:
            continue
        if abs(lam[k].imag) <= ctol:
            cols.append(vecs[:, k].real)
            continue
        for j in range(k + 1, len(lam)):
            if j not in skip and abs(np.conj(lam[k]) - lam[j]) <= ctol:
                skip.add(j)
                break
        cols.append(vecs[:, k].real)
        cols.append(vecs[:, k].imag)
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# main iteration
# ---------------------------------------------------------------------------

def lqo_irka(sys, config, full_h2=None, certify=True):
    """Run the interpolatory fixed-point iteration.

    Parameters
    ----------
    sys : LqoSystem
    config : IrkaConfig
    full_h2 : H2Breakdown, optional
        Precomputed full-order squared H2 norm; required cheaply when
        ``config.track_h2`` is set (computed on demand otherwise).
    certify : bool
        Evaluate the final optimality residuals (a handful of extra
        shifted solves).

    Returns (ReducedLqoSystem, IrkaReport).
    """
    config.check()
    if isinstance(config.init, InterpolationData):
        data = config.init
        data.validate()
    elif config.init == "imag":
        data = init_imag(sys, config.r, config.imag_decades)
    else:
        data = init_eigs(sys, config.r)

    if config.track_h2 and full_h2 is None:
        full_h2, _ = h2_norm_full(sys)

    report = IrkaReport()
    prev_poles = None
    best = None  # (change, red, spec)

    for it in range(1, config.max_iter + 1):
        vprim = build_v_basis(sys, data)
        wprim = build_w_basis(sys, data, vprim)
        V, W = realify_bases(vprim, wprim, data)
        # relaxed rank threshold: early iterates (notably from the
        # imaginary-axis initialization) can be close to degenerate yet
        # still produce a usable projection
        red, _, _ = petrov_galerkin_project(sys, V, W, rank_rtol=1e-14)
        try:
            spec = spectral_decompose(red)
        except RepeatedPoles:
            # separate the colliding poles slightly and press on
            report.repeated_pole_events += 1
            spec = spectral_decompose(red, min_gap_rtol=0.0)
            spec = _perturb_collisions(spec, config.tol)

        poles = spec.lambdas
        report.pole_history.append(poles.copy())
        if prev_poles is not None:
            change = pole_change(prev_poles, poles)
        else:
            change = np.inf
        report.pole_change_history.append(change)

        if config.track_h2:
            try:
                _, rel = h2_error(sys, red, red_spec=spec,
                                  full_norm=full_h2)
            except InstabilityDetected:
                # unstable intermediate iterate: error undefined
                rel = np.inf
            report.h2_history.append(rel)

        if best is None or change < best[0]:
            best = (change, red, spec)

        report.iterations = it
        if change <= config.tol:
            report.converged = True
            best = (change, red, spec)
            break

        data, n_reflect = data_from_spectrum(
            spec, reflect=config.reflect_unstable)
        report.reflection_history.append(n_reflect)
        prev_poles = poles

    _, red, spec = best
    if certify:
        from .interpolation import verify_h2_optimality
        report.final_residuals = verify_h2_optimality(sys, red, spec=spec)
    return red, report


def _perturb_collisions(spec, tol):
    """Separate numerically coincident poles along the real axis."""
    lam = spec.lambdas.copy()
    scale = max(np.max(np.abs(lam)), 1.0)
    bump = 10.0 * tol * scale
    order = _pole_sort_order(lam)
    for a, b in zip(order[:-1], order[1:]):
        if abs(lam[a] - lam[b]) < bump:
            lam[b] = lam[b] + bump
            if spec.pair_index[b] != b:
                lam[spec.pair_index[b]] = np.conj(lam[b])
    spec.lambdas = lam
    return spec
