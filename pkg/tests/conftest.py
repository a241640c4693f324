"""Shared test helpers: independent dense oracles and random
conjugate-closed interpolation data."""

import numpy as np
import pytest

from lqomor import InterpolationData, random_stable_lqo


def oracle_G1(sys, s):
    """Resolvent-based G1 via explicit inverse (independent of the
    library's cached-solve path)."""
    E = _dense(sys.E)
    A = _dense(sys.A)
    R = np.linalg.inv(s * E - A)
    return sys.C @ R @ sys.B


def oracle_dG1(sys, s):
    E = _dense(sys.E)
    A = _dense(sys.A)
    R = np.linalg.inv(s * E - A)
    return -sys.C @ R @ E @ R @ sys.B


def oracle_G2_full(sys, s1, s2):
    """Explicit Kronecker construction of the (p, m*m) quadratic
    transfer matrix."""
    E = _dense(sys.E)
    A = _dense(sys.A)
    K1 = np.linalg.inv(s1 * E - A) @ sys.B
    K2 = np.linalg.inv(s2 * E - A) @ sys.B
    KK = np.kron(K1, K2)
    rows = []
    for M in sys.Ms:
        rows.append(np.asarray(_dense(M)).reshape(-1, order="F") @ KK)
    return np.array(rows)


def _dense(M):
    import scipy.sparse as sps
    return M.toarray() if sps.issparse(M) else np.asarray(M)


def random_conjugate_data(m, p, r, seed, re_range=(0.5, 3.0),
                          im_range=(0.5, 5.0)):
    """Random conjugate-closed tangential data with points in the open
    right half-plane.  Even r gives all-complex pairs; odd r appends one
    real point."""
    rng = np.random.default_rng(seed)
    sig, right, left = [], [], []
    n_pairs = r // 2
    for _ in range(n_pairs):
        s = rng.uniform(*re_range) + 1j * rng.uniform(*im_range)
        rd = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        ld = rng.standard_normal(p) + 1j * rng.standard_normal(p)
        sig += [s, np.conj(s)]
        right += [rd, np.conj(rd)]
        left += [ld, np.conj(ld)]
    if r % 2:
        sig.append(rng.uniform(*re_range) + 0j)
        right.append(rng.standard_normal(m) + 0j)
        left.append(rng.standard_normal(p) + 0j)

    data0 = InterpolationData(np.array(sig), np.array(right),
                              np.array(left), np.zeros((r, r, p)))
    pi = data0.pair_index
    q = rng.standard_normal((r, r, p)) + 1j * rng.standard_normal((r, r, p))
    q = 0.5 * (q + q.transpose(1, 0, 2))          # symmetric in (j, k)
    q = 0.5 * (q + np.conj(q[np.ix_(pi, pi)]))    # conjugate-closed
    q = 0.5 * (q + q.transpose(1, 0, 2))
    return InterpolationData(np.array(sig), np.array(right),
                             np.array(left), q, pair_index=pi)


@pytest.fixture(scope="session")
def small_system():
    return random_stable_lqo(8, 2, 2, seed=42)
