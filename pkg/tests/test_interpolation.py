import numpy as np
import pytest

from lqomor import (
    InterpolationData,
    build_v_basis,
    build_w_basis,
    petrov_galerkin_project,
    random_stable_lqo,
    realify_bases,
    reflect_unstable_points,
    verify_interpolation,
)
from lqomor.exceptions import ConjugacyViolation, RankDeficient
from lqomor.systems import eval_G1

from conftest import random_conjugate_data


def reduce_once(sys, data):
    vp = build_v_basis(sys, data)
    wp = build_w_basis(sys, data, vp)
    V, W = realify_bases(vp, wp, data)
    red, _, _ = petrov_galerkin_project(sys, V, W)
    return red


class TestExactness:
    """A projected model must match all four tangential condition
    families at the interpolation data used to build it."""

    @pytest.mark.parametrize("seed", range(6))
    def test_random_conjugate_data(self, seed):
        sys = random_stable_lqo(30, 2, 2, seed=seed)
        data = random_conjugate_data(sys.m, sys.p, 6, seed=100 + seed)
        red = reduce_once(sys, data)
        res = verify_interpolation(sys, red, data)
        assert res.max_relative <= 1e-8

    def test_odd_order_with_real_point(self):
        sys = random_stable_lqo(25, 2, 2, seed=5)
        data = random_conjugate_data(sys.m, sys.p, 5, seed=55)
        red = reduce_once(sys, data)
        assert verify_interpolation(sys, red, data).max_relative <= 1e-8

    def test_all_real_points(self):
        sys = random_stable_lqo(20, 2, 1, seed=8)
        rng = np.random.default_rng(2)
        r = 4
        data = InterpolationData(
            rng.uniform(0.5, 4.0, r).astype(complex),
            rng.standard_normal((r, 2)),
            rng.standard_normal((r, 1)),
            _sym(rng.standard_normal((r, r, 1))),
        )
        red = reduce_once(sys, data)
        assert verify_interpolation(sys, red, data).max_relative <= 1e-8

    def test_siso(self):
        sys = random_stable_lqo(18, 1, 1, seed=3)
        data = random_conjugate_data(1, 1, 4, seed=33)
        red = reduce_once(sys, data)
        assert verify_interpolation(sys, red, data).max_relative <= 1e-8

    def test_zero_q_reduces_to_linear_interpolation(self):
        """With q = 0 the left basis enforces plain left-tangential
        conditions; right-linear and mixed families must still be exact."""
        sys = random_stable_lqo(20, 2, 2, seed=4)
        data = random_conjugate_data(sys.m, sys.p, 4, seed=44)
        data = InterpolationData(data.sigmas, data.right, data.left,
                                 np.zeros_like(data.q),
                                 pair_index=data.pair_index)
        red = reduce_once(sys, data)
        res = verify_interpolation(sys, red, data)
        assert np.max(res.right_linear_rel) <= 1e-10
        assert np.max(res.right_quadratic_rel) <= 1e-10
        assert np.max(res.left_mixed_rel) <= 1e-10
        assert np.max(res.hermite_rel) <= 1e-8


def _sym(q):
    return 0.5 * (q + q.transpose(1, 0, 2))


class TestDataValidation:

    def test_unpaired_complex_point_rejected(self):
        with pytest.raises(ConjugacyViolation):
            InterpolationData(np.array([1 + 1j, 2 + 0j]),
                              np.ones((2, 1)), np.ones((2, 1)),
                              np.zeros((2, 2, 1)))

    def test_asymmetric_q_rejected(self):
        data = random_conjugate_data(2, 1, 4, seed=1)
        q = data.q.copy()
        q[0, 1] += 0.5
        bad = InterpolationData(data.sigmas, data.right, data.left, q,
                                pair_index=data.pair_index)
        with pytest.raises(ConjugacyViolation):
            bad.validate()

    def test_nonconjugate_directions_rejected(self):
        data = random_conjugate_data(2, 1, 4, seed=2)
        right = data.right.copy()
        right[1] += 1j
        bad = InterpolationData(data.sigmas, right, data.left, data.q,
                                pair_index=data.pair_index)
        with pytest.raises(ConjugacyViolation):
            bad.validate()

    def test_duplicate_data_rank_deficient(self):
        sys = random_stable_lqo(12, 2, 1, seed=6)
        sig = np.array([1.0 + 0j, 1.0 + 0j])
        right = np.ones((2, 2), dtype=complex)
        data = InterpolationData(sig, right, np.ones((2, 1)),
                                 np.zeros((2, 2, 1)))
        vp = build_v_basis(sys, data)
        wp = build_w_basis(sys, data, vp)
        V, W = realify_bases(vp, wp, data)
        with pytest.raises(RankDeficient):
            petrov_galerkin_project(sys, V, W)


class TestRealification:

    def test_spans_preserved(self):
        """The realified V spans the same space as the primitive basis:
        interpolation still holds exactly."""
        sys = random_stable_lqo(15, 2, 1, seed=9)
        data = random_conjugate_data(2, 1, 4, seed=99)
        vp = build_v_basis(sys, data)
        V, _ = realify_bases(vp, build_w_basis(sys, data, vp), data)
        assert np.isrealobj(V)
        # each primitive column must lie in the span of the real basis
        Q, _ = np.linalg.qr(V)
        for k in range(data.r):
            col = vp[:, k]
            proj = Q @ (Q.conj().T @ col)
            assert np.linalg.norm(col - proj) <= 1e-10 * np.linalg.norm(col)

    def test_reflect_unstable_points(self):
        sig = np.array([-2 + 3j, -2 - 3j, 1 + 0j, 0.5 - 1j])
        out = reflect_unstable_points(sig)
        assert np.allclose(out, [2 + 3j, 2 - 3j, 1 + 0j, 0.5 - 1j])


class TestScaleInvariance:

    def test_projection_invariant_under_left_scaling(self):
        """Scaling l_k and q by a common scalar rescales each w_k but
        neither span, so the reduced transfer function is unchanged."""
        sys = random_stable_lqo(16, 2, 2, seed=12)
        data = random_conjugate_data(2, 2, 4, seed=13)
        red1 = reduce_once(sys, data)
        data2 = InterpolationData(
            data.sigmas, data.right, 2.5 * data.left, 2.5 * data.q,
            pair_index=data.pair_index)
        red2 = reduce_once(sys, data2)
        for s in (1.0 + 0.5j, 3.0):
            g1 = eval_G1(red1, s)
            g2 = eval_G1(red2, s)
            assert np.linalg.norm(g1 - g2) <= 1e-9 * np.linalg.norm(g1)
