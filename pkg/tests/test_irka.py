import numpy as np
import pytest

from lqomor import (
    IrkaConfig,
    advection_diffusion,
    init_eigs,
    init_imag,
    is_asymptotically_stable,
    lqo_irka,
    pole_change,
    random_stable_lqo,
    spectral_decompose,
    verify_h2_optimality,
)
from lqomor.exceptions import InvalidConfig, LengthMismatch


class TestPoleChange:

    def test_sorted_matching(self):
        a = np.array([-1 + 2j, -1 - 2j, -3 + 0j])
        b = np.array([-3 + 0j, -1 - 2j, -1 + 2j])  # same set, permuted
        assert pole_change(a, b) == 0.0

    def test_relative_scaling(self):
        a = np.array([-10.0 + 0j, -20.0 + 0j])
        b = np.array([-10.0 + 0j, -22.0 + 0j])
        assert pole_change(a, b, relative=False) == pytest.approx(2.0)
        assert pole_change(a, b) == pytest.approx(0.1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            pole_change(np.array([-1.0 + 0j]), np.array([-1.0 + 0j, -2.0 + 0j]))


class TestInits:

    def test_imag_even(self):
        sys = random_stable_lqo(10, 2, 2, seed=0)
        data = init_imag(sys, 4, decades=(0.0, 3.0))
        data.validate()
        assert np.allclose(sorted(np.abs(data.sigmas)), [1, 1, 1000, 1000])
        assert np.all(data.sigmas.real == 0.0)

    def test_imag_odd_adds_geometric_mean_real_point(self):
        sys = random_stable_lqo(10, 2, 2, seed=0)
        data = init_imag(sys, 5, decades=(0.0, 3.0))
        data.validate()
        real_pts = data.sigmas[data.sigmas.imag == 0.0]
        assert len(real_pts) == 1
        assert real_pts[0].real == pytest.approx(10.0 ** 1.5)

    def test_eigs_init_is_conjugate_closed_and_stable_points(self):
        sys = random_stable_lqo(40, 2, 2, seed=1)
        data = init_eigs(sys, 6)
        data.validate()
        assert np.all(data.sigmas.real > 0.0)

    def test_eigs_init_sparse_path(self):
        sys = advection_diffusion(n=800)
        data = init_eigs(sys, 4, dense_cap=100)
        data.validate()
        assert len(data.sigmas) == 4


class TestIteration:

    def test_converges_on_small_benchmark(self):
        sys = advection_diffusion(n=120)
        cfg = IrkaConfig(r=4, tol=1e-8, max_iter=200)
        red, report = lqo_irka(sys, cfg)
        assert report.converged
        assert report.iterations <= 200
        assert is_asymptotically_stable(red)
        assert report.final_residuals.max_relative <= 1e-6

    def test_both_inits_reach_same_fixed_point(self):
        sys = advection_diffusion(n=80)
        red_a, _ = lqo_irka(sys, IrkaConfig(r=4, init="eigs"))
        red_b, _ = lqo_irka(sys, IrkaConfig(r=4, init="imag"))
        pa = spectral_decompose(red_a).lambdas
        pb = spectral_decompose(red_b).lambdas
        assert pole_change(pa, pb) <= 1e-6

    def test_random_system(self):
        sys = random_stable_lqo(50, 2, 2, seed=3)
        red, report = lqo_irka(sys, IrkaConfig(r=6, tol=1e-9, init="imag",
                                               imag_decades=(-1.0, 1.0)))
        assert report.converged
        assert report.final_residuals.max_relative <= 1e-6

    def test_report_contents(self):
        sys = advection_diffusion(n=60)
        red, report = lqo_irka(sys, IrkaConfig(r=2, track_h2=True))
        assert len(report.pole_history) == report.iterations
        assert len(report.h2_history) == report.iterations
        assert report.pole_change_history[-1] <= 1e-10
        d = report.to_dict()
        assert d["converged"] is True
        assert d["final_max_relative_residual"] is not None

    def test_h2_history_decreases(self):
        sys = advection_diffusion(n=60)
        _, report = lqo_irka(sys, IrkaConfig(r=4, track_h2=True,
                                             init="imag"))
        assert report.h2_history[-1] <= report.h2_history[0]

    def test_optimality_certificate_matches_verifier(self):
        sys = advection_diffusion(n=100)
        red, report = lqo_irka(sys, IrkaConfig(r=4))
        res = verify_h2_optimality(sys, red)
        assert res.max_relative == pytest.approx(
            report.final_residuals.max_relative, rel=1e-6)

    def test_invalid_config(self):
        sys = random_stable_lqo(10, 1, 1, seed=0)
        with pytest.raises(InvalidConfig):
            lqo_irka(sys, IrkaConfig(r=0))
        with pytest.raises(InvalidConfig):
            lqo_irka(sys, IrkaConfig(r=2, init="nope"))


class TestLtiDegeneration:
    """With all M_k = 0 the quadratic machinery must vanish and the
    fixed point satisfies the classical linear interpolation conditions."""

    def make_lti(self, n=60, seed=5):
        sys = random_stable_lqo(n, 2, 2, seed=seed)
        from lqomor import make_lqo_system
        return make_lqo_system(sys.E, sys.A, sys.B, sys.C,
                               [np.zeros((n, n)) for _ in range(sys.p)])

    def test_reduced_quadratic_terms_vanish(self):
        sys = self.make_lti()
        red, report = lqo_irka(sys, IrkaConfig(r=4, init="imag",
                                               imag_decades=(-1.0, 1.0)))
        assert report.converged
        for M in red.Ms:
            assert np.max(np.abs(M)) == 0.0

    def test_classical_conditions_hold(self):
        sys = self.make_lti()
        red, report = lqo_irka(sys, IrkaConfig(r=4, init="imag",
                                               imag_decades=(-1.0, 1.0)))
        res = report.final_residuals
        # all four families degenerate to the classical right/left/Hermite
        # conditions; quadratic residues are exactly zero
        assert res.max_relative <= 1e-6
        spec = spectral_decompose(red)
        assert np.max(np.abs(spec.mres)) == 0.0
