import numpy as np
import pytest

from lqomor import (
    SimConfig,
    advection_diffusion,
    make_lqo_system,
    relerr_l2,
    relerr_linf,
    relerr_pointwise,
    simulate,
    u_l2_norm,
)
from lqomor.exceptions import AllZeroReference, InvalidConfig


def scalar_system():
    return make_lqo_system([[1.0]], [[-1.0]], [[1.0]], [[1.0]], [[[1.0]]])


class TestIntegrator:

    def test_scalar_step_response(self):
        """x' = -x + 1 from 0: x(t) = 1 - e^{-t};
        y = x + x^2 evaluated on that trajectory."""
        sys = scalar_system()
        cfg = SimConfig(t1=5.0, steps=2000)
        traj = simulate(sys, lambda t: np.ones(np.shape(t) + (1,)), cfg)
        x = 1.0 - np.exp(-traj.times)
        want = x + x ** 2
        assert np.max(np.abs(traj.outputs[:, 0] - want)) <= 2e-6

    def test_second_order_accuracy(self):
        """Trapezoidal rule: halving the step cuts the error by ~4."""
        sys = scalar_system()
        u = lambda t: np.column_stack([np.sin(np.atleast_1d(t))])
        errs = []
        for steps in (250, 500):
            cfg = SimConfig(t1=4.0, steps=steps)
            traj = simulate(sys, u, cfg)
            fine = simulate(sys, u, SimConfig(t1=4.0, steps=16000))
            sel = np.linspace(0, steps, 5).astype(int)
            fsel = np.linspace(0, 16000, 5).astype(int)
            errs.append(np.max(np.abs(traj.outputs[sel, 0]
                                      - fine.outputs[fsel, 0])))
        assert errs[0] / errs[1] > 3.0

    def test_undriven_decay_keeps_states(self):
        sys = scalar_system()
        cfg = SimConfig(t1=1.0, steps=100)
        traj = simulate(sys, lambda t: np.zeros(np.shape(t) + (1,)), cfg,
                        x0=np.array([2.0]), keep_states=True)
        assert traj.states is not None
        assert traj.states[-1, 0] == pytest.approx(2 * np.exp(-1.0), rel=1e-4)

    def test_single_factorization_benchmark_run(self):
        sys = advection_diffusion(n=200)
        from lqomor.benchmarks import benchmark_inputs
        u = benchmark_inputs()["sinc"]
        traj = simulate(sys, u, SimConfig())
        assert traj.outputs.shape == (1001, 1)
        assert np.all(np.isfinite(traj.outputs))

    def test_bad_config(self):
        with pytest.raises(InvalidConfig):
            SimConfig(t1=-1.0).check()
        with pytest.raises(InvalidConfig):
            simulate(scalar_system(), lambda t: np.zeros((3, 7)),
                     SimConfig(steps=10))


class TestMetrics:

    def test_relerr_l2_and_linf(self):
        ref = np.array([1.0, 2.0, -2.0, 4.0])
        approx = ref + np.array([0.0, 0.1, 0.0, 0.0])
        assert relerr_linf(ref, approx) == pytest.approx(0.1 / 4.0)
        assert relerr_l2(ref, approx) == pytest.approx(
            0.1 / np.sqrt(np.sum(ref ** 2)))

    def test_pointwise_excludes_near_zero(self):
        ref = np.array([1.0, 0.0, 2.0])
        approx = np.array([1.1, 0.5, 2.0])
        vals, excluded = relerr_pointwise(ref, approx)
        assert excluded == 1
        assert np.isnan(vals[1])
        assert vals[0] == pytest.approx(0.1)

    def test_zero_reference_rejected(self):
        with pytest.raises(AllZeroReference):
            relerr_l2(np.zeros(5), np.ones(5))
        with pytest.raises(AllZeroReference):
            relerr_linf(np.zeros(5), np.ones(5))

    def test_u_l2_norm(self):
        # ||sin||_{L2(0, 2pi)} = sqrt(pi)
        cfg = SimConfig(t0=0.0, t1=2 * np.pi, steps=4000)
        val = u_l2_norm(lambda t: np.column_stack([np.sin(np.atleast_1d(t))]),
                        cfg)
        assert val == pytest.approx(np.sqrt(np.pi), rel=1e-6)
