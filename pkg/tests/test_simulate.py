import numpy as np
import pytest

from lpband import (
    ExplosiveRoots,
    SimConfig,
    VolatilityProcess,
    backward_recursion,
    extend_irf,
    population_theta,
    replication_seed,
    simulate,
    spectral_radius,
    static_mixing_config,
    switching_var4_config,
    true_irf,
)


def white_noise_config(T, n=2, seed=0):
    return SimConfig(a=np.zeros((1, n, n)), b=np.eye(n), T=T, seed=seed)


class TestSimulate:
    def test_white_noise_covariance(self):
        sim = simulate(white_noise_config(100000, seed=4))
        cov = np.cov(sim.panel.values.T)
        assert np.linalg.norm(cov - np.eye(2)) / np.sqrt(2) < 0.02

    def test_unit_root_variance_grows_linearly(self):
        # random walk from zero: Var(y_T) = T across replications
        for T in (50, 200):
            finals = []
            for rep in range(1000):
                seed = int(np.random.default_rng(
                    replication_seed(11, rep)).integers(2 ** 62))
                cfg = SimConfig(a=np.array([[[1.0]]]), b=np.array([[1.0]]),
                                T=T, seed=seed)
                finals.append(simulate(cfg).panel.values[-1, 0])
            ratio = np.var(finals) / T
            assert abs(ratio - 1.0) < 0.15

    def test_markov_regime_variance_ratio(self):
        vol = VolatilityProcess(kind="markov2", stay_prob=(0.7, 0.7),
                                vol_multipliers=np.array([[1.0, 1.0],
                                                          [4.0, 1.0]]))
        cfg = SimConfig(a=np.zeros((1, 2, 2)), b=np.eye(2), T=200000, vol=vol,
                        seed=9)
        sim = simulate(cfg)
        y1 = sim.panel.values[:, 0]
        hi = sim.instrument == 1.0
        ratio = y1[hi].var() / y1[~hi].var()
        assert abs(ratio - 16.0) < 1.5
        # the untouched shock is regime free
        y2 = sim.panel.values[:, 1]
        assert abs(y2[hi].var() / y2[~hi].var() - 1.0) < 0.1

    def test_seed_determinism_bytes(self):
        cfg = switching_var4_config(300, seed=77)
        a = simulate(cfg)
        b = simulate(switching_var4_config(300, seed=77))
        assert a.panel.values.tobytes() == b.panel.values.tobytes()
        assert np.array_equal(a.instrument, b.instrument)
        assert np.array_equal(a.regimes, b.regimes)

    def test_explosive_roots_rejected(self):
        with pytest.raises(ExplosiveRoots):
            SimConfig(a=np.array([[[1.02]]]), b=np.array([[1.0]]), T=50)

    def test_unit_root_allowed(self):
        cfg = SimConfig(a=np.array([[[1.0]]]), b=np.array([[1.0]]), T=50)
        assert spectral_radius(cfg.a) == pytest.approx(1.0)

    def test_student_t_option(self):
        cfg = SimConfig(a=np.zeros((1, 1, 1)), b=np.eye(1), T=200000,
                        seed=3, innovation="student_t8")
        y = simulate(cfg).panel.values[:, 0]
        assert abs(y.var() - 1.0) < 0.03
        # heavier tails than the normal
        assert np.mean(y ** 4) > 3.2

    def test_counts_instrument_range(self):
        vol = VolatilityProcess(kind="markov2", stay_prob=(0.7, 0.7),
                                vol_multipliers=np.array([[1.0], [4.0]]),
                                instrument_rule="counts")
        sim = simulate(SimConfig(a=np.zeros((1, 1, 1)), b=np.eye(1), T=5000,
                                 vol=vol, seed=5))
        assert set(np.unique(sim.instrument)) <= {0., 1., 2., 3., 4.}
        # counts correlate with the unobserved regime
        assert np.corrcoef(sim.instrument, sim.regimes)[0, 1] > 0.4


class TestTrueIRF:
    def test_no_dynamics(self):
        bundle = true_irf(np.zeros((1, 2, 2)), np.eye(2), horizon=5)
        assert np.array_equal(bundle.c_full[0], np.eye(2))
        assert np.all(bundle.c_full[1:] == 0.0)

    def test_ar1_geometric(self):
        bundle = true_irf(np.array([[[0.5]]]), np.eye(1), horizon=6)
        assert np.allclose(bundle.c_full[:, 0, 0], 0.5 ** np.arange(7))

    def test_matches_extension_roundtrip(self):
        rng = np.random.default_rng(12)
        a = 0.3 * rng.standard_normal((2, 3, 3))
        assert spectral_radius(a) < 1.0
        bundle = true_irf(a, np.eye(3), horizon=10)
        a_back = backward_recursion(bundle.c_full[1:3], p=2)
        assert np.allclose(a_back, a, atol=1e-12)
        ext = extend_irf(a_back, bundle.c_full[1:3], h2=10)
        assert np.allclose(ext, bundle.c_full, atol=1e-10)


class TestPopulationOracle:
    def test_static_mixing_closed_form(self):
        cfg = static_mixing_config(100, seed=0)
        theta = population_theta(cfg, h1=1)
        assert np.allclose(theta.gamma, [0.75, 0.375])
        d = np.diag([2.5, 1.0])
        b = np.array([[1.0, 0.0], [0.5, 1.0]])
        assert np.allclose(theta.sigma, b @ d @ b.T)
        sim = simulate(cfg)
        assert np.allclose(sim.true_irf.psi[0],
                           np.sqrt(2.5) * np.array([1.0, 0.5]))

    def test_constant_vol_has_zero_gamma(self):
        theta = population_theta(white_noise_config(100), h1=1)
        assert np.all(theta.gamma == 0.0)

    def test_estimated_gamma_centers_on_zero_with_independent_instrument(self):
        # constant volatility: instrument is independent noise
        from lpband import DesignSpec, estimate_theta

        gams = []
        for rep in range(200):
            seed = int(np.random.default_rng(
                replication_seed(21, rep)).integers(2 ** 62))
            sim = simulate(white_noise_config(400, seed=seed))
            theta, _, _ = estimate_theta(sim.panel, sim.instrument,
                                         DesignSpec(p=1, k=0, h1=1, h2=1))
            gams.append(theta.gamma)
        gams = np.array(gams)
        se = gams.std(axis=0) / np.sqrt(len(gams))
        assert np.all(np.abs(gams.mean(axis=0)) < 4 * se)
