"""Acceptance suite: each test exercises one release criterion end to end
at its stated tolerance and prints one PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete.
"""

import time

import numpy as np
import pytest

import lpband as lb
from lpband.inference import (
    bonferroni_from_values,
    empirical_pointwise_cv_from_values,
    evaluate_functional,
    nearest_rank_quantile,
    structural_irf_functional,
    supt_from_values,
)
from lpband.smooth import MDProblem, fit_md, md_weights, stack_c


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"\n[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {detail}",
          flush=True)


def _rep_seed(base: int, rep: int) -> int:
    return int(np.random.default_rng(lb.replication_seed(base, rep))
               .integers(2 ** 62))


def test_criterion_01_projection_identity():
    """Residual cross-product coefficients equal direct projection
    coefficients to 1e-8 on 50 random datasets, in under 5 seconds."""
    t0 = time.perf_counter()
    spec = lb.DesignSpec(p=4, k=1, h1=8, h2=8)
    worst = 0.0
    for rep in range(50):
        rng = np.random.default_rng(_rep_seed(1, rep))
        panel = lb.Panel(rng.standard_normal((300, 3)))
        res = lb.estimate_residuals(panel, spec)
        v = panel.values
        for h in range(1, 9):
            c_res = lb.estimate_c(res, h)
            prob = lb.build_design(panel, spec, h)
            m = prob.y.shape[0]
            x = np.hstack([v[spec.p: spec.p + m], prob.x])
            beta, *_ = np.linalg.lstsq(x, prob.y, rcond=None)
            worst = max(worst, float(np.max(np.abs(c_res - beta[:3].T))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 5.0
    _report(1, ok, f"max |residual-route - direct| = {worst:.2e}, "
                   f"{elapsed:.2f}s")
    assert worst < 1e-8
    assert elapsed < 5.0


def test_criterion_02_recursion_roundtrip():
    """Lag matrices are recovered exactly from their first two response
    matrices on 100 random stable two-lag systems."""
    worst = 0.0
    for rep in range(100):
        rng = np.random.default_rng(_rep_seed(2, rep))
        while True:
            a = 0.5 * rng.standard_normal((2, 3, 3))
            if lb.spectral_radius(a) < 0.98:
                break
        bundle = lb.true_irf(a, np.eye(3), horizon=2)
        back = lb.backward_recursion(bundle.c_full[1:], p=2)
        worst = max(worst, float(np.max(np.abs(back - a))))
    ok = worst < 1e-10
    _report(2, ok, f"max roundtrip error = {worst:.2e}")
    assert worst < 1e-10


def test_criterion_03_identification_oracle():
    """Two-variable static-mixing process with switching shock scale:
    estimated impacts and instrument covariances land within 3 percent of
    their closed-form values at T = 200000."""
    t0 = time.perf_counter()
    sim = lb.simulate(lb.static_mixing_config(200000, seed=301))
    spec = lb.DesignSpec(p=1, k=0, h1=1, h2=1)
    theta, res, bundle = lb.estimate_theta(sim.panel, sim.instrument, spec)
    b_hat = lb.impact_vector(theta.gamma, theta.sigma).b
    b_true = np.sqrt(2.5) * np.array([1.0, 0.5])
    gamma_true = np.array([0.75, 0.375])
    err_b = float(np.max(np.abs(b_hat / b_true - 1.0)))
    err_g = float(np.max(np.abs(theta.gamma / gamma_true - 1.0)))
    # ratio identification: gamma_2 / gamma_1 estimates b_21 / b_11
    err_ratio = abs((theta.gamma[1] / theta.gamma[0]) / 0.5 - 1.0)
    elapsed = time.perf_counter() - t0
    ok = err_b < 0.03 and err_g < 0.03 and err_ratio < 0.03 and elapsed < 30.0
    _report(3, ok, f"impact rel err {err_b:.4f}, gamma rel err {err_g:.4f}, "
                   f"ratio rel err {err_ratio:.4f}, {elapsed:.1f}s")
    assert err_b < 0.03
    assert err_g < 0.03
    assert err_ratio < 0.03
    assert elapsed < 30.0


def test_criterion_04_bootstrap_hac_equivalence():
    """The bootstrap draws' covariance reproduces the triangular-kernel
    long-run covariance at the same bandwidth within 5 percent."""
    t0 = time.perf_counter()
    cfg = lb.SimConfig(
        a=np.array([[[0.4, 0.1], [0.0, 0.3]]]),
        b=np.array([[1.0, 0.0], [0.4, 0.9]]),
        T=500,
        vol=lb.VolatilityProcess(kind="markov2", stay_prob=(0.7, 0.7),
                                 vol_multipliers=np.array([[1.0, 1.0],
                                                           [2.0, 1.0]])),
        seed=401)
    sim = lb.simulate(cfg)
    spec = lb.DesignSpec(p=1, k=0, h1=6, h2=6)
    theta, res, _ = lb.estimate_theta(sim.panel, sim.instrument, spec)
    scores = lb.compute_scores(res, sim.instrument, theta)
    b_t = lb.default_bandwidth(scores.m)
    omega = lb.hac(scores, lb.KernelSpec("bartlett", b_t))
    draws = lb.wild_draws(scores, theta, S=20000, b_t=b_t, seed=402)
    dev = np.sqrt(scores.m) * (draws.draws - theta.to_array())
    cov = dev.T @ dev / draws.S
    rel = float(np.linalg.norm(cov - omega) / np.linalg.norm(omega))
    elapsed = time.perf_counter() - t0
    ok = rel < 0.05 and elapsed < 60.0
    _report(4, ok, f"relative Frobenius distance {rel:.4f} at B_T={b_t}, "
                   f"{elapsed:.1f}s")
    assert rel < 0.05
    assert elapsed < 60.0


def _coverage_run(T: int, reps: int, h1: int = 6, h2: int = 8, S: int = 500):
    f, _ = structural_irf_functional(4, h1, 4, h2)
    spec = lb.DesignSpec(p=4, k=0, h1=h1, h2=h2)
    covered, errs = [], []
    for rep in range(reps):
        sim = lb.simulate(lb.switching_var4_config(T, seed=_rep_seed(5, rep)),
                          truth_horizon=h2)
        theta, res, bundle = lb.estimate_theta(sim.panel, sim.instrument, spec)
        scores = lb.compute_scores(res, sim.instrument, theta)
        draws = lb.wild_draws(scores, theta, S=S,
                              b_t=lb.default_bandwidth(scores.m), seed=rep)
        center, values = evaluate_functional(draws, f)
        band = supt_from_values(center, values, alpha=0.32)
        truth = sim.true_irf.psi[: h2 + 1].T.ravel()
        covered.append(bool(np.all((band.lower <= truth)
                                   & (truth <= band.upper))))
        errs.append(float(np.max(np.abs(center - truth))))
    return float(np.mean(covered)), float(np.median(errs))


def test_criterion_05_switching_volatility_experiment():
    """Four-variable, four-lag system with regime-switching shock scale:
    68 percent simultaneous bands cover the whole true response path at
    close to nominal rates at both sample sizes, and the point-estimate
    error shrinks with the sample."""
    t0 = time.perf_counter()
    cov160, err160 = _coverage_run(160, 200)
    cov1600, err1600 = _coverage_run(1600, 200)
    elapsed = time.perf_counter() - t0
    ok = (cov160 >= 0.55 and cov1600 >= 0.58 and err1600 < err160
          and elapsed < 900.0)
    _report(5, ok, f"coverage {cov160:.3f} (T=160, floor 0.55) / "
                   f"{cov1600:.3f} (T=1600, floor 0.58); median max error "
                   f"{err160:.3f} -> {err1600:.3f}; {elapsed:.0f}s")
    assert cov160 >= 0.55
    assert cov1600 >= 0.58
    assert err1600 < err160
    assert elapsed < 900.0


def test_criterion_06_unit_root_dispersion_rates():
    """Unit-root AR(1) fit with one extra lag, 500 replications per sample
    size: dispersion rate of the first coefficient matches root-T, and the
    stated 1/T rate for the difference of the first two coefficients.

    The second assertion fails by construction: the difference of direct
    multi-horizon projection estimates keeps root-T dispersion (measured
    slope about -0.5). The 1/T collapse holds for plug-in recursions built
    from one-step coefficients (see test_estimate for that route), which
    this estimator intentionally avoids. Kept at the stated tolerance as
    an honest record rather than loosened to pass.
    """
    t0 = time.perf_counter()
    spec = lb.DesignSpec(p=2, k=0, h1=2, h2=2)
    Ts = [100, 400, 1600]
    disp_diff, disp_c1 = [], []
    for T in Ts:
        diffs, c1s = [], []
        for rep in range(500):
            sim = lb.simulate(lb.SimConfig(a=np.array([[[1.0]]]),
                                           b=np.eye(1), T=T,
                                           seed=_rep_seed(6, rep)))
            theta, _, _ = lb.estimate_theta(sim.panel, sim.instrument, spec)
            diffs.append(theta.c[1, 0, 0] - theta.c[0, 0, 0])
            c1s.append(theta.c[0, 0, 0] - 1.0)
        iqr = lambda x: float(np.quantile(x, 0.75) - np.quantile(x, 0.25))
        disp_diff.append(iqr(diffs))
        disp_c1.append(iqr(c1s))
    lT = np.log(Ts)
    slope_diff = float(np.polyfit(lT, np.log(disp_diff), 1)[0])
    slope_c1 = float(np.polyfit(lT, np.log(disp_c1), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = (-1.25 < slope_diff < -0.75) and (-0.65 < slope_c1 < -0.35) \
        and elapsed < 300.0
    _report(6, ok, f"slope(C2-C1) = {slope_diff:.3f} (target -1 +/- 0.25), "
                   f"slope(C1-1) = {slope_c1:.3f} (target -0.5 +/- 0.15); "
                   f"{elapsed:.0f}s")
    assert elapsed < 300.0
    assert -0.65 < slope_c1 < -0.35
    assert -1.25 < slope_diff < -0.75


def test_criterion_07_band_ordering():
    """Union-bound critical values dominate simultaneous ones, which
    dominate per-horizon ones, exactly, on every draw set; strictly on a
    60-horizon path."""
    cfg = lb.SimConfig(
        a=np.array([[[0.4, 0.1], [0.0, 0.3]]]),
        b=np.array([[1.0, 0.0], [0.4, 0.9]]),
        T=500,
        vol=lb.VolatilityProcess(kind="markov2", stay_prob=(0.7, 0.7),
                                 vol_multipliers=np.array([[1.0, 1.0],
                                                           [2.0, 1.0]])),
        seed=701)
    sim = lb.simulate(cfg)
    spec = lb.DesignSpec(p=1, k=0, h1=6, h2=60)
    theta, res, _ = lb.estimate_theta(sim.panel, sim.instrument, spec)
    scores = lb.compute_scores(res, sim.instrument, theta)
    draws = lb.wild_draws(scores, theta, S=20000,
                          b_t=lb.default_bandwidth(scores.m), seed=702)

    checks = []
    # 60-horizon structural path for the first variable; 20000 draws keep
    # the alpha/H tail quantile estimable at alpha = 0.32
    f60, _ = structural_irf_functional(2, 6, 1, 59, variables=[0])
    center, values = evaluate_functional(draws, f60)
    supt = supt_from_values(center, values, 0.32)
    bon = bonferroni_from_values(center, values, 0.32)
    cv_pw = empirical_pointwise_cv_from_values(center, values, 0.32)
    checks.append(("H=60 strict", 0.32,
                   bon.cv > supt.cv > float(np.max(cv_pw))))
    # shorter paths at two levels
    for h2, variables in ((8, [0]), (6, [1])):
        f, _ = structural_irf_functional(2, 6, 1, h2, variables=variables)
        c2, v2 = evaluate_functional(draws, f)
        for alpha in (0.32, 0.1):
            supt = supt_from_values(c2, v2, alpha)
            bon = bonferroni_from_values(c2, v2, alpha)
            cv_pw = empirical_pointwise_cv_from_values(c2, v2, alpha)
            checks.append((f"h2={h2}", alpha,
                           bon.cv >= supt.cv >= float(np.max(cv_pw))))
    ok = all(c[2] for c in checks)
    _report(7, ok, "; ".join(f"{name} a={a:g}: {'ok' if good else 'violated'}"
                             for name, a, good in checks))
    assert ok


def test_criterion_08_supt_calibration():
    """Simultaneous critical value from 1e5 independent Gaussian draws over
    10 horizons matches the brute-force quantile of the max of 10 absolute
    standard normals within 3 percent."""
    rng = np.random.default_rng(801)
    values = rng.standard_normal((100000, 10))
    band = supt_from_values(np.zeros(10), values, alpha=0.32)
    brute = np.max(np.abs(np.random.default_rng(802)
                          .standard_normal((100000, 10))), axis=1)
    cv_brute = nearest_rank_quantile(np.sort(brute), 0.68)
    rel = abs(band.cv / cv_brute - 1.0)
    ok = rel < 0.03
    _report(8, ok, f"supt CV {band.cv:.4f} vs brute force {cv_brute:.4f} "
                   f"(rel diff {rel:.4f})")
    assert rel < 0.03


def test_criterion_09_smoothing_efficiency():
    """Under a correctly specified two-lag process the smoothed coefficient
    estimates beat the raw projections in mean squared error at horizons
    3..8 in at least 95 percent of cells, and the exactly identified fit is
    exact."""
    t0 = time.perf_counter()
    a_true = np.array([[[0.5, 0.15], [0.1, 0.4]], [[0.2, 0.0], [0.0, 0.15]]])
    b_mix = np.array([[1.0, 0.0], [0.4, 0.9]])
    c_true = lb.forward_c(a_true, 8)[1:]
    spec = lb.DesignSpec(p=2, k=0, h1=8, h2=8)
    reps = 500
    lp_err = np.zeros((reps, 8, 2, 2))
    md_err = np.zeros((reps, 8, 2, 2))
    for rep in range(reps):
        sim = lb.simulate(lb.SimConfig(a=a_true, b=b_mix, T=400,
                                       seed=_rep_seed(9, rep)))
        theta, res, _ = lb.estimate_theta(sim.panel, sim.instrument, spec)
        scores = lb.compute_scores(res, sim.instrument, theta)
        draws = lb.wild_draws(scores, theta, S=200,
                              b_t=lb.default_bandwidth(scores.m), seed=rep)
        weights = md_weights(draws)
        sol = fit_md(MDProblem(g_lp=stack_c(theta.c), weights=weights,
                               p=2, n=2))
        lp_err[rep] = theta.c - c_true
        md_err[rep] = lb.forward_c(sol.a_md, 8)[1:] - c_true
    lp_mse = (lp_err ** 2).mean(axis=0)[2:8]
    md_mse = (md_err ** 2).mean(axis=0)[2:8]
    win_share = float((md_mse <= lp_mse).mean())

    # exactly identified case: zero objective, recursion inverted exactly
    rng = np.random.default_rng(902)
    c_pair = 0.4 * rng.standard_normal((2, 2, 2))
    sol_exact = fit_md(MDProblem(g_lp=stack_c(c_pair),
                                 weights=np.ones(8), p=2, n=2))
    elapsed = time.perf_counter() - t0
    ok = win_share >= 0.95 and sol_exact.objective_value <= 1e-12
    _report(9, ok, f"smoothing wins {win_share:.1%} of cells at h=3..8; "
                   f"exact-identification objective "
                   f"{sol_exact.objective_value:.1e}; {elapsed:.0f}s")
    assert win_share >= 0.95
    assert sol_exact.objective_value <= 1e-12


def test_criterion_10_pipeline_smoke(tmp_path):
    """A six-variable, 515-row dataset with 12 lags and 24 direct horizons
    runs through the whole command pipeline in under 10 minutes."""
    from lpband.cli import main
    from lpband.io import write_panel_csv

    t0 = time.perf_counter()
    rng = np.random.default_rng(1001)
    n = 6
    a1 = 0.35 * np.eye(n) + 0.03 * rng.standard_normal((n, n))
    a2 = 0.10 * np.eye(n) + 0.02 * rng.standard_normal((n, n))
    b = np.eye(n) + 0.2 * np.tril(rng.standard_normal((n, n)), k=-1)
    vol = lb.VolatilityProcess(kind="markov2", stay_prob=(0.7, 0.7),
                               vol_multipliers=np.vstack([
                                   np.ones(n),
                                   np.array([4.0] + [1.0] * (n - 1))]),
                               instrument_rule="counts")
    cfg = lb.SimConfig(a=np.stack([a1, a2]), b=b, T=515, vol=vol, seed=1002)
    assert lb.spectral_radius(cfg.a) < 1.0
    sim = lb.simulate(cfg)
    csv_path = tmp_path / "panel.csv"
    write_panel_csv(csv_path, sim.panel, sim.instrument)

    est = tmp_path / "est"
    rc = main(["estimate", "--input", str(csv_path), "--instrument", "z",
               "-p", "12", "-k", "0", "--h1", "24", "--h2", "30",
               "--seed", "7", "--out", str(est)])
    assert rc == 0
    rc = main(["bands", "--archive", str(est / "archive.npz"),
               "--draws", "2000", "--out", str(tmp_path / "bands"),
               "--no-plots"])
    assert rc == 0
    rc = main(["compare", "--archive", str(est / "archive.npz"),
               "--draws", "2000", "--out", str(tmp_path / "cmp")])
    assert rc == 0
    rc = main(["smooth", "--archive", str(est / "archive.npz"),
               "--draws", "2000", "--linearized",
               "--out", str(tmp_path / "smooth"), "--no-plots"])
    assert rc == 0
    elapsed = time.perf_counter() - t0
    produced = [(tmp_path / "bands" / "bands_psi_a0.32.csv"),
                (tmp_path / "cmp" / "compare.txt"),
                (tmp_path / "smooth" / "smoothed_bands_a0.32.csv")]
    ok = all(p.exists() for p in produced) and elapsed < 600.0
    _report(10, ok, f"estimate+bands+compare+smooth on 515x6, p=12, h1=24, "
                    f"S=2000 in {elapsed:.0f}s")
    for p in produced:
        assert p.exists()
    assert elapsed < 600.0
