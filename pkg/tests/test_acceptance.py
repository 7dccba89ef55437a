"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
Closed-form and Monte Carlo oracles are computed in-test, independent of
the library paths they certify.
"""
import math

import numpy as np
import pytest
from scipy.stats import norm as norm_dist

import exptail as et
from exptail.characterize import (CONSISTENT, VIOLATED,
                                  check_absolutely_monotonic,
                                  check_octant_monotonic, decomposition_check)
from exptail.cli import ExperimentConfig, run
from exptail.norms import ray_probe_plan
from exptail.vectors import log_mean_exp, log_mean_exp_se


def report(num, name, ok):
    print(f"ACCEPTANCE {num:>2} {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


@pytest.fixture(scope="module")
def gauss2_1m():
    return et.sample(et.Gaussian(np.eye(2)), 1_000_000, seed=101)


def _random_pd(rng, d):
    A = rng.standard_normal((d, d))
    return A @ A.T + 0.3 * np.eye(d)


def test_c01_conjugate_quadratic_closed_form():
    rng = np.random.default_rng(1001)
    worst = 0.0
    for d in (2, 3):
        for _ in range(5):
            B = _random_pd(rng, d)
            phi = et.make_quadratic(B)
            ev = et.ConjugateEvaluator(phi)
            Y = rng.standard_normal((100, d))
            Y *= (rng.uniform(0.5, 3.0, 100) / np.linalg.norm(Y, axis=1))[:, None]
            got = ev.values(Y).values
            want = 0.5 * np.einsum("ij,ij->i", Y, np.linalg.solve(B, Y.T).T)
            worst = max(worst, float(np.max(np.abs(got - want) / want)))
    report(1, "conjugate vs linear-solve oracle", worst <= 1e-6)


def test_c02_fenchel_moreau_involution():
    rng = np.random.default_rng(1002)
    probes2 = rng.standard_normal((100, 2))
    probes2 *= (3.0 * rng.random(100) / np.linalg.norm(probes2, axis=1))[:, None]
    r_quad = et.biconjugate_residual(et.make_quadratic(np.eye(2)), probes2)
    probes1 = np.linspace(-3.0, 3.0, 100)[:, None]
    r_pow = et.biconjugate_residual(et.make_power(4.0, 1.0, 1), probes1)
    report(2, "biconjugate residuals", r_quad <= 1e-4 and r_pow <= 1e-4)


def test_c03_natural_function_recovery(gauss2_1m):
    nat = et.natural_function(gauss2_1m)
    rng = np.random.default_rng(1003)
    lam = rng.standard_normal((50, 2))
    lam *= (rng.uniform(0.2, 1.5, 50) / np.linalg.norm(lam, axis=1))[:, None]
    vals, trusted = nat.evaluate_with_trust(lam)
    err = float(np.max(np.abs(vals - 0.5 * np.sum(lam**2, axis=1))))
    plan = ray_probe_plan(2, n_directions=37, r_lo=0.05, r_hi=3.0, n_radii=10)
    est = et.bphi_norm(nat, et.make_quadratic(np.eye(2)), plan=plan)
    report(3, "natural-function recovery",
           bool(trusted.all()) and err <= 0.02 and 0.97 <= est.value <= 1.03)


def test_c04_norm_axioms():
    phi = et.make_quadratic(np.eye(2))
    tol = 1e-4

    def gauss_mgf(Q):
        Q = np.atleast_2d(Q)
        return lambda L: 0.5 * np.einsum("...i,ij,...j->...",
                                         np.atleast_2d(L), Q,
                                         np.atleast_2d(L))

    base = et.bphi_norm(gauss_mgf(np.eye(2)), phi, rel_tol=tol).value
    homog_ok = True
    for alpha in (0.5, 2.0, 10.0):
        got = et.bphi_norm(gauss_mgf(alpha**2 * np.eye(2)), phi,
                           rel_tol=tol).value
        homog_ok &= abs(got - alpha * base) <= 3 * tol * alpha * base

    rng = np.random.default_rng(1004)
    tri_ok = True
    for _ in range(3):
        Q1, Q2 = _random_pd(rng, 2), _random_pd(rng, 2)
        n1 = et.bphi_norm(gauss_mgf(Q1), phi, rel_tol=tol).value
        n2 = et.bphi_norm(gauss_mgf(Q2), phi, rel_tol=tol).value
        ns = et.bphi_norm(gauss_mgf(Q1 + Q2), phi, rel_tol=tol).value
        tri_ok &= ns <= n1 + n2 + 2 * tol * (n1 + n2)

    n_mc = 50_000
    plan = ray_probe_plan(2, 16, n_radii=10)
    vals = [et.bphi_norm(et.natural_function(
        et.sample(et.Gaussian(np.eye(2)), n_mc, seed=s)), phi,
        plan=plan).value for s in range(5)]
    width = 5.0 / math.sqrt(n_mc)
    rearr_ok = max(vals) - min(vals) <= 3.0 * 2.0 * width
    report(4, "norm axioms", homog_ok and tri_ok and rearr_ok)


def _certify_domination(dist, phi, x_points, n_fit, reps, seed):
    fit = et.sample(dist, n_fit, seed)
    est = et.bphi_norm(et.natural_function(fit), phi,
                       plan=ray_probe_plan(dist.dimension, 16, n_radii=12))
    tail_sample = et.sample(dist, reps, seed + 1000003)
    ev = et.ConjugateEvaluator(phi)
    violations = 0
    compared = 0
    for x in x_points:
        tb = et.chernov_bound(phi, est.value, x, evaluator=ev)
        if tb.bound < 10.0 / reps:
            continue
        emp = et.tail_function(tail_sample, x)
        compared += 1
        if tb.bound_with_slack < emp.probability - 3.0 * emp.half_width:
            violations += 1
    return violations, compared


def test_c05_chernov_domination():
    reps = 200_000
    ok = True
    # gaussian x quadratic
    g_x = [t * np.ones(2) for t in np.arange(0.5, 2.26, 0.25)]
    v, c = _certify_domination(et.Gaussian(np.eye(2)),
                               et.make_quadratic(np.eye(2)), g_x,
                               200_000, reps, seed=51)
    ok &= (v == 0 and c > 0)
    # rademacher x logcosh-as-custom
    lc = et.make_custom(
        1, lambda x: np.log(np.cosh(np.asarray(x)[..., 0])),
        gradient=lambda x: np.tanh(np.asarray(x)),
        hessian_at_origin=[[1.0]])
    r_x = [np.array([t]) for t in np.arange(0.1, 0.95, 0.1)]
    v, c = _certify_domination(et.RademacherScaled(1.0, 1), lc, r_x,
                               200_000, reps, seed=52)
    ok &= (v == 0 and c > 0)
    # weibull p=4 x fitted quadratic
    w = et.SymmetricWeibull(4.0, 1.0, 2)
    wfit = et.sample(w, 200_000, seed=53)
    phi_w = et.make_quadratic(et.empirical_variance(wfit))
    w_x = [t * np.ones(2) for t in np.arange(0.5, 2.01, 0.25)]
    v, c = _certify_domination(w, phi_w, w_x, 200_000, reps, seed=53)
    ok &= (v == 0 and c > 0)
    report(5, "Chernov domination x3 families", ok)


def test_c06_min_coordinate_bound():
    phi = et.make_quadratic(np.eye(2))
    ok = True
    for y in (1.0, 2.0, 3.0):
        tb = et.min_coordinate_bound(phi, 1.0, y)
        oracle = (2.0 * norm_dist.sf(y)) ** 2
        ok &= oracle <= tb.bound + 1e-12
    report(6, "min-coordinate octant bound", ok)


def test_c07_pythagoras_sum_rule():
    phi = et.make_quadratic(np.eye(2))
    cert = et.check_lambda2(phi, 5000, seed=7)
    sigma = et.sum_norm_pythagoras(et.SumSpec((3.0, 4.0), 2), phi, cert)
    exact_ok = sigma == pytest.approx(5.0 / math.sqrt(2.0), rel=1e-12)
    plan = ray_probe_plan(2, 16, n_radii=10)
    meas_ok = True
    for n in (2, 8, 32):
        s = et.sample_sum(et.Gaussian(np.eye(2)), n, 100_000, seed=700 + n)
        est = et.bphi_norm(et.natural_function(s), phi, plan=plan)
        meas_ok &= abs(est.value - 1.0) <= 0.03
    report(7, "Pythagoras sum rule", exact_ok and meas_ok)


def test_c08_phi_n_mgf_domination():
    n, reps = 16, 100_000
    s = et.sample_sum(et.RademacherScaled(1.0, 1), n, reps, seed=8)
    phi = et.make_logcosh(1)
    violations = 0
    for lam in np.linspace(-2.0, 2.0, 20):
        t = lam * s.data[:, 0]
        emp = log_mean_exp(t)
        se = log_mean_exp_se(t)
        bound = float(et.phi_n(phi, n, np.array([lam])))
        if emp > bound + 3.0 * se:
            violations += 1
    report(8, "phi_n MGF domination (rademacher n=16)", violations == 0)


def test_c09_sum_bound_exponent_law():
    def slope_for(p, scale):
        dist = et.SymmetricWeibull(p, scale, 1)
        mgf = dist.mgf_log(lam_max=64.0)
        phi = et.make_custom(1, lambda x: mgf(np.atleast_2d(x)),
                             hessian_at_origin=[[dist.coordinate_variance()]])
        fb = et.phi_bar_function(phi, n_max=64)
        ev = et.ConjugateEvaluator(fb)
        xs = np.geomspace(2.0, 6.0, 9)
        exps = np.array([et.chernov_bound(fb, 1.0, [x], evaluator=ev).exponent
                         for x in xs])
        return float(np.polyfit(np.log(xs), np.log(exps), 1)[0])

    s15 = slope_for(1.5, 0.2)   # light scale puts [2,6] in the tail regime
    s40 = slope_for(4.0, 1.0)
    ok = abs(s15 - 1.5) <= 0.15 and abs(s40 - 2.0) <= 0.15
    print(f"    slopes: p=1.5 -> {s15:.3f}, p=4 -> {s40:.3f}")
    report(9, "sum-bound decay exponent min(p,2)", ok)


def test_c10_lower_upper_sandwich():
    reps = 50_000
    n_set = (1, 2, 4, 8, 16, 32)
    ok = True
    for dist, phi_of in (
        (et.Gaussian(np.eye(2)), lambda s: et.make_quadratic(np.eye(2))),
        (et.SymmetricWeibull(4.0, 1.0, 2),
         lambda s: et.make_quadratic(et.empirical_variance(s))),
    ):
        seed = 900
        fit = et.sample(dist, reps, seed)
        phi = phi_of(fit)
        est = et.bphi_norm(et.natural_function(fit), phi,
                           plan=ray_probe_plan(2, 16, n_radii=12))
        cert = et.check_lambda2(phi, 3000, seed=seed)
        for t in (0.8, 1.2, 1.6):
            x = t * np.ones(2)
            lb = et.lower_bound(dist, x, n_probe=16, reps=reps, seed=seed,
                                component_sample=fit)
            mids = []
            for n in n_set:
                if n == 1:
                    s_n = fit
                elif n == 16:
                    s_n = et.sample_sum(dist, 16, reps, seed + 2)
                else:
                    s_n = et.sample_sum(dist, n, reps, seed + 10 + n)
                mids.append(et.tail_function(s_n, x))
            mid = max(m.probability for m in mids)
            mid_w = max(m.half_width for m in mids)
            ub = et.uniform_sum_bound(est.value, phi, x, n_set, cert)
            ok &= lb.value <= mid + 3.0 * (lb.half_width + mid_w)
            ok &= mid - 3.0 * mid_w <= ub.bound_with_slack
    report(10, "lower <= empirical sup_n <= upper sandwich", ok)


def test_c11_lambda2_checker():
    ok = True
    quad = et.make_quadratic(np.array([[1.0, 0.2], [0.2, 1.5]]))
    rad = et.make_radial(lambda z: np.asarray(z) ** 2, np.eye(2))
    for seed in range(5):
        ok &= et.check_lambda2(quad, 10_000, seed=seed).holds
        ok &= et.check_lambda2(rad, 10_000, seed=seed).holds
    absf = et.make_custom(1, lambda x: np.abs(np.asarray(x)[..., 0]))
    res = et.check_lambda2(absf, 10_000, seed=0)
    ok &= not res.holds
    if res.witness is not None:
        lam = abs(float(res.witness["lam"][0]))
        ok &= res.witness["a"] * lam + res.witness["b"] * lam > \
            math.hypot(res.witness["a"], res.witness["b"]) * lam
    else:
        ok = False
    report(11, "Lambda_2 checker verdicts", ok)


def test_c12_moment_norm_direction_and_luxemburg():
    s = et.sample(et.Gaussian(np.eye(2)), 100_000, seed=12)
    phi = et.make_quadratic(np.eye(2))
    b_est = et.bphi_norm(et.natural_function(s), phi,
                         plan=ray_probe_plan(2, 16, n_radii=10))
    g_est = et.gls_norm_vector(lambda r: et.vector_moment(s, r), phi)
    direction_ok = g_est.value <= 1.1 * b_est.value

    sr = et.sample(et.RademacherScaled(1.0, 1), 64, seed=13)
    N = et.OrliczFunction(et.make_quadratic([[1.0]]))
    lux = et.luxemburg_norm(sr, N, rel_tol=1e-6)
    closed = 1.0 / math.sqrt(2.0 * math.log(2.0))
    lux_ok = abs(lux.value - closed) <= 1e-4
    report(12, "moment-norm direction + Luxemburg closed form",
           direction_ok and lux_ok)


def test_c13_characterization_verdicts():
    box2 = [(0.0, 1.0), (0.0, 1.0)]
    e_pp = lambda x: np.exp(np.atleast_2d(x) @ np.array([1.0, 1.0]))
    e_pm = lambda x: np.exp(np.atleast_2d(x) @ np.array([1.0, -1.0]))
    one = lambda x: np.ones(np.atleast_2d(x).shape[0])
    ok = check_absolutely_monotonic(e_pp, box2, k_max=3).status == CONSISTENT
    v = check_absolutely_monotonic(e_pm, box2, k_max=3)
    ok &= v.status == VIOLATED and v.witness["k"].tolist() == [0, 1]
    ok &= check_absolutely_monotonic(one, box2, k_max=3).status == CONSISTENT
    ok &= check_octant_monotonic(e_pm, [1, -1], box2,
                                 k_max=3).status == CONSISTENT
    ok &= check_octant_monotonic(e_pp, [1, 1], box2,
                                 k_max=3).status == CONSISTENT
    v2 = check_octant_monotonic(e_pp, [-1, -1], box2, k_max=3)
    ok &= v2.status == VIOLATED and v2.witness["k"].tolist() == [1, 0]

    box1 = [(-1.0, 1.0)]
    cosh_t = lambda x: np.cosh(np.atleast_2d(x)[:, 0])
    parts = [(np.array([1.0]), lambda x: 0.5 * np.exp(np.atleast_2d(x)[:, 0])),
             (np.array([-1.0]), lambda x: 0.5 * np.exp(-np.atleast_2d(x)[:, 0]))]
    ok &= decomposition_check(parts, cosh_t, box1,
                              k_max=3).status == CONSISTENT
    ok &= decomposition_check(parts[:1], cosh_t, box1,
                              k_max=3).status == VIOLATED

    rng = np.random.default_rng(13)
    draws = rng.standard_normal(400_000)
    pos, neg = draws[draws >= 0], draws[draws < 0]

    def half(side):
        return lambda x: np.exp(
            np.atleast_2d(x)[:, 0][:, None] * side[None, :]).sum(axis=1) / draws.size

    mc_parts = [(np.array([1.0]), half(pos)), (np.array([-1.0]), half(neg))]
    target = lambda x: np.exp(0.5 * np.atleast_2d(x)[:, 0] ** 2)
    ok &= decomposition_check(mc_parts, target, box1, k_max=3,
                              sum_tol=0.02).status == CONSISTENT
    report(13, "characterization verdicts", ok)


def test_c14_verify_suite_determinism(tmp_path):
    cases = []
    for dist in ("gaussian{Q=[[1,0],[0,1]]}", "weibull{p=4,scale=1,d=2}"):
        for phi in ("quadratic{B=[[1,0],[0,1]]}", "power{p=4,c=1,d=2}"):
            cases.append({"name": f"{dist.split('{')[0]}_{phi.split('{')[0]}",
                          "kind": "tail", "dist": dist, "phi": phi,
                          "x": {"start": 0.5, "stop": 1.5, "step": 0.5,
                                "direction": [1, 1]},
                          "n": 10_000, "reps": 10_000})
    for phi in ("quadratic{B=[[1]]}", "power{p=4,c=1,d=1}"):
        cases.append({"name": f"rademacher_{phi.split('{')[0]}",
                      "kind": "tail", "dist": "rademacher{scale=1,d=1}",
                      "phi": phi,
                      "x": {"start": 0.2, "stop": 0.8, "step": 0.2,
                            "direction": [1]},
                      "n": 10_000, "reps": 10_000})
    payload = {"experiment": "verify-suite", "seed": 14, "cases": cases}

    out1, out2 = tmp_path / "v1.csv", tmp_path / "v2.csv"
    _, s1 = run(ExperimentConfig.from_dict({**payload, "out": str(out1)}))
    _, s2 = run(ExperimentConfig.from_dict({**payload, "out": str(out2)}))
    deterministic = out1.read_bytes() == out2.read_bytes()

    neg = {"experiment": "verify-suite", "seed": 14,
           "cases": [dict(cases[0], bound_scale=1e-3)]}
    _, s_neg = run(ExperimentConfig.from_dict(neg))
    report(14, "verify-suite determinism + exit codes",
           s1 == 0 and s2 == 0 and deterministic and s_neg == 1)
