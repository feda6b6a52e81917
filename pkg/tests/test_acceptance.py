"""End-to-end acceptance criteria.

Each test prints one PASS/FAIL line.  The two literal forms that do not
hold numerically are kept as strict xfails next to the forms that do.
"""
import json
import time

import numpy as np
import pytest

from qgeo.cli import main
from qgeo.suites import DEFAULT_TOLERANCES, Checks, uncertainty_suite

SEED = 0
TRIALS = 1000


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance")
    out = []
    for i in range(2):
        path = d / f"all_{i}.json"
        code = main(["verify", "--suite", "all", "--trials", str(TRIALS), "--seed", str(SEED),
                     "--out", str(path)])
        out.append((code, path.read_bytes()))
    return out


@pytest.fixture(scope="module")
def report(runs):
    return json.loads(runs[0][1])


@pytest.fixture
def emit(capsys):
    def _emit(number, ok, text):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {text}")
    return _emit


def worst(report, key, tol):
    recs = [r for r in report["records"] if r["name"] == key or r["name"].startswith(key + "[")]
    assert recs, f"no records for {key}"
    res = max(float(r["residual"]) for r in recs)
    return res, res <= tol, recs


def evaluate(report, limits):
    rows, ok = [], True
    for key, tol in limits:
        res, good, _ = worst(report, key, tol)
        rows.append(f"{key}={res:.2e}/{tol:.0e}")
        ok &= good
    return ok, ", ".join(rows)


def test_kahler_triple(report, emit):
    ok, text = evaluate(report, [("metric_J_compat", 1e-12), ("symplectic_J_compat", 1e-12),
                                 ("complex_structure", 1e-12), ("potential_hessian", 1e-6),
                                 ("potential_pairing", 1e-6), ("geodesic_chart_independence", 1e-10)])
    _, _, recs = worst(report, "metric_J_compat", 1.0)
    dims = sorted(r["name"] for r in recs)
    ok &= dims == [f"metric_J_compat[N={n}]" for n in (2, 3, 4, 8)]
    ok &= all(r["trials"] == TRIALS for r in recs)
    t = report["timing"]["kahler"]
    ok &= t < 10
    emit(1, ok, f"{text}, runtime {t:.1f}s")
    assert ok


def test_bracket_identities(report, emit):
    limits = [(k, 1e-9) for k in ("poisson_vs_commutator", "riemann_vs_anticommutator",
                                  "kahler_vs_covariance", "circ_vs_jordan", "star_vs_product",
                                  "circ_symmetrized_star", "poisson_from_star")]
    ok, text = evaluate(report, limits + [("jacobi", 1e-8), ("riemann_self_dispersion", 1e-10)])
    t = report["timing"]["brackets"]
    ok &= t < 10
    emit(2, ok, f"{text}, runtime {t:.1f}s (with uncertainty)")
    assert ok


def test_uncertainty(report, emit):
    c = Checks(dict(DEFAULT_TOLERANCES))
    t0 = time.perf_counter()
    uncertainty_suite(c, 4, TRIALS, SEED)
    t = time.perf_counter() - t0
    slack = c.records["uncertainty_slack[N=4]"]
    eq = c.records["uncertainty_equality[N=4]"]
    ok = slack.residual <= 1e-10 and eq.residual <= 1e-9 and t < 5 and slack.trials == TRIALS
    emit(3, ok, f"slack violation {slack.residual:.2e}/1e-10, equality {eq.residual:.2e}/1e-9, "
                f"runtime {t:.2f}s")
    assert ok


def test_fisher_fs_decomposition(report, emit):
    ok, text = evaluate(report, [("fs_quadratic_order", DEFAULT_TOLERANCES["fs_quadratic_order"]),
                                 ("phase_variance_nonnegative", 0.0)])
    env = report["measurements"]["fs_quadratic.worst_relative_error"]
    ratios = np.array(env[:-1]) / np.array(env[1:])
    ok &= bool(np.all(ratios > 5))
    emit(4, ok, f"{text}, worst errors {['%.1e' % e for e in env]}")
    assert ok


def test_exact_uncertainty(report, emit):
    ok, text = evaluate(report, [("exact_uncertainty_product", 1e-6),
                                 ("exact_uncertainty_mean", 1e-8)])
    emit(5, ok, text)
    assert ok


def test_madelung_equivalence(report, emit):
    ok, text = evaluate(report, [("madelung_order", 0.0), ("madelung_final_gap", 1e-5)])
    t = report["timing"]["madelung"]
    ok &= t < 60
    emit(6, ok, f"{text}, runtime {t:.1f}s")
    assert ok


def test_entropy_production(report, emit):
    ok, text = evaluate(report, [("entropy_rate", 1e-2), ("entropy_monotone", 0.0)])
    emit(7, ok, text)
    assert ok


def test_fisher_q_identity(report, emit):
    ok, text = evaluate(report, [("fisher_q_identity", 1e-6), ("fisher_q_gaussian_value", 1e-6)])
    emit(8, ok, f"{text} (positive sign: int rho Q = +hbar^2/8m I)")
    assert ok


@pytest.mark.xfail(strict=True, reason="int rho Q is +(hbar^2/8m) I; the negative form is off by 2x")
def test_fisher_q_identity_negative_form(report, emit):
    gaps = {k: v for k, v in report["measurements"].items() if k.endswith("relative_gap_negative_form")}
    g3 = [r for r in report["records"] if r["name"] == "fisher_q_gaussian_value[gaussian,3d]"][0]
    literal = -3 / 8
    gap = abs(float(g3["lhs"]) - literal) / abs(literal)
    ok = max(gaps.values()) < 1e-6 and gap < 1e-6
    emit(8, ok, f"negative form: identity gap {max(gaps.values()):.3f}, "
                f"3-D Gaussian value {float(g3['lhs']):.6f} vs {literal} (gap {gap:.3f})")
    assert ok


def test_weyl_decomposition(report, emit):
    res, ok1, _ = worst(report, "weyl_decomposition[flat,density gauge]", 1e-5)
    ok, text = evaluate(report, [("zero_gauge_reduction", 1e-12), ("sphere_scalar", 1e-5)])
    ok &= ok1
    emit(9, ok, f"flat density gauge={res:.2e}/1e-05, {text}")
    assert ok


def test_q_curvature(report, emit):
    ok, text = evaluate(report, [("q_curvature", 1e-6), ("q_curvature_order", 0.5)])
    gaps = report["measurements"]["q_curvature.convergence_gaps"]
    emit(10, ok, f"{text}, refinement gaps {['%.2e' % g for g in gaps]}")
    assert ok


def test_fisher_curvature_fitted(report, emit):
    ok, text = evaluate(report, [("fisher_curvature_constant", 1e-5)])
    m = report["measurements"]
    printed = m["fisher_curvature.gaussian.printed_constant"]
    fitted = m["fisher_curvature.gaussian.fitted_constant"]
    emit(11, ok, f"{text} (against -8 gamma); fitted {fitted:.6f}, printed hbar^4/96m^2 "
                 f"= {printed:.6f}, printed/fitted = {m['fisher_curvature.gaussian.printed_over_fitted']:.6f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the fitted constant is -8 gamma, not +8 gamma")
def test_fisher_curvature_implied_constant(report, emit):
    m = report["measurements"]
    gaps = [m[f"fisher_curvature.{c}.relative_gap_implied"] for c in ("gaussian", "mixture")]
    ok = max(gaps) < 1e-5
    emit(11, ok, f"implied +8 gamma = {m['fisher_curvature.gaussian.implied_constant']:.6f}, "
                 f"relative gap {max(gaps):.3f}/1e-05")
    assert ok


def test_determinism(runs, emit):
    (c0, b0), (c1, b1) = runs
    a, b = json.loads(b0), json.loads(b1)
    keys = ("suite", "seed", "trials", "dim", "records", "measurements", "skipped", "pass")
    s0 = json.dumps({k: a[k] for k in keys}, sort_keys=True).encode()
    s1 = json.dumps({k: b[k] for k in keys}, sort_keys=True).encode()
    ok = s0 == s1 and c0 == c1 == 0 and a["pass"]
    emit(12, ok, f"numeric sections identical ({len(s0)} bytes), exit codes {c0}/{c1}")
    assert ok
