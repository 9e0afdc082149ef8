"""Acceptance gate: the eight criteria at their stated sizes and tolerances.

Each test records one PASS/FAIL line that the terminal summary prints.
Reports land in acceptance_reports/ under the pytest temporary directory.
Deselect with -m "not acceptance" for a quick run.
"""

import pytest

from conftest import ACCEPTANCE
from levelline.harness import run_suite

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def report_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance_reports")


def record(k, ok, line):
    ACCEPTANCE[k] = (bool(ok), line)


def test_1_slit_map_oracle(report_dir):
    rep = run_suite("loewner-oracle", out=report_dir)
    s = rep.stats
    record(
        1,
        rep.passed,
        f"curve sup error {s['curve_sup_error']:.1e}, g_t(i) error {s['g_error']:.1e}, "
        f"swallow error {s['swallow_error']:.1e}, ODE vs direct {s['radius_ode_gap']:.1e} (limit {10 * s['dt']:.0e}), "
        f"{rep.elapsed:.2f} s (limit 1 s)",
    )
    assert s["curve_sup_error"] <= 1e-3
    assert s["g_error"] <= 1e-6 and s["swallow_error"] <= 1e-6
    assert s["radius_ode_gap"] <= 10 * s["dt"]
    assert rep.elapsed < 1.0
    assert rep.passed


def test_2_driving_quadratic_variation(report_dir):
    rep = run_suite("qv", out=report_dir, paths=100, dt=1e-4, T=1.0)
    q = rep.stats["mean_qv_rate"]
    record(2, 3.8 <= q <= 4.2, f"mean realized QV {q:.4f} over {rep.stats['paths']} paths, band [3.8, 4.2]")
    assert 3.8 <= q <= 4.2


def test_3_coupling_bm_test(report_dir):
    rep = run_suite("bm", out=report_dir, paths=200)
    parts = []
    for name in ("chordal", "right_atom"):
        r = rep.stats[name]
        parts.append(
            f"{name}: KS p {r['ks_p']:.3f}, variance ratio {r['variance_ratio']:.3f}, "
            f"lag-1 {r['lag1']:+.3f}, QV error {r['qv_rel_error']:.3f}"
        )
    record(3, rep.passed, "; ".join(parts))
    for name in ("chordal", "right_atom"):
        r = rep.stats[name]
        assert r["ks_p"] >= 0.01
        assert 0.9 <= r["variance_ratio"] <= 1.1
        assert abs(r["lag1"]) <= 0.1
        assert r["qv_rel_error"] <= 0.15


def test_4_no_threshold_bessel_bound(report_dir):
    rep = run_suite("bessel", out=report_dir, paths=1000)
    parts = [f"{k}: {v['events']} events, Zmin {v['zmin']:.1e}" for k, v in rep.stats.items() if isinstance(v, dict)]
    record(4, rep.passed, f"{rep.stats['comparison']['paths']} seeds each; " + "; ".join(parts))
    for v in rep.stats.values():
        if isinstance(v, dict):
            assert v["events"] == 0 and v["zmin"] > 0


@pytest.mark.xfail(
    strict=True,
    reason="resolved estimate of P(hit B(1, 0.05)) sits near 0.6 and rises with resolution; see the decision ledger",
)
def test_5_crossing_surrogate(report_dir):
    rep = run_suite("crossing", out=report_dir, paths=500)
    est = {e["nu"]: e for e in rep.stats["estimates"]}
    e = est[0.05]
    grid = ", ".join(f"{nu:g}: {est[nu]['p']:.3f}" for nu in sorted(est, reverse=True))
    record(
        5,
        rep.passed,
        f"P(hit B(1, 0.05)) = {e['p']:.3f}, 95% CI [{e['ci'][0]:.3f}, {e['ci'][1]:.3f}] (target: CI below 0.5); "
        f"by nu {grid}; monotone {rep.flags['monotone_in_nu']}",
    )
    assert rep.flags["monotone_in_nu"]
    assert e["ci"][1] < 0.5


def test_6_dgff_oracle(report_dir):
    rep = run_suite("dgff", out=report_dir, samples=5000, size=32, mono_samples=200, mono_size=64)
    c = rep.stats["covariance"]
    m = rep.stats["markov"]
    mono = rep.stats["mono"]
    record(
        6,
        rep.passed,
        f"covariance: probe max z {c['max_z_probe']:.2f} (limit 4), all-entry max z {c['max_z']:.2f} "
        f"(Bonferroni limit {c['bonferroni']:.2f}; {c['exceed']} entries beyond 4 SE, {c['expected_exceed']:.1f} expected); "
        f"Markov {'pass' if m['passed'] else 'fail'}; ordering frequency {mono['ordering_frequency']:.3f}",
    )
    assert rep.flags["covariance"]
    assert rep.flags["markov"]
    assert mono["ordering_frequency"] >= 0.95


def test_7_approximation_convergence(report_dir):
    rep = run_suite("approx", out=report_dir, paths=200)
    s = rep.stats
    record(
        7,
        rep.passed,
        "sup error " + ", ".join(f"{v:.4f}" for v in s["sup_error"])
        + "; KS " + ", ".join(f"{v:.3f}" for v in s["ks"])
        + "; mean d_* " + ", ".join(f"{v:.4f}" for v in s["dstar_mean"]),
    )
    assert rep.passed


def test_8_reversibility(report_dir):
    rep = run_suite("reversal", out=report_dir, paths=300)
    ch = rep.stats["chordal"]["ks"]
    ct = rep.stats["atom"]["control_ks"]
    record(
        8,
        rep.passed,
        "chordal p " + ", ".join(f"{v['p']:.3f}" for v in ch.values())
        + "; sign-flipped control p " + ", ".join(f"{v['p']:.1e}" for v in ct.values()),
    )
    assert rep.flags["chordal_reversal"]
    assert rep.flags["control_rejected"]
