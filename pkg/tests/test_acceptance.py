"""Acceptance criteria 1 to 9.

Each test registers its criterion through the ``criterion`` fixture; the
conftest hook prints one PASS/FAIL line per criterion and writes the
recorded numbers to ``acceptance_summary.json``.
"""

import json
import math

import numpy as np
import pytest

from hydrocert import certify, cli, flows, sos
from hydrocert.certify import (
    build_gain_matrix,
    build_stability_matrix,
    check_iss,
    check_stability,
    critical_reynolds,
    iss_reynolds,
    minimize_gains,
)
from hydrocert.sdp import SdpProblem, Status, Verdict, feasibility_margin, solve

from helpers import BOX, random_affine_matrix, random_constant_matrix, random_feasible

PI = math.pi
TITLES = {
    1: "plane Couette certified at every Re",
    2: "Couette weight-ratio law",
    3: "critical Re matches closed form",
    4: "gain blow-up near criticality",
    5: "Couette gain scaling and oracle agreement",
    6: "ISS boundary for plane Couette",
    7: "ISS and stability limits coincide when rotating",
    8: "SOS soundness",
    9: "solver unit suite",
}


@pytest.fixture
def criterion(request):
    def register(cid):
        entry = {"id": cid, "title": TITLES[cid], "details": {}}
        request.node.user_properties.append(("criterion", entry))
        return entry["details"]
    return register


def rc(ro, L, Re):
    return flows.rotating_couette(flows.RotatingCouetteParams(ro, L), Re)


# ------------------------------------------------------------------------ 1

@pytest.mark.parametrize("ro", [0.0, 1.0])
def test_criterion_1_couette_stable(criterion, ro):
    details = criterion(1)
    verdicts = {}
    for Re in (10.0, 1e3, 1e6):
        verdicts[Re] = check_stability(rc(ro, PI, Re)).verdict.value
    details[f"Ro={ro:g}"] = verdicts
    assert all(v == "feasible" for v in verdicts.values())


# ------------------------------------------------------------------------ 2

@pytest.mark.parametrize("Re", [10.0, 100.0, 1000.0])
def test_criterion_2_ratio_law(criterion, Re):
    details = criterion(2)
    flow = rc(0.0, PI, Re)
    r = flows.couette_min_k_ratio(Re, flow.C)
    above = check_stability(flow, k_ratio=r * (1 + 1e-3))
    below = check_stability(flow, k_ratio=r * (1 - 1e-3))
    details[f"Re={Re:g}"] = {"above": above.verdict.value, "below": below.verdict.value,
                             "margin_above": above.margin, "margin_below": below.margin}
    assert above.feasible
    assert below.verdict is Verdict.INFEASIBLE


# ------------------------------------------------------------------------ 3

def test_criterion_3_critical_reynolds(criterion):
    details = criterion(3)
    ros = [round(0.1 * k, 1) for k in range(1, 10)]
    values, errs = {}, {}
    for ro in ros:
        val = critical_reynolds(flows.family("rotating-couette", ro=ro, L=PI))
        exact = flows.analytic_recrit(flows.RotatingCouetteParams(ro, PI))
        values[ro] = val
        errs[ro] = abs(val - exact) / exact
    asym = max(abs(values[ro] - values[round(1 - ro, 1)]) / values[ro] for ro in ros)
    details.update({"max_rel_err": max(errs.values()), "max_asymmetry": asym, "re_c": values})
    assert max(errs.values()) <= 1e-3
    assert asym <= 1e-3


# ------------------------------------------------------------------------ 4

def test_criterion_4_gain_blow_up(criterion):
    details = criterion(4)
    re_c = flows.analytic_recrit(flows.RotatingCouetteParams(0.5, PI))
    fractions = [0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
    objs = [minimize_gains(rc(0.5, PI, f * re_c)).objective for f in fractions]
    ratio = objs[-1] / objs[0]
    details.update({"fractions": fractions, "objectives": objs, "ratio_099_to_05": ratio})
    assert ratio >= 10
    assert all(b > a for a, b in zip(objs, objs[1:]))


# ------------------------------------------------------------------------ 5

def test_criterion_5_gain_scaling(criterion):
    details = criterion(5)
    grid = list(np.geomspace(50, 800, 8))
    certs = [minimize_gains(rc(0.0, PI, Re)) for Re in grid]
    assert all(c.feasible for c in certs)
    rel = []
    for Re, c in zip(grid, certs):
        oracle = flows.couette_gain_oracle(Re, PI)["objective"]
        rel.append(abs(c.objective / oracle - 1))
    lx = np.log(grid)
    slopes = [float(np.polyfit(lx, np.log([c.eta_sq[k] for c in certs]), 1)[0]) for k in range(3)]
    window = 0.5 <= slopes[0] <= 1.5 and all(2.5 <= s <= 3.5 for s in slopes[1:])
    details.update({"slopes": {"eta1_sq": slopes[0], "eta2_sq": slopes[1], "eta3_sq": slopes[2]},
                    "slope_window_met": window, "max_rel_err_vs_oracle": max(rel),
                    "governed_by": "slope window" if window else "oracle agreement"})
    if not window:
        details["note"] = ("slope window missed, oracle agreement governs; slopes "
                           + ", ".join(f"{s:.2f}" for s in slopes))
    # per the criterion, the oracle check governs when the slope window is missed
    assert max(rel) <= 1e-2


# ------------------------------------------------------------------------ 6

def test_criterion_6_iss_boundary(criterion, tmp_path):
    details = criterion(6)
    L, psi = 2 * PI, 1e-4
    C = certify.poincare_constant(certify.channel(L))
    limit = flows.analytic_iss_limit(psi, C)
    fam = flows.family("couette", L=L)
    re_iss = iss_reynolds(fam, psi)
    at_300 = check_iss(fam(300.0), psi).feasible
    past = check_iss(fam(1.1 * limit), psi).verdict
    # the CLI run summary carries the comparison with the published value
    assert cli.main(["iss-recrit", "--flow", "couette", "--L", repr(L), "--psi", "1e-4",
                     "--out", str(tmp_path)]) == 0
    comp = json.loads((tmp_path / "iss-recrit.json").read_text())["summary"]["published_comparison"]
    details["note"] = f"Re_ISS = {re_iss:.1f} vs C/psi = {limit:.1f}; published value 316 not reproduced"
    details.update({"re_iss": re_iss, "oracle_c_over_psi": limit, "rel_err": abs(re_iss / limit - 1),
                    "feasible_at_300": at_300, "verdict_at_1.1x": past.value, "published_comparison": comp})
    assert abs(re_iss / limit - 1) <= 1e-3
    assert at_300
    assert past is Verdict.INFEASIBLE
    assert comp["published_re_iss"] == 316.0


# ------------------------------------------------------------------------ 7

@pytest.mark.parametrize("ro", [0.3, 0.5, 0.7])
def test_criterion_7_iss_matches_stability(criterion, ro):
    details = criterion(7)
    fam = flows.family("rotating-couette", ro=ro, L=2 * PI)
    re_c = critical_reynolds(fam)
    re_iss = iss_reynolds(fam, 1e-4)
    rel = abs(re_iss - re_c) / re_c
    details[f"Ro={ro:g}"] = {"re_c": re_c, "re_iss": re_iss, "rel_diff": rel}
    assert rel <= 1e-2


# ------------------------------------------------------------------------ 8

def _audit_ok(report):
    return report["passed"] and report.get("gram_min_eig", 0.0) >= -1e-8 and report["min_eig"] >= -1e-6


def test_criterion_8_poiseuille_family(criterion):
    details = criterion(8)
    rows = {}
    for Re in (0.1, 1.0, 10.0, 100.0, 1e3, 1e4):
        flow = flows.poiseuille_like(PI, Re)
        cert = check_stability(flow)
        assert cert.feasible
        rep = certify.audit(cert, build_stability_matrix(flow), [cert.k_m, cert.k_I], flow.domain.box())
        rows[Re] = rep
        assert _audit_ok(rep)
    flow = flows.poiseuille_like(PI, 0.5)
    g = minimize_gains(flow)
    assert g.feasible
    rep = certify.audit(g, build_gain_matrix(flow), [g.k_m, g.k_I, *g.eta_sq], flow.domain.box())
    assert _audit_ok(rep)
    details["poiseuille_stability_audits"] = rows
    details["poiseuille_gain_audit"] = rep


def test_criterion_8_random_matrices(criterion):
    details = criterion(8)
    rng = np.random.default_rng(2024)
    feasible = 0
    worst_sample, worst_gram, worst_resid = math.inf, math.inf, 0.0
    for _ in range(50):
        M = random_affine_matrix(rng)
        res = sos.prove(M, BOX, relax_degree=sos.default_degree(M))
        if not res.feasible:
            continue
        feasible += 1
        rep = sos.verify(res.certificates[0], M, res.z)
        sampled = sos.sample_check(M, BOX, n=1000, seed=0, z=res.z)
        worst_sample = min(worst_sample, sampled)
        worst_gram = min(worst_gram, rep.min_gram_eig)
        worst_resid = max(worst_resid, rep.max_residual / rep.residual_tol * sos.RESIDUAL_TOL)
        assert rep.passed
        assert sampled >= -1e-6
    details["random"] = {"instances": 50, "feasible": feasible, "min_sampled_eig": worst_sample,
                         "min_gram_eig": worst_gram, "max_scaled_residual": worst_resid}
    assert feasible >= 10  # the suite must actually exercise certificates


def test_criterion_8_constant_equivalence(criterion):
    details = criterion(8)
    rng = np.random.default_rng(99)
    agree = 0
    verdicts = {}
    for _ in range(100):
        M = random_constant_matrix(rng)
        p, _ = sos.compile(M, BOX)
        F0, F = M.numeric()
        direct = SdpProblem.empty(M.nvars)
        direct.add_block(F0, F)
        a, b = feasibility_margin(p).verdict, feasibility_margin(direct).verdict
        verdicts[a.value] = verdicts.get(a.value, 0) + 1
        agree += a is b
    details["constant_equivalence"] = {"instances": 100, "agree": agree, "verdicts": verdicts}
    assert agree == 100


# ------------------------------------------------------------------------ 9

def test_criterion_9_solver_suite(criterion):
    details = criterion(9)
    p = SdpProblem.empty(1)
    p.c = np.array([1.0])
    p.add_block([[0, 1], [1, 0]], [np.eye(2)])
    t_star = solve(p).objective
    q = SdpProblem.empty(1)
    q.c = np.array([1.0])
    q.add_block(np.diag([-1.0, 5.0]), [np.diag([1.0, -1.0])])
    z_star = solve(q).z[0]
    fixed = SdpProblem.empty(0)
    fixed.add_block(np.diag([2.0, 3.0]), np.zeros((0, 2, 2)))
    bad = SdpProblem.empty(0)
    bad.add_block(np.diag([-1.0, 3.0]), np.zeros((0, 2, 2)))
    m_fixed, m_bad = feasibility_margin(fixed), feasibility_margin(bad)
    lmi, _ = sos.compile(build_stability_matrix(rc(0.5, PI, 1.0)), certify.channel(PI).box())
    lmi.add_equalities([[1.0, 2.0]], [3.0])
    rc_verdict = feasibility_margin(lmi).verdict

    rng = np.random.default_rng(7)
    statuses = [solve(random_feasible(rng)[0]).status for _ in range(200)]
    n_ok = sum(s is Status.FEASIBLE for s in statuses)

    rng = np.random.default_rng(123)
    prob, _ = random_feasible(rng)
    prob.c = rng.standard_normal(prob.nvars)
    same = solve(prob).z.tobytes() == solve(prob).z.tobytes()

    details.update({"t_star": t_star, "z_star": z_star, "margin_diag_2_3": m_fixed.t_star,
                    "margin_diag_-1_3": m_bad.t_star, "rotating_couette_re1": rc_verdict.value,
                    "random_feasible": f"{n_ok}/200", "bitwise_repeatable": same})
    assert abs(t_star - 1) <= 1e-6
    assert abs(z_star - 1) <= 1e-6
    assert abs(m_fixed.t_star - 2) <= 1e-6 and m_fixed.verdict is Verdict.FEASIBLE
    assert abs(m_bad.t_star + 1) <= 1e-6 and m_bad.verdict is Verdict.INFEASIBLE
    assert rc_verdict is Verdict.FEASIBLE
    assert n_ok == 200
    assert same
