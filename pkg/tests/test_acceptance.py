"""Acceptance gate: eleven end-to-end criteria, one pass/fail line each.

Every criterion prints exactly one line

    criterion N: PASS|FAIL - <what was checked>

before asserting, so a scan of the captured output gives the full verdict
table even when a criterion fails. Runtime budgets are part of each check.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from helpers import (conformal_ricci_law_err, conformal_scalar_law_err,
                     gc_deformed_residual, mms_flat_cross, mms_sphere)
from pscbench.config import parse_config
from pscbench.forcing import ForcingSpec, build_bump, calibrate_epsilon
from pscbench.grids import (SPHERE, TORUS, DomainSpec, build_domain, c1_norm,
                            lp_norm, w_domains)
from pscbench.metrics import as_fd, make_metric, product_extend, restrict_metric
from pscbench.curvature import scalar_curvature
from pscbench.normal import angle_field, minors_direct, normal_frame, unit_normal
from pscbench.conformal import laplacian_comparison, slice_laplacian_identity
from pscbench.pipeline import run_scenario
from pscbench.solver import assemble, dtt_monitor, solve_dirichlet


def verdict_line(n, ok, desc, elapsed):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {desc} "
          f"({elapsed:.2f}s)")
    return ok


def torus_y(res=8):
    return w_domains(DomainSpec(TORUS, 2, (res, res), 5))["y"]


def test_criterion_01_ellipticity_cutoff_and_minors():
    t0 = time.perf_counter()
    cutoff_ok = True
    for c in (0.0, 0.5, 0.99, 1.0, 1.5):
        fr = normal_frame(make_metric("twisted_flat", torus_y(), c=c))
        cutoff_ok &= (fr.is_elliptic == (c < 1.0))
    rng = np.random.default_rng(2024)
    b = rng.uniform(-1.0, 1.0, size=(1000, 3))
    b[::7, 0] = 0.0
    b[::11, 1] = 0.0
    b[::13, 2] = 0.0
    b[0] = 0.0
    closed = 1.0 - np.cumsum(b * b, axis=-1)
    gap = float(np.max(np.abs(closed - minors_direct(b))))
    elapsed = time.perf_counter() - t0
    ok = cutoff_ok and gap < 1e-12 and elapsed < 1.0
    verdict_line(1, ok, "ellipticity cuts off at c = 1; minor determinants "
                        "match direct evaluation to 1e-12 on 1000 vectors",
                 elapsed)
    assert cutoff_ok
    assert gap < 1e-12
    assert elapsed < 1.0


def test_criterion_02_angle_value_and_halfspace_equivalence():
    t0 = time.perf_counter()
    angle_ok = True
    equiv_ok = True
    for c in (0.0, 0.5, 0.99, 1.0, 1.5):
        y = torus_y()
        h = make_metric("twisted_flat", y, c=c)
        mu = unit_normal(h)
        angle = angle_field(h, mu)
        angle_ok &= float(np.max(np.abs(angle - math.atan(c)))) < 1e-10
        itheta = y.index("theta")
        h_tt = h.comp[..., itheta, itheta]
        h_mu_t = np.einsum("...ij,...i->...j", h.comp, mu)[..., itheta]
        ratio = h_tt / h_mu_t ** 2
        equiv_ok &= np.array_equal(angle < math.pi / 4.0, ratio < 2.0)
    elapsed = time.perf_counter() - t0
    ok = angle_ok and equiv_ok and elapsed < 1.0
    verdict_line(2, ok, "angle equals arctan(c) to 1e-10 and matches the "
                        "h_tt/h(mu,dtheta)^2 < 2 halfspace test nodewise",
                 elapsed)
    assert angle_ok
    assert equiv_ok
    assert elapsed < 1.0


def test_criterion_03_sphere_scalar_curvature_oracle():
    t0 = time.perf_counter()
    r = 1.0
    errs = {}
    for n in (32, 64):
        y = w_domains(DomainSpec(SPHERE, 2, (n,), 5))["y"]
        g = as_fd(make_metric("sphere_product", y, r=r))
        rel = np.abs(scalar_curvature(g) - 2.0 / r ** 2) * r ** 2 / 2.0
        errs[n] = float(np.max(rel))
    order = math.log2(errs[32] / errs[64])
    elapsed = time.perf_counter() - t0
    ok = errs[64] < 0.02 and order >= 1.9 and elapsed < 5.0
    verdict_line(3, ok, f"round-sphere scalar curvature within 2% at 64 "
                        f"colatitudes (rel {errs[64]:.3g}), order "
                        f"{order:.3f}", elapsed)
    assert errs[64] < 0.02
    assert order >= 1.9
    assert elapsed < 5.0


def test_criterion_04_gauss_codazzi_residual_convergence():
    t0 = time.perf_counter()
    orders = {}
    for name, params in (("product_flat", {}), ("twisted_flat", {"c": 0.5})):
        e16 = gc_deformed_residual(16, name, **params)
        e32 = gc_deformed_residual(32, name, **params)
        orders[name] = math.log2(e16 / e32)
    elapsed = time.perf_counter() - t0
    ok = all(o >= 1.9 for o in orders.values()) and elapsed < 60.0
    verdict_line(4, ok, "assembled slice curvature converges to the direct "
                        "induced curvature at order "
                        + ", ".join(f"{k} {v:.3f}" for k, v in orders.items()),
                 elapsed)
    for name, order in orders.items():
        assert order >= 1.9, name
    assert elapsed < 60.0


def test_criterion_05_conformal_law_cross_check():
    t0 = time.perf_counter()
    s24, s48 = conformal_scalar_law_err(24), conformal_scalar_law_err(48)
    r24, r48 = conformal_ricci_law_err(24), conformal_ricci_law_err(48)
    order_s = math.log2(s24 / s48)
    order_r = math.log2(r24 / r48)
    elapsed = time.perf_counter() - t0
    ok = order_s >= 1.9 and order_r >= 1.9 and elapsed < 60.0
    verdict_line(5, ok, f"conformal scalar law order {order_s:.3f} on the "
                        f"flat 3-torus, normal Ricci law order {order_r:.3f} "
                        f"on the twisted metric, random smooth factor",
                 elapsed)
    assert order_s >= 1.9
    assert order_r >= 1.9
    assert elapsed < 60.0


def test_criterion_06_solver_mms_zero_forcing_max_principle():
    t0 = time.perf_counter()
    e1, _ = mms_flat_cross(16, 17)
    e2, _ = mms_flat_cross(32, 33)
    order = math.log2(e1 / e2)

    dom = build_domain(DomainSpec(TORUS, 2, (32, 32), 33))
    g = make_metric("product_flat", dom)
    asm = assemble(dom, np.zeros(dom.shape + (3,)), 1.0, g)
    rep0 = solve_dirichlet(asm, np.zeros(dom.shape))
    zero_norm = float(np.max(np.abs(rep0.u)))

    eps = calibrate_epsilon(9.0, 1, 160.0, g)
    F = build_bump(ForcingSpec(9.0, 1, 160.0, eps), dom)
    rep = solve_dirichlet(asm, F)
    u_min = float(rep.u.min())

    elapsed = time.perf_counter() - t0
    ok = (order >= 1.9 and zero_norm < 1e-12 and u_min >= -1e-12
          and elapsed < 120.0)
    verdict_line(6, ok, f"manufactured solution order {order:.3f}; zero "
                        f"forcing gives |u| = {zero_norm:.2g}; bump forcing "
                        f"keeps min u = {u_min:.2g} above -1e-12", elapsed)
    assert order >= 1.9
    assert zero_norm < 1e-12
    assert u_min >= -1e-12
    assert elapsed < 120.0


def test_criterion_07_forcing_norm_controls_solution_norm():
    t0 = time.perf_counter()
    dom = build_domain(DomainSpec(TORUS, 2, (8, 8), 129))
    g = make_metric("product_flat", dom)
    asm = assemble(dom, np.zeros(dom.shape + (3,)), 1.0, g)
    base = 1.05 * lp_norm(build_bump(ForcingSpec(2.2, 1, 1.0, 0.25), dom),
                          g, 1)
    c1_values = []
    for k in range(3):
        delta = base / 2.0 ** k
        eps = calibrate_epsilon(2.2, 1, delta, g)
        F = build_bump(ForcingSpec(2.2, 1, delta, eps), dom)
        c1_values.append(c1_norm(solve_dirichlet(asm, F).u, dom))
    ratios = [c1_values[1] / c1_values[0], c1_values[2] / c1_values[1]]
    elapsed = time.perf_counter() - t0
    in_band = all(0.5 / 1.2 <= r <= 0.5 * 1.2 for r in ratios)
    ok = in_band and elapsed < 180.0
    verdict_line(7, ok, "halving the forcing threshold halves the solution "
                        "C1 norm within factor 1.2 (ratios "
                        + ", ".join(f"{r:.4f}" for r in ratios) + ")",
                 elapsed)
    assert in_band, ratios
    assert elapsed < 180.0


def test_criterion_08_profile_curvature_control():
    t0 = time.perf_counter()
    doms = w_domains(DomainSpec(SPHERE, 2, (32,), 193))
    y, w = doms["y"], doms["w"]
    h = make_metric("sphere_product", y, r=1.0)
    g_w = restrict_metric(product_extend(h, doms["m"]), w)
    asm = assemble(w, np.zeros(w.shape + (3,)), scalar_curvature(g_w), g_w)
    dtts, deltas = [], []
    for eps in (0.4, 0.2, 0.1):
        F = build_bump(ForcingSpec(2.2, 1, 1.0, eps), w)
        # the threshold a calibration pass would need for this width
        deltas.append(1.02 * lp_norm(F, g_w, 1))
        rep = solve_dirichlet(asm, F)
        dtts.append(dtt_monitor(rep.u, w, eps))
    decreasing = dtts[0] > dtts[1] > dtts[2]
    elapsed = time.perf_counter() - t0
    ok = decreasing and dtts[-1] < 0.25 and elapsed < 300.0
    verdict_line(8, ok, "profile second derivative shrinks as the bump "
                        "narrows and ends below 0.25 (measured "
                        + ", ".join(f"{d:.6f}" for d in dtts)
                        + " at thresholds "
                        + ", ".join(f"{d:.3f}" for d in deltas) + ")",
                 elapsed)
    assert decreasing, dtts
    assert dtts[-1] < 0.25, dtts
    assert elapsed < 300.0


def test_criterion_09_laplacian_identities_and_mismatch_trend(tmp_path):
    t0 = time.perf_counter()
    # exact vanishing of the section/slice Laplacian mismatch for products
    b1_sup = {}
    for name, spec in (("product_flat", DomainSpec(TORUS, 2, (12, 12), 9)),
                       ("sphere_product", DomainSpec(SPHERE, 2, (32,), 9))):
        doms = w_domains(spec)
        h = make_metric(name, doms["y"])
        g_m = product_extend(h, doms["m"])
        wdom = doms["w"]
        xc = wdom.mesh(wdom.names[0])
        u = np.cos(xc) * (1.0 - np.asarray(wdom.mesh("t")) ** 2)
        b1, _ = laplacian_comparison(u, g_m)
        b1_sup[name] = float(np.max(np.abs(b1)))
    products_ok = all(v < 1e-12 for v in b1_sup.values())

    # slice identity residual stays under an O(h^2) envelope
    slice_ok = True
    for res in (12, 24):
        doms = w_domains(DomainSpec(TORUS, 2, (res, res), 9))
        g_m = product_extend(make_metric("twisted_flat", doms["y"], c=0.5),
                             doms["m"])
        m = doms["m"]
        u = np.cos(m.mesh("x")) * np.cos(np.pi * np.asarray(m.mesh("t")) / 2)
        resid = slice_laplacian_identity(u, g_m)
        slice_ok &= resid < (2.0 * math.pi / res) ** 2

    # narrower forcing shrinks the measured Laplacian mismatch bound
    k1_values = []
    for delta in (40.0, 20.0):
        cfg_path = tmp_path / f"twist_{int(delta)}.cfg"
        cfg_path.write_text(
            "[domain]\nbackend = sphere-axisym\nresolution = 32\n"
            "t_nodes = 97\n\n[metric]\nname = sphere_twist\nr = 1.0\n"
            f"beta0 = 0.5\n\n[forcing]\np = 1\ndelta = {delta}\n")
        k1_values.append(run_scenario(parse_config(str(cfg_path)),
                                      stage="solve").k1)
    trend_ok = k1_values[1] < k1_values[0]

    elapsed = time.perf_counter() - t0
    ok = products_ok and slice_ok and trend_ok and elapsed < 60.0
    verdict_line(9, ok, "section Laplacian mismatch vanishes for products, "
                        "slice identity within an O(h^2) envelope, mismatch "
                        f"bound falls {k1_values[0]:.3g} -> "
                        f"{k1_values[1]:.3g} with the threshold", elapsed)
    assert products_ok, b1_sup
    assert slice_ok
    assert trend_ok, k1_values
    assert elapsed < 60.0


def test_criterion_10_end_to_end_positivity_demo(tmp_path):
    t0 = time.perf_counter()
    cfg_path = tmp_path / "sphere_demo.cfg"
    cfg_path.write_text(
        "[domain]\nbackend = sphere-axisym\nresolution = 48\nt_nodes = 49\n\n"
        "[metric]\nname = sphere_product\nr = 1.0\n\n"
        "[forcing]\np = 1\ndelta = 16\n")
    rep = run_scenario(parse_config(str(cfg_path)))
    mms_err, _ = mms_sphere(48, 49)

    completed = rep.stage == "certify" and rep.verdict is not None
    pointwise = bool(np.all(rep.fields["r_bound"]
                            <= rep.fields["r_chain"] + 1e-10))
    chain_gap = float(np.max(np.abs(rep.fields["r_chain"]
                                    - rep.fields["r_exact"])))
    elapsed = time.perf_counter() - t0
    ok = (completed and rep.k2_max < 1.0 and rep.min_r_exact > 0.0
          and rep.min_r_bound > 0.0 and pointwise
          and chain_gap <= 10.0 * mms_err and elapsed < 600.0)
    verdict_line(10, ok, f"product-sphere run certifies positivity: bound "
                         f"{rep.min_r_bound:.4f} > 0, gradient correction "
                         f"{rep.k2_max:.2g} < 1, law-vs-direct gap "
                         f"{chain_gap:.2g} within 10x solver error", elapsed)
    assert completed
    assert rep.k2_max < 1.0
    assert rep.min_r_exact > 0.0
    assert rep.min_r_bound > 0.0
    assert pointwise
    assert chain_gap <= 10.0 * mms_err
    assert rep.verdict is True
    assert elapsed < 600.0


def test_criterion_11_negative_controls(tmp_path):
    t0 = time.perf_counter()
    crit = tmp_path / "critical.cfg"
    crit.write_text("[metric]\nname = twisted_flat\nc = 1.0\n")
    flat = tmp_path / "flat.cfg"
    flat.write_text(
        "[domain]\nresolution = 12\nt_nodes = 49\n\n"
        "[metric]\nname = product_flat\n\n[forcing]\np = 1\ndelta = 160\n")
    env = dict(os.environ)
    env["PSCBENCH_OUTPUT_DIR"] = str(tmp_path / "out")

    res_crit = subprocess.run(
        [sys.executable, "-m", "pscbench", "certify", str(crit)],
        capture_output=True, text=True, env=env)
    res_flat = subprocess.run(
        [sys.executable, "-m", "pscbench", "certify", str(flat)],
        capture_output=True, text=True, env=env)

    crit_ok = res_crit.returncode == 2 and "error[exit 2]" in res_crit.stderr
    flat_ok = (res_flat.returncode == 0
               and "verdict=false" in res_flat.stdout
               and "PSC hypothesis fails" in res_flat.stdout)
    elapsed = time.perf_counter() - t0
    ok = crit_ok and flat_ok and elapsed < 60.0
    verdict_line(11, ok, "critical twist aborts with the hypothesis exit "
                         "code; flat torus completes with verdict false and "
                         "the PSC failure flag", elapsed)
    assert crit_ok, res_crit.stderr
    assert flat_ok, res_flat.stdout
    assert elapsed < 60.0
