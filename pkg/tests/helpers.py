"""Shared manufactured fields and residual constructions used across tests."""

import numpy as np

from pscbench.grids import DomainSpec, build_domain, with_circle, TORUS
from pscbench.metrics import (make_metric, as_fd, conformal_metric,
                              restrict_metric)
from pscbench.curvature import (scalar_curvature, ricci, hypersurface_data,
                                gauss_codazzi_scalar)
from pscbench.normal import unit_normal, normal_frame
from pscbench.conformal import conformal_scalar, conformal_ricci_normal
from pscbench.solver import assemble, solve_dirichlet


def stored_theta_y(res):
    """T^3 with a stored theta axis, for fields that vary along the circle."""
    x = build_domain(DomainSpec(TORUS, 2, (res, res), 5)).without("t")
    return with_circle(x, n=res)


def rng_phi(dom, seed, a1=0.08, a2=0.04):
    """Low-frequency random trig field in every stored coordinate."""
    rng = np.random.default_rng(seed)
    phi = np.zeros(dom.shape)
    for ax in dom.stored_axes:
        c = dom.mesh(ax.name)
        phi = phi + a1 * rng.uniform(0.5, 1.0) * np.cos(c + rng.uniform(0, 2 * np.pi))
        phi = phi + a2 * rng.uniform(0.5, 1.0) * np.sin(2 * c + rng.uniform(0, 2 * np.pi))
    return phi


def phi_and_jets(dom, a=0.1):
    """a cos(x)cos(y)cos(theta) with analytic first and second partials."""
    x, y, th = dom.mesh("x"), dom.mesh("y"), dom.mesh("theta")
    phi = a * np.cos(x) * np.cos(y) * np.cos(th)
    d = dom.dim
    dphi = np.zeros(dom.shape + (d,))
    ix, iy, ith = dom.index("x"), dom.index("y"), dom.index("theta")
    dphi[..., ix] = -a * np.sin(x) * np.cos(y) * np.cos(th)
    dphi[..., iy] = -a * np.cos(x) * np.sin(y) * np.cos(th)
    dphi[..., ith] = -a * np.cos(x) * np.cos(y) * np.sin(th)
    d2 = np.zeros(dom.shape + (d, d))
    d2[..., ix, ix] = -phi
    d2[..., iy, iy] = -phi
    d2[..., ith, ith] = -phi
    d2[..., ix, iy] = d2[..., iy, ix] = a * np.sin(x) * np.sin(y) * np.cos(th)
    d2[..., ix, ith] = d2[..., ith, ix] = a * np.sin(x) * np.cos(y) * np.sin(th)
    d2[..., iy, ith] = d2[..., ith, iy] = a * np.cos(x) * np.sin(y) * np.sin(th)
    return phi, dphi, d2


def gc_deformed_residual(res, name, **params):
    """Worst |assembled Gauss-Codazzi - direct induced R| over two theta slices.

    The undeformed scenario metrics satisfy the contraction to round-off, so
    the refinement study deforms by a conformal factor with analytic jets;
    only the hypersurface/"direct" comparison itself is discretized.
    """
    xdom = build_domain(DomainSpec(TORUS, 2, (res, res), 5)).without("t")
    y = with_circle(xdom, n=res)
    g0 = make_metric(name, y, **params)
    phi, dphi, d2phi = phi_and_jets(y)
    g = conformal_metric(g0, phi, dphi=dphi, d2phi=d2phi)
    mu = unit_normal(g)
    hyp = hypersurface_data(g, ("x", "y"), mu)
    gc = gauss_codazzi_scalar(scalar_curvature(g), hyp.ric_nn,
                              hyp.h_mean, hyp.a_norm2)
    kth = y.array_axis("theta")
    worst = 0.0
    for j in (0, res // 3):
        gx = restrict_metric(g, xdom, at={"theta": j})
        r_direct = scalar_curvature(as_fd(gx))
        worst = max(worst, float(np.max(np.abs(np.take(gc, j, axis=kth)
                                               - r_direct))))
    return worst


def conformal_scalar_law_err(res, seed=7, a1=0.08, a2=0.04):
    """Law output vs direct curvature of the rescaled flat T^3 metric."""
    t3 = stored_theta_y(res)
    g = make_metric("product_flat", t3)
    phi = rng_phi(t3, seed, a1, a2)
    law = conformal_scalar(g, phi)
    direct = scalar_curvature(as_fd(conformal_metric(g, phi)))
    return float(np.max(np.abs(law - direct)))


def conformal_ricci_law_err(res, seed=11, a1=0.08, a2=0.04):
    t3 = stored_theta_y(res)
    g = make_metric("twisted_flat", t3, c=0.5)
    fr = normal_frame(g)
    phi = rng_phi(t3, seed, a1, a2)
    law = conformal_ricci_normal(g, phi, fr.mu)
    ric_t = ricci(as_fd(conformal_metric(g, phi)))
    direct = np.exp(-2.0 * phi) * np.einsum("...ij,...i,...j->...",
                                            ric_t, fr.mu, fr.mu)
    return float(np.max(np.abs(law - direct)))


# --- manufactured Dirichlet solutions -------------------------------------
# u* = cos(pi t / 2) * (slice profile) vanishes at t = +-1; F* = L u* is
# computed from the closed-form action of the operator on u*.

def mms_flat_cross(res, nt, v=(0.3, 0.4), c0=1.0):
    dom = build_domain(DomainSpec(TORUS, 2, (res, res), nt))
    g = make_metric("product_flat", dom)
    xs, ys, ts = dom.mesh("x"), dom.mesh("y"), dom.mesh("t")
    u_true = np.cos(np.pi * ts / 2) * np.cos(xs + ys)
    fac = -4 * (v[0] + v[1]) ** 2 + 8 + np.pi ** 2 + c0
    drift = np.zeros(dom.shape + (3,))
    drift[..., 0] = v[0]
    drift[..., 1] = v[1]
    rep = solve_dirichlet(assemble(dom, drift, c0, g), fac * u_true)
    return float(np.max(np.abs(rep.u - u_true))), rep


def mms_twisted(res, nt, c=0.5, c0=1.0):
    dom = build_domain(DomainSpec(TORUS, 2, (res, res), nt))
    g = make_metric("twisted_flat", dom, c=c)
    xs, ts = dom.mesh("x"), dom.mesh("t")
    u_true = np.cos(np.pi * ts / 2) * np.cos(xs)
    fac = 4 * (1 - c * c) / (1 + c * c) + np.pi ** 2 + c0
    drift = np.zeros(dom.shape + (3,))
    drift[..., 0] = -c / np.sqrt(1 + c * c)
    rep = solve_dirichlet(assemble(dom, drift, c0, g), fac * u_true)
    return float(np.max(np.abs(rep.u - u_true))), rep


def mms_sphere(nrho, nt, r=1.0, b0=0.5, c0=1.0):
    from pscbench.grids import SPHERE
    dom = build_domain(DomainSpec(SPHERE, 2, (nrho,), nt))
    g = make_metric("sphere_twist", dom, r=r, beta0=b0)
    rh, ts = dom.mesh("rho"), dom.mesh("t")
    T = np.cos(np.pi * ts / 2)
    u_true = T * np.cos(rh)
    beta = b0 * np.sin(rh) ** 2
    B = r ** 2 * np.sin(rh) ** 2 + beta ** 2
    Bp = r ** 2 * np.sin(2 * rh) + 2 * beta * (b0 * np.sin(2 * rh))
    F = (-2 * beta ** 2 * Bp * T / (r ** 4 * np.sin(rh) * B)
         + (4 * T / r ** 2) * (np.cos(rh) + Bp * np.sin(rh) / (2 * B))
         + (np.pi ** 2 + c0) * u_true)
    drift = np.zeros(dom.shape + (3,))
    drift[..., 1] = -beta / (r * np.sin(rh) * np.sqrt(B))
    rep = solve_dirichlet(assemble(dom, drift, c0, g), F)
    return float(np.max(np.abs(rep.u - u_true))), rep
