"""Conformal transformation laws and the pointwise positivity certificate.

The solved perturbation u on W lifts to a conformal factor e^{2 phi} with
phi = (2/(n-2)) log(1+u), n the dimension of Y = X x S^1. Slicing at t = 0
gives a deformed metric on X whose scalar curvature is evaluated three ways:

  exact  -- build the deformed X metric and differentiate it numerically;
  chain  -- transform ambient scalar, normal Ricci, and second-fundamental-
            form traces by the conformal laws and assemble the hypersurface
            curvature from them;
  bound  -- the certificate: a per-node lower estimate using only the PDE
            data (forcing value, curvature coefficients, the Laplacian
            mismatch B1, the gradient correction K2, and the profile
            curvature monitor eta').

The certificate verdict is min bound > 0, strict. Soundness (bound does not
exceed the chain value beyond discretization noise) is recorded, never
enforced: a violation means a bug, not a bad geometry, and must surface in
tests rather than be absorbed here.

Conformal conventions, with s = d_mu phi and n the ambient dimension:

  R~            = e^{-2phi} (R - 2(n-1) Lap phi - (n-1)(n-2) |grad phi|^2)
  Ric~(nu~,nu~) = e^{-2phi} (Ric(mu,mu) - (n-2)(Hess phi(mu,mu) - s^2)
                             - Lap phi - (n-2) |grad phi|^2)
  |A~|^2        = e^{-2phi} (|A|^2 + 2 h s + (n-1) s^2)
  h~^2          = e^{-2phi} (h^2 + 2(n-1) h s + (n-1)^2 s^2)

The Hessian contraction uses the full covariant Hessian of phi: twisted
products have Christoffel symbols pairing the normal with slice directions,
so the iterated derivative (mu . grad)^2 phi is not equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import (CurvatureBundle, HypersurfaceData, curvature_bundle,
                        grad_norm2, hessian_cov, hypersurface_data, laplacian,
                        scalar_curvature)
from .errors import ConfigError, NumericalFailure
from .grids import DiscreteDomain, c1_norm, gradient
from .metrics import MetricField, conformal_metric, restrict_metric

_FRAME_TOL = 1e-8
POSITIVITY_FLOOR = 1e-8


@dataclass
class ConformalFactors:
    """Lifted solution u_W = 1 + u and its conformal exponent fields."""
    n: int
    u_w: np.ndarray
    u_y: np.ndarray
    phi_w: np.ndarray
    phi_y: np.ndarray
    c1_u: float
    min_u_w: float


def lift_solution(domain: DiscreteDomain, u: np.ndarray,
                  n: int) -> ConformalFactors:
    """Form u_W = 1 + u, slice u_Y at t = 0, and take conformal logs.

    Refuses solutions outside the perturbative regime: u_W must stay
    strictly positive (the conformal factor u_W^{4/(n-2)} degenerates at
    zero) and the C^1 size of u must stay below 1.
    """
    if n < 3:
        raise ConfigError(f"ambient dimension n={n} must be >= 3")
    u = np.asarray(u, dtype=float)
    u_w = 1.0 + u
    min_u_w = float(np.min(u_w))
    if min_u_w <= POSITIVITY_FLOOR:
        raise NumericalFailure(
            f"conformal factor collapses: min(1+u) = {min_u_w:.3e}")
    c1 = c1_norm(u, domain)
    if c1 >= 1.0:
        raise NumericalFailure(
            f"solution leaves the small-perturbation regime: C1 norm "
            f"{c1:.3f} >= 1")
    it0 = domain.axis("t").n // 2
    kt = domain.array_axis("t")
    u_y = np.take(u_w, it0, axis=kt)
    phi_w = (2.0 / (n - 2.0)) * np.log(u_w)
    phi_y = (2.0 / (n - 2.0)) * np.log(u_y)
    return ConformalFactors(n=n, u_w=u_w, u_y=u_y, phi_w=phi_w, phi_y=phi_y,
                            c1_u=c1, min_u_w=min_u_w)


def conformal_scalar(metric: MetricField, phi: np.ndarray,
                     n: int = None) -> np.ndarray:
    """Scalar curvature of e^{2 phi} g from undeformed data."""
    if n is None:
        n = metric.domain.dim
    lap = laplacian(metric, phi)
    g2 = grad_norm2(metric, phi)
    r = scalar_curvature(metric)
    return np.exp(-2.0 * phi) * (r - 2.0 * (n - 1.0) * lap
                                 - (n - 1.0) * (n - 2.0) * g2)


def conformal_ricci_normal(metric: MetricField, phi: np.ndarray,
                           mu: np.ndarray, n: int = None,
                           bundle: CurvatureBundle = None) -> np.ndarray:
    """Ric~(nu~, nu~) for the e^{-phi}-normalized normal nu~ = e^{-phi} mu.

    mu must be unit for the undeformed metric (checked to 1e-8).
    """
    if n is None:
        n = metric.domain.dim
    nn = metric.norm2(mu)
    if float(np.max(np.abs(nn - 1.0))) > _FRAME_TOL:
        raise NumericalFailure(
            f"normal not unit: max |g(mu,mu)-1| = "
            f"{np.max(np.abs(nn - 1.0)):.3e}")
    if bundle is None:
        bundle = curvature_bundle(metric)
    hess = hessian_cov(metric, phi, gamma=bundle.gamma)
    hess_mm = np.einsum("...i,...j,...ij->...", mu, mu, hess)
    dphi = gradient(metric.domain, phi)
    s = np.einsum("...i,...i->...", mu, dphi)
    lap = np.einsum("...ij,...ij->...", metric.inverse, hess)
    g2 = grad_norm2(metric, phi)
    ric_mm = bundle.ric_vv(mu)
    return np.exp(-2.0 * phi) * (ric_mm - (n - 2.0) * (hess_mm - s * s)
                                 - lap - (n - 2.0) * g2)


def conformal_trace_h2(h_mean, dmu_phi, phi, n: int):
    """(mean curvature)^2 of the slice after deformation."""
    return np.exp(-2.0 * phi) * (h_mean ** 2
                                 + 2.0 * (n - 1.0) * h_mean * dmu_phi
                                 + (n - 1.0) ** 2 * dmu_phi ** 2)


def conformal_trace_a2(a_norm2, h_mean, dmu_phi, phi, n: int):
    """|second fundamental form|^2 of the slice after deformation."""
    return np.exp(-2.0 * phi) * (a_norm2 + 2.0 * h_mean * dmu_phi
                                 + (n - 1.0) * dmu_phi ** 2)


def conformal_second_fundamental(a_norm2, h_mean, phi: np.ndarray,
                                 mu: np.ndarray, n: int, domain):
    """(|A|^2, h^2) of the slice under the deformation, as a pair.

    h_mean is the trace of A over the n-1 tangent directions, so the slice
    dimension n-1 is the coefficient that appears: the deformed form is
    e^{phi}(A + (d_mu phi) g) restricted to the tangent block, whence

      |A~|^2 = e^{-2 phi} (|A|^2 + 2 h (d_mu phi) + (n-1) (d_mu phi)^2)
      h~^2   = e^{-2 phi} (h + (n-1) d_mu phi)^2
    """
    dom = getattr(domain, "domain", domain)
    dphi = gradient(dom, phi)
    s = np.einsum("...i,...i->...", mu, dphi)
    return (conformal_trace_a2(a_norm2, h_mean, s, phi, n),
            conformal_trace_h2(h_mean, s, phi, n))


def chain_scalar(metric_y: MetricField, phi: np.ndarray, mu: np.ndarray,
                 hyp: HypersurfaceData = None, n: int = None,
                 bundle: CurvatureBundle = None) -> np.ndarray:
    """Deformed-slice scalar curvature assembled from conformal laws.

    Ambient scalar and normal Ricci transform by the laws above; the trace
    terms come from the undeformed second fundamental form. The three feed
    the hypersurface contraction R - 2 Ric(nu,nu) + h^2 - |A|^2 evaluated
    in the deformed ambient metric.
    """
    dom = metric_y.domain
    if n is None:
        n = dom.dim
    if bundle is None:
        bundle = curvature_bundle(metric_y)
    if hyp is None:
        tangent = [nm for nm in dom.names if nm != "theta"]
        hyp = hypersurface_data(metric_y, tangent, mu, bundle=bundle)
    r_t = conformal_scalar(metric_y, phi, n)
    ric_t = conformal_ricci_normal(metric_y, phi, mu, n, bundle=bundle)
    a2t, h2t = conformal_second_fundamental(hyp.a_norm2, hyp.h_mean, phi,
                                            mu, n, dom)
    return r_t - 2.0 * ric_t + h2t - a2t


def chain_scalar_exact(factors: ConformalFactors, slice_data: HypersurfaceData,
                       metric_y: MetricField, mu: np.ndarray,
                       bundle: CurvatureBundle = None) -> np.ndarray:
    """chain_scalar driven by a lifted solution instead of a raw exponent."""
    return chain_scalar(metric_y, factors.phi_y, mu, hyp=slice_data,
                        n=factors.n, bundle=bundle)


def deformed_slice_metric(metric_y: MetricField,
                          phi_y: np.ndarray) -> MetricField:
    """e^{2 phi} (induced slice metric) as a metric on X, with numerically
    differentiated phi. Input metric lives on Y; theta is dropped."""
    dom_x = metric_y.domain.without("theta")
    gx = restrict_metric(metric_y, dom_x)
    return conformal_metric(gx, phi_y, name=metric_y.name + "+slice")


def exact_slice_scalar(metric_y: MetricField, phi_y: np.ndarray) -> np.ndarray:
    """Reference value: direct curvature of the deformed slice metric."""
    return scalar_curvature(deformed_slice_metric(metric_y, phi_y))


def laplacian_comparison(u_w: np.ndarray, metric_m: MetricField,
                         p_theta: float | None = None,
                         metric_w: MetricField = None):
    """B1 = Lap_{g_M} u - Lap_{sigma* g} u over the W nodes, and K1.

    M and W share stored axes (theta is virtual), so the two Laplacians are
    node-aligned arrays and the mismatch is a plain difference. For product
    metrics and theta-independent u every extra M term is exactly zero and
    B1 vanishes to round-off; twisted metrics leave a genuine residue from
    the differing inverse-metric blocks. p_theta names the section; the
    metrics here are theta-independent so it does not enter.

    Returns (B1 field, K1 = 4 sup|B1|).
    """
    del p_theta
    if metric_w is None:
        dom_w = metric_m.domain.without("theta")
        metric_w = restrict_metric(metric_m, dom_w)
    b1 = laplacian(metric_m, u_w) - laplacian(metric_w, u_w)
    return b1, 4.0 * float(np.max(np.abs(b1)))


def slice_laplacian_identity(u: np.ndarray, metric_m: MetricField,
                             metric_y: MetricField = None) -> float:
    """Residual of Lap_M u|_{t=0} = Lap_Y u_Y + d^2u/dt^2|_{t=0}.

    The middle term is the Laplacian of the induced metric on the t = 0
    slice Y. Holds exactly for t-product metrics; the returned sup-residual
    is a consistency diagnostic for the slice bookkeeping.
    """
    dom = metric_m.domain
    it0 = dom.axis("t").n // 2
    kt = dom.array_axis("t")
    if metric_y is None:
        metric_y = restrict_metric(metric_m, dom.without("t"), at={"t": it0})
    lap0 = np.take(laplacian(metric_m, u), it0, axis=kt)
    d2t0 = np.take(dom.diff(u, "t", 2), it0, axis=kt)
    u_y = np.take(u, it0, axis=kt)
    lap_y = laplacian(metric_y, u_y)
    return float(np.max(np.abs(lap0 - lap_y - d2t0)))


def k2_field(u_w: np.ndarray, metric: MetricField, v: np.ndarray,
             n: int = None) -> np.ndarray:
    """Gradient correction K2 = 4/(n-2) (|grad u_W|^2 + n (V u_W)^2) / u_W.

    Evaluated with the metric of whatever block u_W lives on (slice or W);
    u_W must be strictly positive, it divides.
    """
    if n is None:
        n = metric.domain.dim
    if float(np.min(u_w)) <= 0.0:
        raise NumericalFailure(
            f"K2 needs a positive conformal factor; min u_W = "
            f"{float(np.min(u_w)):.3e}")
    du = gradient(metric.domain, u_w)
    g2 = np.einsum("...ij,...i,...j->...", metric.inverse, du, du)
    vu = np.einsum("...i,...i->...", v, du)
    return (4.0 / (n - 2.0)) * (g2 + n * vu * vu) / u_w


def curvature_coefficient(slice_data: HypersurfaceData) -> float:
    """sup over the slice of 2|Ric(mu,mu)| + h^2 + |A|^2."""
    return float(np.max(2.0 * np.abs(slice_data.ric_nn)
                        + slice_data.h_mean ** 2 + slice_data.a_norm2))


def select_C(slice_data: HypersurfaceData, k1: float = 0.0) -> float:
    """Forcing amplitude: 10% above the certificate's consumption budget."""
    return 1.1 * (1.5 * curvature_coefficient(slice_data) + k1 + 2.0)


def headroom_value(C: float, slice_data: HypersurfaceData,
                   k1: float) -> float:
    """Slack C + 1 - 3/2 sup(2|Ric| + h^2 + |A|^2) - K1 - 2; positive iff
    the budget actually covers the curvature terms."""
    return C + 1.0 - 1.5 * curvature_coefficient(slice_data) - k1 - 2.0


@dataclass
class CertificateReport:
    """Three curvature evaluations of the deformed slice plus the verdict."""
    n: int
    r_bound: np.ndarray
    r_chain: np.ndarray
    r_exact: np.ndarray
    min_bound: float
    min_chain: float
    min_exact: float
    chain_gap_max: float
    bound_minus_chain_max: float
    k2_max: float
    c: float
    k1: float
    eta_prime: float
    verdict: bool


def certificate(factors: ConformalFactors, slice_data: HypersurfaceData,
                forcing_0: np.ndarray, b1_k1, k2: np.ndarray,
                eta_prime: float, r_g0: np.ndarray, c_used: float,
                metric_y: MetricField, mu: np.ndarray,
                bundle: CurvatureBundle = None,
                residual_inf: float = None,
                tolerance: float = None) -> CertificateReport:
    """Assemble the pointwise lower bound and its two cross-checks.

    forcing_0, r_g0, k2 are fields on the t = 0 slice; b1_k1 is the
    (B1 field on W, K1) pair from laplacian_comparison; eta_prime is the
    profile-curvature monitor. The bound is

      u_Y^{-(n+2)/(n-2)} [ (-2 Ric(mu,mu) + h^2 - |A|^2) u_Y + F + R_g
                           - 4 B1 - K2 - 4 eta' ]

    with every curvature term undeformed. verdict is min bound > 0, strict:
    certifying positivity through round-off slack would be meaningless.

    When residual_inf/tolerance are given, a solve that missed its residual
    target refuses certification outright.
    """
    if residual_inf is not None and tolerance is not None \
            and residual_inf > tolerance:
        raise NumericalFailure(
            f"certificate refused: PDE residual {residual_inf:.3e} above "
            f"tolerance {tolerance:.1e}")
    n = factors.n
    dom = metric_y.domain
    if bundle is None:
        bundle = curvature_bundle(metric_y)
    hyp = slice_data
    if hyp is None:
        tangent = [nm for nm in dom.names if nm != "theta"]
        hyp = hypersurface_data(metric_y, tangent, mu, bundle=bundle)

    b1, k1 = b1_k1
    b1 = np.asarray(b1, dtype=float)
    if b1.ndim == len(dom.shape) + 1:
        # W-shaped field from laplacian_comparison: take its t = 0 slice
        b1 = b1[..., b1.shape[-1] // 2]
    b1_0 = b1
    u_y = factors.u_y
    bracket = ((-2.0 * hyp.ric_nn + hyp.h_mean ** 2 - hyp.a_norm2) * u_y
               + forcing_0 + r_g0 - 4.0 * b1_0 - k2 - 4.0 * eta_prime)
    r_bound = u_y ** (-(n + 2.0) / (n - 2.0)) * bracket

    r_chain = chain_scalar(metric_y, factors.phi_y, mu, hyp=hyp, n=n,
                           bundle=bundle)
    r_exact = exact_slice_scalar(metric_y, factors.phi_y)

    return CertificateReport(
        n=n,
        r_bound=r_bound,
        r_chain=r_chain,
        r_exact=r_exact,
        min_bound=float(np.min(r_bound)),
        min_chain=float(np.min(r_chain)),
        min_exact=float(np.min(r_exact)),
        chain_gap_max=float(np.max(np.abs(r_chain - r_exact))),
        bound_minus_chain_max=float(np.max(r_bound - r_chain)),
        k2_max=float(np.max(np.abs(k2))),
        c=float(c_used),
        k1=float(k1),
        eta_prime=float(eta_prime),
        verdict=bool(np.min(r_bound) > 0.0),
    )
