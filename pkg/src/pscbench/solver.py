"""Anisotropic elliptic operator on W = X x [-1,1] and the Dirichlet solve.

The operator is assembled from per-node coefficient fields

    C2[a,b] = 4 (V^a V^b - g^{ab})                       second order
    C1[k]   = 4 (V^i d_i V^k - V^i V^j Gamma^k_ij + g^{ij} Gamma^k_ij)
    C0      = potential

acting as sum C2[a,b] d_a d_b + sum C1[k] d_k + C0. For drift fields whose
coordinate self-derivative V^i d_i V^k vanishes (every builtin scenario: V
is coordinate-parallel) the iterated-derivative and covariant-Hessian
readings of the squared drift coincide, and the coefficient list above is
that common value.

Coefficient sums run over the full coordinate set including virtual axes:
the funnel terms g^{aa} Gamma^k_aa of an axisymmetric Laplacian live in the
virtual azimuth slot even though no difference matrix exists there.

The matrix is a sum of Kronecker products of 1-d difference matrices scaled
by node-diagonal coefficients. Rows at t = +-1 are replaced by identity
(homogeneous Dirichlet); the right-hand side is zeroed there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curvature import christoffel
from .errors import ConfigError, HypothesisViolation, NumericalFailure
from .fd import diff_matrix
from .grids import DiscreteDomain, c1_norm
from .metrics import MetricField

ANISOTROPY_WARN_RATIO = 1e6


@dataclass
class OperatorAssembly:
    """Assembled operator plus the coefficient fields it was built from."""
    domain: DiscreteDomain
    matrix: sp.csr_matrix
    c2: np.ndarray
    c1: np.ndarray
    c0: np.ndarray
    interior: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    """Solution of one Dirichlet solve plus the numbers the pipeline audits.

    dtt_max is None until a monitor region (hence an epsilon) exists; the
    pipeline fills it via dataclasses.replace after dtt_monitor.
    """
    u: np.ndarray
    residual_inf: float
    c1: float
    stats: dict
    dtt_max: float | None = None


def _embed(shape, factors):
    """Kronecker product over array axes; identity where no factor given."""
    out = None
    for k, n in enumerate(shape):
        f = factors.get(k, sp.identity(n, format="csr"))
        out = f if out is None else sp.kron(out, f, format="csr")
    return out.tocsr()


def assemble(domain: DiscreteDomain, v: np.ndarray, potential,
             metric: MetricField) -> OperatorAssembly:
    dom = metric.domain
    if domain is not dom and domain.names != dom.names:
        raise ConfigError("assembly domain does not match the metric domain")
    if "t" not in dom.names:
        raise ConfigError("assembly domain must contain the cylinder axis t")
    d = dom.dim
    shape = dom.shape
    nodes = int(np.prod(shape))
    inv = metric.inverse

    v = np.asarray(np.broadcast_to(np.asarray(v, dtype=float),
                                   shape + (d,)), dtype=float)
    c0 = np.asarray(np.broadcast_to(potential, shape), dtype=float)

    # the principal symbol must stay positive definite over every node,
    # virtual directions included
    symbol = inv - v[..., :, None] * v[..., None, :]
    eigmin = float(np.min(np.linalg.eigvalsh(symbol)))
    if eigmin <= 0.0:
        raise HypothesisViolation(
            f"operator symbol loses ellipticity: min eigenvalue {eigmin:.3e}")

    gamma = christoffel(metric)
    dv = np.empty(shape + (d, d))
    for k in range(d):
        vk = np.ascontiguousarray(v[..., k])
        for a, nm in enumerate(dom.names):
            dv[..., k, a] = dom.diff(vk, nm, 1)
    term1 = np.einsum("...a,...ka->...k", v, dv)
    term2 = np.einsum("...i,...j,...kij->...k", v, v, gamma)
    term3 = np.einsum("...ij,...kij->...k", inv, gamma)
    c1 = 4.0 * (term1 - term2 + term3)
    c2 = 4.0 * (v[..., :, None] * v[..., None, :] - inv)

    stored = [(dom.index(nm), dom.array_axis(nm), dom.axis(nm))
              for nm in dom.names if dom.axis(nm).stored]

    terms = []
    for ca, ka, ax in stored:
        terms.append((c2[..., ca, ca],
                      {ka: diff_matrix(2, ax.n, ax.spacing, ax.closure)}))
        coef1 = c1[..., ca]
        if np.any(coef1 != 0.0):
            terms.append((coef1,
                          {ka: diff_matrix(1, ax.n, ax.spacing, ax.closure)}))
    for i in range(len(stored)):
        for j in range(i + 1, len(stored)):
            ca, ka, axa = stored[i]
            cb, kb, axb = stored[j]
            coef = c2[..., ca, cb] + c2[..., cb, ca]
            if np.any(coef != 0.0):
                terms.append((coef,
                              {ka: diff_matrix(1, axa.n, axa.spacing,
                                               axa.closure),
                               kb: diff_matrix(1, axb.n, axb.spacing,
                                               axb.closure)}))

    mat = sp.csr_matrix((nodes, nodes))
    for coef, ops in terms:
        mat = mat + sp.diags(np.asarray(coef, dtype=float).ravel()) \
            @ _embed(shape, ops)
    mat = mat + sp.diags(c0.ravel())

    # per-axis second-order stiffness spread; purely advisory
    scales = [float(np.max(np.abs(c2[..., ca, ca]))) / ax.spacing ** 2
              for ca, ka, ax in stored]
    ratio = max(scales) / min(scales)
    if ratio > ANISOTROPY_WARN_RATIO:
        warnings.warn(
            f"second-order coefficient anisotropy ratio {ratio:.2e} exceeds "
            "the stability heuristic; expect accuracy loss", RuntimeWarning)

    kt = dom.array_axis("t")
    nt = dom.axis("t").n
    bmask = np.zeros(shape, dtype=bool)
    sl = [slice(None)] * len(shape)
    sl[kt] = 0
    bmask[tuple(sl)] = True
    sl[kt] = nt - 1
    bmask[tuple(sl)] = True
    interior = ~bmask.ravel()
    mat = (sp.diags(interior.astype(float)) @ mat
           + sp.diags((~interior).astype(float))).tocsr()

    return OperatorAssembly(domain=dom, matrix=mat, c2=c2, c1=c1, c0=c0,
                            interior=interior)


def solve_dirichlet(assembly: OperatorAssembly, forcing,
                    tolerance: float = 1e-10,
                    max_iterations: int = 2000) -> SolveReport:
    """Solve L u = F with u = 0 at t = +-1.

    Direct sparse LU with at least one iterative-refinement step; on a
    failed factorization, preconditioned LGMRES. The infinity-norm residual
    must end below tolerance or the solve is declared failed.

    The returned report carries u shaped like the domain (exactly zero on
    the boundary rows), the final residual, and c1(u).
    """
    dom = assembly.domain
    rhs = np.asarray(np.broadcast_to(forcing, dom.shape), dtype=float) \
        .ravel().copy()
    rhs[~assembly.interior] = 0.0
    mat = assembly.matrix
    stats = {"nodes": rhs.size, "nnz": int(mat.nnz)}
    try:
        lu = spla.splu(mat.tocsc())
        u = lu.solve(rhs)
        resid = rhs - mat @ u
        refinements = 0
        while refinements < 4:
            if refinements >= 1 and float(np.max(np.abs(resid))) <= tolerance:
                break
            u = u + lu.solve(resid)
            resid = rhs - mat @ u
            refinements += 1
        stats["method"] = "splu"
        stats["refinements"] = refinements
    except RuntimeError as exc:
        try:
            ilu = spla.spilu(mat.tocsc(), drop_tol=1e-6, fill_factor=30)
        except RuntimeError:
            raise NumericalFailure(
                f"direct and incomplete factorizations both failed: {exc}")
        precond = spla.LinearOperator(mat.shape, ilu.solve)
        u, info = spla.lgmres(mat, rhs, M=precond, rtol=0.0,
                              atol=0.25 * tolerance, maxiter=max_iterations)
        if info != 0:
            raise NumericalFailure(
                f"iterative fallback did not converge (info={info}) "
                f"within {max_iterations} iterations")
        stats["method"] = "lgmres"
        stats["refinements"] = 0

    u[~assembly.interior] = 0.0
    residual_inf = float(np.max(np.abs(rhs - mat @ u)))
    stats["residual_inf"] = residual_inf
    if residual_inf > tolerance:
        raise NumericalFailure(
            f"solver residual {residual_inf:.3e} exceeds "
            f"tolerance {tolerance:.1e}")
    u = u.reshape(dom.shape)
    return SolveReport(u=u, residual_inf=residual_inf,
                       c1=c1_norm(u, dom), stats=stats)


def dtt_monitor(u: np.ndarray, domain: DiscreteDomain,
                epsilon: float) -> float:
    """sup of |d^2 u / dt^2| over the core region |t| < epsilon/4.

    Refuses (ConfigError) when the region holds fewer than 3 t-nodes: a
    sup over one or two points says nothing about the profile curvature.
    """
    ax = domain.axis("t")
    region = np.nonzero(np.abs(ax.coords()) < 0.25 * epsilon)[0]
    if region.size < 3:
        raise ConfigError(
            f"monitor region |t| < {0.25 * epsilon:g} contains only "
            f"{region.size} t-nodes (need >= 3); refine the t grid")
    d2 = domain.diff(u, "t", 2)
    sub = np.take(d2, region, axis=domain.array_axis("t"))
    return float(np.max(np.abs(sub)))
