"""Metric fields: SPD 2-tensors with component and derivative access.

A MetricField stores the components g_ij over the grid together with first
and second coordinate derivatives. Builtin named metrics carry closed-form
derivative arrays; as_fd swaps in stencil-derived ones (used by convergence
tests and for metrics loaded from CSV tables). Index convention:

    comp[..., i, j]        g_ij
    d1[..., i, j, k]       d_k g_ij
    d2[..., i, j, k, l]    d_l d_k g_ij

with i, j, k, l running over the full coordinate order of the domain,
virtual axes included (their derivative slots are zero).

Builtins, constructed on any of the X/Y/W/M domains of a run (components
appear according to which axes the domain has):

    product_flat           flat torus cross circle, identity components
    twisted_flat{c}        dx^2 + dy^2 (+ dz^2) + (dtheta + c dx)^2
    sphere_product{r}      round S^2(r) cross unit circle
    sphere_twist{r,beta0}  r^2 drho^2 + r^2 sin^2(rho) dalpha^2
                           + (dtheta + beta dalpha)^2, beta = beta0 sin^2(rho)

The sphere_twist profile vanishes to second order at the poles, which keeps
the metric smooth there; its twist strength grows toward the equator.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .errors import ConfigError, NumericalFailure
from .grids import DiscreteDomain, gradient, hessian_coords

BUILTIN_NAMES = ("product_flat", "twisted_flat", "sphere_product", "sphere_twist")

_SPD_FLOOR = 1e-10


class MetricField:
    """Symmetric positive definite 2-tensor field with derivative arrays."""

    def __init__(self, domain: DiscreteDomain, comp, d1, d2, name="custom",
                 params=None):
        self.domain = domain
        d = domain.dim
        shape = domain.shape
        self.comp = np.broadcast_to(comp, shape + (d, d)).copy()
        self.d1 = np.broadcast_to(d1, shape + (d, d, d)).copy()
        self.d2 = np.broadcast_to(d2, shape + (d, d, d, d)).copy()
        self.name = name
        self.params = dict(params or {})
        self._validate()

    def _validate(self):
        scale = 1.0 + float(np.max(np.abs(self.comp)))
        skew = float(np.max(np.abs(self.comp - np.swapaxes(self.comp, -1, -2))))
        if skew > 1e-12 * scale:
            raise NumericalFailure(f"metric components not symmetric: {skew:.3e}")
        lo = float(np.min(np.linalg.eigvalsh(self.comp)))
        if lo <= _SPD_FLOOR:
            raise NumericalFailure(
                f"metric not positive definite: min eigenvalue {lo:.3e}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @cached_property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.comp)

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.comp)

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(self.det)

    def norm2(self, v: np.ndarray) -> np.ndarray:
        """Pointwise squared length of a vector field."""
        return np.einsum("...ij,...i,...j->...", self.comp, v, v)

    def inner(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...i,...j->...", self.comp, v, w)


def _empty(domain: DiscreteDomain):
    d = domain.dim
    shape = domain.shape
    return (np.zeros(shape + (d, d)), np.zeros(shape + (d, d, d)),
            np.zeros(shape + (d, d, d, d)))


def _identity(domain: DiscreteDomain):
    comp, d1, d2 = _empty(domain)
    for i in range(domain.dim):
        comp[..., i, i] = 1.0
    return comp, d1, d2


def _opt_index(domain, name):
    return domain.index(name) if name in domain.names else None


def make_metric(name: str, domain: DiscreteDomain, **params) -> MetricField:
    """Construct a builtin metric on the given domain."""
    if name == "product_flat":
        comp, d1, d2 = _identity(domain)

    elif name == "twisted_flat":
        c = float(params.get("c", 0.0))
        if c < 0:
            raise ConfigError(f"twisted_flat requires c >= 0, got {c}")
        comp, d1, d2 = _identity(domain)
        ix = _opt_index(domain, "x")
        if ix is None:
            raise ConfigError("twisted_flat needs an x axis")
        comp[..., ix, ix] = 1.0 + c * c
        ith = _opt_index(domain, "theta")
        if ith is not None:
            comp[..., ix, ith] = c
            comp[..., ith, ix] = c

    elif name == "sphere_product":
        r = float(params.get("r", 1.0))
        if r <= 0:
            raise ConfigError(f"sphere_product requires r > 0, got {r}")
        comp, d1, d2 = _identity(domain)
        irho = _opt_index(domain, "rho")
        ia = _opt_index(domain, "alpha")
        if irho is None or ia is None:
            raise ConfigError("sphere_product needs rho and alpha axes")
        rho = domain.mesh("rho")
        comp[..., irho, irho] = r * r
        comp[..., ia, ia] = (r * np.sin(rho)) ** 2
        d1[..., ia, ia, irho] = r * r * np.sin(2.0 * rho)
        d2[..., ia, ia, irho, irho] = 2.0 * r * r * np.cos(2.0 * rho)

    elif name == "sphere_twist":
        r = float(params.get("r", 1.0))
        b0 = float(params.get("beta0", 0.0))
        if r <= 0:
            raise ConfigError(f"sphere_twist requires r > 0, got {r}")
        if b0 < 0:
            raise ConfigError(f"sphere_twist requires beta0 >= 0, got {b0}")
        comp, d1, d2 = _identity(domain)
        irho = _opt_index(domain, "rho")
        ia = _opt_index(domain, "alpha")
        if irho is None or ia is None:
            raise ConfigError("sphere_twist needs rho and alpha axes")
        rho = domain.mesh("rho")
        s, s2, c2 = np.sin(rho), np.sin(2.0 * rho), np.cos(2.0 * rho)
        beta = b0 * s * s
        db = b0 * s2
        ddb = 2.0 * b0 * c2
        comp[..., irho, irho] = r * r
        comp[..., ia, ia] = (r * s) ** 2 + beta * beta
        d1[..., ia, ia, irho] = r * r * s2 + 2.0 * beta * db
        d2[..., ia, ia, irho, irho] = (2.0 * r * r * c2
                                       + 2.0 * (db * db + beta * ddb))
        ith = _opt_index(domain, "theta")
        if ith is not None:
            comp[..., ia, ith] = beta
            comp[..., ith, ia] = beta
            d1[..., ia, ith, irho] = db
            d1[..., ith, ia, irho] = db
            d2[..., ia, ith, irho, irho] = ddb
            d2[..., ith, ia, irho, irho] = ddb

    else:
        raise ConfigError(f"unknown builtin metric {name!r}")

    return MetricField(domain, comp, d1, d2, name=name, params=params)


def as_fd(metric: MetricField) -> MetricField:
    """Same components, derivative arrays recomputed by finite differences."""
    dom = metric.domain
    d = dom.dim
    d1 = np.zeros_like(metric.d1)
    d2 = np.zeros_like(metric.d2)
    for k, ax in enumerate(dom.axes):
        if not ax.stored:
            continue
        d1[..., k] = dom.diff(metric.comp, ax.name, 1)
        d2[..., k, k] = dom.diff(metric.comp, ax.name, 2)
    for k, axk in enumerate(dom.axes):
        if not axk.stored:
            continue
        for l, axl in enumerate(dom.axes):
            if l <= k or not axl.stored:
                continue
            mixed = dom.diff(d1[..., k], axl.name, 1)
            d2[..., k, l] = mixed
            d2[..., l, k] = mixed
    return MetricField(dom, metric.comp, d1, d2,
                       name=metric.name + "+fd", params=metric.params)


def conformal_metric(metric: MetricField, phi: np.ndarray, dphi=None,
                     d2phi=None, name=None) -> MetricField:
    """e^(2 phi) g with derivative arrays by the product rule.

    Pass closed-form dphi/d2phi (full coordinate order) to keep derivative
    exactness; otherwise they come from stencils applied to phi.
    """
    dom = metric.domain
    if dphi is None:
        dphi = gradient(dom, phi)
    if d2phi is None:
        d2phi = hessian_coords(dom, phi)
    e2 = np.exp(2.0 * phi)

    g, g1, g2 = metric.comp, metric.d1, metric.d2
    comp = e2[..., None, None] * g
    d1 = e2[..., None, None, None] * (
        2.0 * dphi[..., None, None, :] * g[..., :, :, None] + g1)
    d2 = e2[..., None, None, None, None] * (
        (4.0 * dphi[..., None, None, :, None] * dphi[..., None, None, None, :]
         + 2.0 * d2phi[..., None, None, :, :]) * g[..., :, :, None, None]
        + 2.0 * dphi[..., None, None, :, None] * g1[..., :, :, None, :]
        + 2.0 * dphi[..., None, None, None, :] * g1[..., :, :, :, None]
        + g2)
    return MetricField(dom, comp, d1, d2,
                       name=name or (metric.name + "+conformal"),
                       params=metric.params)


def restrict_metric(metric: MetricField, sub: DiscreteDomain, at=None) -> MetricField:
    """Pull the metric back to a coordinate subdomain.

    Keeps the component block and the derivative directions of the surviving
    axes. Any dropped stored axis needs an evaluation index in `at`; dropped
    virtual axes need nothing. This is the induced metric for our coordinate
    aligned slices (t = const, theta = const).
    """
    at = dict(at or {})
    src = metric.domain
    keep = [src.index(n) for n in sub.names]

    slicer = [slice(None)] * len(src.shape)
    for ax in src.axes:
        if ax.name in sub.names or not ax.stored:
            continue
        if ax.name not in at:
            raise ValueError(f"need an evaluation index for dropped axis {ax.name!r}")
        slicer[src.array_axis(ax.name)] = at[ax.name]
    slicer = tuple(slicer)

    comp = metric.comp[slicer][..., keep, :][..., :, keep]
    d1 = metric.d1[slicer][..., keep, :, :][..., :, keep, :][..., :, :, keep]
    d2 = (metric.d2[slicer][..., keep, :, :, :][..., :, keep, :, :]
          [..., :, :, keep, :][..., :, :, :, keep])
    return MetricField(sub, comp, d1, d2, name=metric.name, params=metric.params)


def product_extend(h: MetricField, m_domain: DiscreteDomain) -> MetricField:
    """g = h (+) dt^2 on the t-extended domain, components t-independent."""
    src = h.domain
    if "t" in src.names or "t" not in m_domain.names:
        raise ValueError("product_extend maps a t-free metric to a t-domain")
    for n in src.names:
        if n not in m_domain.names:
            raise ValueError(f"target domain lacks axis {n!r}")

    dm = m_domain.dim
    shape = m_domain.shape
    comp = np.zeros(shape + (dm, dm))
    d1 = np.zeros(shape + (dm, dm, dm))
    d2 = np.zeros(shape + (dm, dm, dm, dm))

    # broadcast over the appended t array dimension
    t_pos = m_domain.array_axis("t")
    expand = [slice(None)] * len(shape)
    expand[t_pos] = None
    expand = tuple(expand)

    idx = [m_domain.index(n) for n in src.names]
    for a, ia in enumerate(idx):
        for b, ib in enumerate(idx):
            comp[..., ia, ib] = h.comp[expand + (a, b)]
            for k, ik in enumerate(idx):
                d1[..., ia, ib, ik] = h.d1[expand + (a, b, k)]
                for l, il in enumerate(idx):
                    d2[..., ia, ib, ik, il] = h.d2[expand + (a, b, k, l)]
    it = m_domain.index("t")
    comp[..., it, it] = 1.0
    return MetricField(m_domain, comp, d1, d2, name=h.name, params=h.params)


def _component_names(domain: DiscreteDomain):
    names = domain.names
    pairs = []
    for i, ni in enumerate(names):
        for j, nj in enumerate(names):
            if j >= i:
                pairs.append((i, j, f"g_{ni}_{nj}"))
    return pairs


def metric_to_csv(metric: MetricField, path) -> None:
    """Upper-triangle component table, one row per stored node."""
    from .grids import fields_to_csv
    cols = {}
    for i, j, label in _component_names(metric.domain):
        cols[label] = np.broadcast_to(metric.comp[..., i, j],
                                      metric.domain.shape)
    fields_to_csv(path, metric.domain, cols)


def load_metric_csv(domain: DiscreteDomain, path) -> MetricField:
    """Metric from a CSV component table; derivatives by finite differences.

    Expects the layout metric_to_csv writes: stored coordinates first, then
    the upper triangle g_<i>_<j> over the full coordinate order, rows in C
    order over the grid.
    """
    try:
        table = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as exc:
        raise ConfigError(f"cannot read metric table {path}: {exc}") from exc
    if table.ndim == 0:
        table = table.reshape(1)

    n_nodes = domain.node_count
    if table.shape[0] != n_nodes:
        raise ConfigError(
            f"metric table {path} has {table.shape[0]} rows, grid has {n_nodes}")

    from .grids import coordinate_columns
    ref = coordinate_columns(domain)
    fields = table.dtype.names or ()
    for name, coords in ref.items():
        if name not in fields:
            raise ConfigError(f"metric table {path} lacks coordinate column {name!r}")
        if np.max(np.abs(table[name] - coords)) > 1e-9:
            raise ConfigError(
                f"metric table {path}: column {name!r} does not match the "
                "grid (rows must be in C order over the stored axes)")

    d = domain.dim
    comp = np.zeros(domain.shape + (d, d))
    for i, j, label in _component_names(domain):
        if label not in fields:
            raise ConfigError(f"metric table {path} lacks component column {label!r}")
        vals = table[label].reshape(domain.shape)
        comp[..., i, j] = vals
        comp[..., j, i] = vals

    zero1 = np.zeros(domain.shape + (d, d, d))
    zero2 = np.zeros(domain.shape + (d, d, d, d))
    try:
        flat = MetricField(domain, comp, zero1, zero2, name="csv")
    except NumericalFailure as exc:
        raise ConfigError(f"metric table {path}: {exc}") from exc
    return as_fd(flat)
