"""Structured discrete domains, fields over them, quadrature, norms, CSV dumps.

A domain is an ordered tuple of coordinate axes. An axis is either stored
(it carries grid nodes and one array dimension) or virtual (a circle that no
field varies along; it contributes its circumference to integrals and zero
to derivatives). Scalar fields are plain ndarrays shaped like the stored
grid. Vector and tensor fields carry trailing component dimensions indexed
by the full coordinate order, virtual axes included, so tensor algebra never
needs to know which axes happen to be stored.

Domain construction for a run:

    W = build_domain(spec)             # X x [-1, 1], the solve domain
    X = W.without("t")
    Y = with_circle(X)                 # X x S^1, virtual circle by default
    M = with_circle(W, before="t")     # Y x [-1, 1], ambient for the chain

Dropping t from M gives Y and dropping theta gives W, with axis orders
matching the directly built domains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fd
from .errors import ConfigError

TORUS = "torus"
SPHERE = "sphere-axisym"

# scalar fields are ndarrays over the stored grid; vectors append one
# component dimension of size domain.dim, metrics append two
ScalarField = np.ndarray
VectorField = np.ndarray

_TORUS_AXIS_NAMES = ("x", "y", "z")


@dataclass(frozen=True)
class Axis:
    name: str
    closure: str
    n: int
    spacing: float
    start: float
    length: float

    @property
    def stored(self) -> bool:
        return self.closure != fd.VIRTUAL

    def coords(self) -> np.ndarray:
        if self.closure == fd.MIRROR:
            return self.start + (np.arange(self.n) + 0.5) * self.spacing
        return self.start + np.arange(self.n) * self.spacing

    def weights(self) -> np.ndarray:
        """Quadrature weights; trapezoid on bounded axes, midpoint otherwise."""
        if not self.stored:
            return np.array([self.length])
        w = np.full(self.n, self.spacing)
        if self.closure == fd.BOUNDED:
            w[0] *= 0.5
            w[-1] *= 0.5
        return w


def periodic_axis(name: str, n: int, length: float = 2.0 * math.pi) -> Axis:
    return Axis(name, fd.PERIODIC, n, length / n, 0.0, length)


def mirror_axis(name: str, n: int, length: float = math.pi) -> Axis:
    return Axis(name, fd.MIRROR, n, length / n, 0.0, length)


def bounded_axis(name: str, n: int, lo: float = -1.0, hi: float = 1.0) -> Axis:
    return Axis(name, fd.BOUNDED, n, (hi - lo) / (n - 1), lo, hi - lo)


def virtual_axis(name: str, length: float = 2.0 * math.pi) -> Axis:
    return Axis(name, fd.VIRTUAL, 1, 0.0, 0.0, length)


@dataclass(frozen=True)
class DiscreteDomain:
    axes: tuple = field(default_factory=tuple)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    @property
    def stored_axes(self) -> tuple:
        return tuple(a for a in self.axes if a.stored)

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.stored_axes)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    def axis(self, name: str) -> Axis:
        for a in self.axes:
            if a.name == name:
                return a
        raise KeyError(f"domain has no axis {name!r}")

    def index(self, name: str) -> int:
        """Coordinate index of an axis (position in the full order)."""
        for i, a in enumerate(self.axes):
            if a.name == name:
                return i
        raise KeyError(f"domain has no axis {name!r}")

    def array_axis(self, name: str):
        """Array dimension of a stored axis, or None for a virtual one."""
        k = 0
        for a in self.axes:
            if a.name == name:
                return k if a.stored else None
            if a.stored:
                k += 1
        raise KeyError(f"domain has no axis {name!r}")

    def mesh(self, name: str) -> np.ndarray:
        """Coordinates of a stored axis, broadcastable over the grid shape."""
        a = self.axis(name)
        if not a.stored:
            raise ValueError(f"axis {name!r} is virtual and has no mesh")
        k = self.array_axis(name)
        shp = [1] * len(self.shape)
        shp[k] = a.n
        return a.coords().reshape(shp)

    def diff(self, values: np.ndarray, name: str, order: int) -> np.ndarray:
        """Partial derivative along a coordinate axis; zero for virtual axes.

        Trailing component dimensions pass through untouched.
        """
        a = self.axis(name)
        if not a.stored:
            return np.zeros_like(values)
        return fd.apply_diff(values, self.array_axis(name), order, a.n,
                             a.spacing, a.closure)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature over the stored grid times virtual circumferences.

        Trailing component dimensions survive, so this integrates scalar and
        tensor fields alike.
        """
        arr = np.asarray(values, dtype=float)
        nstored = len(self.shape)
        for k, a in enumerate(self.stored_axes):
            shp = [1] * arr.ndim
            shp[k] = a.n
            arr = arr * a.weights().reshape(shp)
        total = arr.sum(axis=tuple(range(nstored))) if nstored else arr
        for a in self.axes:
            if not a.stored:
                total = total * a.length
        return total

    def without(self, name: str) -> "DiscreteDomain":
        self.index(name)  # raise on unknown axis
        return DiscreteDomain(tuple(a for a in self.axes if a.name != name))

    def with_axis(self, axis: Axis, before: str = None) -> "DiscreteDomain":
        if axis.name in self.names:
            raise ValueError(f"axis {axis.name!r} already present")
        if before is None:
            return DiscreteDomain(self.axes + (axis,))
        pos = self.index(before)
        return DiscreteDomain(self.axes[:pos] + (axis,) + self.axes[pos:])


@dataclass(frozen=True)
class DomainSpec:
    backend: str
    dim_x: int
    resolutions: tuple
    t_nodes: int


def build_domain(spec: DomainSpec) -> DiscreteDomain:
    """W = X x [-1, 1] as a discrete domain.

    Torus backend: dim_x periodic axes of length 2*pi plus the t interval.
    Sphere backend: axisymmetric reduction of S^2, storing colatitude on a
    cell-centered mirror grid plus a virtual azimuth circle, plus t.
    """
    if spec.dim_x < 2:
        raise ConfigError(f"dim_x must be >= 2, got {spec.dim_x}")
    if spec.t_nodes < 5 or spec.t_nodes % 2 == 0:
        raise ConfigError(
            f"t_nodes must be odd and >= 5 so t = 0 is a node, got {spec.t_nodes}")

    if spec.backend == TORUS:
        if spec.dim_x > len(_TORUS_AXIS_NAMES):
            raise ConfigError(
                f"torus backend supports dim_x <= {len(_TORUS_AXIS_NAMES)}, "
                f"got {spec.dim_x}")
        if len(spec.resolutions) != spec.dim_x:
            raise ConfigError(
                f"torus backend needs {spec.dim_x} resolutions, "
                f"got {len(spec.resolutions)}")
        axes = []
        for name, n in zip(_TORUS_AXIS_NAMES, spec.resolutions):
            if n < 4:
                raise ConfigError(f"axis {name!r} needs >= 4 nodes, got {n}")
            axes.append(periodic_axis(name, int(n)))
    elif spec.backend == SPHERE:
        if spec.dim_x != 2:
            raise ConfigError(
                f"sphere backend is 2-dimensional, got dim_x = {spec.dim_x}")
        if len(spec.resolutions) != 1:
            raise ConfigError(
                "sphere backend takes a single colatitude resolution")
        n = int(spec.resolutions[0])
        if n < 4:
            raise ConfigError(f"colatitude axis needs >= 4 nodes, got {n}")
        axes = [mirror_axis("rho", n), virtual_axis("alpha")]
    else:
        raise ConfigError(f"unknown backend {spec.backend!r}")

    axes.append(bounded_axis("t", spec.t_nodes))
    return DiscreteDomain(tuple(axes))


def with_circle(domain: DiscreteDomain, name: str = "theta", n: int = None,
                before: str = None) -> DiscreteDomain:
    """Append the S^1 factor: virtual by default, stored periodic if n given.

    Pipeline domains keep theta virtual (every field is theta-independent).
    Stored-theta domains exist so tests can exercise fields that do vary
    along the circle.
    """
    ax = periodic_axis(name, n) if n else virtual_axis(name)
    if before is not None and before in domain.names:
        return domain.with_axis(ax, before=before)
    return domain.with_axis(ax)


def w_domains(spec: DomainSpec) -> dict:
    """The four domains of one run, keyed 'x', 'y', 'w', 'm'."""
    w = build_domain(spec)
    x = w.without("t")
    return {
        "x": x,
        "y": with_circle(x),
        "w": w,
        "m": with_circle(w, before="t"),
    }


def lp_norm(values: np.ndarray, metric, p: int) -> float:
    """Discrete L^p norm with metric volume weight sqrt(det g)."""
    if int(p) != p or p < 1:
        raise ConfigError(f"p must be an integer >= 1, got {p}")
    dom = metric.domain
    integrand = np.abs(values) ** p * metric.sqrt_det
    return float(dom.integrate(integrand) ** (1.0 / p))


def c1_norm(values: np.ndarray, domain) -> float:
    """sup|f| plus the largest per-axis sup of the first-difference slope.

    Discrete surrogate for a C^1 norm; no Hoelder seminorm on a fixed grid.
    Accepts either a DiscreteDomain or any object carrying one as .domain.
    """
    dom = getattr(domain, "domain", domain)
    best = 0.0
    for a in dom.stored_axes:
        best = max(best, float(np.max(np.abs(dom.diff(values, a.name, 1)))))
    return float(np.max(np.abs(values))) + best


def gradient(domain: DiscreteDomain, values: np.ndarray) -> np.ndarray:
    """Coordinate partials d_k f, stacked over the full coordinate order."""
    parts = [domain.diff(values, a.name, 1) for a in domain.axes]
    return np.stack(parts, axis=-1)


def hessian_coords(domain: DiscreteDomain, values: np.ndarray) -> np.ndarray:
    """Coordinate second partials d_k d_l f over the full coordinate order.

    Pure diagonal entries use the one-axis second-derivative stencil; mixed
    entries compose two first-derivative stencils (they commute).
    """
    d = domain.dim
    out = np.zeros(domain.shape + (d, d))
    firsts = {}
    for k, a in enumerate(domain.axes):
        if not a.stored:
            continue
        out[..., k, k] = domain.diff(values, a.name, 2)
        firsts[k] = domain.diff(values, a.name, 1)
    for k in firsts:
        for l in firsts:
            if l <= k:
                continue
            mixed = domain.diff(firsts[k], domain.axes[l].name, 1)
            out[..., k, l] = mixed
            out[..., l, k] = mixed
    return out


def coordinate_columns(domain: DiscreteDomain) -> dict:
    """Flattened per-node coordinate columns for the stored axes, C order."""
    axes = domain.stored_axes
    grids = np.meshgrid(*[a.coords() for a in axes], indexing="ij")
    return {a.name: g.ravel() for a, g in zip(axes, grids)}


def fields_to_csv(path, domain: DiscreteDomain, columns: dict) -> None:
    """One row per node: stored coordinates, then the named field columns."""
    cols = coordinate_columns(domain)
    for name, values in columns.items():
        arr = np.asarray(values)
        if arr.shape != domain.shape:
            raise ValueError(
                f"column {name!r} has shape {arr.shape}, grid is {domain.shape}")
        cols[name] = arr.ravel()
    header = ",".join(cols)
    data = np.column_stack(list(cols.values()))
    np.savetxt(path, data, fmt="%.12g", delimiter=",", header=header,
               comments="")
