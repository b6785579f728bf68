"""Run configuration: flat INI sections validated into a RunConfig.

Diagnostics carry file and line: a batch of scenario files is edited by
hand, and "[forcing] delta expects a number" without a location is useless
at that moment. configparser does the token work; a raw-line scan pins each
section header and key to its line before values are interpreted.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .grids import SPHERE, TORUS, DomainSpec

# section -> known keys; unknown keys are refused, not ignored, so a typo
# like "tolerence" cannot silently run with the default
_SCHEMA = {
    "domain": ("backend", "dim_x", "resolution", "t_nodes"),
    "metric": ("name", "c", "r", "beta0", "components_file"),
    "slice": ("p_theta",),
    "forcing": ("p", "delta", "C"),
    "solver": ("tolerance", "max_iterations"),
    "output": ("directory",),
}

_METRIC_PARAMS = {
    "product_flat": (),
    "twisted_flat": ("c",),
    "sphere_product": ("r",),
    "sphere_twist": ("r", "beta0"),
    "csv": ("components_file",),
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]\s*$")
_KEY_RE = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]")


@dataclass
class RunConfig:
    """Validated scenario parameters plus a deterministic echo of them."""
    domain: DomainSpec
    metric_name: str
    metric_params: dict
    components_file: str | None
    p_theta: float
    p: int
    delta: float
    c_mode: object          # the literal string "auto" or a float
    tolerance: float
    max_iterations: int
    output_dir: str
    source_path: str
    echo: dict = field(default_factory=dict)


def _line_map(path: str):
    """(section, key) -> line number, plus section -> header line number."""
    keys, sections = {}, {}
    section = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            sections.setdefault(section, no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            keys.setdefault((section, m.group(1).strip()), no)
    return keys, sections


def _where(path, keys, sections, section, key=None):
    no = keys.get((section, key)) if key else sections.get(section)
    return f"{path}:{no}" if no else path


class _Reader:
    def __init__(self, parser, path, keys, sections):
        self.parser = parser
        self.path = path
        self.keys = keys
        self.sections = sections

    def loc(self, section, key=None):
        return _where(self.path, self.keys, self.sections, section, key)

    def raw(self, section, key, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def number(self, section, key, default, check=None, describe=""):
        raw = self.raw(section, key)
        if raw is None:
            value = default
        else:
            try:
                value = float(raw)
            except ValueError:
                raise ConfigError(
                    f"{self.loc(section, key)}: [{section}] {key} expects a "
                    f"number, got {raw!r}")
        if check is not None and not check(value):
            raise ConfigError(
                f"{self.loc(section, key)}: [{section}] {key} = {value:g} "
                f"out of range ({describe})")
        return value

    def integer(self, section, key, default, check=None, describe=""):
        value = self.number(section, key, float(default), check=None)
        if value != int(value):
            raise ConfigError(
                f"{self.loc(section, key)}: [{section}] {key} expects an "
                f"integer, got {value:g}")
        value = int(value)
        if check is not None and not check(value):
            raise ConfigError(
                f"{self.loc(section, key)}: [{section}] {key} = {value} "
                f"out of range ({describe})")
        return value


def parse_config(path: str) -> RunConfig:
    keys, sections = _line_map(path)

    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"{_where(path, keys, sections, section)}: unknown section "
                f"[{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"{_where(path, keys, sections, section, key)}: unknown "
                    f"key {key!r} in [{section}]")

    if not parser.has_section("metric"):
        raise ConfigError(f"{path}: missing [metric] section")

    r = _Reader(parser, path, keys, sections)

    backend = r.raw("domain", "backend", TORUS) \
        if parser.has_section("domain") else TORUS
    if backend not in (TORUS, SPHERE):
        raise ConfigError(
            f"{r.loc('domain', 'backend')}: backend must be "
            f"{TORUS!r} or {SPHERE!r}, got {backend!r}")
    dim_x = r.integer("domain", "dim_x", 2, lambda v: v >= 2, ">= 2") \
        if parser.has_section("domain") else 2
    t_nodes = r.integer("domain", "t_nodes", 33,
                        lambda v: v >= 5 and v % 2 == 1, "odd and >= 5") \
        if parser.has_section("domain") else 33

    res_raw = r.raw("domain", "resolution", None) \
        if parser.has_section("domain") else None
    if res_raw is None:
        resolutions = (16,) if backend == SPHERE else (16,) * dim_x
    else:
        parts = [p.strip() for p in res_raw.split(",") if p.strip()]
        try:
            entries = tuple(int(p) for p in parts)
        except ValueError:
            raise ConfigError(
                f"{r.loc('domain', 'resolution')}: [domain] resolution "
                f"expects integers, got {res_raw!r}")
        if any(n < 4 for n in entries):
            raise ConfigError(
                f"{r.loc('domain', 'resolution')}: [domain] resolution "
                f"entries must be >= 4, got {res_raw!r}")
        want = 1 if backend == SPHERE else dim_x
        if len(entries) == 1:
            entries = entries * want
        if len(entries) != want:
            raise ConfigError(
                f"{r.loc('domain', 'resolution')}: [domain] resolution "
                f"needs 1 or {want} entries, got {len(entries)}")
        resolutions = entries

    name = r.raw("metric", "name", None)
    components_file = r.raw("metric", "components_file", None)
    if components_file is not None:
        components_file = os.path.join(os.path.dirname(os.path.abspath(path)),
                                       components_file) \
            if not os.path.isabs(components_file) else components_file
        if not os.path.exists(components_file):
            raise ConfigError(
                f"{r.loc('metric', 'components_file')}: metric table "
                f"{components_file!r} does not exist")
        if name not in (None, "csv"):
            raise ConfigError(
                f"{r.loc('metric', 'name')}: components_file and builtin "
                f"name {name!r} are mutually exclusive")
        name = "csv"
    if name is None:
        raise ConfigError(
            f"{_where(path, keys, sections, 'metric')}: [metric] needs a "
            f"builtin name or a components_file")
    if name not in _METRIC_PARAMS:
        raise ConfigError(
            f"{r.loc('metric', 'name')}: unknown metric {name!r}; builtins: "
            f"{', '.join(sorted(k for k in _METRIC_PARAMS if k != 'csv'))}")
    allowed = _METRIC_PARAMS[name]
    for key in parser.options("metric"):
        if key in ("name", "components_file"):
            continue
        if key not in allowed:
            raise ConfigError(
                f"{r.loc('metric', key)}: metric {name!r} does not take "
                f"parameter {key!r}")

    params = {}
    if name == "twisted_flat":
        params["c"] = r.number("metric", "c", 0.0, lambda v: v >= 0.0,
                               "c >= 0")
    elif name == "sphere_product":
        params["r"] = r.number("metric", "r", 1.0, lambda v: v > 0.0, "r > 0")
    elif name == "sphere_twist":
        params["r"] = r.number("metric", "r", 1.0, lambda v: v > 0.0, "r > 0")
        params["beta0"] = r.number("metric", "beta0", 0.0,
                                   lambda v: v >= 0.0, "beta0 >= 0")
    if name.startswith("sphere") and backend != SPHERE:
        raise ConfigError(
            f"{r.loc('metric', 'name')}: metric {name!r} needs "
            f"backend = {SPHERE}")
    if name in ("product_flat", "twisted_flat") and backend != TORUS:
        raise ConfigError(
            f"{r.loc('metric', 'name')}: metric {name!r} needs "
            f"backend = {TORUS}")

    p_theta = r.number("slice", "p_theta", 0.0) \
        if parser.has_section("slice") else 0.0

    has_forcing = parser.has_section("forcing")
    p = r.integer("forcing", "p", 4, lambda v: v >= 1, ">= 1") \
        if has_forcing else 4
    delta = r.number("forcing", "delta", 1e-2, lambda v: v > 0.0, "> 0") \
        if has_forcing else 1e-2
    c_raw = r.raw("forcing", "C", "auto") if has_forcing else "auto"
    if c_raw == "auto":
        c_mode = "auto"
    else:
        c_mode = r.number("forcing", "C", None, lambda v: v > 0.0, "> 0")

    has_solver = parser.has_section("solver")
    tolerance = r.number("solver", "tolerance", 1e-10,
                         lambda v: v > 0.0, "> 0") if has_solver else 1e-10
    max_iterations = r.integer("solver", "max_iterations", 2000,
                               lambda v: v >= 1, ">= 1") \
        if has_solver else 2000

    output_dir = r.raw("output", "directory", ".") \
        if parser.has_section("output") else "."

    spec = DomainSpec(backend=backend, dim_x=dim_x, resolutions=resolutions,
                      t_nodes=t_nodes)

    echo = {
        "domain.backend": backend,
        "domain.dim_x": str(dim_x),
        "domain.resolution": ",".join(str(n) for n in resolutions),
        "domain.t_nodes": str(t_nodes),
        "metric.name": name,
        "slice.p_theta": f"{p_theta:.12g}",
        "forcing.p": str(p),
        "forcing.delta": f"{delta:.12g}",
        "forcing.C": "auto" if c_mode == "auto" else f"{c_mode:.12g}",
        "solver.tolerance": f"{tolerance:.12g}",
        "solver.max_iterations": str(max_iterations),
    }
    for key, value in sorted(params.items()):
        echo[f"metric.{key}"] = f"{value:.12g}"
    if components_file is not None:
        echo["metric.components_file"] = os.path.basename(components_file)

    return RunConfig(domain=spec, metric_name=name, metric_params=params,
                     components_file=components_file, p_theta=p_theta,
                     p=p, delta=delta, c_mode=c_mode, tolerance=tolerance,
                     max_iterations=max_iterations, output_dir=output_dir,
                     source_path=path, echo=echo)
