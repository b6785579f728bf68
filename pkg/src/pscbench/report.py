"""Run reports: deterministic body, parseable structured form, CSV dumps.

The body is a fixed-order list of (section, key, value) lines with every
number printed at 12 significant digits, so byte identity across repeat
runs is a testable property. Wall time is real information but not
deterministic; it lives below an explicit footer marker that consumers can
split on.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalFailure
from .grids import fields_to_csv

FOOTER_MARK = "# --- non-deterministic footer ---"
PSC_FLAG = "PSC hypothesis fails"


@dataclass
class RunReport:
    """Everything one scenario run measured, plus the field arrays.

    Fields past the angle stage default to None and stay None when the run
    stopped early; emit skips them, so a report's shape is a function of
    its stage alone.
    """
    config_echo: dict
    stage: str
    n: int
    p_theta: float
    max_angle: float
    margin: float
    elliptic: bool
    min_r_h: float
    psc_hypothesis: bool
    c_used: float | None = None
    k1: float | None = None
    epsilon: float | None = None
    forcing_norm: float | None = None
    solver_stats: dict | None = None
    c1_u: float | None = None
    dtt_max: float | None = None
    headroom: float | None = None
    k2_max: float | None = None
    min_r_exact: float | None = None
    min_r_chain: float | None = None
    min_r_bound: float | None = None
    chain_gap_max: float | None = None
    bound_minus_chain_max: float | None = None
    verdict: bool | None = None
    wall_time: float | None = None
    fields: dict = field(default_factory=dict)


def _num(value) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise NumericalFailure(
            f"report field is not finite ({value!r}); refusing to emit")
    return f"{value:.12g}"


def _bool(value) -> str:
    return "true" if value else "false"


def report_pairs(report: RunReport):
    """The deterministic body as ordered (section, key, value) triples."""
    pairs = [("run", "stage", report.stage),
             ("run", "n", str(report.n))]
    for key in sorted(report.config_echo):
        pairs.append(("config", key, str(report.config_echo[key])))
    pairs += [
        ("angle", "p_theta", _num(report.p_theta)),
        ("angle", "max_angle", _num(report.max_angle)),
        ("angle", "margin", _num(report.margin)),
        ("angle", "elliptic", _bool(report.elliptic)),
        ("angle", "min_r_h", _num(report.min_r_h)),
    ]
    if report.psc_hypothesis:
        pairs.append(("angle", "flag", "none"))
    else:
        pairs.append(("angle", "flag",
                      f"{PSC_FLAG}: min R_h = {_num(report.min_r_h)} <= 0 "
                      f"(PSC hypothesis on h fails)"))
    if report.c_used is not None:
        pairs += [
            ("solve", "C", _num(report.c_used)),
            ("solve", "K1", _num(report.k1)),
            ("solve", "epsilon", _num(report.epsilon)),
            ("solve", "forcing_norm", _num(report.forcing_norm)),
            ("solve", "c1_u", _num(report.c1_u)),
            ("solve", "dtt_max", _num(report.dtt_max)),
            ("solve", "headroom", _num(report.headroom)),
        ]
        stats = report.solver_stats or {}
        for key in sorted(stats):
            value = stats[key]
            text = _num(value) if isinstance(value, float) else str(value)
            pairs.append(("solve", f"solver_{key}", text))
    if report.verdict is not None:
        pairs += [
            ("certificate", "k2_max", _num(report.k2_max)),
            ("certificate", "min_r_exact", _num(report.min_r_exact)),
            ("certificate", "min_r_chain", _num(report.min_r_chain)),
            ("certificate", "min_r_bound", _num(report.min_r_bound)),
            ("certificate", "chain_gap_max", _num(report.chain_gap_max)),
            ("certificate", "bound_minus_chain_max",
             _num(report.bound_minus_chain_max)),
            ("certificate", "verdict", _bool(report.verdict)),
        ]
    return pairs


def _render(pairs, footer_pairs, structured: bool) -> str:
    lines = []
    if not structured:
        lines.append("pscbench scenario report")
    section = None
    for sec, key, value in pairs:
        if sec != section:
            if structured:
                lines.append(f"[{sec}]")
            else:
                lines.append("")
                lines.append(f"== {sec} ==")
            section = sec
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append(FOOTER_MARK)
    for key, value in footer_pairs:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def render_report(report: RunReport, fmt: str = "text") -> str:
    if fmt not in ("text", "structured"):
        raise ConfigError(f"unknown report format {fmt!r}")
    wall = report.wall_time if report.wall_time is not None else 0.0
    return _render(report_pairs(report), [("wall_time_s", f"{wall:.6f}")],
                   structured=(fmt == "structured"))


def emit_report(report: RunReport, fmt: str, path: str) -> str:
    text = render_report(report, fmt)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write report {path}: {exc}") from exc
    return path


@dataclass
class ReportDoc:
    """Parsed structured report: ordered body triples plus footer pairs."""
    pairs: list
    footer: list

    def get(self, section: str, key: str):
        for sec, k, value in self.pairs:
            if sec == section and k == key:
                return value
        return None

    def as_dict(self) -> dict:
        return {f"{sec}.{key}": value for sec, key, value in self.pairs}


def parse_report(path: str) -> ReportDoc:
    """Inverse of the structured writer: serializing the result is
    byte-identical to the input file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    pairs, footer = [], []
    section = None
    in_footer = False
    for line in raw.splitlines():
        if line == FOOTER_MARK:
            in_footer = True
            continue
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        if " = " not in line:
            raise ConfigError(f"unparseable report line {line!r} in {path}")
        key, value = line.split(" = ", 1)
        if in_footer:
            footer.append((key, value))
        elif section is None:
            raise ConfigError(f"report line {line!r} precedes any section")
        else:
            pairs.append((section, key, value))
    return ReportDoc(pairs=pairs, footer=footer)


def serialize_report_doc(doc: ReportDoc) -> str:
    return _render(doc.pairs, doc.footer, structured=True)


def write_field_csvs(report: RunReport, out_dir: str, stem: str) -> list:
    """Dump the per-node fields: slice diagnostics, u, and the three
    certificate curvatures. Only what the reached stage produced."""
    fields = report.fields or {}
    written = []

    def dump(name, domain_key, columns):
        cols = {k: fields[k] for k in columns if k in fields}
        if not cols or domain_key not in fields:
            return
        path = os.path.join(out_dir, f"{stem}_{name}.csv")
        fields_to_csv(path, fields[domain_key], cols)
        written.append(path)

    dump("angle", "y", ("angle", "margin_minor"))
    dump("u", "w", ("u",))
    dump("certificate", "y", ("r_exact", "r_chain", "r_bound"))
    return written
