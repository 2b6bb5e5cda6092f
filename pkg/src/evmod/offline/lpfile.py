"""CPLEX LP text format writer and reader for :class:`MipModel`.

Bracketed variable names are written as ``eps(0,1,2)`` because LP names may
not contain square brackets.  Every variable is listed in the Bounds section
in model order, which lets :func:`read_lp` rebuild the model exactly.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .mip import BINARY, CONTINUOUS, Constraint, MipModel, Variable

TERMS_PER_LINE = 8


def to_lp_name(name: str) -> str:
    return name.replace("][", ",").replace("[", "(").replace("]", ")")


def from_lp_name(name: str) -> str:
    m = re.fullmatch(r"([^()]+)\(([^()]*)\)", name)
    if not m:
        return name
    return m.group(1) + "".join(f"[{i}]" for i in m.group(2).split(","))


def _num(x: float) -> str:
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return "%.17g" % x


def _expr(terms) -> list[str]:
    parts = [f"{'-' if c < 0 else '+'} {_num(abs(c))} {to_lp_name(v)}" for v, c in terms]
    return [" ".join(parts[i:i + TERMS_PER_LINE]) for i in range(0, len(parts), TERMS_PER_LINE)]


def format_lp(m: MipModel) -> str:
    out = ["\\ EV mobility-on-demand assignment model", "Maximize" if m.sense == "max" else "Minimize"]
    lines = _expr(m.objective)
    out.append(" obj: " + (lines[0] if lines else "0"))
    out.extend("   " + ln for ln in lines[1:])
    out.append("Subject To")
    for c in m.constraints:
        lines = _expr(c.terms)
        out.append(f" {c.name}: {lines[0]}")
        out.extend("   " + ln for ln in lines[1:])
        out.append(f"   {c.sense} {_num(c.rhs)}")
    out.append("Bounds")
    for v in m.variables:
        out.append(f" {_num(v.lb)} <= {to_lp_name(v.name)} <= {_num(v.ub)}")
    binaries = [to_lp_name(v.name) for v in m.variables if v.kind == BINARY]
    if binaries:
        out.append("Binaries")
        out.extend(" " + " ".join(binaries[i:i + 10]) for i in range(0, len(binaries), 10))
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(m: MipModel, path) -> None:
    Path(path).write_text(format_lp(m))


_SECTIONS = {"maximize": "obj", "maximum": "obj", "max": "obj", "minimize": "obj", "minimum": "obj",
             "min": "obj", "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
             "bounds": "bounds", "binaries": "bin", "binary": "bin", "bin": "bin",
             "generals": "gen", "general": "gen", "end": "end"}


def _parse_terms(tokens: list[str]) -> tuple:
    terms, sign, coef = [], 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms.append((from_lp_name(tok), sign * (1.0 if coef is None else coef)))
        sign, coef = 1.0, None
    return tuple(terms)


def parse_lp(text: str) -> MipModel:
    m = MipModel()
    section, sense = None, "max"
    obj_tokens: list[str] = []
    rows: list[list[str]] = []
    bounds: list[tuple[str, float, float]] = []
    binaries: set[str] = set()
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = line.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "obj":
                sense = "max" if key.startswith("max") else "min"
            continue
        if section == "obj":
            obj_tokens.extend(line.split(":", 1)[-1].split() if ":" in line else line.split())
        elif section == "rows":
            if re.match(r"^[^\s:]+:", line):
                name, rest = line.split(":", 1)
                rows.append([name.strip()] + rest.split())
            else:
                rows[-1].extend(line.split())
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                bounds.append((from_lp_name(toks[2]), float(toks[0]), float(toks[4])))
            else:
                raise ValueError(f"unsupported bound line: {line!r}")
        elif section in ("bin", "gen"):
            binaries.update(from_lp_name(t) for t in line.split())
        elif section == "end":
            break
    m.sense = sense
    m.objective = _parse_terms([] if obj_tokens == ["0"] else obj_tokens)
    for row in rows:
        name, toks = row[0], row[1:]
        idx = max(i for i, t in enumerate(toks) if t in ("<=", ">=", "=", "=<", "=>"))
        sense_tok = {"=<": "<=", "=>": ">="}.get(toks[idx], toks[idx])
        m.constraints.append(Constraint(name, _parse_terms(toks[:idx]), sense_tok, float(toks[idx + 1])))
    for name, lb, ub in bounds:
        m.variables.append(Variable(name, BINARY if name in binaries else CONTINUOUS, lb, ub))
    return m


def read_lp(path) -> MipModel:
    return parse_lp(Path(path).read_text())
