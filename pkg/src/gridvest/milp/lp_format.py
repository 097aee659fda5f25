"""Plain-text LP-format export for cross-checking models in external solvers."""

from __future__ import annotations

import math
import re
from pathlib import Path

from .model import Model, Relation

_UNSAFE = re.compile(r"[^A-Za-z0-9_.]")
_RELATION_TEXT = {Relation.LE: "<=", Relation.EQ: "=", Relation.GE: ">="}


def _safe(name: str, fallback: str) -> str:
    cleaned = _UNSAFE.sub("_", name) if name else fallback
    return cleaned if not cleaned[0].isdigit() else f"_{cleaned}"


def _expression(terms: list[tuple[str, float]]) -> str:
    if not terms:
        return "0 __zero"
    parts = []
    for i, (name, coef) in enumerate(terms):
        sign = "-" if coef < 0 else "+"
        magnitude = abs(coef)
        text = f"{magnitude:.12g} {name}"
        parts.append(text if i == 0 and sign == "+" else f"{sign} {text}")
    return " ".join(parts)


def format_lp(model: Model) -> str:
    names = [_safe(v.name, f"x{v.index}") for v in model.variables]
    lines = [f"\\ Model {model.name}", "Minimize", " obj: " + _expression(
        [(names[j], c) for j, c in sorted(model.objective_terms.items()) if c != 0.0]
    )]
    if model.objective_constant:
        lines[-1] += f" + {model.objective_constant:.12g} __const"

    lines.append("Subject To")
    for i, con in enumerate(model.constraints):
        label = _safe(con.name, f"c{i}")
        body = _expression([(names[j], c) for j, c in con.terms])
        lines.append(f" {label}: {body} {_RELATION_TEXT[con.relation]} {con.rhs:.12g}")
    if model.objective_constant:
        lines.append(" __fix_const: __const = 1")

    lines.append("Bounds")
    for var, name in zip(model.variables, names, strict=True):
        if var.is_binary:
            continue
        lo = "-inf" if math.isinf(var.lo) else f"{var.lo:.12g}"
        hi = "+inf" if math.isinf(var.hi) else f"{var.hi:.12g}"
        lines.append(f" {lo} <= {name} <= {hi}")

    binaries = [name for var, name in zip(model.variables, names, strict=True) if var.is_binary]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: Model, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(format_lp(model))
    return target
