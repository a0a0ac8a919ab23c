"""Write models in CPLEX LP text format for inspection with external tools."""

from __future__ import annotations

import math

import numpy as np

from .model import BINARY, INTEGER, LpModel, MipModel, Relation

_REL = {Relation.LE: "<=", Relation.EQ: "=", Relation.GE: ">="}


def _num(v: float) -> str:
    return repr(float(v))


def _names(lp: LpModel) -> list:
    if lp.var_names:
        return [str(n).replace(" ", "_") for n in lp.var_names]
    return [f"x{j}" for j in range(lp.num_vars)]


def _expr(coeffs, names) -> str:
    terms = []
    for j in np.flatnonzero(coeffs):
        c = float(coeffs[j])
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign} {_num(abs(c))} {names[j]}")
    if not terms:
        return "0 " + names[0] if names else "0"
    text = " ".join(terms)
    return text[2:] if text.startswith("+ ") else text


def to_lp_text(model, *, wrap: int = 8) -> str:
    """Render an :class:`LpModel` or :class:`MipModel` as LP text."""
    mip = model if isinstance(model, MipModel) else None
    lp = mip.lp if mip else model
    names = _names(lp)
    out = [f"\\ {lp.num_vars} variables, {lp.num_rows} rows"]
    if lp.objective_constant:
        out.append(f"\\ objective constant {_num(lp.objective_constant)}")
    out.append("Maximize" if lp.sense == "max" else "Minimize")
    out.append(" obj: " + _expr(lp.objective, names))
    out.append("Subject To")
    for i in range(lp.num_rows):
        out.append(f" r{i}: {_expr(lp.A[i], names)} {_REL[lp.relations[i]]} {_num(lp.rhs[i])}")
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, up = lp.lower[j], lp.upper[j]
        if math.isinf(lo) and math.isinf(up):
            out.append(f" {name} free")
        elif lo == up:
            out.append(f" {name} = {_num(lo)}")
        else:
            left = "-inf" if math.isinf(lo) else _num(lo)
            right = "+inf" if math.isinf(up) else _num(up)
            out.append(f" {left} <= {name} <= {right}")
    if mip:
        gen = [names[j] for j, k in enumerate(mip.integrality) if k == INTEGER]
        binv = [names[j] for j, k in enumerate(mip.integrality) if k == BINARY]
        for header, group in (("General", gen), ("Binary", binv)):
            if group:
                out.append(header)
                for k in range(0, len(group), wrap):
                    out.append(" " + " ".join(group[k:k + wrap]))
    out.append("End")
    return "\n".join(out) + "\n"


def write_lp(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_lp_text(model))


__all__ = ["to_lp_text", "write_lp"]
