"""LP (CPLEX style) and MPS text for a ``MilpModel``, plus readers for both.

Names are reduced to ``[A-Za-z0-9_]`` so that ``x[Sub,WT1]`` becomes
``x_Sub_WT1``. Those names are usually longer than the 8 characters of
strict fixed-column MPS, so MPS output uses the free (whitespace separated)
layout that common solvers read. Numbers are written with ``repr`` and the LP
bounds section lists every column in model order, so a parsed file exports
back to identical text.
"""

from __future__ import annotations

import math
import re
from dataclasses import replace

from .model import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel, ModelBuilder

MAX_NAME = 255
LINE_WIDTH = 200


class FormatError(ValueError):
    pass


def sanitize(name: str) -> str:
    s = re.sub(r"[^A-Za-z0-9_]+", "_", name).strip("_") or "v"
    if s[0].isdigit():
        s = "_" + s
    return s[:MAX_NAME]


def _unique(names, prefix):
    out, seen = [], set()
    for k, n in enumerate(names):
        s = sanitize(n) if n else f"{prefix}{k}"
        base, i = s, 1
        while s in seen:
            i += 1
            tag = f"_{i}"
            s = base[: MAX_NAME - len(tag)] + tag
        seen.add(s)
        out.append(s)
    return out


def _num(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e16:
        return repr(int(v)) if v != 0 or math.copysign(1, v) > 0 else "0"
    return repr(v)


def column_names(model: MilpModel) -> list[str]:
    return _unique([v.name for v in model.variables], "c")


def row_names(model: MilpModel) -> list[str]:
    return _unique([c.name for c in model.constraints], "r")


# --------------------------------------------------------------------------
# LP


def _lp_expr(terms, cols) -> list[str]:
    toks = []
    for j, a in terms:
        if a == 0:
            continue
        sign = "-" if a < 0 else "+"
        if not toks:
            toks.append(f"{'- ' if a < 0 else ''}{_num(abs(a))} {cols[j]}")
        else:
            toks.append(f"{sign} {_num(abs(a))} {cols[j]}")
    return toks


def _wrap(head: str, toks: list[str]) -> list[str]:
    lines, cur = [], head
    for t in toks:
        if len(cur) + 1 + len(t) > LINE_WIDTH and cur.strip():
            lines.append(cur)
            cur = "   " + t
        else:
            cur = f"{cur} {t}" if cur else t
    lines.append(cur)
    return lines


def write_lp(model: MilpModel, name: str = "model") -> str:
    cols = column_names(model)
    rows = row_names(model)
    out = [f"\\ {sanitize(name)}", "Minimize"]
    toks = _lp_expr(enumerate(model.objective), cols)
    if model.constant:
        sign = "-" if model.constant < 0 else "+"
        toks.append(f"{sign} {_num(abs(model.constant))}" if toks else _num(model.constant))
    if not toks:
        toks = [f"0 {cols[0]}"] if cols else ["0"]
    out += _wrap(" obj:", toks)
    out.append("Subject To")
    for r, con in zip(rows, model.constraints):
        toks = _lp_expr(con.coeffs, cols) or [f"0 {cols[0]}"]
        toks.append(f"{con.sense} {_num(con.rhs)}")
        out += _wrap(f" {r}:", toks)
    out.append("Bounds")
    for c, v in zip(cols, model.variables):
        lo, hi = v.lower, v.upper
        if lo == hi:
            out.append(f" {c} = {_num(lo)}")
        elif math.isinf(lo) and math.isinf(hi):
            out.append(f" {c} free")
        else:
            out.append(f" {_num(lo)} <= {c} <= {_num(hi)}")
    bins = [c for c, v in zip(cols, model.variables) if v.kind == BINARY]
    if bins:
        out.append("Binaries")
        out += _wrap(" ", bins)
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(r"\s*(<=|>=|=<|=>|<|>|=|[+-]|:|[A-Za-z_][A-Za-z0-9_]*|(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)")
_SECTIONS = {
    "minimize": "obj", "minimum": "obj", "min": "obj",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "generals": "gen", "general": "gen", "gen": "gen",
    "end": "end",
}


def _tokens(text: str) -> list[str]:
    toks, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormatError(f"cannot tokenize near {text[pos:pos + 20]!r}")
        toks.append(m.group(1))
        pos = m.end()
    return toks


def _value(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "infinity"):
        return math.inf
    return float(tok)


def _is_num(tok: str) -> bool:
    return tok.lower() in ("inf", "infinity") or bool(re.fullmatch(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?", tok))


def _parse_linear(toks):
    """Terms and constant from ``[+|-] [coef] name ...`` tokens."""
    terms, const, k = [], 0.0, 0
    while k < len(toks):
        sign = 1.0
        while k < len(toks) and toks[k] in "+-":
            if toks[k] == "-":
                sign = -sign
            k += 1
        coef = 1.0
        if k < len(toks) and _is_num(toks[k]):
            coef = _value(toks[k])
            k += 1
            if k >= len(toks) or toks[k] in "+-":
                const += sign * coef
                continue
        if k >= len(toks):
            raise FormatError("dangling sign in expression")
        terms.append((toks[k], sign * coef))
        k += 1
    return terms, const


def read_lp(text: str) -> MilpModel:
    sections: dict[str, list[str]] = {}
    cur = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in _SECTIONS and not raw.startswith((" ", "\t")):
            cur = _SECTIONS[key]
            if cur == "end":
                break
            sections.setdefault(cur, [])
            continue
        if cur is None:
            raise FormatError(f"content before any section: {line!r}")
        sections[cur].append(line)
    if "obj" not in sections:
        raise FormatError("missing objective section")

    order: dict[str, int] = {}
    bounds: dict[str, tuple[float, float]] = {}
    for line in sections.get("bounds", []):
        t = _tokens(line)
        signed = []
        k = 0
        while k < len(t):  # fold leading signs into numbers
            if t[k] in "+-" and k + 1 < len(t) and _is_num(t[k + 1]):
                signed.append(("-" if t[k] == "-" else "") + t[k + 1])
                k += 2
            else:
                signed.append(t[k])
                k += 1
        t = signed

        def num(s):
            return -_value(s[1:]) if s.startswith("-") else _value(s)

        if len(t) == 2 and t[1].lower() == "free":
            name, lo, hi = t[0], -math.inf, math.inf
        elif len(t) == 5 and t[1] in ("<=", "=<") and t[3] in ("<=", "=<"):
            name, lo, hi = t[2], num(t[0]), num(t[4])
        elif len(t) == 3 and t[1] == "=":
            name = t[0]
            lo = hi = num(t[2])
        elif len(t) == 3 and t[1] in (">=", "=>"):
            name, lo, hi = t[0], num(t[2]), bounds.get(t[0], (0.0, math.inf))[1]
        elif len(t) == 3 and t[1] in ("<=", "=<"):
            name, lo, hi = t[0], bounds.get(t[0], (0.0, math.inf))[0], num(t[2])
        else:
            raise FormatError(f"unsupported bound line {line!r}")
        order.setdefault(name, len(order))
        bounds[name] = (lo, hi)
    binaries = []
    for line in sections.get("bin", []):
        binaries += line.split()
    generals = []
    for line in sections.get("gen", []):
        generals += line.split()
    for n in binaries + generals:
        order.setdefault(n, len(order))

    rels = ("<=", ">=", "=<", "=>", "<", ">", "=")

    def split_named(lines):
        """``(name, expression tokens, (relation, rhs) or None)`` items."""
        toks = _tokens(" ".join(lines))
        items, k = [], 0
        while k < len(toks):
            name = None
            if k + 1 < len(toks) and toks[k + 1] == ":":
                name = toks[k]
                k += 2
            j = k
            while j < len(toks) and toks[j] not in rels:
                if j > k and j + 1 < len(toks) and toks[j + 1] == ":":
                    break
                j += 1
            expr, rel = toks[k:j], None
            if j < len(toks) and toks[j] in rels:
                sign, q = 1.0, j + 1
                while q < len(toks) and toks[q] in "+-":
                    sign = -sign if toks[q] == "-" else sign
                    q += 1
                if q >= len(toks) or not _is_num(toks[q]):
                    raise FormatError(f"constraint {name!r}: missing right-hand side")
                rel = (toks[j], sign * _value(toks[q]))
                j = q + 1
            items.append((name, expr, rel))
            k = j
        return items

    obj_items = split_named(sections["obj"])
    if len(obj_items) != 1 or obj_items[0][2] is not None:
        raise FormatError("objective must be a single expression")
    obj_terms, constant = _parse_linear(obj_items[0][1])
    cons = []
    for name, expr, rel in split_named(sections.get("st", [])):
        if rel is None:
            raise FormatError(f"constraint {name!r} lacks a relation")
        terms, c = _parse_linear(expr)
        sense = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}[rel[0]]
        cons.append((name or "", terms, sense, rel[1] - c))
    for name, _ in obj_terms:
        order.setdefault(name, len(order))
    for _, terms, _, _ in cons:
        for name, _ in terms:
            order.setdefault(name, len(order))

    b = ModelBuilder()
    bin_set, gen_set = set(binaries), set(generals)
    obj = dict()
    for name, a in obj_terms:
        obj[name] = obj.get(name, 0.0) + a
    for name in sorted(order, key=order.__getitem__):
        if name in bin_set:
            lo, hi = bounds.get(name, (0.0, 1.0))
            b.var(name, BINARY, lo, hi, obj.get(name, 0.0))
        else:
            lo, hi = bounds.get(name, (0.0, math.inf))
            b.var(name, "integer" if name in gen_set else CONTINUOUS, lo, hi, obj.get(name, 0.0))
    ix = b.index
    for name, terms, sense, rhs in cons:
        acc: dict[int, float] = {}
        for v, a in terms:
            acc[ix[v]] = acc.get(ix[v], 0.0) + a
        b.con([(j, a) for j, a in acc.items() if a != 0 or len(acc) == 1], sense, rhs, name)
    m = b.build()

    return replace(m, constant=constant)


# --------------------------------------------------------------------------
# MPS


def write_mps(model: MilpModel, name: str = "model") -> str:
    cols = column_names(model)
    rows = row_names(model)
    if "OBJ" in rows:
        raise FormatError("row name OBJ is reserved")
    out = [f"NAME {sanitize(name)}", "ROWS", " N OBJ"]
    code = {LE: "L", GE: "G", EQ: "E"}
    for r, con in zip(rows, model.constraints):
        out.append(f" {code[con.sense]} {r}")
    entries: list[list[tuple[str, float]]] = [[] for _ in cols]
    for j, a in enumerate(model.objective):
        if a != 0:
            entries[j].append(("OBJ", a))
    for r, con in zip(rows, model.constraints):
        for j, a in con.coeffs:
            if a != 0:
                entries[j].append((r, a))
    out.append("COLUMNS")
    for c, ent in zip(cols, entries):
        for r, a in ent or [("OBJ", 0.0)]:
            out.append(f"    {c} {r} {_num(a)}")
    out.append("RHS")
    if model.constant:
        out.append(f"    RHS OBJ {_num(-model.constant)}")
    for r, con in zip(rows, model.constraints):
        if con.rhs != 0:
            out.append(f"    RHS {r} {_num(con.rhs)}")
    out.append("BOUNDS")
    for c, v in zip(cols, model.variables):
        lo, hi = v.lower, v.upper
        if v.kind == BINARY:
            out.append(f" BV BND {c}")
            if lo != 0:
                out.append(f" LO BND {c} {_num(lo)}")
            if hi != 1:
                out.append(f" UP BND {c} {_num(hi)}")
            continue
        if lo == hi:
            out.append(f" FX BND {c} {_num(lo)}")
            continue
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" FR BND {c}")
            continue
        if math.isinf(lo):
            out.append(f" MI BND {c}")
        elif lo != 0:
            out.append(f" LO BND {c} {_num(lo)}")
        if not math.isinf(hi):
            if lo == 0 and hi < 0:
                out.append(f" LO BND {c} 0")
            out.append(f" UP BND {c} {_num(hi)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def read_mps(text: str) -> MilpModel:
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    coeffs: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}
    bnd: dict[str, list[float]] = {}
    kinds: dict[str, str] = {}
    state = {"obj": None, "int": False}
    seen_end = False
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        t = raw.split()
        try:
            section = _mps_line(raw, t, section, row_sense, row_order, col_order, coeffs, rhs, bnd, kinds, state)
        except (ValueError, KeyError, IndexError) as exc:
            raise FormatError(f"bad MPS line {raw!r}: {exc}") from None
        if section == "ENDATA":
            seen_end = True
            break
    if not seen_end:
        raise FormatError("missing ENDATA")
    obj_row = state["obj"]
    for c, kind in kinds.items():
        if kind == "integer":
            lo, hi = bnd.get(c, (0.0, math.inf))
            if (lo, hi) != (0.0, 1.0):
                raise FormatError(f"general integer column {c} is not supported")
            kinds[c] = BINARY
    return _mps_model(obj_row, row_sense, row_order, col_order, coeffs, rhs, bnd, kinds)


def _mps_line(raw, t, section, row_sense, row_order, col_order, coeffs, rhs, bnd, kinds, state):
    """Consume one MPS line; returns the current section."""
    if not raw[0].isspace():
        return t[0].upper()
    if section == "ROWS":
        s, r = t[0].upper(), t[1]
        if s == "N":
            if state["obj"] is None:
                state["obj"] = r
            return section
        row_sense[r] = {"L": LE, "G": GE, "E": EQ}[s]
        row_order.append(r)
    elif section == "COLUMNS":
        if len(t) >= 3 and t[1].strip("'").upper() == "MARKER":
            state["int"] = t[2].strip("'").upper() == "INTORG"
            return section
        if len(t) % 2 == 0:
            raise ValueError("expected column name and (row, value) pairs")
        c = t[0]
        if c not in coeffs:
            col_order.append(c)
            coeffs[c] = []
            if state["int"]:
                kinds[c] = "integer"
        for k in range(1, len(t) - 1, 2):
            coeffs[c].append((t[k], float(t[k + 1])))
    elif section == "RHS":
        start = 1 if len(t) % 2 == 1 else 0
        for k in range(start, len(t) - 1, 2):
            rhs[t[k]] = float(t[k + 1])
    elif section == "BOUNDS":
        kind, c = t[0].upper(), t[2]
        val = float(t[3]) if len(t) > 3 else None
        lo, hi = bnd.setdefault(c, [0.0, math.inf])
        if kind == "BV":
            kinds[c] = BINARY
            bnd[c] = [0.0, 1.0]
        elif kind == "UP":
            bnd[c][1] = val
        elif kind == "LO":
            bnd[c][0] = val
        elif kind == "FX":
            bnd[c] = [val, val]
        elif kind == "FR":
            bnd[c] = [-math.inf, math.inf]
        elif kind == "MI":
            bnd[c][0] = -math.inf
        elif kind == "PL":
            bnd[c][1] = math.inf
        else:
            raise FormatError(f"unsupported bound type {kind}")
    elif section in ("NAME", "OBJSENSE", "RANGES"):
        if section == "RANGES":
            raise FormatError("RANGES are not supported")
    else:
        raise FormatError(f"unexpected line in section {section}: {raw!r}")
    return section


def _mps_model(obj_row, row_sense, row_order, col_order, coeffs, rhs, bnd, kinds) -> MilpModel:
    b = ModelBuilder()
    for c in col_order:
        lo, hi = bnd.get(c, (0.0, math.inf))
        obj = sum(a for r, a in coeffs[c] if r == obj_row)
        b.var(c, kinds.get(c, CONTINUOUS), lo, hi, obj)
    rows: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    for j, c in enumerate(col_order):
        for r, a in coeffs[c]:
            if r == obj_row:
                continue
            if r not in rows:
                raise FormatError(f"unknown row {r}")
            rows[r].append((j, a))
    for r in row_order:
        b.con(rows[r], row_sense[r], rhs.get(r, 0.0), r)
    m = b.build()

    return replace(m, constant=-rhs.get(obj_row, 0.0) if obj_row else 0.0)


def export_model(model: MilpModel, fmt: str, name: str = "model") -> str:
    f = fmt.lower()
    if f == "lp":
        return write_lp(model, name)
    if f == "mps":
        return write_mps(model, name)
    raise FormatError(f"unknown format {fmt!r}")


def parse_model(text: str, fmt: str) -> MilpModel:
    f = fmt.lower()
    if f == "lp":
        return read_lp(text)
    if f == "mps":
        return read_mps(text)
    raise FormatError(f"unknown format {fmt!r}")
