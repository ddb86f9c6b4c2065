"""The line-oriented ``.ctqa`` machine file format.

Example::

    machine lab
    states: q0 q1
    start: q0
    accept: q0
    reject: q1
    alphabet: a b
    ham a = NOT_PI_2
    ham b = neg(NOT_PI_2)
    decider: regex a*b*
    writer.accept: uniform
    writer.reject: pulse 1

Optional lines: ``cutpoint: p/q``, ``formula: <expr>``, ``sweeps: k``
(k-sweep machine; states then list the joint state/counter basis and
``writer.*`` take one family per sweep separated by ``|``) and
``unitary <sym> = <expr>`` in place of ``ham`` for fixed-unitary machines,
which carry no decider or writer.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import linalg as la
from .constructions import NOT_PI_2, NamedConstruction
from .formula import Formula, FormulaError
from .machine import Ctqa, KCtqa, Mcqfa, validate
from .regex import RegexError
from .scheduler import (
    ConstDecider,
    DfaDecider,
    Family,
    PredicateDecider,
    RotatingWriter,
    ScheduleError,
    Scheduler,
    Writer,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.column = column


# --------------------------------------------------------------------------
# Hamiltonian expressions

_EXPR_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?(?:/\d+)?|-?\.\d+(?:[eE][-+]?\d+)?|\S)")


def _expr_tokens(text: str, col0: int):
    out = []
    pos = 0
    while pos < len(text):
        m = _EXPR_TOKEN.match(text, pos)
        if not m:
            break
        out.append((col0 + m.start(1), m.group(1)))
        pos = m.end()
    return out


class _ExprParser:
    def __init__(self, text: str, line: int, col0: int):
        self.tokens = _expr_tokens(text, col0)
        self.i = 0
        self.line = line
        self.end_col = col0 + len(text)

    def error(self, message: str):
        col = self.tokens[self.i][0] if self.i < len(self.tokens) else self.end_col
        return ParseError(message, self.line, col + 1)

    def peek(self):
        return self.tokens[self.i][1] if self.i < len(self.tokens) else None

    def take(self, expected: Optional[str] = None) -> str:
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise self.error(f"expected {expected or 'a term'!r}, found {tok or 'end of line'!r}")
        self.i += 1
        return tok

    def number(self) -> float:
        tok = self.take()
        try:
            value = float(Fraction(tok))
        except (ValueError, ZeroDivisionError):
            self.i -= 1
            raise self.error(f"expected a number, found {tok!r}") from None
        if self.peek() == "pi":
            self.take()
            value *= math.pi
        return value

    def integer(self) -> int:
        tok = self.take()
        if not tok.isdigit() or int(tok) <= 0:
            self.i -= 1
            raise self.error(f"expected a positive integer, found {tok!r}")
        return int(tok)

    def parse(self) -> np.ndarray:
        m = self.expr()
        if self.peek() is not None:
            raise self.error(f"unexpected {self.peek()!r}")
        return m

    def expr(self) -> np.ndarray:
        tok = self.take()
        if tok == "NOT_PI_2":
            return np.array(NOT_PI_2)
        if tok in ("I", "ZERO"):
            self.take("(")
            n = self.integer()
            self.take(")")
            return la.identity(n) if tok == "I" else la.zeros(n)
        if tok == "neg":
            self.take("(")
            m = self.expr()
            self.take(")")
            return -m
        if tok == "scale":
            self.take("(")
            m = self.expr()
            self.take(",")
            factor = self.number()
            self.take(")")
            return factor * m
        if tok in ("kron", "dsum"):
            self.take("(")
            a = self.expr()
            self.take(",")
            b = self.expr()
            self.take(")")
            return la.kron(a, b) if tok == "kron" else la.direct_sum(a, b)
        if tok == "matrix":
            return self.matrix()
        self.i -= 1
        raise self.error(f"unknown Hamiltonian term {tok!r}")

    def rows(self, n: int) -> List[List[float]]:
        rows = [[]]
        while self.peek() not in ("|", "]", None):
            if self.peek() == ";":
                self.take()
                rows.append([])
            else:
                rows[-1].append(self.number())
        if len(rows) != n or any(len(r) != n for r in rows):
            raise self.error(f"matrix block must be {n}x{n}, got rows of lengths {[len(r) for r in rows]}")
        return rows

    def matrix(self) -> np.ndarray:
        n = self.integer()
        self.take("[")
        re_part = self.rows(n)
        self.take("|")
        im_part = self.rows(n)
        self.take("]")
        return np.array(re_part) + 1j * np.array(im_part)


def parse_hamiltonian(text: str, line: int = 0, column: int = 0) -> np.ndarray:
    return _ExprParser(text, line, column).parse()


def _format_number(x: float) -> str:
    if x == 0:
        return "0"
    r = Fraction(x / math.pi).limit_denominator(10**6)
    if r != 0 and float(r) * math.pi == x:
        return f"{r} pi"
    q = Fraction(x)
    if q.denominator <= 10**6:
        return str(q)
    return repr(x)


def _matrix_literal(m: np.ndarray) -> str:
    def block(part):
        return "; ".join(" ".join(_format_number(float(x)) for x in row) for row in part)

    return f"matrix {m.shape[0]} [{block(m.real)} | {block(m.imag)}]"


def _named_generators(dim: int):
    i2 = la.identity(2)
    if dim == 2:
        yield "NOT_PI_2", NOT_PI_2
    elif dim == 4:
        yield "kron(I(2),NOT_PI_2)", la.kron(i2, NOT_PI_2)
        yield "kron(NOT_PI_2,I(2))", la.kron(NOT_PI_2, i2)


def format_hamiltonian(h: np.ndarray) -> str:
    """Shortest expression reproducing ``h`` exactly; a matrix literal otherwise."""
    n = h.shape[0]
    if not np.any(h):
        return f"ZERO({n})"
    for text, g in _named_generators(n):
        pivot = np.unravel_index(np.argmax(np.abs(g)), g.shape)
        r = Fraction(float((h[pivot] / g[pivot]).real)).limit_denominator(10**6)
        if r == 0:
            continue
        candidate = g * abs(r)
        if r < 0:
            candidate = -candidate
        if np.array_equal(candidate, h) or float(np.max(np.abs(candidate - h))) <= 1e-15:
            expr = text if abs(r) == 1 else f"scale({text}, {abs(r)})"
            return expr if r > 0 else f"neg({expr})"
    return _matrix_literal(h)


# --------------------------------------------------------------------------
# machine files

_KNOWN_KEYS = ("machine", "states", "start", "accept", "reject", "alphabet", "decider",
               "writer.accept", "writer.reject", "cutpoint", "formula", "sweeps")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_decider(text: str, alphabet, line: int, col: int):
    kind, _, rest = text.strip().partition(" ")
    rest = rest.strip()
    try:
        if kind == "regex":
            return DfaDecider.from_regex(rest, alphabet)
        if kind == "const":
            if rest not in ("0", "1"):
                raise ParseError(f"constant decider needs 0 or 1, got {rest!r}", line, col)
            return ConstDecider(int(rest), alphabet)
        if kind == "predicate":
            parts = rest.split()
            if not parts or len(parts) > 2:
                raise ParseError("predicate decider needs a name and an optional integer", line, col)
            param = int(parts[1]) if len(parts) == 2 else None
            return PredicateDecider.named(parts[0], alphabet, param)
    except RegexError as e:
        offset = text.index(rest) if rest else len(text)
        raise ParseError(str(e), line, col + offset + e.position) from None
    except (ScheduleError, ValueError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), line, col) from None
    raise ParseError(f"unknown decider kind {kind!r}", line, col)


def _parse_families(text: str, line: int, col: int) -> List[Family]:
    try:
        return [Family.parse(part) for part in text.split("|")]
    except ScheduleError as e:
        raise ParseError(str(e), line, col) from None


def parse_machine_file(text: str, validate_machine: bool = True) -> NamedConstruction:
    """Parse a ``.ctqa`` file into a construction.

    With ``validate_machine`` (the default) a file whose machine violates
    any invariant is rejected.
    """
    fields: Dict[str, Tuple[str, int, int]] = {}
    hams: Dict[str, Tuple[str, int, int]] = {}
    unitaries: Dict[str, Tuple[str, int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        m = re.match(r"(ham|unitary)\s+(\S+)\s*=", body)
        if m:
            target = hams if m.group(1) == "ham" else unitaries
            sym = m.group(2)
            if sym in target:
                raise ParseError(f"duplicate {m.group(1)} for symbol {sym!r}", lineno, indent + 1)
            target[sym] = (body[m.end():], lineno, indent + m.end())
            continue
        m = re.match(r"machine\s+(\S+)\s*$", body)
        if m:
            key, value, vcol = "machine", m.group(1), indent + m.start(1)
        else:
            m = re.match(r"([A-Za-z.]+)\s*:", body)
            if not m or m.group(1) not in _KNOWN_KEYS:
                raise ParseError(f"unrecognized line {body!r}", lineno, indent + 1)
            key, value, vcol = m.group(1), body[m.end():], indent + m.end()
        if key in fields:
            raise ParseError(f"duplicate {key!r} line", lineno, indent + 1)
        fields[key] = (value, lineno, vcol)

    def need(key: str):
        if key not in fields:
            raise ParseError(f"missing '{key}{'' if key == 'machine' else ':'}' section")
        return fields[key]

    name = need("machine")[0]
    states = need("states")[0].split()
    start_text, start_line, start_col = need("start")
    start = start_text.strip()
    accept = need("accept")[0].split()
    reject = fields.get("reject", ("", 0, 0))[0].split()
    alphabet_text, alpha_line, alpha_col = need("alphabet")
    alphabet = alphabet_text.split()
    if not states:
        raise ParseError("empty state list", fields["states"][1], fields["states"][2] + 1)
    for sym in alphabet:
        if len(sym) != 1:
            raise ParseError(f"alphabet symbol {sym!r} must be a single character", alpha_line, alpha_col + 1)
    for key, names in (("start", [start]), ("accept", accept), ("reject", reject)):
        for q in names:
            if q not in states:
                _, ln, col = fields[key]
                raise ParseError(f"{key}: undeclared state {q!r}", ln, col + 1)

    if hams and unitaries:
        raise ParseError("a file holds either 'ham' or 'unitary' lines, not both")
    ops_src = hams or unitaries
    kind = "ham" if hams else "unitary"
    ops: Dict[str, np.ndarray] = {}
    for sym, (expr, ln, col) in ops_src.items():
        if sym not in alphabet:
            raise ParseError(f"{kind} for undeclared symbol {sym!r}", ln, 1)
        try:
            mat = parse_hamiltonian(expr, ln, col)
        except la.LinalgError as e:
            raise ParseError(str(e), ln, col + 1) from None
        if mat.shape != (len(states), len(states)):
            raise ParseError(
                f"{kind} {sym}: dimension {mat.shape[0]} does not match {len(states)} states", ln, col + 1
            )
        if kind == "ham":
            defect = la.hermitian_defect(mat)
            if defect > la.STRUCTURAL_TOL:
                raise ParseError(f"ham {sym}: not Hermitian (max asymmetry {defect:.3e})", ln, col + 1)
        ops[sym] = mat
    for sym in alphabet:
        if sym not in ops:
            raise ParseError(f"missing '{kind} {sym}' line", alpha_line, alpha_col + 1)

    formula = None
    if "formula" in fields:
        ftext, ln, col = fields["formula"]
        try:
            formula = Formula(ftext.strip())
        except FormulaError as e:
            raise ParseError(str(e), ln, col + 1) from None
    cutpoint = Fraction(1, 2)
    if "cutpoint" in fields:
        ctext, ln, col = fields["cutpoint"]
        try:
            cutpoint = Fraction(ctext.strip())
        except ValueError:
            raise ParseError(f"bad cutpoint {ctext.strip()!r}", ln, col + 1) from None
        if not 0 < cutpoint <= 1:
            raise ParseError(f"cutpoint must lie in (0, 1], got {cutpoint}", ln, col + 1)

    if kind == "unitary":
        for key in ("decider", "writer.accept", "writer.reject", "sweeps"):
            if key in fields:
                raise ParseError(f"'{key}' does not apply to a fixed-unitary machine", fields[key][1], 1)
        machine = Mcqfa(states, alphabet, ops, start, accept, reject)
        construction = NamedConstruction(name, machine, None, formula, cutpoint)
    else:
        dtext, ln, col = need("decider")
        decider = _parse_decider(dtext, tuple(alphabet), ln, col + 1)
        sweeps = 1
        if "sweeps" in fields:
            stext, sl, sc = fields["sweeps"]
            if not stext.strip().isdigit() or int(stext) < 2:
                raise ParseError(f"sweeps must be an integer >= 2, got {stext.strip()!r}", sl, sc + 1)
            sweeps = int(stext)
        acc = _parse_families(need("writer.accept")[0], *fields["writer.accept"][1:])
        rej = _parse_families(need("writer.reject")[0], *fields["writer.reject"][1:])
        for fam, key in ((acc, "writer.accept"), (rej, "writer.reject")):
            if len(fam) not in (1, sweeps):
                raise ParseError(f"{key}: expected 1 or {sweeps} families, got {len(fam)}", fields[key][1], 1)
        acc = acc * sweeps if len(acc) == 1 else acc
        rej = rej * sweeps if len(rej) == 1 else rej
        writers = [Writer(a, r) for a, r in zip(acc, rej)]
        base = Ctqa(states, alphabet, ops, start, accept, reject)
        if sweeps == 1:
            machine, writer = base, writers[0]
        else:
            machine, writer = KCtqa(base, sweeps), RotatingWriter(tuple(writers))
        construction = NamedConstruction(name, machine, Scheduler(decider, writer), formula, cutpoint)

    if validate_machine:
        problems = validate(construction.machine)
        if problems:
            raise ParseError("invalid machine: " + "; ".join(problems))
    return construction


def _format_decider(d) -> str:
    if isinstance(d, DfaDecider):
        if d.pattern is None:
            raise ValueError("DFA decider without a source pattern cannot be serialized")
        return f"regex {d.pattern}"
    if isinstance(d, ConstDecider):
        return f"const {d.bit}"
    if isinstance(d, PredicateDecider):
        if d.name not in ("even-length", "collatz"):
            raise ValueError(f"predicate {d.name!r} is not registered and cannot be serialized")
        return f"predicate {d.name}" + ("" if d.param is None else f" {d.param}")
    raise TypeError(f"cannot serialize decider {type(d).__name__}")


def serialize_machine(c: NamedConstruction) -> str:
    m = c.machine
    base = m.base if isinstance(m, KCtqa) else m
    lines = [
        f"machine {c.name}",
        f"states: {' '.join(base.states)}",
        f"start: {base.start}",
        f"accept: {' '.join(q for q in base.states if q in base.accept)}",
        f"reject: {' '.join(q for q in base.states if q in base.reject)}",
        f"alphabet: {' '.join(base.alphabet)}",
    ]
    if isinstance(m, KCtqa):
        lines.append(f"sweeps: {m.sweeps}")
    if isinstance(base, Mcqfa):
        lines += [f"unitary {s} = {_matrix_literal(u)}" for s, u in base.unitaries.items()]
    else:
        lines += [f"ham {s} = {format_hamiltonian(h)}" for s, h in base.hamiltonians.items()]
        s = c.scheduler
        writers = s.writer.per_sweep if isinstance(s.writer, RotatingWriter) else (s.writer,)
        lines.append(f"decider: {_format_decider(s.decider)}")
        lines.append("writer.accept: " + " | ".join(str(w.accept) for w in writers))
        lines.append("writer.reject: " + " | ".join(str(w.reject) for w in writers))
    lines.append(f"cutpoint: {c.cutpoint}")
    if c.formula is not None:
        lines.append(f"formula: {c.formula}")
    return "\n".join(lines) + "\n"
