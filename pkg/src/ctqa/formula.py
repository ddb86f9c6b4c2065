"""Closed-form acceptance probabilities as small serializable expressions.

A formula is evaluated on :class:`WordStats` (symbol counts, length, last
symbol and decider bit), never on the raw word, so order-free formulas stay
order-free. Grammar::

    expr := 'bit'
          | 'cos2' '(' sym ',' sym ')'   cos^2(pi (|x|_s - |x|_t) / (2 |x|)), 1 on the empty word
          | 'last' '(' sym ')'           1 if the word ends in sym, else 0
          | 'gate' '(' expr ')'          expr if the decider bit is 1, else 0
          | 'nonempty' '(' expr ')'      expr on non-empty words, 1 on the empty word
          | 'mul' '(' expr ',' expr ')'
          | 'union' '(' expr ',' expr ')'  1 - (1 - a)(1 - b)
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

_TOKEN = re.compile(r"[A-Za-z0-9_]+|\S")


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class WordStats:
    counts: Counter
    length: int
    last: Optional[str]
    bit: Optional[int]

    @classmethod
    def of(cls, word: str, bit: Optional[int] = None) -> "WordStats":
        return cls(Counter(word), len(word), word[-1] if word else None, bit)


_ARITY = {"bit": 0, "cos2": 2, "last": 1, "gate": 1, "nonempty": 1, "mul": 2, "union": 2}
_SYMBOL_ARGS = {"cos2", "last"}


def _tokenize(text: str):
    return [(m.start(), m.group()) for m in _TOKEN.finditer(text)]


def _parse(text: str):
    tokens = _tokenize(text)
    i = 0

    def peek():
        return tokens[i][1] if i < len(tokens) else None

    def take(expected=None):
        nonlocal i
        if i >= len(tokens):
            raise FormulaError(f"unexpected end of formula {text!r}")
        pos, tok = tokens[i]
        if expected is not None and tok != expected:
            raise FormulaError(f"expected {expected!r} at position {pos} in {text!r}, found {tok!r}")
        i += 1
        return tok

    def expr():
        name = take()
        if name not in _ARITY:
            raise FormulaError(f"unknown formula term {name!r} in {text!r}")
        arity = _ARITY[name]
        if arity == 0:
            return (name,)
        take("(")
        args = []
        for j in range(arity):
            if j:
                take(",")
            args.append(take() if name in _SYMBOL_ARGS else expr())
        take(")")
        return (name, *args)

    tree = expr()
    if peek() is not None:
        raise FormulaError(f"trailing input {peek()!r} in formula {text!r}")
    return tree


def _render(node) -> str:
    name, *args = node
    if not args:
        return name
    return f"{name}({','.join(a if isinstance(a, str) else _render(a) for a in args)})"


def _cos2(stats: WordStats, s: str, t: str) -> float:
    if stats.length == 0:
        return 1.0
    d = stats.counts[s] - stats.counts[t]
    return math.cos(math.pi * d / (2 * stats.length)) ** 2


def _eval(node, stats: WordStats) -> float:
    name = node[0]
    if name == "bit":
        if stats.bit is None:
            raise FormulaError("formula needs a decider bit")
        return float(stats.bit)
    if name == "cos2":
        return _cos2(stats, node[1], node[2])
    if name == "last":
        return float(stats.last == node[1])
    if name == "gate":
        if stats.bit is None:
            raise FormulaError("formula needs a decider bit")
        return _eval(node[1], stats) if stats.bit else 0.0
    if name == "nonempty":
        return _eval(node[1], stats) if stats.length else 1.0
    a, b = _eval(node[1], stats), _eval(node[2], stats)
    if name == "mul":
        return a * b
    return 1.0 - (1.0 - a) * (1.0 - b)


@dataclass(frozen=True)
class Formula:
    text: str
    tree: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tree = _parse(self.text)
        object.__setattr__(self, "tree", tree)
        object.__setattr__(self, "text", _render(tree))

    def __call__(self, stats: WordStats) -> float:
        return _eval(self.tree, stats)

    def __str__(self):
        return self.text

    def union(self, other: "Formula") -> "Formula":
        return Formula(f"union({self.text},{other.text})")
