"""Regular expressions over a declared alphabet, compiled to total DFAs.

Syntax: single-character literals, juxtaposition for concatenation, ``|``,
postfix ``*``, parentheses and ``{c,d}`` as sugar for ``(c|d)``.
Whitespace is ignored and the empty pattern denotes the empty word.

Compilation is Thompson's construction followed by the subset construction;
the resulting DFA is totalised with a sink state but not minimised.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple


class RegexError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


# AST nodes are tuples: ("eps",), ("sym", c), ("cat", l, r), ("alt", l, r), ("star", x)


class _Parser:
    def __init__(self, pattern: str, alphabet: Sequence[str]):
        self.tokens = [(i, ch) for i, ch in enumerate(pattern) if not ch.isspace()]
        self.pos = 0
        self.end = len(pattern)
        self.alphabet = set(alphabet)

    def peek(self):
        return self.tokens[self.pos][1] if self.pos < len(self.tokens) else None

    def where(self) -> int:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else self.end

    def take(self, expected=None):
        ch = self.peek()
        if ch is None or (expected is not None and ch != expected):
            want = repr(expected) if expected else "a symbol"
            got = repr(ch) if ch is not None else "end of pattern"
            raise RegexError(f"expected {want}, found {got}", self.where())
        self.pos += 1
        return ch

    def parse(self):
        node = self.alternation()
        if self.peek() is not None:
            raise RegexError(f"unexpected {self.peek()!r}", self.where())
        return node

    def alternation(self):
        node = self.concatenation()
        while self.peek() == "|":
            self.take("|")
            node = ("alt", node, self.concatenation())
        return node

    def concatenation(self):
        node = ("eps",)
        first = True
        while self.peek() is not None and self.peek() not in "|)":
            item = self.starred()
            node = item if first else ("cat", node, item)
            first = False
        return node

    def starred(self):
        node = self.atom()
        while self.peek() == "*":
            self.take("*")
            node = ("star", node)
        return node

    def atom(self):
        ch = self.peek()
        if ch == "(":
            self.take("(")
            node = self.alternation()
            self.take(")")
            return node
        if ch == "{":
            return self.char_class()
        if ch is None or ch in "|)*},":
            got = repr(ch) if ch is not None else "end of pattern"
            raise RegexError(f"unexpected {got}", self.where())
        return self.literal()

    def literal(self):
        at = self.where()
        ch = self.take()
        if ch not in self.alphabet:
            raise RegexError(f"symbol {ch!r} is not in the declared alphabet", at)
        return ("sym", ch)

    def char_class(self):
        self.take("{")
        node = self.literal()
        while self.peek() == ",":
            self.take(",")
            node = ("alt", node, self.literal())
        self.take("}")
        return node


def parse_regex(pattern: str, alphabet: Sequence[str]):
    """Parse ``pattern`` into a tuple AST; raises :class:`RegexError`."""
    return _Parser(pattern, alphabet).parse()


@dataclass
class _Nfa:
    # eps[s] and moves[s] = list of (symbol, target)
    eps: List[List[int]]
    moves: List[List[Tuple[str, int]]]

    def new_state(self) -> int:
        self.eps.append([])
        self.moves.append([])
        return len(self.eps) - 1


def _thompson(node, nfa: _Nfa) -> Tuple[int, int]:
    kind = node[0]
    start, accept = nfa.new_state(), nfa.new_state()
    if kind == "eps":
        nfa.eps[start].append(accept)
    elif kind == "sym":
        nfa.moves[start].append((node[1], accept))
    elif kind == "cat":
        s1, a1 = _thompson(node[1], nfa)
        s2, a2 = _thompson(node[2], nfa)
        nfa.eps[start].append(s1)
        nfa.eps[a1].append(s2)
        nfa.eps[a2].append(accept)
    elif kind == "alt":
        for child in node[1:]:
            s, a = _thompson(child, nfa)
            nfa.eps[start].append(s)
            nfa.eps[a].append(accept)
    elif kind == "star":
        s, a = _thompson(node[1], nfa)
        nfa.eps[start] += [s, accept]
        nfa.eps[a] += [s, accept]
    else:  # pragma: no cover
        raise AssertionError(kind)
    return start, accept


def _closure(nfa: _Nfa, states) -> FrozenSet[int]:
    seen: Set[int] = set(states)
    stack = list(states)
    while stack:
        for t in nfa.eps[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def compile_regex(pattern: str, alphabet: Sequence[str]):
    """Compile to ``(transitions, start, accepting, n_states)``.

    ``transitions`` maps ``(state, symbol)`` to a state for every state and
    every alphabet symbol. State 0 is the start; the sink, when needed, is
    the last state.
    """
    alphabet = list(alphabet)
    ast = parse_regex(pattern, alphabet)
    nfa = _Nfa([], [])
    n_start, n_accept = _thompson(ast, nfa)

    first = _closure(nfa, [n_start])
    index: Dict[FrozenSet[int], int] = {first: 0}
    order = [first]
    transitions: Dict[Tuple[int, str], int] = {}
    i = 0
    while i < len(order):
        current = order[i]
        for sym in alphabet:
            targets = [t for s in current for (c, t) in nfa.moves[s] if c == sym]
            nxt = _closure(nfa, targets)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            transitions[(i, sym)] = index[nxt]
        i += 1
    # The empty subset, if reached, is already a total sink state.
    accepting = frozenset(k for k, subset in enumerate(order) if n_accept in subset)
    return transitions, 0, accepting, len(order)
