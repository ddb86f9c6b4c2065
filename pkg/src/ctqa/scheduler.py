"""Schedulers: a decider picks a bit, a writer turns (bit, length) into durations.

Durations are exact :class:`fractions.Fraction` values. They are converted
to floating point only when multiplied into a Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, FrozenSet, Iterable, Optional, Sequence, Tuple, Union

from .regex import compile_regex

RationalLike = Union[int, str, Fraction]


class ScheduleError(ValueError):
    pass


def rational(value: RationalLike) -> Fraction:
    """Exact non-negative rational from an int, ``Fraction`` or ``"p/q"`` string."""
    if isinstance(value, float):
        raise TypeError("durations must be exact rationals, not floats")
    q = Fraction(value)
    if q < 0:
        raise ScheduleError(f"negative duration {q}")
    return q


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


class TimeSchedule(tuple):
    """Immutable sequence of non-negative rational durations."""

    def __new__(cls, entries: Iterable[RationalLike] = ()):
        return super().__new__(cls, (rational(e) for e in entries))

    def __repr__(self):
        return f"TimeSchedule({', '.join(str(e) for e in self)})"

    def __str__(self):
        return ";".join(format_rational(e) for e in self)

    def __add__(self, other):
        return TimeSchedule(tuple(self) + tuple(other))

    @classmethod
    def parse(cls, text: str) -> "TimeSchedule":
        text = text.strip()
        return cls(Fraction(part) for part in text.split(";")) if text else cls()


def scale_schedule(ts: Sequence[RationalLike], k: RationalLike) -> TimeSchedule:
    """Multiply every duration by the positive rational ``k``."""
    k = Fraction(k)
    if k <= 0:
        raise ScheduleError(f"scale factor must be positive, got {k}")
    return TimeSchedule(Fraction(e) * k for e in ts)


def rotation_schedule(per_sweep: Sequence[Sequence[RationalLike]], k: int) -> TimeSchedule:
    """Schedule for a k-sweep machine: each sweep framed by two endmarker zeros."""
    if len(per_sweep) != k:
        raise ScheduleError(f"expected {k} sweep schedules, got {len(per_sweep)}")
    lengths = {len(s) for s in per_sweep}
    if len(lengths) > 1:
        raise ScheduleError(f"ragged sweep schedules with lengths {sorted(lengths)}")
    out = []
    for sweep in per_sweep:
        out.append(0)
        out.extend(sweep)
        out.append(0)
    return TimeSchedule(out)


# --------------------------------------------------------------------------
# deciders


def _check_word(word: str, alphabet: Sequence[str]) -> None:
    allowed = set(alphabet)
    for i, ch in enumerate(word):
        if ch not in allowed:
            raise ScheduleError(f"symbol {ch!r} at position {i} is not in the alphabet {list(alphabet)}")


@dataclass(frozen=True)
class DfaDecider:
    """Total DFA over ``alphabet``; ``transitions`` is a sorted tuple of ``((state, sym), target)``."""

    alphabet: Tuple[str, ...]
    transitions: Tuple[Tuple[Tuple[int, str], int], ...]
    start: int
    accepting: FrozenSet[int]
    pattern: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        table = dict(self.transitions)
        states = {self.start} | {s for s, _ in table} | set(table.values())
        missing = [(s, c) for s in sorted(states) for c in self.alphabet if (s, c) not in table]
        if missing:
            raise ScheduleError(f"DFA transition table is not total; missing {missing[:5]}")
        object.__setattr__(self, "_table", table)

    @classmethod
    def from_regex(cls, pattern: str, alphabet: Sequence[str]) -> "DfaDecider":
        transitions, start, accepting, _ = compile_regex(pattern, alphabet)
        return cls(tuple(alphabet), tuple(sorted(transitions.items())), start, accepting, pattern)

    @property
    def n_states(self) -> int:
        return len({s for (s, _), _ in self.transitions})

    def __call__(self, word: str) -> int:
        return dfa_accepts(self, word)


def dfa_accepts(d: DfaDecider, word: str) -> int:
    state = d.start
    table = d._table
    for ch in word:
        try:
            state = table[(state, ch)]
        except KeyError:
            raise ScheduleError(f"symbol {ch!r} is not in the alphabet {list(d.alphabet)}") from None
    return int(state in d.accepting)


@dataclass(frozen=True)
class ConstDecider:
    bit: int
    alphabet: Tuple[str, ...]

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ScheduleError(f"constant decider bit must be 0 or 1, got {self.bit}")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    def __call__(self, word: str) -> int:
        return self.bit


@dataclass(frozen=True)
class PredicateDecider:
    """Decider backed by an injected total predicate ``word -> bool``.

    ``name`` and ``param`` identify the predicate for equality and for the
    file format; predicates from :data:`PREDICATES` can be rebuilt by name.
    """

    predicate: Callable[[str], bool] = field(compare=False)
    alphabet: Tuple[str, ...]
    name: str = "predicate"
    param: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))

    def __call__(self, word: str) -> int:
        return int(bool(self.predicate(word)))

    @classmethod
    def named(cls, name: str, alphabet: Sequence[str], param: Optional[int] = None) -> "PredicateDecider":
        try:
            factory = PREDICATES[name]
        except KeyError:
            raise ScheduleError(f"unknown predicate {name!r}; known: {sorted(PREDICATES)}") from None
        return cls(factory(param), tuple(alphabet), name, param)


def collatz_halts(budget: Optional[int]) -> Callable[[str], bool]:
    """Bounded halting stand-in: does the Collatz map from ``int(word, 2)`` reach 1 within ``budget`` steps."""
    budget = 1000 if budget is None else budget

    def halts(word: str) -> bool:
        n = int(word, 2) if word else 0
        for _ in range(budget + 1):
            if n == 1:
                return True
            if n == 0:
                return False
            n = n // 2 if n % 2 == 0 else 3 * n + 1
        return False

    return halts


PREDICATES: Dict[str, Callable[[Optional[int]], Callable[[str], bool]]] = {
    "even-length": lambda _param: (lambda word: len(word) % 2 == 0),
    "collatz": collatz_halts,
}

Decider = Union[DfaDecider, ConstDecider, PredicateDecider]


def decide(d: Decider, word: str) -> int:
    _check_word(word, d.alphabet)
    return d(word)


def deciders_disagree(d1: Decider, d2: Decider, words: Iterable[str]):
    """Words on which two deciders output different bits."""
    return [w for w in words if d1(w) != d2(w)]


def words_up_to(alphabet: Sequence[str], max_length: int):
    """All words of length ``0..max_length`` in length-then-lexicographic order."""
    for n in range(max_length + 1):
        for letters in product(alphabet, repeat=n):
            yield "".join(letters)


# --------------------------------------------------------------------------
# writers

_FAMILY_PARAM_DEFAULT = {"uniform": 1, "last_pulse": 1, "pulse": None, "const": None, "zero": None}


@dataclass(frozen=True)
class Family:
    """Named schedule family.

    ``uniform c``  -> ``(c/n, ..., c/n)``        (``c`` defaults to 1)
    ``pulse p``    -> ``(p, 0, ..., 0)``
    ``last_pulse c`` -> ``(0, ..., 0, c)``      (``c`` defaults to 1)
    ``const p``    -> ``(p, ..., p)``
    ``zero``       -> ``(0, ..., 0)``
    """

    kind: str
    param: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind not in _FAMILY_PARAM_DEFAULT:
            raise ScheduleError(f"unknown schedule family {self.kind!r}")
        param = self.param
        if param is None:
            param = _FAMILY_PARAM_DEFAULT[self.kind]
            if param is None and self.kind in ("pulse", "const"):
                raise ScheduleError(f"family {self.kind!r} needs a duration parameter")
        elif self.kind == "zero":
            raise ScheduleError("family 'zero' takes no parameter")
        object.__setattr__(self, "param", None if param is None else rational(param))

    def emit(self, n: int) -> TimeSchedule:
        if n < 0:
            raise ScheduleError(f"length must be non-negative, got {n}")
        if n == 0:
            return TimeSchedule()
        p = self.param
        if self.kind == "uniform":
            return TimeSchedule([p / n] * n)
        if self.kind == "pulse":
            return TimeSchedule([p] + [0] * (n - 1))
        if self.kind == "last_pulse":
            return TimeSchedule([0] * (n - 1) + [p])
        if self.kind == "const":
            return TimeSchedule([p] * n)
        return TimeSchedule([0] * n)

    def scaled(self, k: Fraction) -> "Family":
        if self.kind == "zero":
            return self
        return Family(self.kind, self.param * k)

    def __str__(self):
        if self.param is None or self.param == _FAMILY_PARAM_DEFAULT[self.kind]:
            return self.kind
        return f"{self.kind} {self.param}"

    @classmethod
    def parse(cls, text: str) -> "Family":
        parts = text.split()
        if not parts:
            raise ScheduleError("empty schedule family")
        if len(parts) > 2:
            raise ScheduleError(f"too many parameters in family {text!r}")
        kind = parts[0]
        if kind not in _FAMILY_PARAM_DEFAULT:
            raise ScheduleError(f"unknown schedule family {kind!r}")
        param = None
        if len(parts) == 2:
            try:
                param = Fraction(parts[1])
            except ValueError:
                raise ScheduleError(f"bad duration {parts[1]!r} in family {text!r}") from None
        return cls(kind, param)


@dataclass(frozen=True)
class CallableFamily:
    """Extension point: arbitrary per-position schedule ``n -> durations``."""

    fn: Callable[[int], Sequence[RationalLike]] = field(compare=False)
    name: str = "custom"
    factor: Fraction = Fraction(1)

    def emit(self, n: int) -> TimeSchedule:
        out = scale_schedule(self.fn(n), self.factor)
        if len(out) != n:
            raise ScheduleError(f"family {self.name!r} emitted {len(out)} entries for length {n}")
        return out

    def scaled(self, k: Fraction) -> "CallableFamily":
        return CallableFamily(self.fn, self.name, self.factor * k)


@dataclass(frozen=True)
class Writer:
    accept: Family
    reject: Family

    @property
    def sweeps(self) -> int:
        return 1

    def emit(self, bit: int, n: int) -> TimeSchedule:
        return writer_emit(self, bit, n)

    def scaled(self, k: RationalLike) -> "Writer":
        k = Fraction(k)
        if k <= 0:
            raise ScheduleError(f"scale factor must be positive, got {k}")
        return Writer(self.accept.scaled(k), self.reject.scaled(k))


def writer_emit(w: Writer, bit: int, n: int) -> TimeSchedule:
    return (w.accept if bit else w.reject).emit(n)


@dataclass(frozen=True)
class RotatingWriter:
    """Writer of a k-sweep machine: one component writer per sweep."""

    per_sweep: Tuple[Writer, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_sweep", tuple(self.per_sweep))
        if len(self.per_sweep) < 2:
            raise ScheduleError("a rotating writer needs at least two sweeps")

    @property
    def sweeps(self) -> int:
        return len(self.per_sweep)

    def emit(self, bit: int, n: int) -> TimeSchedule:
        return rotation_schedule([w.emit(bit, n) for w in self.per_sweep], self.sweeps)

    def scaled(self, k: RationalLike) -> "RotatingWriter":
        return RotatingWriter(tuple(w.scaled(k) for w in self.per_sweep))


@dataclass(frozen=True)
class Scheduler:
    decider: Decider
    writer: Union[Writer, RotatingWriter]

    @property
    def alphabet(self) -> Tuple[str, ...]:
        return self.decider.alphabet

    def __call__(self, word: str) -> Tuple[int, TimeSchedule]:
        return schedule(self, word)


def schedule(s: Scheduler, word: str) -> Tuple[int, TimeSchedule]:
    """Run the decider on ``word``, then the writer on (bit, ``len(word)``)."""
    bit = decide(s.decider, word)
    return bit, s.writer.emit(bit, len(word))
