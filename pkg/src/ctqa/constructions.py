"""Builders for the named machine constructions, conversions and compositions.

Every builder returns a :class:`NamedConstruction`: a machine, the
scheduler that drives it, the cutpoint it is meant to be read at and, when
known, a closed-form :class:`~ctqa.formula.Formula` for its acceptance
probability.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Sequence, Union

import numpy as np

from . import linalg as la
from .formula import Formula
from .machine import Ctqa, KCtqa, Machine, Mcqfa, machines_equal, validate
from .scheduler import (
    ConstDecider,
    DfaDecider,
    Family,
    PredicateDecider,
    RotatingWriter,
    Scheduler,
    Writer,
    deciders_disagree,
    words_up_to,
)

#: The generator (pi/2) NOT; run for time t it rotates by t*pi about the x axis.
NOT_PI_2 = la.frozen(np.pi / 2 * la.NOT)

Cutpoint = Union[int, str, Fraction]


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NamedConstruction:
    name: str
    machine: Machine
    scheduler: Optional[Scheduler]
    formula: Optional[Formula] = None
    cutpoint: Fraction = Fraction(1, 2)

    @property
    def alphabet(self):
        return self.machine.alphabet


def constructions_equal(a: NamedConstruction, b: NamedConstruction, tol: float = la.STRUCTURAL_TOL) -> bool:
    """Same machine (operators within ``tol``) and same scheduler; names and formulas are ignored."""
    return machines_equal(a.machine, b.machine, tol) and a.scheduler == b.scheduler


def _cutpoint(lam: Cutpoint) -> Fraction:
    lam = Fraction(lam)
    if not 0 < lam <= 1:
        raise ConstructionError(f"cutpoint must lie in (0, 1], got {lam}")
    return lam


def _two_state(alphabet: Sequence[str], hamiltonians: Dict[str, np.ndarray], accept="q0", reject="q1") -> Ctqa:
    return Ctqa(("q0", "q1"), tuple(alphabet), hamiltonians, "q0", {accept}, {reject})


def _checked(c: NamedConstruction) -> NamedConstruction:
    problems = validate(c.machine)
    if problems:
        raise ConstructionError(f"construction {c.name!r} is malformed: {problems}")
    return c


def build_decider_embedding(d, name: str = "decider-embed") -> NamedConstruction:
    """Two-state machine whose verdict is exactly the decider's bit (zero error).

    Every symbol rotates by ``t*pi``; the writer emits ``(4, 0, ...)`` on bit 1
    (a full turn, back to the accepting state) and ``(1, 0, ...)`` on bit 0
    (a NOT, onto the rejecting state). On the empty word no rotation happens
    and the machine accepts whatever the decider says.
    """
    machine = _two_state(d.alphabet, {s: NOT_PI_2 for s in d.alphabet})
    writer = Writer(Family("pulse", 4), Family("pulse", 1))
    return _checked(NamedConstruction(name, machine, Scheduler(d, writer), Formula("nonempty(bit)"), Fraction(1)))


def build_halting_demo(oracle: PredicateDecider) -> NamedConstruction:
    """The decider embedding driven by an injected (decidable) halting stand-in."""
    return build_decider_embedding(oracle, name="halting-demo")


def _lab_machine() -> Ctqa:
    return _two_state("ab", {"a": NOT_PI_2, "b": -NOT_PI_2})


def _uniform_writer() -> Writer:
    return Writer(Family("uniform"), Family("pulse", 1))


def build_lab(lam: Cutpoint = Fraction(1, 2)) -> NamedConstruction:
    """a^n b^m accepted with probability cos^2(pi (n - m) / (2 (n + m))); a*b*-violations rejected surely."""
    decider = DfaDecider.from_regex("a*b*", "ab")
    return _checked(
        NamedConstruction("lab", _lab_machine(), Scheduler(decider, _uniform_writer()),
                          Formula("gate(cos2(a,b))"), _cutpoint(lam))
    )


def build_balanced(lam: Cutpoint = Fraction(1, 2)) -> NamedConstruction:
    """Same machine as :func:`build_lab` behind a constant decider; order of symbols is irrelevant."""
    scheduler = Scheduler(ConstDecider(1, ("a", "b")), _uniform_writer())
    return _checked(NamedConstruction("balanced", _lab_machine(), scheduler, Formula("cos2(a,b)"), _cutpoint(lam)))


def build_last_one() -> NamedConstruction:
    """Words over {0,1} ending in 1, with zero error.

    Only the last symbol is run, for one time unit; ``1`` flips the state,
    ``0`` does nothing. Accepting is the flipped state ``q1``.
    """
    machine = _two_state("01", {"0": la.zeros(2), "1": NOT_PI_2}, accept="q1", reject="q0")
    scheduler = Scheduler(ConstDecider(1, ("0", "1")), Writer(Family("last_pulse"), Family("zero")))
    return _checked(NamedConstruction("last-one", machine, scheduler, Formula("last(1)"), Fraction(1)))


def build_concat_example(lam1: Cutpoint = 1, lam2: Cutpoint = 1) -> NamedConstruction:
    """Four-state product machine for a^n b^m followed by a {c,d}-word.

    The a/b rotations act on the low qubit, the c/d rotations on the high
    qubit; a word outside a*b*{c,d}* gets a single NOT and is rejected.
    """
    i2 = la.identity(2)
    h_ab = la.kron(i2, NOT_PI_2)
    h_cd = la.kron(NOT_PI_2, i2)
    machine = Ctqa(
        ("00", "01", "10", "11"), "abcd",
        {"a": h_ab, "b": -h_ab, "c": h_cd, "d": -h_cd},
        "00", {"00"}, {"01", "10", "11"},
    )
    scheduler = Scheduler(DfaDecider.from_regex("a*b*(c|d)*", "abcd"), _uniform_writer())
    formula = Formula("gate(mul(cos2(a,b),cos2(c,d)))")
    return _checked(NamedConstruction("concat-abcd", machine, scheduler, formula,
                                      _cutpoint(lam1) * _cutpoint(lam2)))


def _scale_ctqa(m: Ctqa, k: Fraction) -> Ctqa:
    return replace(m, hamiltonians={s: h / float(k) for s, h in m.hamiltonians.items()})


def scale_construction(c: NamedConstruction, k: Cutpoint) -> NamedConstruction:
    """Divide every Hamiltonian by ``k`` and stretch every schedule by ``k``."""
    k = Fraction(k)
    if k <= 0:
        raise ConstructionError(f"scale factor must be positive, got {k}")
    if k == 1:
        return c
    m = c.machine
    if isinstance(m, KCtqa):
        machine = KCtqa(_scale_ctqa(m.base, k), m.sweeps, m.counter_width)
    elif isinstance(m, Ctqa):
        machine = _scale_ctqa(m, k)
    else:
        raise ConstructionError("only time-controlled machines can be rescaled")
    scheduler = Scheduler(c.scheduler.decider, c.scheduler.writer.scaled(k))
    return replace(c, name=f"{c.name}-x{k}".replace("/", "_"), machine=machine, scheduler=scheduler)


def union_cutpoint(lam1: Fraction, lam2: Fraction) -> Fraction:
    """``max{l1 (1 - l2), l1 l2, (1 - l1) l2}``, exactly."""
    lam1, lam2 = Fraction(lam1), Fraction(lam2)
    return max(lam1 * (1 - lam2), lam1 * lam2, (1 - lam1) * lam2)


def _plain_ctqa(c: NamedConstruction) -> Ctqa:
    if not isinstance(c.machine, Ctqa):
        raise ConstructionError(f"{c.name!r} is not a single-pass time-controlled machine")
    return c.machine


def _pair_names(m1: Ctqa, m2: Ctqa, suffix: str = ""):
    return [f"{q},{p}{suffix}" for q in m1.states for p in m2.states]


def _union_sets(m1: Ctqa, m2: Ctqa, suffix: str = ""):
    accept = {f"{q},{p}{suffix}" for q in m1.states for p in m2.states if q in m1.accept or p in m2.accept}
    reject = {f"{q},{p}{suffix}" for q in m1.reject for p in m2.reject}
    return accept, reject


def _union_formula(c1: NamedConstruction, c2: NamedConstruction) -> Optional[Formula]:
    if c1.formula is None or c2.formula is None:
        return None
    return c1.formula.union(c2.formula)


def union_rotating(
    c1: NamedConstruction,
    c2: NamedConstruction,
    witnesses: Optional[Iterable[str]] = None,
    max_length: Optional[int] = 8,
) -> NamedConstruction:
    """Two-sweep machine accepting when either component accepts.

    The joint space is ``Q1 x Q2 x {0,1}``. Sweep one evolves the ``Q1``
    factor while the counter reads 0, sweep two evolves ``Q2`` while it
    reads 1; the two factors never entangle, so the acceptance probability
    is ``1 - (1 - p1)(1 - p2)``.

    The components' deciders must agree. They are compared on ``witnesses``
    when given, otherwise on every word up to ``max_length`` (``None``
    skips the check). The first component's decider drives the union.
    """
    m1, m2 = _plain_ctqa(c1), _plain_ctqa(c2)
    if m1.alphabet != m2.alphabet:
        raise ConstructionError(f"alphabet mismatch: {m1.alphabet} vs {m2.alphabet}")
    d1, d2 = c1.scheduler.decider, c2.scheduler.decider
    if witnesses is None and max_length is not None:
        witnesses = words_up_to(m1.alphabet, max_length)
    if witnesses is not None:
        bad = deciders_disagree(d1, d2, witnesses)
        if bad:
            raise ConstructionError(f"deciders disagree on {len(bad)} witness(es): {bad[:10]}")

    i1, i2 = la.identity(m1.dim), la.identity(m2.dim)
    on0 = la.projector(2, [0])
    on1 = la.projector(2, [1])
    hams = {
        s: la.kron(la.kron(m1.hamiltonians[s], i2), on0) + la.kron(la.kron(i1, m2.hamiltonians[s]), on1)
        for s in m1.alphabet
    }
    states = [f"{pair}:{c}" for pair in _pair_names(m1, m2) for c in (0, 1)]
    accept, reject = _union_sets(m1, m2)
    base = Ctqa(
        states, m1.alphabet, hams, f"{m1.start},{m2.start}:0",
        {f"{q}:{c}" for q in accept for c in (0, 1)},
        {f"{q}:{c}" for q in reject for c in (0, 1)},
    )
    scheduler = Scheduler(d1, RotatingWriter((c1.scheduler.writer, c2.scheduler.writer)))
    return _checked(NamedConstruction(
        "union-rot", KCtqa(base, 2), scheduler, _union_formula(c1, c2), union_cutpoint(c1.cutpoint, c2.cutpoint)
    ))


def union_shared_scheduler(c1: NamedConstruction, c2: NamedConstruction) -> NamedConstruction:
    """Single-pass union for components driven by the same scheduler.

    The generator is ``H1 x I + I x H2`` on ``Q1 x Q2``, so each step applies
    ``V x W`` and the components evolve independently.
    """
    m1, m2 = _plain_ctqa(c1), _plain_ctqa(c2)
    if m1.alphabet != m2.alphabet:
        raise ConstructionError(f"alphabet mismatch: {m1.alphabet} vs {m2.alphabet}")
    if c1.scheduler != c2.scheduler:
        raise ConstructionError("components do not share the same scheduler")
    i1, i2 = la.identity(m1.dim), la.identity(m2.dim)
    hams = {s: la.kron(m1.hamiltonians[s], i2) + la.kron(i1, m2.hamiltonians[s]) for s in m1.alphabet}
    accept, reject = _union_sets(m1, m2)
    machine = Ctqa(_pair_names(m1, m2), m1.alphabet, hams, f"{m1.start},{m2.start}", accept, reject)
    return _checked(NamedConstruction(
        "union-shared", machine, c1.scheduler, _union_formula(c1, c2), union_cutpoint(c1.cutpoint, c2.cutpoint)
    ))


def union_direct_sum(c1: NamedConstruction, c2: NamedConstruction) -> NamedConstruction:
    """Experimental: block-diagonal generator ``H1 (+) H2`` on the disjoint union of states.

    Starting in the first block, the second block is never populated, so the
    acceptance probability is that of the first component alone. This does
    not give the union; compare with :func:`union_shared_scheduler`.
    """
    m1, m2 = _plain_ctqa(c1), _plain_ctqa(c2)
    if c1.scheduler != c2.scheduler:
        raise ConstructionError("components do not share the same scheduler")
    hams = {s: la.direct_sum(m1.hamiltonians[s], m2.hamiltonians[s]) for s in m1.alphabet}
    states = [f"1.{q}" for q in m1.states] + [f"2.{p}" for p in m2.states]
    accept = {f"1.{q}" for q in m1.accept} | {f"2.{p}" for p in m2.accept}
    reject = {f"1.{q}" for q in m1.reject} | {f"2.{p}" for p in m2.reject}
    machine = Ctqa(states, m1.alphabet, hams, f"1.{m1.start}", accept, reject)
    return _checked(NamedConstruction("union-dsum", machine, c1.scheduler, c1.formula, c1.cutpoint))


def time_independent_to_mcqfa(m: Ctqa, c: Cutpoint) -> Mcqfa:
    """Freeze every generator at the constant duration ``c``: ``U_s = exp(-i H_s c)``."""
    c = Fraction(c)
    unitaries = {s: la.mat_exp_hermitian(h, c) for s, h in m.hamiltonians.items()}
    return Mcqfa(m.states, m.alphabet, unitaries, m.start, m.accept, m.reject)


# --------------------------------------------------------------------------
# registry


def _halting_oracle() -> PredicateDecider:
    return PredicateDecider.named("collatz", "01", 1000)


@dataclass(frozen=True)
class ZooEntry:
    build: Callable[[], NamedConstruction]
    description: str
    check_family: str


ZOO: Dict[str, ZooEntry] = {
    "halting-demo": ZooEntry(
        lambda: build_halting_demo(_halting_oracle()),
        "decider embedding with a bounded Collatz-halting stand-in oracle",
        "all len=1..8",
    ),
    "decider-embed": ZooEntry(
        lambda: build_decider_embedding(DfaDecider.from_regex("a*b*", "ab")),
        "decider embedding of the DFA for a*b*",
        "all len=0..8",
    ),
    "lab": ZooEntry(build_lab, "a^n b^m with cos^2 acceptance, a*b* decider", "a^n b^m; n=0..12; m=0..12"),
    "last-one": ZooEntry(build_last_one, "words ending in 1, constant decider", "all len=0..8"),
    "balanced": ZooEntry(build_balanced, "cos^2 of the symbol-count imbalance, constant decider", "all len=0..8"),
    "concat-abcd": ZooEntry(
        build_concat_example, "a^n b^m followed by a {c,d}-word", "a^n b^m c^k d^h; n,m,k,h=0..4"
    ),
    "union-rot": ZooEntry(
        lambda: union_rotating(build_lab(), scale_construction(build_lab(Fraction(3, 4)), 2)),
        "two-sweep union of the a^n b^m machine and its 2x-rescaled copy",
        "all len=0..6",
    ),
    "union-shared": ZooEntry(
        lambda: union_shared_scheduler(build_balanced(), build_balanced()),
        "single-pass union of two balanced machines sharing a scheduler",
        "all len=0..6",
    ),
}


def zoo_build(name: str) -> NamedConstruction:
    try:
        entry = ZOO[name]
    except KeyError:
        raise ConstructionError(f"unknown construction {name!r}; known: {', '.join(ZOO)}") from None
    return entry.build()
