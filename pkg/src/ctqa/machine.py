"""Machine descriptions and their evolution and measurement semantics.

Three machine kinds share one shape (ordered states, ordered alphabet,
start state, accepting and rejecting sets):

* :class:`Ctqa` carries a Hermitian generator per symbol; each step evolves
  for a duration taken from the time-schedule.
* :class:`Mcqfa` carries a fixed unitary per symbol.
* :class:`KCtqa` wraps a :class:`Ctqa` over the joint basis of inner states
  and a sweep counter, scanned ``sweeps`` times around a circular tape.

The basis index of a state is its position in ``states``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import linalg as la
from .scheduler import TimeSchedule, rational


class MachineError(ValueError):
    pass


def _freeze_ops(ops: Mapping[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return {sym: la.frozen(m) for sym, m in ops.items()}


@dataclass(frozen=True, eq=False)
class _Base:
    states: Tuple[str, ...]
    alphabet: Tuple[str, ...]

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise MachineError(f"unknown state {state!r}") from None

    @property
    def dim(self) -> int:
        return len(self.states)

    def _indices(self, names) -> List[int]:
        return [i for i, q in enumerate(self.states) if q in names]

    @cached_property
    def accept_indices(self) -> List[int]:
        return self._indices(self.accept)

    @cached_property
    def reject_indices(self) -> List[int]:
        return self._indices(self.reject)

    def initial_state(self) -> np.ndarray:
        return la.basis_state(self.dim, self.index(self.start))

    def check_word(self, word: str) -> None:
        allowed = set(self.alphabet)
        for i, ch in enumerate(word):
            if ch not in allowed:
                raise MachineError(f"unknown symbol {ch!r} at position {i}")


@dataclass(frozen=True, eq=False)
class Ctqa(_Base):
    hamiltonians: Dict[str, np.ndarray]
    start: str
    accept: frozenset
    reject: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "hamiltonians", _freeze_ops(self.hamiltonians))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "reject", frozenset(self.reject))

    @cached_property
    def spectra(self) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
        """Per-symbol eigendecomposition, computed once and reused by every step."""
        return {sym: la.eigh(h) for sym, h in self.hamiltonians.items()}

    def propagator(self, symbol: str, t) -> np.ndarray:
        if symbol not in self.hamiltonians:
            raise MachineError(f"unknown symbol {symbol!r}")
        if t == 0:
            return la.identity(self.dim)
        w, v = self.spectra[symbol]
        return la.spectral_exp(w, v, float(t))


@dataclass(frozen=True, eq=False)
class Mcqfa(_Base):
    unitaries: Dict[str, np.ndarray]
    start: str
    accept: frozenset
    reject: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "unitaries", _freeze_ops(self.unitaries))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "reject", frozenset(self.reject))


@dataclass(frozen=True, eq=False)
class KCtqa:
    """k-sweep machine on the joint space of inner states and a counter.

    ``base`` lives on the joint basis with the counter as the least
    significant factor: basis index ``i`` holds counter value
    ``i % 2**counter_width``. Endmarkers are implicit; they never appear in
    the alphabet or in input words.
    """

    base: Ctqa
    sweeps: int
    counter_width: Optional[int] = None

    def __post_init__(self):
        if self.counter_width is None:
            object.__setattr__(self, "counter_width", max(self.sweeps, 1).bit_length() - 1)

    @property
    def states(self):
        return self.base.states

    @property
    def alphabet(self):
        return self.base.alphabet

    @property
    def counter_size(self) -> int:
        return 2 ** self.counter_width

    @property
    def final_counter(self) -> int:
        return self.sweeps % self.counter_size

    def counter_of(self, index: int) -> int:
        return index % self.counter_size

    def increment(self, v: np.ndarray) -> np.ndarray:
        """Shift every counter value ``c`` to ``c + 1`` modulo the counter size."""
        c = self.counter_size
        blocks = v.reshape(-1, c)
        return np.roll(blocks, 1, axis=1).reshape(-1)


Machine = Union[Ctqa, Mcqfa, KCtqa]


@dataclass(frozen=True)
class RunOutcome:
    p_accept: float
    p_reject: float
    p_neutral: float
    final_state: np.ndarray = field(repr=False, compare=False)

    def __iter__(self):
        return iter((self.p_accept, self.p_reject, self.p_neutral))


def _clean(p: float) -> float:
    # Probabilities within the structural tolerance of 0 or 1 are reported exactly.
    if p < la.STRUCTURAL_TOL:
        return 0.0
    if p > 1 - la.STRUCTURAL_TOL:
        return 1.0
    return p


def _readout(v: np.ndarray, accept: Sequence[int], reject: Sequence[int]) -> RunOutcome:
    probs = np.abs(v) ** 2
    total = float(np.sum(probs))
    if abs(total - 1.0) > la.BEHAVIOURAL_TOL:
        raise MachineError(f"state norm drifted to {total!r}")
    pa = _clean(float(np.sum(probs[list(accept)])))
    pr = _clean(float(np.sum(probs[list(reject)])))
    pn = _clean(max(0.0, 1.0 - pa - pr))
    v = v.copy()
    v.flags.writeable = False
    return RunOutcome(pa, pr, pn, v)


def step(m: Ctqa, v: np.ndarray, symbol: str, t) -> np.ndarray:
    """One evolution step ``exp(-i H_symbol t) |v>``."""
    t = rational(t) if not isinstance(t, float) else t
    if t < 0:
        raise MachineError(f"negative duration {t}")
    return m.propagator(symbol, t) @ np.asarray(v, dtype=complex)


def _runs(word: str, schedule: Sequence[Fraction]):
    """Merge consecutive equal symbols; their propagators commute and add."""
    out: List[Tuple[str, Fraction]] = []
    for sym, t in zip(word, schedule):
        if out and out[-1][0] == sym:
            out[-1] = (sym, out[-1][1] + t)
        else:
            out.append((sym, t))
    return out


def _evolve(m: Ctqa, v: np.ndarray, word: str, schedule: Sequence[Fraction]) -> np.ndarray:
    for sym, t in _runs(word, schedule):
        if t != 0:
            v = m.propagator(sym, t) @ v
    return v


def run_ctqa(m: Ctqa, schedule: Sequence, word: str) -> RunOutcome:
    """Evolve ``|start>`` through ``word`` with the given durations and measure."""
    schedule = TimeSchedule(schedule)
    if len(schedule) != len(word):
        raise MachineError(f"schedule length {len(schedule)} != input length {len(word)}")
    m.check_word(word)
    v = _evolve(m, m.initial_state(), word, schedule)
    return _readout(v, m.accept_indices, m.reject_indices)


def run_mcqfa(m: Mcqfa, word: str) -> RunOutcome:
    m.check_word(word)
    v = m.initial_state()
    for sym in word:
        v = m.unitaries[sym] @ v
    return _readout(v, m.accept_indices, m.reject_indices)


def run_kctqa(m: KCtqa, schedule: Sequence, word: str) -> RunOutcome:
    """Run ``sweeps`` passes over ``⊢ word ⊣`` and measure at the final counter value.

    ``schedule`` has the framed shape ``(0, t_1.., 0, 0, t_2.., 0, ...)``.
    The left endmarker acts as the identity; the right endmarker increments
    the counter. The global measurement only counts basis states whose
    counter equals ``sweeps mod 2**counter_width``.
    """
    schedule = TimeSchedule(schedule)
    n, k = len(word), m.sweeps
    if len(schedule) != k * n + 2 * k:
        raise MachineError(
            f"schedule length {len(schedule)} != {k}*{n}+2*{k} for a {k}-sweep run on a length-{n} input"
        )
    base = m.base
    base.check_word(word)
    if base.dim % m.counter_size:
        raise MachineError(f"state count {base.dim} is not a multiple of the counter size {m.counter_size}")
    v = base.initial_state()
    frame = n + 2
    for r in range(k):
        chunk = schedule[r * frame:(r + 1) * frame]
        for pos, label in ((0, "left"), (frame - 1, "right")):
            if chunk[pos] != 0:
                raise MachineError(
                    f"nonzero duration {chunk[pos]} at the {label} endmarker of sweep {r + 1}"
                )
        v = _evolve(base, v, word, chunk[1:-1])
        v = m.increment(v)
    target = m.final_counter
    accept = [i for i in base.accept_indices if m.counter_of(i) == target]
    reject = [i for i in base.reject_indices if m.counter_of(i) == target]
    return _readout(v, accept, reject)


@dataclass(frozen=True)
class TimeIndependent:
    """A :class:`Ctqa` driven by the constant schedule ``(c, ..., c)``."""

    machine: Ctqa
    duration: Fraction

    @property
    def alphabet(self):
        return self.machine.alphabet

    def run(self, word: str) -> RunOutcome:
        return run_ctqa(self.machine, [self.duration] * len(word), word)


def _set_violations(m, out: List[str]) -> None:
    if len(set(m.states)) != len(m.states):
        out.append("states: duplicate state names")
    if not m.states:
        out.append("states: empty state list")
    if len(set(m.alphabet)) != len(m.alphabet):
        out.append("alphabet: duplicate symbols")
    for sym in m.alphabet:
        if len(sym) != 1:
            out.append(f"alphabet: symbol {sym!r} is not a single character")
    if m.start not in m.states:
        out.append(f"start: {m.start!r} is not a declared state")
    for label, names in (("accept", m.accept), ("reject", m.reject)):
        extra = sorted(set(names) - set(m.states))
        if extra:
            out.append(f"{label}: undeclared states {extra}")
    overlap = sorted(set(m.accept) & set(m.reject))
    if overlap:
        out.append(f"accept/reject overlap: {overlap}")


def _operator_violations(ops, m, label: str, defect_fn, what: str, out: List[str]) -> None:
    for sym in m.alphabet:
        if sym not in ops:
            out.append(f"{label}[{sym}]: missing for alphabet symbol")
    for sym, op in ops.items():
        if sym not in m.alphabet:
            out.append(f"{label}[{sym}]: symbol not in alphabet")
        if op.shape != (m.dim, m.dim):
            out.append(f"{label}[{sym}]: shape {op.shape} does not match {m.dim} states")
            continue
        if not np.all(np.isfinite(op)):
            out.append(f"{label}[{sym}]: non-finite entries")
            continue
        defect = defect_fn(op)
        if defect > la.STRUCTURAL_TOL:
            out.append(f"{label}[{sym}]: not {what}, defect {defect:.6g}")


def validate(m: Machine) -> List[str]:
    """List of invariant violations; empty iff the machine is well formed."""
    out: List[str] = []
    if isinstance(m, KCtqa):
        if m.sweeps < 2:
            out.append(f"sweeps: must be at least 2, got {m.sweeps}")
        expected = max(m.sweeps, 1).bit_length() - 1
        if m.counter_width != expected:
            out.append(f"counter_width: {m.counter_width} inconsistent with {m.sweeps} sweeps (expected {expected})")
        base = m.base
        out.extend(validate(base))
        if base.dim % m.counter_size:
            out.append(f"states: {base.dim} states do not factor over a counter of size {m.counter_size}")
        elif not out:
            if m.counter_of(base.index(base.start)) != 0:
                out.append("start: start state must carry counter value 0")
            c = m.counter_size
            mask = np.array([[i % c == j % c for j in range(base.dim)] for i in range(base.dim)])
            for sym, h in base.hamiltonians.items():
                leak = float(np.max(np.abs(h[~mask]), initial=0.0))
                if leak > la.STRUCTURAL_TOL:
                    out.append(f"hamiltonians[{sym}]: couples different counter values, max entry {leak:.6g}")
        return out
    _set_violations(m, out)
    if isinstance(m, Ctqa):
        _operator_violations(m.hamiltonians, m, "hamiltonians", la.hermitian_defect, "Hermitian", out)
    elif isinstance(m, Mcqfa):
        _operator_violations(m.unitaries, m, "unitaries", la.unitary_defect, "unitary", out)
    else:
        raise TypeError(f"cannot validate {type(m).__name__}")
    return out


def machines_equal(a: Machine, b: Machine, tol: float = la.STRUCTURAL_TOL) -> bool:
    """Structural equality with operators compared entrywise within ``tol``."""
    if type(a) is not type(b):
        return False
    if isinstance(a, KCtqa):
        return a.sweeps == b.sweeps and a.counter_width == b.counter_width and machines_equal(a.base, b.base, tol)
    if (a.states, a.alphabet, a.start, a.accept, a.reject) != (b.states, b.alphabet, b.start, b.accept, b.reject):
        return False
    ops_a = a.hamiltonians if isinstance(a, Ctqa) else a.unitaries
    ops_b = b.hamiltonians if isinstance(b, Ctqa) else b.unitaries
    if ops_a.keys() != ops_b.keys():
        return False
    return all(
        ops_a[s].shape == ops_b[s].shape and float(np.max(np.abs(ops_a[s] - ops_b[s]))) <= tol for s in ops_a
    )
