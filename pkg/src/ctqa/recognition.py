"""Acceptance probabilities, verdict policies, sweeps and cross-checks."""

from __future__ import annotations

import csv
import io
import math
import random
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Iterator, List, Optional, Sequence, Tuple

from .constructions import ConstructionError, NamedConstruction
from .formula import WordStats
from .machine import Ctqa, KCtqa, Mcqfa, RunOutcome, TimeIndependent, run_ctqa, run_kctqa, run_mcqfa
from .scheduler import TimeSchedule, format_rational, schedule

MAX_WORDS = 10**6


class Verdict(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class VerdictPolicy:
    """``cutpoint`` (lam), ``isolated`` (lam, alpha) or ``bounded`` (eps), with exact parameters."""

    kind: str
    lam: Optional[Fraction] = None
    alpha: Optional[Fraction] = None
    eps: Optional[Fraction] = None

    def __post_init__(self):
        if self.kind in ("cutpoint", "isolated"):
            if self.lam is None or not 0 < self.lam <= 1:
                raise PolicyError(f"cutpoint must lie in (0, 1], got {self.lam}")
            if self.kind == "isolated" and (self.alpha is None or self.alpha <= 0):
                raise PolicyError(f"isolation gap must be positive, got {self.alpha}")
        elif self.kind == "bounded":
            if self.eps is None or not 0 <= self.eps < Fraction(1, 2):
                raise PolicyError(f"error bound must lie in [0, 1/2), got {self.eps}")
        else:
            raise PolicyError(f"unknown policy kind {self.kind!r}")

    @classmethod
    def cutpoint(cls, lam) -> "VerdictPolicy":
        return cls("cutpoint", lam=Fraction(lam))

    @classmethod
    def isolated(cls, lam, alpha) -> "VerdictPolicy":
        return cls("isolated", lam=Fraction(lam), alpha=Fraction(alpha))

    @classmethod
    def bounded(cls, eps) -> "VerdictPolicy":
        return cls("bounded", eps=Fraction(eps))

    @classmethod
    def parse(cls, text: str) -> "VerdictPolicy":
        """``cutpoint:p/q``, ``isolated:p/q,p/q`` or ``bounded:p/q``."""
        kind, _, args = text.partition(":")
        try:
            values = [Fraction(a.strip()) for a in args.split(",")] if args.strip() else []
        except ValueError:
            raise PolicyError(f"bad policy parameters in {text!r}") from None
        expected = {"cutpoint": 1, "isolated": 2, "bounded": 1}.get(kind.strip())
        if expected is None:
            raise PolicyError(f"unknown policy kind {kind.strip()!r}")
        if len(values) != expected:
            raise PolicyError(f"policy {kind!r} takes {expected} parameter(s), got {len(values)}")
        return getattr(cls, kind.strip())(*values)

    def __str__(self):
        if self.kind == "cutpoint":
            return f"cutpoint:{self.lam}"
        if self.kind == "isolated":
            return f"isolated:{self.lam},{self.alpha}"
        return f"bounded:{self.eps}"


def classify(p: RunOutcome, policy: VerdictPolicy) -> Verdict:
    """Verdict of an outcome under a policy.

    Cutpoint and isolated policies look at the acceptance probability alone;
    the bounded-error policy needs one side to reach ``1 - eps``. Thresholds
    are compared exactly, without any tolerance, so a probability that is
    mathematically on a threshold may land on either side of it.
    """
    pa = p.p_accept
    if policy.kind == "cutpoint":
        return Verdict.ACCEPT if pa >= policy.lam else Verdict.REJECT
    if policy.kind == "isolated":
        if pa >= policy.lam + policy.alpha:
            return Verdict.ACCEPT
        if pa <= policy.lam - policy.alpha:
            return Verdict.REJECT
        return Verdict.UNKNOWN
    if pa >= 1 - policy.eps:
        return Verdict.ACCEPT
    if p.p_reject >= 1 - policy.eps:
        return Verdict.REJECT
    return Verdict.UNKNOWN


def default_policy(c: NamedConstruction) -> VerdictPolicy:
    return VerdictPolicy.cutpoint(c.cutpoint)


# --------------------------------------------------------------------------
# running constructions


def evaluate(c: NamedConstruction, word: str) -> Tuple[Optional[int], TimeSchedule, RunOutcome]:
    """Decider bit, emitted schedule and outcome for one word."""
    m = c.machine
    if isinstance(m, Mcqfa):
        return None, TimeSchedule(), run_mcqfa(m, word)
    bit, ts = schedule(c.scheduler, word)
    if isinstance(m, KCtqa):
        return bit, ts, run_kctqa(m, ts, word)
    return bit, ts, run_ctqa(m, ts, word)


def accept_probability(c: NamedConstruction, word: str) -> RunOutcome:
    return evaluate(c, word)[2]


def formula_value(c: NamedConstruction, word: str) -> float:
    if c.formula is None:
        raise ConstructionError(f"construction {c.name!r} has no closed-form formula")
    bit = None if c.scheduler is None else c.scheduler.decider(word)
    return c.formula(WordStats.of(word, bit))


# --------------------------------------------------------------------------
# input families


class FamilyError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


_RANGE = re.compile(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*$")


def _parse_range(text: str, pos: int) -> range:
    m = _RANGE.match(text)
    if not m:
        raise FamilyError(f"bad range {text.strip()!r}", pos)
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    if hi < lo:
        raise FamilyError(f"empty range {text.strip()!r}", pos)
    return range(lo, hi + 1)


def _keyvals(text: str, offset: int) -> dict:
    out = {}
    for m in re.finditer(r"\S+", text):
        key, eq, val = m.group().partition("=")
        if not eq:
            raise FamilyError(f"expected key=value, found {m.group()!r}", offset + m.start())
        out[key] = (val, offset + m.start() + len(key) + 1)
    return out


@dataclass(frozen=True)
class InputFamily:
    """Parsed family spec; iterate it to get words in deterministic order.

    Forms::

        a^n b^m; n=0..3; m=0..3       template; first variable varies slowest
        random len=5 count=10 seed=7  seeded random words (len may be a range)
        all len=0..8                  every word, by length then alphabet order
        (empty)                       no words
    """

    kind: str
    alphabet: Tuple[str, ...]
    terms: Tuple[Tuple[str, object], ...] = ()
    ranges: Tuple[Tuple[str, range], ...] = ()
    lengths: range = range(0)
    count: int = 0
    seed: int = 0

    def size(self) -> int:
        if self.kind == "template":
            return math.prod(len(r) for _, r in self.ranges)
        if self.kind == "random":
            return self.count
        if self.kind == "all":
            k = len(self.alphabet)
            return sum(k**n for n in self.lengths)
        return 0

    def __iter__(self) -> Iterator[str]:
        if self.kind == "template":
            names = [name for name, _ in self.ranges]
            for values in product(*(r for _, r in self.ranges)):
                env = dict(zip(names, values))
                yield "".join(sym * (env[rep] if isinstance(rep, str) else rep) for sym, rep in self.terms)
        elif self.kind == "random":
            rng = random.Random(self.seed)
            lengths = list(self.lengths)
            for _ in range(self.count):
                n = rng.choice(lengths)
                yield "".join(rng.choice(self.alphabet) for _ in range(n))
        elif self.kind == "all":
            for n in self.lengths:
                for letters in product(self.alphabet, repeat=n):
                    yield "".join(letters)


def parse_family(spec: str, alphabet: Sequence[str], seed: Optional[int] = None) -> InputFamily:
    """Parse a family spec. ``seed`` is used when a random spec carries none."""
    alphabet = tuple(alphabet)
    stripped = spec.strip()
    if not stripped:
        return InputFamily("empty", alphabet)
    head = stripped.split()[0]
    lead = spec.index(head)
    if head in ("random", "all"):
        rest_at = lead + len(head)
        kv = _keyvals(spec[rest_at:], rest_at)
        allowed = {"random": {"len", "count", "seed"}, "all": {"len"}}[head]
        for key, (_, pos) in kv.items():
            if key not in allowed:
                raise FamilyError(f"unknown key {key!r} for {head!r} family", pos)
        if "len" not in kv:
            raise FamilyError(f"{head!r} family needs len=", len(spec))
        lengths = _parse_range(*kv["len"])
        if head == "all":
            return InputFamily("all", alphabet, lengths=lengths)
        if "count" not in kv:
            raise FamilyError("random family needs count=", len(spec))
        count = _parse_range(*kv["count"])
        if len(count) != 1:
            raise FamilyError("count must be a single number", kv["count"][1])
        if "seed" in kv:
            seed_range = _parse_range(*kv["seed"])
            seed = seed_range.start
        return InputFamily("random", alphabet, lengths=lengths, count=count.start,
                           seed=0 if seed is None else seed)

    parts = spec.split(";")
    offsets = []
    at = 0
    for part in parts:
        offsets.append(at)
        at += len(part) + 1
    terms = []
    variables: List[str] = []
    for m in re.finditer(r"\S+", parts[0]):
        tok, pos = m.group(), m.start()
        sym, caret, rep = tok.partition("^")
        if sym not in alphabet:
            raise FamilyError(f"symbol {sym!r} is not in the alphabet {list(alphabet)}", pos)
        if not caret:
            terms.append((sym, 1))
        elif rep.isdigit():
            terms.append((sym, int(rep)))
        elif re.fullmatch(r"[A-Za-z_]\w*", rep):
            terms.append((sym, rep))
            if rep not in variables:
                variables.append(rep)
        else:
            raise FamilyError(f"bad exponent {rep!r}", pos + len(sym) + 1)
    ranges = {}
    for part, off in zip(parts[1:], offsets[1:]):
        if not part.strip():
            continue
        names, eq, value = part.partition("=")
        if not eq:
            raise FamilyError(f"expected var=lo..hi, found {part.strip()!r}", off)
        r = _parse_range(value, off + len(names) + 1)
        for name in names.split(","):
            name = name.strip()
            if name not in variables:
                raise FamilyError(f"unknown variable {name!r}", off)
            ranges[name] = r
    missing = [v for v in variables if v not in ranges]
    if missing:
        raise FamilyError(f"no range for variable(s) {missing}", len(spec))
    return InputFamily("template", alphabet, tuple(terms), tuple((v, ranges[v]) for v in variables))


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    input: str
    length: int
    decider_bit: Optional[int]
    schedule: TimeSchedule
    p_accept: float
    p_reject: float
    p_neutral: float
    verdict: Verdict


CSV_HEADER = ("input", "length", "decider_bit", "schedule", "p_accept", "p_reject", "p_neutral", "verdict")


def sweep(
    c: NamedConstruction,
    family,
    policy: Optional[VerdictPolicy] = None,
    *,
    seed: Optional[int] = None,
    max_words: int = MAX_WORDS,
) -> List[SweepRow]:
    """One row per word of ``family`` (a spec string or an :class:`InputFamily`), in family order."""
    if isinstance(family, str):
        family = parse_family(family, c.alphabet, seed)
    if family.size() > max_words:
        raise FamilyError(f"family has {family.size()} words, more than the limit {max_words}", 0)
    policy = policy or default_policy(c)
    rows = []
    for word in family:
        bit, ts, out = evaluate(c, word)
        rows.append(SweepRow(word, len(word), bit, ts, out.p_accept, out.p_reject, out.p_neutral,
                             classify(out, policy)))
    return rows


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([
            r.input, r.length, "" if r.decider_bit is None else r.decider_bit,
            ";".join(format_rational(t) for t in r.schedule),
            f"{r.p_accept:.9f}", f"{r.p_reject:.9f}", f"{r.p_neutral:.9f}", r.verdict.value,
        ])
    return buf.getvalue()


# --------------------------------------------------------------------------
# cross-checks


@dataclass(frozen=True)
class CheckReport:
    max_gap: float
    witness: Optional[str]
    words: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_gap <= self.tol

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        where = "" if self.witness is None else f" at {self.witness!r}"
        return f"{status}: max gap {self.max_gap:.3e}{where} over {self.words} words (tol {self.tol:g})"


def oracle_check(c: NamedConstruction, family, tol: float = 1e-9, *, formula=None, seed=None) -> CheckReport:
    """Largest gap between simulated acceptance and the closed-form formula."""
    formula = formula if formula is not None else c.formula
    if formula is None:
        raise ConstructionError(f"construction {c.name!r} has no closed-form formula")
    if isinstance(family, str):
        family = parse_family(family, c.alphabet, seed)
    worst, witness, n = 0.0, None, 0
    for word in family:
        n += 1
        bit = None if c.scheduler is None else c.scheduler.decider(word)
        gap = abs(accept_probability(c, word).p_accept - formula(WordStats.of(word, bit)))
        if witness is None or gap > worst:
            worst, witness = gap, word
    return CheckReport(worst, witness, n, tol)


def _runner(obj) -> Tuple[Tuple[str, ...], Callable[[str], RunOutcome]]:
    if isinstance(obj, NamedConstruction):
        return obj.alphabet, lambda w: accept_probability(obj, w)
    if isinstance(obj, Mcqfa):
        return obj.alphabet, lambda w: run_mcqfa(obj, w)
    if isinstance(obj, TimeIndependent):
        return obj.alphabet, obj.run
    if isinstance(obj, Ctqa):
        raise TypeError("a bare Ctqa needs a schedule; wrap it in TimeIndependent")
    raise TypeError(f"cannot run {type(obj).__name__}")


def equivalence_check(m1, m2, words: Iterable[str], tol: float = 1e-10) -> CheckReport:
    """Largest per-probability gap (accept, reject, neutral) between two runnables on ``words``."""
    a1, run1 = _runner(m1)
    a2, run2 = _runner(m2)
    if set(a1) != set(a2):
        raise ConstructionError(f"alphabet mismatch: {a1} vs {a2}")
    worst, witness, n = 0.0, None, 0
    for word in words:
        n += 1
        gap = max(abs(x - y) for x, y in zip(run1(word), run2(word)))
        if gap > worst:
            worst, witness = gap, word
    return CheckReport(worst, witness, n, tol)


# --------------------------------------------------------------------------
# cutpoint region of the a^n b^m machine


@dataclass(frozen=True)
class RegionReport:
    """Where ``cos^2(pi (n - m) / (2 (n + m))) >= lam`` on a grid, against the ``n >= 2m`` reading."""

    lam: Fraction
    bound: float
    region: Tuple[Tuple[int, int], ...]
    inequality_mismatches: Tuple[Tuple[int, int], ...]
    claim_only: Tuple[Tuple[int, int], ...]
    region_only: Tuple[Tuple[int, int], ...]

    def summary(self) -> str:
        lines = [
            f"lam = {self.lam}: accepted iff |n - m| / (n + m) <= (2/pi) arccos(sqrt(lam)) = {self.bound:.6f}",
            f"grid points with p >= lam: {len(self.region)}",
            f"points disagreeing with the arccos inequality: {len(self.inequality_mismatches)}",
            f"points satisfying n >= 2m but p < lam: {len(self.claim_only)}"
            + (f" (e.g. {list(self.claim_only[:3])})" if self.claim_only else ""),
            f"points with p >= lam but n < 2m: {len(self.region_only)}"
            + (f" (e.g. {list(self.region_only[:3])})" if self.region_only else ""),
        ]
        return "\n".join(lines)


def cutpoint_region_report(c: NamedConstruction, lam, max_n: int = 25) -> RegionReport:
    """Simulate ``a^n b^m`` for ``1 <= n + m``, ``n, m <= max_n`` and compare regions."""
    lam = Fraction(lam)
    bound = 2 / math.pi * math.acos(math.sqrt(lam))
    region, mismatches, claim_only, region_only = [], [], [], []
    for n in range(max_n + 1):
        for m in range(max_n + 1):
            if n + m == 0:
                continue
            p = accept_probability(c, "a" * n + "b" * m).p_accept
            inside = p >= lam
            if inside:
                region.append((n, m))
            if inside != (abs(n - m) / (n + m) <= bound):
                mismatches.append((n, m))
            claimed = n >= 2 * m
            if claimed and not inside:
                claim_only.append((n, m))
            if inside and not claimed:
                region_only.append((n, m))
    return RegionReport(lam, bound, tuple(region), tuple(mismatches), tuple(claim_only), tuple(region_only))
