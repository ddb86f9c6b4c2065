from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ctqa.scheduler import (
    CallableFamily,
    ConstDecider,
    DfaDecider,
    Family,
    PredicateDecider,
    RotatingWriter,
    ScheduleError,
    Scheduler,
    TimeSchedule,
    Writer,
    collatz_halts,
    decide,
    deciders_disagree,
    rational,
    rotation_schedule,
    scale_schedule,
    schedule,
    words_up_to,
)

F = Fraction


def test_rational_rejects_floats_and_negatives():
    assert rational("3/6") == F(1, 2)
    with pytest.raises(TypeError):
        rational(0.5)
    with pytest.raises(ScheduleError, match="negative"):
        rational(-1)


def test_time_schedule_text_round_trip():
    ts = TimeSchedule([F(1, 3), 2, 0])
    assert str(ts) == "1/3;2/1;0/1"
    assert TimeSchedule.parse(str(ts)) == ts
    assert TimeSchedule.parse("") == TimeSchedule()


@pytest.mark.parametrize("family,n,expected", [
    (Family("uniform"), 4, [F(1, 4)] * 4),
    (Family("uniform", F(3)), 3, [1, 1, 1]),
    (Family("pulse", 1), 3, [1, 0, 0]),
    (Family("last_pulse"), 3, [0, 0, 1]),
    (Family("const", F(1, 2)), 2, [F(1, 2)] * 2),
    (Family("zero"), 3, [0, 0, 0]),
    (Family("pulse", 4), 0, []),
])
def test_family_emit(family, n, expected):
    assert family.emit(n) == TimeSchedule(expected)


def test_family_parse_and_str():
    for text in ("uniform", "uniform 2", "pulse 1", "last_pulse", "const 1/3", "zero"):
        assert str(Family.parse(text)) == text
    for bad in ("", "warp 1", "pulse", "zero 1", "pulse x", "pulse 1 2"):
        with pytest.raises(ScheduleError):
            Family.parse(bad)


def test_scaling_is_exact():
    w = Writer(Family("uniform"), Family("pulse", 1)).scaled(F(7, 2))
    assert w.emit(1, 3) == TimeSchedule([F(7, 6)] * 3)
    assert w.emit(0, 2) == TimeSchedule([F(7, 2), 0])
    assert scale_schedule([F(1, 3), 0], 3) == TimeSchedule([1, 0])
    with pytest.raises(ScheduleError):
        scale_schedule([1], 0)


def test_rotation_schedule():
    ts = rotation_schedule([[1, 2], [3, 4]], 2)
    assert ts == TimeSchedule([0, 1, 2, 0, 0, 3, 4, 0])
    with pytest.raises(ScheduleError, match="ragged"):
        rotation_schedule([[1], [1, 2]], 2)
    with pytest.raises(ScheduleError):
        rotation_schedule([[1]], 2)


def test_rotating_writer():
    w = RotatingWriter((Writer(Family("uniform"), Family("zero")), Writer(Family("const", 2), Family("zero"))))
    assert w.emit(1, 2) == TimeSchedule([0, F(1, 2), F(1, 2), 0, 0, 2, 2, 0])
    assert w.scaled(2).emit(1, 1) == TimeSchedule([0, 2, 0, 0, 4, 0])
    with pytest.raises(ScheduleError):
        RotatingWriter((Writer(Family("zero"), Family("zero")),))


def test_callable_family():
    fam = CallableFamily(lambda n: [F(i) for i in range(n)], "ramp")
    assert fam.emit(3) == TimeSchedule([0, 1, 2])
    assert fam.scaled(2).emit(3) == TimeSchedule([0, 2, 4])
    bad = CallableFamily(lambda n: [1], "short")
    with pytest.raises(ScheduleError):
        bad.emit(3)


def test_scheduler_routes_on_bit():
    s = Scheduler(DfaDecider.from_regex("a*b*", "ab"), Writer(Family("uniform"), Family("pulse", 1)))
    assert schedule(s, "aab") == (1, TimeSchedule([F(1, 3)] * 3))
    assert s("ba") == (0, TimeSchedule([1, 0]))
    with pytest.raises(ScheduleError, match="not in the alphabet"):
        s("abc")


def test_deciders():
    assert ConstDecider(1, "ab")("abba") == 1
    with pytest.raises(ScheduleError):
        ConstDecider(2, "ab")
    even = PredicateDecider.named("even-length", "ab")
    assert [even(w) for w in ("", "a", "ab")] == [1, 0, 1]
    with pytest.raises(ScheduleError):
        PredicateDecider.named("oracle", "ab")
    with pytest.raises(ScheduleError):
        decide(even, "abc")
    assert deciders_disagree(even, ConstDecider(1, "ab"), ["", "a", "ab", "b"]) == ["a", "b"]


def test_collatz_budget():
    halts = collatz_halts(1000)
    assert halts("1") and halts("111") and not halts("0") and not halts("")
    assert not collatz_halts(3)("111")  # 7 needs 16 steps


def test_dfa_totality_checked():
    with pytest.raises(ScheduleError, match="not total"):
        DfaDecider(("a",), (((0, "a"), 1),), 0, frozenset())


def test_words_up_to_counts():
    assert sum(1 for _ in words_up_to("ab", 3)) == 15


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(["uniform", "pulse", "last_pulse", "const"]),
       st.fractions(min_value=F(1, 100), max_value=10), st.integers(0, 12),
       st.fractions(min_value=F(1, 10), max_value=10))
def test_family_length_and_scaling(kind, p, n, k):
    fam = Family(kind, p)
    ts = fam.emit(n)
    assert len(ts) == n
    assert all(isinstance(t, Fraction) and t >= 0 for t in ts)
    assert fam.scaled(k).emit(n) == scale_schedule(ts, k)
