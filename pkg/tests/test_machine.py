from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from ctqa import linalg as la
from ctqa.constructions import NOT_PI_2
from ctqa.machine import (
    Ctqa,
    KCtqa,
    MachineError,
    Mcqfa,
    TimeIndependent,
    machines_equal,
    run_ctqa,
    run_kctqa,
    run_mcqfa,
    step,
    validate,
)
from ctqa.scheduler import rotation_schedule
from oracles import brute_run

F = Fraction


def lab_machine():
    return Ctqa(["q0", "q1"], "ab", {"a": NOT_PI_2, "b": -NOT_PI_2}, "q0", {"q0"}, {"q1"})


def test_single_step_flips():
    m = lab_machine()
    out = run_ctqa(m, [1], "a")
    assert (out.p_accept, out.p_reject, out.p_neutral) == (0.0, 1.0, 0.0)
    assert tuple(run_ctqa(m, [2], "a")) == (1.0, 0.0, 0.0)
    half = run_ctqa(m, [F(1, 2)], "a")
    assert half.p_accept == pytest.approx(0.5, abs=1e-12)


def test_empty_word_measures_start():
    assert tuple(run_ctqa(lab_machine(), [], "")) == (1.0, 0.0, 0.0)


def test_length_mismatch_and_bad_symbol():
    with pytest.raises(MachineError, match="schedule length 1 != input length 2"):
        run_ctqa(lab_machine(), [1], "ab")
    with pytest.raises(MachineError, match="unknown symbol"):
        run_ctqa(lab_machine(), [1], "c")
    with pytest.raises(Exception):
        run_ctqa(lab_machine(), [-1], "a")


def test_step_matches_propagator():
    m = lab_machine()
    v = step(m, m.initial_state(), "a", F(1, 3))
    assert np.allclose(v, la.mat_exp_hermitian(NOT_PI_2, F(1, 3)) @ [1, 0])


def test_neutral_mass():
    h = la.direct_sum(NOT_PI_2, la.zeros(1))
    m = Ctqa(["x", "y", "z"], "a", {"a": h}, "x", {"x"}, {"z"})
    out = run_ctqa(m, [1], "a")
    assert out.p_neutral == 1.0 and out.p_accept == 0.0


def test_merging_matches_brute_force(rng):
    h = {s: random_hermitian(rng, 3) for s in "ab"}
    m = Ctqa(["p", "q", "r"], "ab", h, "p", {"p"}, {"r"})
    for word in ["aabba", "bbbb", "abab", "a"]:
        ts = [F(i + 1, 7) for i in range(len(word))]
        out = run_ctqa(m, ts, word)
        pa, pr = brute_run(list(m.states), "p", ["p"], ["r"], h, word, ts)
        assert abs(out.p_accept - pa) < 1e-10 and abs(out.p_reject - pr) < 1e-10


def test_mcqfa_and_time_independent_agree():
    m = lab_machine()
    u = {s: la.mat_exp_hermitian(h, F(1, 4)) for s, h in m.hamiltonians.items()}
    q = Mcqfa(m.states, m.alphabet, u, m.start, m.accept, m.reject)
    ti = TimeIndependent(m, F(1, 4))
    for w in ["", "a", "ab", "aab", "bbba"]:
        assert abs(run_mcqfa(q, w).p_accept - ti.run(w).p_accept) < 1e-12


def _two_sweep():
    # Inner machine on {q0,q1} x counter {0,1}; symbol a rotates only in counter block 1.
    on1 = la.projector(2, [1])
    h = la.kron(NOT_PI_2, on1)
    states = ["q0:0", "q0:1", "q1:0", "q1:1"]
    base = Ctqa(states, "a", {"a": h}, "q0:0", {"q0:0", "q0:1"}, {"q1:0", "q1:1"})
    return KCtqa(base, 2)


def test_kctqa_counter_and_measurement():
    m = _two_sweep()
    assert m.counter_width == 1 and m.counter_size == 2 and m.final_counter == 0
    ts = rotation_schedule([[0], [1]], 2)
    out = run_kctqa(m, ts, "a")
    # counter is 1 during sweep two, so the rotation applies; after the final increment counter is 0
    assert out.p_reject == 1.0
    out = run_kctqa(m, rotation_schedule([[1], [0]], 2), "a")
    assert out.p_accept == 1.0


def test_kctqa_schedule_shape_errors():
    m = _two_sweep()
    with pytest.raises(MachineError, match="2\\*1\\+2\\*2"):
        run_kctqa(m, [0, 1, 0], "a")
    with pytest.raises(MachineError, match="endmarker"):
        run_kctqa(m, [1, 0, 0, 0, 0, 0], "a")


def test_counter_width_default():
    base = _two_sweep().base
    assert KCtqa(base, 3).counter_width == 1
    assert KCtqa(base, 4).counter_width == 2


def test_validate_reports():
    assert validate(lab_machine()) == []
    bad = Ctqa(["q0", "q1"], "ab", {"a": np.array([[0, 1], [0, 0.1]]), "b": NOT_PI_2}, "q0", {"q0"}, {"q0"})
    problems = validate(bad)
    assert any("overlap" in p for p in problems)
    assert any("hamiltonians[a]: not Hermitian" in p for p in problems)
    missing = Ctqa(["q0"], "ab", {"a": la.zeros(1)}, "qx", {"q0"})
    problems = validate(missing)
    assert any("hamiltonians[b]: missing" in p for p in problems)
    assert any("start" in p for p in problems)
    u = Mcqfa(["q0", "q1"], "a", {"a": 2 * la.identity(2)}, "q0", {"q0"})
    assert any("not unitary" in p for p in validate(u))


def test_validate_kctqa():
    assert validate(_two_sweep()) == []
    base = _two_sweep().base
    assert any("sweeps" in p for p in validate(KCtqa(base, 1)))
    leak = Ctqa(base.states, "a", {"a": la.kron(NOT_PI_2, la.NOT)}, "q0:0", base.accept, base.reject)
    assert any("couples different counter" in p for p in validate(KCtqa(leak, 2)))
    shifted = Ctqa(base.states, "a", base.hamiltonians, "q0:1", base.accept, base.reject)
    assert any("counter value 0" in p for p in validate(KCtqa(shifted, 2)))


def test_operators_are_read_only():
    m = lab_machine()
    with pytest.raises(ValueError):
        m.hamiltonians["a"][0, 0] = 1


def test_machines_equal():
    assert machines_equal(lab_machine(), lab_machine())
    other = Ctqa(["q0", "q1"], "ab", {"a": NOT_PI_2, "b": NOT_PI_2}, "q0", {"q0"}, {"q1"})
    assert not machines_equal(lab_machine(), other)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.text(alphabet="ab", max_size=10),
       st.lists(st.fractions(min_value=0, max_value=3, max_denominator=12), min_size=10, max_size=10))
def test_probabilities_form_a_distribution(seed, word, durations):
    rng = np.random.default_rng(seed)
    h = {s: random_hermitian(rng, 4) for s in "ab"}
    m = Ctqa(["0", "1", "2", "3"], "ab", h, "0", {"0", "1"}, {"2"})
    out = run_ctqa(m, durations[:len(word)], word)
    assert 0 <= out.p_accept <= 1 and 0 <= out.p_reject <= 1
    assert abs(out.p_accept + out.p_reject + out.p_neutral - 1) < 1e-9
    assert abs(np.linalg.norm(out.final_state) - 1) < 1e-10
