from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from ctqa import linalg as la
from ctqa.constructions import (
    NOT_PI_2,
    ZOO,
    NamedConstruction,
    build_concat_example,
    build_lab,
    constructions_equal,
    time_independent_to_mcqfa,
    zoo_build,
)
from ctqa.fileformat import ParseError, format_hamiltonian, parse_hamiltonian, parse_machine_file, serialize_machine
from ctqa.machine import Ctqa
from ctqa.recognition import oracle_check, parse_family
from ctqa.scheduler import ConstDecider, Family, Scheduler, Writer

LAB = """\
# the a^n b^m machine
machine lab
states: q0 q1
start: q0
accept: q0
reject: q1
alphabet: a b
ham a = NOT_PI_2
ham b = neg(NOT_PI_2)   # reverse rotation
decider: regex a*b*
writer.accept: uniform
writer.reject: pulse 1
"""


def test_lab_file_matches_builder():
    c = parse_machine_file(LAB)
    assert c.name == "lab"
    assert constructions_equal(c, build_lab())


def test_matrix_literal_real_block():
    m = parse_hamiltonian("matrix 2 [0 1/2 pi;1/2 pi 0 | 0 0;0 0]")
    assert np.max(np.abs(m - NOT_PI_2)) < 1e-15


def test_matrix_literal_imaginary_block():
    m = parse_hamiltonian("matrix 2 [0 0;0 0 | 0 -1;1 0]")
    assert np.allclose(m, [[0, -1j], [1j, 0]])


def test_pure_imaginary_symmetric_literal_is_not_hermitian():
    with pytest.raises(ParseError, match="not Hermitian"):
        parse_machine_file(LAB.replace("ham a = NOT_PI_2", "ham a = matrix 2 [0 0;0 0 | 0 1/2 pi;1/2 pi 0]"))


@pytest.mark.parametrize("expr,expected", [
    ("ZERO(2)", np.zeros((2, 2))),
    ("I(3)", np.eye(3)),
    ("scale(NOT_PI_2, 1/2)", NOT_PI_2 / 2),
    ("kron(I(2),NOT_PI_2)", np.kron(np.eye(2), NOT_PI_2)),
    ("dsum(NOT_PI_2, ZERO(1))", la.direct_sum(NOT_PI_2, la.zeros(1))),
    ("matrix 1 [0.25 | 0]", np.array([[0.25]])),
    ("scale(I(1), 2 pi)", np.array([[2 * np.pi]])),
])
def test_expressions(expr, expected):
    assert np.max(np.abs(parse_hamiltonian(expr) - expected)) < 1e-15


@pytest.mark.parametrize("expr", ["FOO", "I(0)", "kron(I(2))", "matrix 2 [1 0 | 0 0]", "neg(I(2)", "I(2) x"])
def test_expression_errors(expr):
    with pytest.raises(ParseError):
        parse_hamiltonian(expr)


@pytest.mark.parametrize("edit,message", [
    (("start: q0\n", ""), "missing 'start:'"),
    (("decider: regex a*b*\n", ""), "missing 'decider:'"),
    (("ham b = neg(NOT_PI_2)", "ham b = I(3)"), "line 9.*dimension 3"),
    (("ham b = neg(NOT_PI_2)", "ham c = I(2)"), "undeclared symbol 'c'"),
    (("accept: q0", "accept: q7"), "line 5.*undeclared state"),
    (("ham b = neg(NOT_PI_2)", "ham b = matrix 2 [0 1;0 0 | 0 0;0 0]"), "line 9.*not Hermitian"),
    (("regex a*b*", "regex a*(b"), "line 10"),
    (("writer.reject: pulse 1", "writer.reject: warp 1"), "line 12"),
    (("machine lab", "machine lab\nfrobnicate: 1"), "unrecognized line"),
    (("reject: q1", "reject: q0"), "overlap"),
    (("ham b = neg(NOT_PI_2)", "ham b = ZERO(2)\nham b = ZERO(2)"), "duplicate"),
])
def test_file_errors(edit, message):
    with pytest.raises(ParseError, match=message):
        parse_machine_file(LAB.replace(*edit))


def test_error_column():
    with pytest.raises(ParseError) as e:
        parse_machine_file(LAB.replace("ham a = NOT_PI_2", "ham a = kron(I(2), BOGUS)"))
    assert (e.value.line, e.value.column) == (8, 20)


def test_validation_can_be_skipped():
    c = parse_machine_file(LAB.replace("reject: q1", "reject: q0"), validate_machine=False)
    assert c.machine.reject == frozenset({"q0"})


def test_optional_lines():
    c = parse_machine_file(LAB + "cutpoint: 3/4\nformula: gate(cos2(a,b))\n")
    assert c.cutpoint == Fraction(3, 4) and str(c.formula) == "gate(cos2(a,b))"
    with pytest.raises(ParseError, match="cutpoint"):
        parse_machine_file(LAB + "cutpoint: 2\n")


def test_round_trip_builders():
    for c in (build_lab(), build_concat_example()):
        text = serialize_machine(c)
        assert constructions_equal(parse_machine_file(text), c)
        assert serialize_machine(parse_machine_file(text)) == text


def test_round_trip_uses_named_generators():
    text = serialize_machine(build_concat_example())
    assert "ham a = kron(I(2),NOT_PI_2)" in text
    assert "ham d = neg(kron(NOT_PI_2,I(2)))" in text


def test_format_hamiltonian_scaled():
    assert format_hamiltonian(NOT_PI_2 / 3) == "scale(NOT_PI_2, 1/3)"
    assert format_hamiltonian(la.zeros(3)) == "ZERO(3)"


def test_round_trip_random_hermitian(rng):
    h = random_hermitian(rng, 3)
    m = Ctqa(["x", "y", "z"], "a", {"a": h}, "x", {"x"}, {"z"})
    c = NamedConstruction("rand", m, Scheduler(ConstDecider(1, ("a",)), Writer(Family("uniform"), Family("zero"))))
    back = parse_machine_file(serialize_machine(c))
    assert np.max(np.abs(back.machine.hamiltonians["a"] - h)) <= 1e-12
    assert constructions_equal(back, c)


def test_round_trip_mcqfa():
    q = time_independent_to_mcqfa(build_lab().machine, Fraction(1, 4))
    c = NamedConstruction("ti", q, None)
    back = parse_machine_file(serialize_machine(c))
    assert constructions_equal(back, c) and back.scheduler is None


@pytest.mark.parametrize("name", sorted(ZOO))
def test_zoo_round_trip_and_oracle(name):
    c = zoo_build(name)
    back = parse_machine_file(serialize_machine(c))
    assert constructions_equal(back, c)
    assert oracle_check(back, parse_family(ZOO[name].check_family, back.alphabet)).passed


@settings(max_examples=30, deadline=None)
@given(st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=16), min_size=3, max_size=3),
       st.booleans())
def test_rational_pi_literals_round_trip(vals, as_pi):
    a, b, c = (float(v) * (np.pi if as_pi else 1) for v in vals)
    h = np.array([[a, b], [b, c]], dtype=complex)
    text = format_hamiltonian(h)
    assert np.max(np.abs(parse_hamiltonian(text) - h)) == 0
