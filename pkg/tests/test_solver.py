import random

from hypothesis import given, settings, strategies as st

from sidesynth import constraints as C
from sidesynth import solver
from sidesynth.constraints import HIGH, LOW, StringDomain

from oracles import PIN, brute_count, random_domain, random_formula


def _equality_chain(n):
    return C.conj(*(C.CharEqVar(HIGH, i, LOW, (i + 1) % n) for i in range(n)))


def test_equality_only_formula_uses_backtracking():
    f = C.conj(_equality_chain(4), C.CharEqConst(LOW, 2, "7"))
    assert solver.has_cross_positions(f)
    h, l = solver.find_model(f, PIN)
    assert C.evaluate(f, h, l, PIN) and l[2] == "7"


def test_unsatisfiable_cross_position_cycle():
    # h0 = l1 = h1 by transitivity, but h0 and h1 are pinned apart
    f = C.conj(C.CharEqVar(HIGH, 0, LOW, 1), C.CharEqVar(LOW, 1, HIGH, 1),
               C.CharEqConst(HIGH, 0, "1"), C.CharEqConst(HIGH, 1, "2"))
    assert solver.find_model(f, PIN) is None
    assert not solver.satisfiable(f, PIN)
    assert solver.witness(f, PIN) is None


def test_witness_for_constants():
    assert solver.witness(C.TRUE, PIN) == ("0000", "0000")
    assert solver.witness(C.FALSE, PIN) is None


def test_witness_pads_unequal_lengths():
    d = StringDomain("ab", 3, 1)
    f = C.conj(C.LexLt(HIGH, LOW), C.CharEqConst(HIGH, 2, "b"))
    h, l = solver.witness(f, d)
    assert len(h) == 3 and len(l) == 1 and C.evaluate(f, h, l, d)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_satisfiable_agrees_with_brute_force(seed):
    rng = random.Random(seed)
    d = random_domain(rng)
    f = random_formula(rng, d)
    sat = brute_count(f, d) > 0
    assert solver.satisfiable(f, d) == sat
    w = solver.witness(f, d)
    assert (w is not None) == sat
    if w is not None:
        assert C.evaluate(f, w[0], w[1], d)
