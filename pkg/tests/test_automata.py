import collections
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sidesynth import automata as A
from sidesynth import constraints as C
from sidesynth.constraints import HIGH, LOW, StringDomain
from sidesynth.errors import FormulaError

from oracles import PIN, brute_count, dfa_count, random_domain, random_formula, strings, prefix_psi


def test_counts_of_simple_languages():
    assert A.count_models(A.compile(C.CharEqConst(HIGH, 0, "1"), PIN), 4) == 1000
    assert A.count_models(A.compile(C.FALSE, PIN), 4) == 0
    assert A.count_models(A.compile(C.TRUE, PIN), 4) == 10000
    below = C.lex_const(HIGH, "1000", PIN, less=True)
    assert A.count_models(A.compile(below, PIN), 4) == 1000 == \
        sum(h < "1000" for h in strings(PIN, HIGH))


def test_instantiated_prefix_counts():
    psi2 = C.substitute(prefix_psi(2), LOW, "1058", PIN)
    assert A.count_models(A.compile(psi2, PIN), 4) == 900 == brute_count(psi2, PIN)
    psi5 = C.substitute(prefix_psi(5), LOW, "1337", PIN)
    assert A.count_models(A.compile(psi5, PIN), 4) == 1


def test_emptiness():
    assert A.is_empty(A.compile(C.FALSE, PIN), 4)
    assert not A.is_empty(A.compile(C.TRUE, PIN), 4)
    f = C.And((C.CharEqConst(HIGH, 0, "1"), C.StrEqConst(HIGH, "2222")))
    assert A.is_empty(A.compile(f, PIN), 4) and brute_count(f, PIN) == 0


def test_minimal_dfa_is_canonical():
    a = A.compile(C.Or((C.CharEqConst(HIGH, 0, "1"), C.BeginsConst(HIGH, "1"))), PIN)
    b = A.compile(C.CharEqConst(HIGH, 0, "1"), PIN)
    assert a.same_as(b)
    assert a.n_states == A.minimize(a).n_states


def test_boolean_operations_match_sets():
    d = StringDomain("abc", 3, 3)
    f = A.compile(C.CharEqConst(HIGH, 1, "b"), d)
    g = A.compile(C.BeginsConst(HIGH, "a"), d)
    words = lambda x: set(A.enumerate_words(x, 3))
    assert words(A.intersect(f, g)) == words(f) & words(g)
    assert words(A.union(f, g)) == words(f) | words(g)
    assert words(A.complement(f)) == set(strings(d, HIGH)) - words(f)


def test_compile_rejects_two_variables():
    with pytest.raises(FormulaError):
        A.compile(C.CharEqVar(HIGH, 0, LOW, 0), PIN)


def test_dfa_validates_tables():
    with pytest.raises(ValueError):
        A.Dfa("ab", [[0, 2]], 0, [True])


def test_samples_satisfy_constraint():
    dfa = A.compile(C.CharEqConst(HIGH, 0, "1"), PIN)
    rng = random.Random(0)
    assert all(A.sample_uniform(dfa, 4, rng).startswith("1") for _ in range(200))
    single = A.compile(C.StrEqConst(HIGH, "4711"), PIN)
    assert {A.sample_uniform(single, 4, rng) for _ in range(20)} == {"4711"}
    with pytest.raises(ValueError):
        A.sample_uniform(A.compile(C.FALSE, PIN), 4, rng)


def _chi2_critical(df, z=3.090232306167813):
    # Wilson-Hilferty approximation of the upper 0.001 quantile
    return df * (1 - 2 / (9 * df) + z * math.sqrt(2 / (9 * df))) ** 3


def test_sampling_is_uniform_chi_square():
    dfa = A.compile(C.StrNeqConst(HIGH, "0000"), PIN)
    rng = random.Random(2024)
    n = 100_000
    freq = collections.Counter(A.sample_uniform(dfa, 4, rng) for _ in range(n))
    assert "0000" not in freq
    expected = n / 9999
    observed = np.array([freq.get(w, 0) for w in strings(PIN, HIGH) if w != "0000"])
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    assert chi2 < _chi2_critical(9998)


def test_knowledge_automaton_conjoin():
    ka = A.KnowledgeAutomaton.from_formula(C.TRUE, PIN)
    assert ka.count == 10000
    f = C.CharNeqConst(HIGH, 0, "8")
    assert A.conjoin(ka, f, PIN).count == 9000
    assert A.conjoin(ka, C.TRUE, PIN).count == 10000
    k2 = A.conjoin(ka, f, PIN)
    assert A.conjoin(k2, C.neg(f), PIN).count == 0


def test_joint_encoding_pads_shorter_string():
    d = StringDomain("ab", 3, 1)
    f = C.And((C.CharEqVar(HIGH, 2, LOW, 0), C.LexLt(LOW, HIGH)))
    assert A.joint_length(d) == 3
    assert dfa_count(f, d) == brute_count(f, d)


def test_count_section_matches_substitution():
    psi = prefix_psi(3)
    h_dfa = A.compile(C.CharNeqConst(HIGH, 3, "9"), PIN)
    joint = A.compile_joint(psi, PIN)
    for l in ("1337", "0000", "9999"):
        inst = A.compile(C.substitute(psi, LOW, l, PIN), PIN)
        assert A.count_section(h_dfa, joint, l, PIN) == A.count_intersection(h_dfa, inst, 4)


def test_dot_output_names_every_state():
    dot = A.to_dot(A.compile(C.CharEqConst(HIGH, 0, "1"), PIN), "g")
    assert dot.startswith("digraph g {") and dot.rstrip().endswith("}")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32))
def test_count_matches_enumeration(seed):
    rng = random.Random(seed)
    d = random_domain(rng)
    f = random_formula(rng, d)
    assert dfa_count(f, d) == brute_count(f, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32))
def test_enumerate_lists_exactly_the_models(seed):
    rng = random.Random(seed)
    d = random_domain(rng, equal=True)
    f = random_formula(rng, d, vars_=(HIGH,))
    words = list(A.enumerate_words(A.compile(f, d, HIGH), d.high_len))
    assert words == [h for h in strings(d, HIGH) if C.evaluate(f, h, None, d)]
    first = A.first_word(A.compile(f, d, HIGH), d.high_len)
    assert (first is None) == (not words)
    if words:
        assert "".join(first) == words[0]
