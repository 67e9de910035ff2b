import collections
import csv
import io
import math
import random

import pytest

from sidesynth import attack as K
from sidesynth import constraints as C
from sidesynth.benchmarks import load_program
from sidesynth.constraints import HIGH, StringDomain
from sidesynth.errors import (ConfigurationError, ContradictionError, ExhaustedError,
                              PartitionError)
from sidesynth.symexec import UNIT_COST, merge_observations, run_concrete, sym_exec

from oracles import PIN, strings


@pytest.fixture(scope="module")
def pin_psis():
    return merge_observations(sym_exec(load_program("PIN"), UNIT_COST, PIN))


def brute_classes(program, psis, ks, l_val):
    """Class sizes by running the program on every secret still in C_h."""
    costs = collections.Counter(
        run_concrete(program, h, l_val, UNIT_COST, ks.domain)[1]
        for h in strings(ks.domain, HIGH) if ks.ka.dfa.accepts(h))
    return [sum(n for c, n in costs.items() if p.covers(c)) for p in psis]


def brute_info(counts):
    total = sum(counts)
    return sum(m / total * math.log2(total / m) for m in counts if m)


def test_entropy_values():
    full = K.KnowledgeState.initial(PIN)
    assert K.entropy(full) == pytest.approx(math.log2(10000), abs=1e-12)
    eight = K.KnowledgeState.initial(PIN, C.conj(C.BeginsConst(HIGH, "1"),
                                                 C.CharEqConst(HIGH, 1, "2"),
                                                 C.CharEqConst(HIGH, 2, "3")))
    assert K.entropy(eight) == pytest.approx(math.log2(10))
    assert K.entropy(K.KnowledgeState.initial(PIN, C.StrEqConst(HIGH, "1337"))) == 0.0
    small = StringDomain("ab", 3, 3)
    ks = K.KnowledgeState.initial(small)
    assert ks.count == 8 and K.entropy(ks) == 3.0


def test_pin_mutual_information_is_flat(pin_psis):
    ks = K.KnowledgeState.initial(PIN)
    expected = brute_info([9000, 900, 90, 9, 1])
    assert expected == pytest.approx(0.5211, abs=1e-4)
    program = load_program("PIN")
    for l in ("0000", "1337", "9876"):
        assert K.class_counts(ks, pin_psis, l) == brute_classes(program, pin_psis, ks, l) \
            == [9000, 900, 90, 9, 1]
        assert K.mutual_info(ks, pin_psis, l) == pytest.approx(expected, abs=1e-12)


def test_single_class_leaks_nothing():
    psis = merge_observations(sym_exec(load_program("PCS")))
    ks = K.KnowledgeState.initial(StringDomain(C.LOWER, 4, 4))
    assert len(psis) == 1 and K.mutual_info(ks, psis, "abcd") == 0.0
    one = K.KnowledgeState.initial(PIN, C.StrEqConst(HIGH, "4711"))
    assert K.mutual_info(one, merge_observations(sym_exec(load_program("PIN"), UNIT_COST, PIN)),
                         "1234") == 0.0


def test_observe_and_update_on_pin(pin_psis):
    oracle = K.Oracle(load_program("PIN"), "1337", UNIT_COST, PIN)
    assert K.observe(oracle, "8229", pin_psis) == 0
    assert K.observe(oracle, "1058", pin_psis) == 1
    assert K.observe(oracle, "1337", pin_psis) == 4
    ks = K.update(K.KnowledgeState.initial(PIN), pin_psis[0], "8229")
    assert ks.count == 9000
    ks = K.update(ks, pin_psis[0], "0002")
    assert ks.count == 8000 and ks.tried == ("8229", "0002")
    assert not ks.in_c_l("0002") and ks.in_c_l("1337")


def test_update_with_true_class_keeps_count():
    from sidesynth.symexec import ObservationConstraint
    ks = K.KnowledgeState.initial(PIN)
    after = K.update(ks, ObservationConstraint(C.TRUE, 0, 1, (0,)), "1234")
    assert after.count == ks.count


def test_contradiction_and_partition_errors(pin_psis):
    ks = K.update(K.KnowledgeState.initial(PIN), pin_psis[4], "1337")
    with pytest.raises(ContradictionError):
        K.update(ks, pin_psis[0], "1337")
    with pytest.raises(PartitionError):
        K.class_counts(K.KnowledgeState.initial(PIN), pin_psis[:4], "1234")
    oracle = K.Oracle(load_program("PIN"), "1337", UNIT_COST, PIN)
    with pytest.raises(ConfigurationError):
        K.observe(oracle, "1337", pin_psis[:4])


def test_get_input_contracts():
    rng = random.Random(3)
    ks = K.KnowledgeState.initial(PIN, C.CharEqConst(HIGH, 0, "1"))
    assert all(K.get_input(ks, True, rng).startswith("1") for _ in range(50))
    seen = {K.get_input(ks, False, rng) for _ in range(300)}
    assert any(not s.startswith("1") for s in seen)
    single = K.KnowledgeState.initial(PIN, C.StrEqConst(HIGH, "4711"))
    assert K.get_input(single, True, rng) == "4711"


def test_exhausted_when_every_candidate_tried(pin_psis):
    ks = K.update(K.KnowledgeState.initial(PIN), pin_psis[4], "4711")
    with pytest.raises(ExhaustedError):
        K.get_input(ks, True, random.Random(0))


def test_restricted_falls_back_without_projection():
    ks = K.KnowledgeState.initial(StringDomain("ab", 3, 1))
    assert not ks.projectable
    assert K.get_input(ks, True, random.Random(0)) in ("a", "b")


def test_neighbor_changes_one_position():
    rng = random.Random(9)
    ks = K.KnowledgeState.initial(PIN)
    for _ in range(50):
        n = K.get_neighbor_input("1337", ks, False, rng)
        assert sum(a != b for a, b in zip(n, "1337")) == 1
    tiny = K.KnowledgeState.initial(StringDomain("01", 1, 1))
    assert K.get_neighbor_input("0", tiny, False, rng) == "1"


def test_crossover_swaps_tails():
    assert K.crossover("1337", "8229", 2) == ("1329", "8237")


def _pick(kind, ks, psis, rng, **kw):
    cfg = K.HeuristicConfig(kind=kind, **kw).validate()
    return K.HEURISTICS[kind](ks, psis, cfg, rng)


def test_random_heuristic_returns_argmax():
    program = load_program("SE")
    d = StringDomain("abc", 4, 4)
    psis = merge_observations(sym_exec(program, UNIT_COST, d))
    ks = K.KnowledgeState.initial(d, C.BeginsConst(HIGH, "a"))
    rng = random.Random(11)
    state = rng.getstate()
    picked = _pick("ra", ks, psis, rng, k=15)
    rng.setstate(state)
    drawn = [K.get_input(ks, True, rng) for _ in range(15)]
    values = [K.mutual_info(ks, psis, x) for x in drawn]
    assert K.mutual_info(ks, psis, picked) == max(values)
    assert len(set(values)) > 1


def test_random_heuristic_with_one_draw_equals_m(pin_psis):
    ks = K.KnowledgeState.initial(PIN)
    a = _pick("ra", ks, pin_psis, random.Random(5), k=1)
    b = _pick("m", ks, pin_psis, random.Random(5))
    assert a == b


class _Counting:
    def __init__(self, value=0.5):
        self.calls, self.value = 0, value

    def __call__(self, l_val):
        self.calls += 1
        return self.value


def test_annealing_temperature_steps():
    ks = K.KnowledgeState.initial(PIN)
    cfg = K.HeuristicConfig(kind="sa").validate()
    obj = _Counting()
    out = K.attack_input_sa(ks, [], cfg, random.Random(0), obj)
    steps = math.ceil(math.log(cfg.t_min / cfg.t0) / math.log(1 - cfg.cooling))
    assert steps == 88 and obj.calls == 1 + steps
    assert ks.in_c_l(out)


def test_annealing_single_candidate(pin_psis):
    ks = K.KnowledgeState.initial(PIN, C.StrEqConst(HIGH, "4711"))
    assert _pick("sa", ks, pin_psis, random.Random(1)) == "4711"


def test_genetic_flat_objective_keeps_first_member():
    ks = K.KnowledgeState.initial(PIN)
    rng = random.Random(8)
    state = rng.getstate()
    cfg = K.HeuristicConfig(kind="ga").validate()
    out = K.attack_input_ga(ks, [], cfg, rng, _Counting(0.521))
    rng.setstate(state)
    assert out == K.get_input(ks, True, rng)


def test_genetic_singleton_returns_secret(pin_psis):
    ks = K.KnowledgeState.initial(PIN, C.StrEqConst(HIGH, "4711"))
    assert _pick("ga", ks, pin_psis, random.Random(2)) == "4711"


@pytest.mark.parametrize("bad", [dict(pop_size=1), dict(k=0), dict(kind="zz"),
                                 dict(cooling=1.5), dict(best_n=30), dict(stall_steps=0)])
def test_config_rejects_degenerate_values(bad):
    with pytest.raises(ConfigurationError):
        K.HeuristicConfig(**bad).validate()


def _run(bid, secret, kind="m", domain=None, **kw):
    program = load_program(bid)
    domain = domain or StringDomain(C.LOWER, program.high_len, program.low_len)
    psis = merge_observations(sym_exec(program, UNIT_COST, domain))
    cfg = K.HeuristicConfig(kind=kind, **kw)
    return K.run_attack(program, psis, K.KnowledgeState.initial(domain), secret, cfg,
                        benchmark=bid, timing=False)


def test_pin_attack_completes():
    t = _run("PIN", "1337", domain=PIN)
    assert t.complete and t.recovered == "1337" and len(t.steps) <= 37
    assert t.steps[-1].model_count == 1


def test_constant_time_program_gives_up():
    t = _run("PCS", "zebr")
    assert not t.complete and t.reason == "no-gain"
    assert t.h_final_bits == t.h_init_bits == 4 * math.log2(26)


def test_zero_step_budget():
    t = _run("PIN", "1337", domain=PIN, step_limit=0)
    assert not t.complete and t.steps == [] and t.h_final_bits == t.h_init_bits


def test_trace_csv_layout():
    t = _run("PIN", "0042", domain=PIN)
    rows = list(csv.reader(io.StringIO(t.to_csv())))
    assert tuple(rows[0]) == K.TRACE_HEADER
    for row in rows[1:]:
        assert float(row[4]) == pytest.approx(math.log2(int(row[5])), abs=1e-9)
        assert row[6] == ""
    assert t.summary()["outcome"] == "complete"


@pytest.mark.parametrize("bid,n,m", [("SI", 3, 3), ("SE", 3, 3), ("CO", 3, 3),
                                     ("SCI", 3, 3), ("IO", 4, 1)])
def test_class_counts_match_execution(bid, n, m):
    """Partition identity and counts against concrete runs over reachable states."""
    program = load_program(bid).with_lengths(n, m)
    d = StringDomain("abc", n, m)
    psis = merge_observations(sym_exec(program, UNIT_COST, d))
    rng = random.Random(bid)
    secret = "".join(rng.choice(d.alphabet) for _ in range(n))
    oracle = K.Oracle(program, secret, UNIT_COST, d)
    ks = K.KnowledgeState.initial(d)
    for _ in range(4):
        l = "".join(rng.choice(d.alphabet) for _ in range(m))
        counts = K.class_counts(ks, psis, l)
        assert counts == brute_classes(program, psis, ks, l)
        assert sum(counts) == ks.count
        assert K.mutual_info(ks, psis, l) == pytest.approx(brute_info(counts), abs=1e-12)
        # definition cross-check through the update path
        posterior = sum(c / ks.count * K.entropy(K.update(ks, p, l))
                        for c, p in zip(counts, psis) if c)
        assert K.entropy(ks) - posterior == pytest.approx(K.mutual_info(ks, psis, l), abs=1e-9)
        ks = K.update(ks, psis[K.observe(oracle, l, psis)], l)


def test_unprojectable_restricted_run_is_flagged():
    t = _run("IO", "abcdefgh", step_limit=3)
    assert t.emitted_outside_c_l == len(t.steps) > 0
    assert _run("PIN", "1337", domain=PIN, step_limit=3).emitted_outside_c_l == 0
