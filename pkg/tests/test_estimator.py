import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sidesynth import AttackSynthesizer
from sidesynth.constraints import DIGITS
from sidesynth.errors import ConfigurationError, DomainError


def test_params_round_trip_through_clone():
    est = AttackSynthesizer(heuristic="sa", k=7, cost_weights={"loop": 3})
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert twin.set_params(k=9).k == 9


def test_fit_pin_from_benchmark_id():
    est = AttackSynthesizer(alphabet=DIGITS).fit("PCI")
    assert (est.n_paths_, est.n_classes_) == (5, 5)
    assert est.domain_.alphabet == DIGITS


def test_fit_from_source_defaults_to_lowercase():
    src = "program t(h: string[2], l: string[2]) { if (h[0] == l[0]) { let x = 1; return true; } return false; }"
    est = AttackSynthesizer().fit(src)
    assert est.benchmark_ == "t" and est.n_classes_ == 2
    assert est.domain_.alphabet.startswith("abc")


def test_unfitted_attack_raises():
    with pytest.raises(NotFittedError):
        AttackSynthesizer().attack(["abcd"])


def test_invalid_params_fail_at_fit():
    with pytest.raises(ConfigurationError):
        AttackSynthesizer(delta=-1).fit("PCI")
    with pytest.raises(ConfigurationError):
        AttackSynthesizer(heuristic="xx").fit("PCI")


def test_predict_and_score():
    est = AttackSynthesizer(alphabet=DIGITS, timing=False).fit("PIN")
    assert est.predict(["0042", "9999"]) == ["0042", "9999"]
    assert est.score(["0042"]) == 1.0
    with pytest.raises(DomainError):
        est.predict(["00x2"])


def test_constant_time_scores_zero():
    est = AttackSynthesizer(timing=False).fit("PCS")
    assert est.predict(["abcd"]) == [None]
    assert est.score(["abcd"]) == 0.0


def test_index_of_initial_entropy():
    est = AttackSynthesizer(timing=False, step_limit=1).fit("IO")
    (t,) = est.attack(["banana" + "zz"])
    assert round(t.h_init_bits, 1) == 37.6 and est.n_paths_ == 9
