import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurocrypt.ciphers import ConfigurationError, DesReducedOracle, Hitag2Oracle, make_reference_oracle
from neurocrypt.dataset import CapacityError
from neurocrypt.evaluator import (
    EvalConfig,
    SecurityIndicator,
    base_match_rate,
    compare,
    default_suite,
    ranking_csv,
    ranking_text,
    run_evaluation,
)
from neurocrypt.mimicnet import ArchitectureSpec
from neurocrypt.trainer import TrainConfig


def test_base_match_rates():
    assert base_match_rate(DesReducedOracle(rounds=1)) == 0.75
    assert base_match_rate(DesReducedOracle(rounds=2)) == 0.5
    assert base_match_rate(DesReducedOracle(rounds=3)) == 0.5
    assert base_match_rate(Hitag2Oracle()) == 0.5


class StubTrainer:
    """Scripted match rates per training-set size; records what it was asked to train."""

    def __init__(self, rates):
        self.rates = rates
        self.calls = []

    def __call__(self, spec, train_set, test_set, seed, cfg):
        k = int(np.log2(len(train_set)))
        assert train_set.is_disjoint(test_set)
        self.calls.append((k, spec.name, len(train_set)))
        return self.rates(k, spec), 100 * k, 3


def _cfg(oracle, **kw):
    base = dict(m1_start=4, m2=4, suite=default_suite(oracle, ["fat_shallow"]), max_comp_data=10)
    base.update(kw)
    return EvalConfig(**base)


def test_flat_above_base_stops_after_one_extra_doubling():
    oracle = make_reference_oracle("random-function", 16, 1)
    stub = StubTrainer(lambda k, s: 0.9)
    ind = run_evaluation(oracle, _cfg(oracle, m1_start=5), trainer=stub)
    assert [c[0] for c in stub.calls] == [5, 6]
    assert ind.cmr == 0.9 and ind.comp_data == 5 and ind.comp_time == 500


def test_at_or_below_base_runs_to_cap():
    oracle = make_reference_oracle("random-function", 16, 1)
    stub = StubTrainer(lambda k, s: 0.5)
    ind = run_evaluation(oracle, _cfg(oracle, m1_start=5, max_comp_data=9), trainer=stub)
    assert [c[0] for c in stub.calls] == [5, 6, 7, 8, 9]
    assert not ind.successful and ind.cmr == 0.5 and ind.comp_data == 5


def test_cap_from_input_space():
    oracle = make_reference_oracle("random-function", 10, 1)
    stub = StubTrainer(lambda k, s: 0.4)
    run_evaluation(oracle, _cfg(oracle, m1_start=3, m2=4, max_comp_data=20), trainer=stub)
    assert [c[0] for c in stub.calls] == [3, 4, 5, 6]


def test_improvement_keeps_doubling():
    oracle = make_reference_oracle("random-function", 16, 1)
    rates = {5: 0.6, 6: 0.7, 7: 0.8, 8: 0.8, 9: 0.9}
    stub = StubTrainer(lambda k, s: rates[k])
    ind = run_evaluation(oracle, _cfg(oracle, m1_start=5), trainer=stub)
    assert [c[0] for c in stub.calls] == [5, 6, 7, 8]
    assert ind.cmr == 0.8 and ind.comp_data == 7 and ind.comp_time == 700


def test_best_architecture_and_cumulative_time():
    oracle = make_reference_oracle("random-function", 16, 2)
    suite = default_suite(oracle)
    stub = StubTrainer(lambda k, s: {"fat_shallow": 0.7, "deep_thin": 0.6, "cascade": 0.65}[s.kind])
    ind = run_evaluation(oracle, _cfg(oracle, suite=suite, m1_start=5), trainer=stub)
    assert ind.best_architecture == "fat_shallow-sigmoid"
    assert len(ind.history) == 6 and ind.cumulative_iterations == 3 * 500 + 3 * 600


def test_grow_mode_extends_previous_set():
    oracle = make_reference_oracle("random-function", 16, 1)
    seen = []

    def trainer(spec, train_set, test_set, seed, cfg):
        seen.append(train_set)
        return 0.5, 1, 1

    run_evaluation(oracle, _cfg(oracle, m1_start=4, max_comp_data=6, grow=True), trainer=trainer)
    assert [len(s) for s in seen] == [16, 32, 64]
    for small, big in zip(seen, seen[1:]):
        assert np.array_equal(big.inputs[: len(small)], small.inputs) and big.has_unique_inputs()


def test_configuration_errors():
    oracle = make_reference_oracle("identity", 8)
    with pytest.raises(ConfigurationError):
        EvalConfig(m1_start=4, m2=4, suite=[])
    with pytest.raises(ConfigurationError):
        run_evaluation(oracle, _cfg(oracle, m1_start=5, m2=4))
    with pytest.raises(ConfigurationError):
        run_evaluation(oracle, _cfg(oracle, suite=[ArchitectureSpec.preset("fat_shallow", 9, 8)]))
    small = make_reference_oracle("identity", 4)
    with pytest.raises(CapacityError):
        run_evaluation(small, _cfg(small, m1_start=4, m2=0))


def test_identity_single_size_at_cap():
    # 8-bit inputs with a 2^4 test set leave room for exactly one size, 2^4
    oracle = make_reference_oracle("identity", 8)
    ind = run_evaluation(oracle, _cfg(oracle))
    assert [h.comp_data for h in ind.history] == [4]
    assert ind.comp_data == 4 and ind.successful and ind.cmr > 0.75


def test_identity_learned_perfectly_with_room():
    # learned at the first size, so the loop stops after one non-improving doubling
    oracle = make_reference_oracle("identity", 12)
    ind = run_evaluation(oracle, _cfg(oracle, m1_start=6, m2=5, max_comp_data=8))
    assert [h.comp_data for h in ind.history] == [6, 7]
    assert ind.cmr == 1.0 and ind.comp_data == 6 and ind.successful


def test_random_function_unsuccessful():
    oracle = make_reference_oracle("random-function", 16, 8, seed=5)
    cfg = _cfg(oracle, m1_start=6, m2=8, max_comp_data=8, cmr_base=0.5, train=TrainConfig(max_epochs=30, batch_size=64))
    ind = run_evaluation(oracle, cfg)
    assert max(h.comp_data for h in ind.history) == 8
    assert 0.45 <= ind.cmr <= 0.55


def _ind(name, cmr, data, time, base=0.5):
    return SecurityIndicator(name, cmr, data, time, "fat_shallow-sigmoid", base)


def test_compare_orders_ciphers():
    des1 = _ind("des-1r", 0.997, 16, 19, base=0.75)
    hitag2 = _ind("hitag2", 0.98, 20, 22)
    des3 = _ind("des-3r", 0.50, 20, 30)
    ranked = compare([des1, hitag2, des3])
    assert [i.cipher for i in ranked] == ["des-3r", "hitag2", "des-1r"]
    assert compare([hitag2]) == [hitag2]
    twin = _ind("hitag2-copy", 0.98, 20, 22)
    assert compare([twin, hitag2]) == [twin, hitag2]
    assert compare([hitag2, twin]) == [hitag2, twin]
    with pytest.raises(ValueError):
        compare([])


def test_compare_tie_breaks_on_data_then_time():
    a = _ind("a", 0.900, 16, 50)
    b = _ind("b", 0.903, 18, 10)
    c = _ind("c", 0.901, 18, 40)
    assert [i.cipher for i in compare([a, b, c])] == ["c", "b", "a"]


indicators = st.builds(
    _ind, st.just("x"), st.floats(0, 1), st.integers(0, 30), st.integers(0, 10**6), st.sampled_from([0.5, 0.75])
)


@given(st.lists(indicators, min_size=1, max_size=6))
def test_compare_is_consistent_preorder(inds):
    ranked = compare(inds)
    assert sorted(map(id, ranked)) == sorted(map(id, inds))
    # permutation invariance up to ties: re-ranking a shuffled copy gives equal keys position by position
    again = compare(list(reversed(inds)))
    key = lambda i: (i.successful, round(i.cmr / 0.01), i.comp_data, i.comp_time)
    assert [key(i) for i in ranked] == [key(i) for i in again]
    for a, b in itertools.combinations(ranked, 2):
        # an unsuccessful attack never ranks below a successful one
        assert not (a.successful and not b.successful)


def test_indicator_io(tmp_path):
    ind = _ind("hitag2", 0.98, 20, 22)
    path = tmp_path / "i.json"
    ind.save(path)
    assert SecurityIndicator.load(path) == ind
    path.write_text('{"cipher": "x"}')
    with pytest.raises(ValueError):
        SecurityIndicator.load(path)
    with pytest.raises(ValueError):
        _ind("bad", 1.5, 1, 1)


def test_ranking_outputs():
    ranked = compare([_ind("a", 0.9, 10, 5), _ind("b", 0.5, 12, 7)])
    csv_text = ranking_csv(ranked)
    assert csv_text.splitlines()[0].startswith("rank,cipher,cmr")
    assert csv_text.splitlines()[1].startswith("1,b,")
    assert "strongest" in ranking_text(ranked)
