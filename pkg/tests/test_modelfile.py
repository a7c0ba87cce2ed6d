import copy
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mjpreward.core import validate_model
from mjpreward.modelfile import ModelFileError, load_model, model_from_dict, model_to_dict, model_to_json
from mjpreward.models import BUILTINS, builtin
from mjpreward.moments import solve_moments
from mjpreward.odesolve import SolverConfig

MODEL_DIR = Path(__file__).resolve().parents[1] / "model_files"
CONFIG = SolverConfig("rk4", h=1e-2)

MINIMAL = {
    "name": "tiny",
    "model": {"states": 2, "rates": [{"from": 0, "to": 1, "expr": "1 + t"}, {"from": 1, "to": 0, "expr": 2}]},
    "rewards": {"rate": [{"state": "all", "expr": "x + 1"}]},
}


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_shipped_files_match_builtins(name):
    from_file = load_model(MODEL_DIR / f"{name}.json")
    assert validate_model(from_file).valid
    a = solve_moments(from_file, 1.5, CONFIG, record=False)
    b = solve_moments(builtin(name), 1.5, CONFIG, record=False)
    assert a.mean == b.mean and a.variance == b.variance


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_round_trip_is_stable(name):
    text = model_to_json(builtin(name))
    again = model_to_json(model_from_dict(json.loads(text)))
    assert text == again


def test_minimal_document():
    m = model_from_dict(MINIMAL)
    assert m.d == 2 and m.name == "tiny"
    np.testing.assert_allclose(m.evaluator.reward_rate(0.0), [1.0, 2.0])
    np.testing.assert_allclose(m.evaluator.edge_rates(1.0), [2.0, 2.0])


def test_builtin_reference():
    m = model_from_dict({"model": {"builtin": {"name": "prendiville"}}, "initial": {"kind": "point", "state": 3}})
    assert m.d == 11 and m.mu[3] == 1.0


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.update(extra=1), "'extra' was unexpected"),
        (lambda d: d["model"].update(states=0), "at model"),
        (lambda d: d["model"]["rates"][0].update(expr="log("), "in expression 'log('"),
        (lambda d: d["model"]["rates"][0].update(to=5), "0->5 outside"),
        (lambda d: d["rewards"].update(jump=[{"from": 0, "to": 1, "dist": {"kind": "gamma"}}]), "rewards/jump/0/dist"),
        (lambda d: d.update(initial={"kind": "pmf", "probs": [0.5, 0.6]}), "sum to 1"),
    ],
)
def test_invalid_documents(mutate, where):
    doc = copy.deepcopy(MINIMAL)
    mutate(doc)
    with pytest.raises(ModelFileError) as info:
        model_from_dict(doc)
    assert where in str(info.value)


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelFileError):
        load_model(p)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 5),
    st.floats(0.1, 10),
    st.floats(0, 5),
    st.lists(st.floats(0.01, 0.99), max_size=3, unique=True),
)
def test_round_trip_random_chains(d, rate, reward, bps):
    doc = {
        "name": "ring",
        "model": {"states": d, "rates": [{"from": i, "to": (i + 1) % d, "expr": f"{rate!r}*(1 + 0.5*sin(t))"} for i in range(d)]},
        "rewards": {"rate": [{"state": "all", "expr": f"{reward!r}*x"}]},
        "breakpoints": {"points": sorted(bps)},
        "initial": {"kind": "point", "state": d - 1},
    }
    m = model_from_dict(doc)
    again = model_from_dict(model_to_dict(m))
    assert model_to_json(m) == model_to_json(again)
    np.testing.assert_array_equal(m.evaluator.edge_rates(0.7), again.evaluator.edge_rates(0.7))
