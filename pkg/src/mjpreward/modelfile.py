"""JSON model files: schema, loader and writer."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import jsonschema

from .core import (
    BetaComponent,
    BetaSum,
    BreakpointSet,
    Deterministic,
    ExternalSpec,
    InitialDistribution,
    ModelError,
    ModelSpec,
    RateEntry,
    RewardSpec,
    ScheduleSpec,
    SimBounds,
)
from .exprlang import ExprError, TimeFunction
from .models import builtin

__all__ = ["SCHEMA", "ModelFileError", "load_model", "model_from_dict", "model_to_dict", "model_to_json"]


class ModelFileError(ValueError):
    """The model file is malformed or fails schema validation."""


_expr = {"type": ["string", "number"]}
_state = {"oneOf": [{"const": "all"}, {"type": "integer", "minimum": 0}]}
_nonneg_list = {"type": "array", "items": {"type": "number", "minimum": 0}}

_component = {
    "type": "object",
    "additionalProperties": False,
    "required": ["alpha", "beta"],
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "scale": _expr,
    },
}

_dist = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "value"],
            "properties": {"kind": {"const": "deterministic"}, "value": _expr},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "alpha", "beta"],
            "properties": {
                "kind": {"const": "beta"},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "scale": _expr,
                "shift": _expr,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "components"],
            "properties": {
                "kind": {"const": "beta_sum"},
                "shift": _expr,
                "components": {"type": "array", "minItems": 1, "items": _component},
            },
        },
    ]
}

_state_expr_list = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "additionalProperties": False,
        "required": ["state", "expr"],
        "properties": {"state": _state, "expr": _expr},
    },
}


def _per_state_dist():
    return {
        "dist": _dist,
        "dist_per_state": {"type": "array", "minItems": 1, "items": _dist},
    }


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "mjpreward model file",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "name": {"type": "string"},
        "period": {"type": "number", "exclusiveMinimum": 0},
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["states", "rates"],
                    "properties": {
                        "states": {"type": "integer", "minimum": 1},
                        "rates": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "additionalProperties": False,
                                "required": ["from", "to", "expr"],
                                "properties": {
                                    "from": {"type": "integer", "minimum": 0},
                                    "to": {"type": "integer", "minimum": 0},
                                    "expr": _expr,
                                },
                            },
                        },
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["builtin"],
                    "properties": {
                        "builtin": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["name"],
                            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
                        }
                    },
                },
            ]
        },
        "rewards": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rate": _state_expr_list,
                "jump": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["from", "to", "dist"],
                        "properties": {
                            "from": {"type": "integer", "minimum": 0},
                            "to": {"type": "integer", "minimum": 0},
                            "dist": _dist,
                        },
                    },
                },
                "scheduled": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["times"],
                    "properties": {
                        "times": {
                            "oneOf": [
                                {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "required": ["kind", "start", "step"],
                                    "properties": {
                                        "kind": {"const": "arithmetic"},
                                        "start": {"type": "number", "exclusiveMinimum": 0},
                                        "step": {"type": "number", "exclusiveMinimum": 0},
                                    },
                                },
                                {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "required": ["kind", "points"],
                                    "properties": {
                                        "kind": {"const": "explicit"},
                                        "points": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                                    },
                                },
                            ]
                        },
                        **_per_state_dist(),
                    },
                },
                "external": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["intensity"],
                    "properties": {"intensity": _state_expr_list, **_per_state_dist()},
                },
            },
        },
        "initial": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "state"],
                    "properties": {"kind": {"const": "point"}, "state": {"type": "integer", "minimum": 0}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "probs"],
                    "properties": {"kind": {"const": "pmf"}, "probs": _nonneg_list},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "ratio"],
                    "properties": {
                        "kind": {"const": "truncated_geometric"},
                        "ratio": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            ]
        },
        "breakpoints": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": _nonneg_list,
                "period": {"type": "number", "exclusiveMinimum": 0},
                "per_period": _nonneg_list,
            },
        },
        "bounds": {
            "type": "object",
            "additionalProperties": False,
            "required": ["lambda_bar"],
            "properties": {"lambda_bar": _nonneg_list, "beta_bar": _nonneg_list},
        },
    },
}

_VALIDATOR = jsonschema.Draft7Validator(SCHEMA)


def _fn(v) -> TimeFunction:
    try:
        return TimeFunction.coerce(v)
    except ExprError as exc:
        raise ModelFileError(f"in expression {v!r}: {exc}") from None


def _law(doc):
    kind = doc["kind"]
    if kind == "deterministic":
        return Deterministic(_fn(doc["value"]))
    if kind == "beta":
        return BetaSum(_fn(doc.get("shift", 0)), (BetaComponent(doc["alpha"], doc["beta"], _fn(doc.get("scale", 1))),))
    return BetaSum(
        _fn(doc.get("shift", 0)),
        tuple(BetaComponent(c["alpha"], c["beta"], _fn(c.get("scale", 1))) for c in doc["components"]),
    )


def _per_state_fns(entries, d, what):
    out = [None] * d
    for e in entries:
        if e["state"] == "all":
            out = [_fn(e["expr"])] * d
    for e in entries:
        if e["state"] != "all":
            if e["state"] >= d:
                raise ModelFileError(f"{what}: state {e['state']} outside 0..{d - 1}")
            out[e["state"]] = _fn(e["expr"])
    missing = [i for i, f in enumerate(out) if f is None]
    if missing:
        raise ModelFileError(f"{what}: no expression for state(s) {missing}")
    return tuple(out)


def _per_state_laws(doc, d, what):
    if "dist_per_state" in doc and "dist" in doc:
        raise ModelFileError(f"{what}: give either dist or dist_per_state, not both")
    if "dist" in doc:
        return (_law(doc["dist"]),) * d
    if "dist_per_state" in doc:
        laws = tuple(_law(x) for x in doc["dist_per_state"])
        if len(laws) != d:
            raise ModelFileError(f"{what}: dist_per_state needs {d} entries")
        return laws
    raise ModelFileError(f"{what}: missing dist or dist_per_state")


def _initial(doc):
    kind = doc["kind"]
    if kind == "point":
        return InitialDistribution.point(doc["state"])
    if kind == "pmf":
        return InitialDistribution.pmf(doc["probs"])
    return InitialDistribution.truncated_geometric(doc["ratio"])


def model_from_dict(doc: dict) -> ModelSpec:
    """Build a ModelSpec from a parsed model-file document."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ModelFileError(f"schema violation at {where}: {e.message}")
    m = doc["model"]
    if "builtin" in m:
        extra = set(doc) - {"model", "initial", "name"}
        if extra:
            raise ModelFileError(f"builtin models accept only 'initial' and 'name' overrides, got {sorted(extra)}")
        try:
            spec = builtin(m["builtin"]["name"], **m["builtin"].get("params", {}))
        except (KeyError, TypeError) as exc:
            raise ModelFileError(str(exc)) from None
        if "initial" in doc:
            spec = spec.with_initial(_initial(doc["initial"]))
        return spec
    d = m["states"]
    try:
        rates = tuple(RateEntry(r["from"], r["to"], _fn(r["expr"])) for r in m["rates"])
        rw = doc.get("rewards", {})
        rate = _per_state_fns(rw["rate"], d, "rewards.rate") if "rate" in rw else (TimeFunction.constant(0.0),) * d
        jump = {(j["from"], j["to"]): _law(j["dist"]) for j in rw.get("jump", [])}
        schedule = ScheduleSpec()
        sched_laws = ()
        if "scheduled" in rw:
            s = rw["scheduled"]
            times = s["times"]
            if times["kind"] == "arithmetic":
                schedule = ScheduleSpec.arithmetic(times["start"], times["step"])
            else:
                pts = times["points"]
                if any(b <= a for a, b in zip(pts, pts[1:])):
                    raise ModelFileError("rewards.scheduled.times.points must be strictly increasing")
                schedule = ScheduleSpec.explicit(pts)
            sched_laws = _per_state_laws(s, d, "rewards.scheduled")
        external = None
        if "external" in rw:
            e = rw["external"]
            external = ExternalSpec(_per_state_fns(e["intensity"], d, "rewards.external.intensity"), _per_state_laws(e, d, "rewards.external"))
        bp = doc.get("breakpoints", {})
        bounds = None
        if "bounds" in doc:
            b = doc["bounds"]
            bounds = SimBounds(b["lambda_bar"], b.get("beta_bar", [0.0] * d))
        return ModelSpec(
            d=d,
            rates=rates,
            rewards=RewardSpec(rate=rate, jump=jump, schedule=schedule, scheduled_laws=sched_laws, external=external),
            initial=_initial(doc["initial"]) if "initial" in doc else InitialDistribution.point(0),
            breakpoints=BreakpointSet(tuple(bp.get("points", ())), bp.get("period"), tuple(bp.get("per_period", ()))),
            bounds=bounds,
            period=doc.get("period"),
            name=doc.get("name", "model"),
        )
    except ModelError as exc:
        raise ModelFileError(str(exc)) from None


def load_model(path: Union[str, Path]) -> ModelSpec:
    """Read and validate a JSON model file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON: {exc}") from None
    return model_from_dict(doc)


# --------------------------------------------------------------------------
# Writing


def _num_or_text(f: TimeFunction):
    if f.is_constant:
        v = float(f(0.0))
        return int(v) if v.is_integer() else v
    return f.text


def _law_to_dict(law):
    if isinstance(law, Deterministic):
        return {"kind": "deterministic", "value": _num_or_text(law.value)}
    comps = [{"alpha": c.alpha, "beta": c.beta, "scale": _num_or_text(c.scale)} for c in law.components]
    return {"kind": "beta_sum", "shift": _num_or_text(law.shift), "components": comps}


def _state_exprs(fns):
    texts = [_num_or_text(f) for f in fns]
    if all(t == texts[0] for t in texts):
        return [{"state": "all", "expr": texts[0]}]
    return [{"state": i, "expr": t} for i, t in enumerate(texts)]


def _laws(laws):
    docs = [_law_to_dict(lw) for lw in laws]
    if all(doc == docs[0] for doc in docs):
        return {"dist": docs[0]}
    return {"dist_per_state": docs}


def model_to_dict(model: ModelSpec) -> dict:
    """Inverse of :func:`model_from_dict` (explicit form, never ``builtin``)."""
    rw = model.rewards
    rewards = {"rate": _state_exprs(rw.rate)}
    if rw.jump:
        rewards["jump"] = [{"from": a, "to": b, "dist": _law_to_dict(lw)} for (a, b), lw in rw.jump.items()]
    if not rw.schedule.is_empty:
        s = rw.schedule
        times = (
            {"kind": "arithmetic", "start": s.start, "step": s.step}
            if s.kind == "arithmetic"
            else {"kind": "explicit", "points": list(s.points)}
        )
        rewards["scheduled"] = {"times": times, **_laws(rw.scheduled_laws)}
    if rw.external is not None:
        rewards["external"] = {"intensity": _state_exprs(rw.external.intensity), **_laws(rw.external.laws)}
    ini = model.initial
    if ini.kind == "point":
        initial = {"kind": "point", "state": ini.state}
    elif ini.kind == "pmf":
        initial = {"kind": "pmf", "probs": list(ini.probs)}
    else:
        initial = {"kind": "truncated_geometric", "ratio": ini.ratio}
    doc = {
        "name": model.name,
        "model": {
            "states": model.d,
            "rates": [{"from": e.source, "to": e.target, "expr": _num_or_text(e.rate)} for e in model.rates],
        },
        "rewards": rewards,
        "initial": initial,
    }
    bp = model.breakpoints
    if bp.points or bp.period:
        b = {}
        if bp.points:
            b["points"] = list(bp.points)
        if bp.period:
            b["period"] = bp.period
            b["per_period"] = list(bp.per_period)
        doc["breakpoints"] = b
    if model.bounds is not None:
        doc["bounds"] = {"lambda_bar": list(model.bounds.lambda_bar), "beta_bar": list(model.bounds.beta_bar)}
    if model.period:
        doc["period"] = model.period
    return doc


def model_to_json(model: ModelSpec) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"
