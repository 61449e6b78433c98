"""JSON configuration: strict schema and construction of a :class:`ProblemSpec`.

A document looks like::

    {
      "version": 1,
      "problem": {
        "t0": 1.0, "t_max": 2.0, "grid": {"h": 0.001},
        "truncation": {"N": 16, "closure": "zero"},
        "rhs": {"kind": "dsl", "source": "k[n]/(1+t^2)*x[n] + t*cos(x[n+1])",
                "params": {"k": 0.5}},
        "functionals": {"generator": {"density": {"pieces": [
            {"from": 0, "to": "t0", "coeffs": ["1/(n+t0)"]}]}}},
        "envelopes": {"A": "bracket(k, p)/(1+t^2)", "B": "t0", "C": "bracket(k, p) + tp"},
        "seminorms": {"P": 3}
      }
    }

Every object rejects unknown keys, so a misspelling is an error rather
than a silent default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import jsonschema

from . import dsl
from .core import SeminormConfig
from .errors import ConfigError, DslNameError, DslSyntaxError, EvaluationError
from .functionals import FunctionalFamily, FunctionalGenerator, PiecewisePolynomial, StieltjesFunctional
from .hypotheses import GrowthEnvelope
from .problem import System, make_problem
from .problems import build_builtin
from .rhs import CLOSURES, RhsFamily
from .truncation import pad_finite

__all__ = ["SCHEMA", "ConfigDocument", "load_config", "parse_config", "build_problem"]

_NUM = {"type": "number"}
_EXPR = {"type": ["number", "string"]}


def _obj(properties, required=()):
    return {"type": "object", "properties": properties, "required": list(required),
            "additionalProperties": False}


def _functional_schema(value):
    return _obj({
        "point_masses": {"type": "array", "items": _obj({"t": value, "w": value}, ["t", "w"])},
        "density": _obj({"pieces": {"type": "array", "items": _obj(
            {"from": value, "to": value, "coeffs": {"type": "array", "items": value, "minItems": 1}},
            ["from", "to", "coeffs"])}}, ["pieces"]),
    })


_FUNCTIONAL = _functional_schema(_NUM)

SCHEMA = _obj({
    "version": {"const": 1},
    "problem": _obj({
        "t0": {"type": "number", "exclusiveMinimum": 0},
        "t_max": _NUM,
        "grid": _obj({"h": {"type": "number", "exclusiveMinimum": 0}}, ["h"]),
        "truncation": _obj({"N": {"type": "integer", "minimum": 1},
                            "closure": {"enum": list(CLOSURES)}}),
        "rhs": _obj({
            "kind": {"enum": ["dsl", "builtin"]},
            "source": {"oneOf": [{"type": "string"},
                                 {"type": "array", "items": {"type": "string"}, "minItems": 1}]},
            "name": {"type": "string"},
            "params": {"type": "object"},
        }, ["kind"]),
        "functionals": {"oneOf": [
            {"type": "array", "items": _FUNCTIONAL},
            _obj({"list": {"type": "array", "items": _FUNCTIONAL},
                  "generator": _functional_schema(_EXPR)}),
        ]},
        "envelopes": _obj({
            "A": {"oneOf": [_EXPR, _obj({"pieces": {"type": "array", "minItems": 1, "items": _obj(
                {"from": _EXPR, "to": _EXPR, "coeffs": {"type": "array", "items": _EXPR, "minItems": 1}},
                ["from", "to", "coeffs"])}}, ["pieces"])]},
            "B": _EXPR,
            "C": _EXPR,
        }, ["A", "B", "C"]),
        "seminorms": _obj({
            "P": {"type": "integer", "minimum": 1},
            "n_seq": {"oneOf": [{"type": "string"},
                                {"type": "array", "items": {"type": "integer"}, "minItems": 1}]},
            "t_seq": {"oneOf": [{"type": "string"}, {"type": "array", "items": _NUM, "minItems": 1}]},
            "theta": {"oneOf": [{"const": "auto"}, {"type": "number", "exclusiveMinimum": 0},
                                {"type": "array", "items": _NUM, "minItems": 1}]},
        }),
    }, ["t0", "t_max", "grid", "rhs"]),
}, ["version", "problem"])

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass(frozen=True)
class ConfigDocument:
    """A validated configuration document (plain JSON data)."""

    data: dict

    @property
    def problem(self):
        return self.data["problem"]


def _where(path):
    return ".".join(str(p) for p in path) or "<document>"


def _check_finite(value, path=()):
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError("numbers must be finite", _where(path))
    if isinstance(value, dict):
        for k, v in value.items():
            _check_finite(v, path + (k,))
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _check_finite(v, path + (i,))


def parse_config(data):
    """Validate already-decoded JSON data.

    Raises:
        ConfigError: schema violation; ``field`` names the offending key.
    """
    errors = sorted(_VALIDATOR.iter_errors(data),
                    key=lambda e: (e.validator != "additionalProperties", len(e.absolute_path),
                                   str(e.absolute_path)))
    if errors:
        err = errors[0]
        field = _where(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            field = _where(list(err.absolute_path) + extra[:1])
            raise ConfigError("unknown key", field)
        raise ConfigError(err.message, field)
    _check_finite(data)
    p = data["problem"]
    if not p["t0"] < p["t_max"]:
        raise ConfigError("must be smaller than problem.t_max", "problem.t0")
    return ConfigDocument(data)


def load_config(path):
    """Read and validate a JSON configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_config(data)


def _expr(value, field):
    try:
        return dsl.coerce(value)
    except (DslSyntaxError, DslNameError) as exc:
        raise ConfigError(str(exc), field) from None


def _functional(obj, t0):
    masses = tuple((m["t"], m["w"]) for m in obj.get("point_masses", ()))
    pieces = tuple((q["from"], q["to"], tuple(q["coeffs"])) for q in obj.get("density", {}).get("pieces", ()))
    return StieltjesFunctional(t0, masses, PiecewisePolynomial(pieces))


def _generator(obj, params, field):
    masses = tuple((_expr(m["t"], field), _expr(m["w"], field)) for m in obj.get("point_masses", ()))
    pieces = tuple((_expr(q["from"], field), _expr(q["to"], field),
                    tuple(_expr(c, field) for c in q["coeffs"]))
                   for q in obj.get("density", {}).get("pieces", ()))
    return FunctionalGenerator(masses, pieces, params)


def _functionals(raw, t0, params):
    """``(explicit list, generator or None)`` from the ``functionals`` entry."""
    field = "problem.functionals"
    if raw is None:
        return None, None
    if isinstance(raw, list):
        return [_functional(f, t0) for f in raw], None
    explicit = [_functional(f, t0) for f in raw.get("list", ())]
    gen = raw.get("generator")
    return explicit, None if gen is None else _generator(gen, params, field + ".generator")


def _params(raw):
    out = {}
    for name, value in (raw or {}).items():
        field = f"problem.rhs.params.{name}"
        if not (isinstance(value, (int, float, str)) or
                (isinstance(value, list) and all(isinstance(v, (int, float)) for v in value))):
            raise ConfigError("a parameter is a number, a list of numbers or an expression in n",
                              field)
        try:
            out[name] = dsl.as_param(value)
        except (DslSyntaxError, DslNameError) as exc:
            raise ConfigError(str(exc), field) from None
    return out


def _envelopes(raw, params):
    if raw is None:
        return None
    A = raw["A"]
    if isinstance(A, dict):
        A = tuple((_expr(q["from"], "problem.envelopes.A"), _expr(q["to"], "problem.envelopes.A"),
                   tuple(_expr(c, "problem.envelopes.A") for c in q["coeffs"])) for q in A["pieces"])
    else:
        A = _expr(A, "problem.envelopes.A")
    return GrowthEnvelope(A, _expr(raw["B"], "problem.envelopes.B"), _expr(raw["C"], "problem.envelopes.C"),
                          params)


def _system(p):
    """``(system, envelope, default N)`` for the ``rhs``/``functionals`` entries."""
    rhs, t0 = p["rhs"], float(p["t0"])
    if rhs["kind"] == "builtin":
        if "name" not in rhs or "source" in rhs:
            raise ConfigError("a builtin rhs needs 'name' and no 'source'", "problem.rhs.name")
        kwargs = dict(rhs.get("params", {}))
        raw_f = p.get("functionals")
        if rhs["name"] == "finite_affine":
            if not isinstance(raw_f, list):
                raise ConfigError("finite_affine needs a plain list of functionals", "problem.functionals")
            system, envelope, default_N = build_builtin(rhs["name"], t0, float(p["t_max"]),
                                                        _functionals(raw_f, t0, {})[0], **kwargs)
        else:
            system, envelope, default_N = build_builtin(rhs["name"], t0, float(p["t_max"]), **kwargs)
            if raw_f is not None:
                explicit, gen = _functionals(raw_f, t0, system.rhs.params)
                system = System(system.rhs, FunctionalFamily(t0, explicit, gen), system.n_offset)
        if "envelopes" in p:
            envelope = _envelopes(p["envelopes"], system.rhs.params)
        return system, envelope, default_N

    if "source" not in rhs or "name" in rhs:
        raise ConfigError("a dsl rhs needs 'source' and no 'name'", "problem.rhs.source")
    params = _params(rhs.get("params"))
    try:
        family = RhsFamily.from_source(rhs["source"], params)
    except (DslSyntaxError, DslNameError) as exc:
        raise ConfigError(str(exc), "problem.rhs.source") from None
    if "functionals" not in p:
        raise ConfigError("a dsl problem needs functionals", "problem.functionals")
    explicit, gen = _functionals(p["functionals"], t0, params)
    envelope = _envelopes(p.get("envelopes"), params)
    if family.finite_length is not None:
        if gen is not None:
            raise ConfigError("a finite system takes a plain list of functionals", "problem.functionals")
        try:
            return pad_finite(family, explicit), envelope, family.finite_length
        except ConfigError as exc:
            raise ConfigError(str(exc), "problem.functionals") from None
    return System(family, FunctionalFamily(t0, explicit, gen)), envelope, None


def _sequence(raw, P, variables, field, cast):
    if isinstance(raw, list):
        return tuple(cast(v) for v in raw)
    e = _expr(raw, field)
    try:
        return tuple(cast(dsl.evaluate(e, dsl.Env(dict(variables, p=p)))) for p in range(1, P + 1))
    except EvaluationError as exc:
        raise ConfigError(str(exc), field) from None


def _seminorms(raw, system, t0, t_max, P_override):
    """``(SeminormConfig or None, P, theta)`` for :func:`make_problem`."""
    raw = raw or {}
    theta = raw.get("theta", "auto")
    n_raw, t_raw = raw.get("n_seq"), raw.get("t_seq")
    P = P_override or raw.get("P")
    if P is None:
        lists = [len(v) for v in (n_raw, t_raw) if isinstance(v, list)]
        P = lists[0] if lists else 3
    if n_raw is None and t_raw is None:
        return None, P, theta
    variables = {"P": P, "t0": t0, "t_max": t_max}
    n_seq = (tuple(p + system.n_offset for p in range(1, P + 1)) if n_raw is None
             else _sequence(n_raw, P, variables, "problem.seminorms.n_seq", lambda v: int(round(float(v)))))
    t_seq = (SeminormConfig.default(t0, t_max, P).t_seq if t_raw is None
             else _sequence(t_raw, P, variables, "problem.seminorms.t_seq", float))
    if isinstance(n_raw, list) and P_override:
        n_seq = n_seq[:P]
    if isinstance(t_raw, list) and P_override:
        t_seq = t_seq[:P]
    if len(n_seq) != len(t_seq):
        raise ConfigError("n_seq and t_seq have different lengths", "problem.seminorms")
    th = 1.0 if theta == "auto" else theta
    th = tuple(th[: len(n_seq)]) if isinstance(th, list) else (float(th),) * len(n_seq)
    cfg = SeminormConfig(n_seq, t_seq, th)
    if theta == "auto":
        return cfg, P, "auto"
    return cfg, P, th


def build_problem(doc, P=None):
    """Construct the :class:`ProblemSpec` described by ``doc``.

    Args:
        doc: a :class:`ConfigDocument` (or raw JSON data, validated first).
        P: overrides the number of seminorm indices (``--p-max``).

    Raises:
        ConfigError: invalid or inconsistent configuration.
    """
    if not isinstance(doc, ConfigDocument):
        doc = parse_config(doc)
    p = doc.problem
    t0, t_max, h = float(p["t0"]), float(p["t_max"]), float(p["grid"]["h"])
    system, envelope, default_N = _system(p)
    trunc = p.get("truncation", {})
    N = trunc.get("N", default_N)
    if N is None:
        raise ConfigError("an infinite system needs truncation.N", "problem.truncation.N")
    cfg, P, theta = _seminorms(p.get("seminorms"), system, t0, t_max, P)
    if cfg is not None and theta == "auto":
        from .hypotheses import auto_theta

        spec = make_problem(system, t_max, h, N, closure=trunc.get("closure", "zero"),
                            envelopes=envelope, seminorms=cfg, name=p["rhs"].get("name", "dsl"))
        if envelope is not None:
            spec = spec.replace(seminorm_config=cfg.with_theta(auto_theta(spec)))
        return spec
    return make_problem(system, t_max, h, N, closure=trunc.get("closure", "zero"), envelopes=envelope,
                        seminorms=cfg, P=P, theta=theta, name=p["rhs"].get("name", "dsl"))
