"""Run configuration: a versioned JSON document validated up front.

Every validation failure raises :class:`ConfigError` whose message starts
with the dotted path of the offending key, e.g. ``scenario.gamma``.

A minimal configuration::

    {"schema_version": 1,
     "scenario": {"kind": "parallel", "gamma": 0.1, "T": 10}}
"""

import json
from dataclasses import dataclass

import jsonschema

from .optimize import AnnealOptions, GrapeOptions
from .scenarios import KINDS, SWEEP_METHODS, SWEEP_PARAMETERS, SweepSpec, make_problem

SCHEMA_VERSION = 1

_NUMBER = {"type": "number"}
_WINDOW = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "scenario"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "output": {"type": "string"},
        "scenario": {
            "type": "object",
            "required": ["kind", "gamma", "T"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "gamma": {"type": "number", "minimum": 0},
                "gamma_plus": {"type": "number", "minimum": 0},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "n_slices": {"type": "integer", "minimum": 1},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "detuning": _NUMBER,
                "measurement": {"enum": ["helstrom", "fixed_local"]},
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["grape", "sagrape"]},
                "restarts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "gradient_mode": {"enum": ["exact", "truncated"]},
                "u_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "init_scale": {"type": "number", "minimum": 0},
                "anneal": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "initial_temperature": {"type": "number", "exclusiveMinimum": 0},
                        "cooling_factor": {"type": "number", "exclusiveMinimum": 0,
                                           "exclusiveMaximum": 1},
                        "cooling_steps": {"type": "integer", "minimum": 1},
                        "perturbation": {"type": "number", "minimum": 0},
                        "grape_iters_per_cycle": {"type": "integer", "minimum": 1},
                        "max_cycles": {"type": "integer", "minimum": 1},
                        "patience": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "robust": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "training_window": _WINDOW,
                "n_train": {"type": "integer", "minimum": 1},
                "evaluation_window": {"oneOf": [_WINDOW, {"type": "null"}]},
                "samples": {"type": "integer", "minimum": 2},
            },
        },
        "sweep": {
            "type": "object",
            "required": ["parameter", "values"],
            "additionalProperties": False,
            "properties": {
                "parameter": {"enum": list(SWEEP_PARAMETERS)},
                "values": {"type": "array", "items": _NUMBER, "minItems": 1},
                "method": {"enum": list(SWEEP_METHODS)},
            },
        },
        "gradcheck": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "amplitude": {"type": "number", "minimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "threshold": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "trajectory": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "controls_file": {"type": ["string", "null"]},
            },
        },
    },
}


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


def _path(error):
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        # report the missing key itself rather than its parent
        missing = error.message.split("'")[1]
        parts.append(missing)
    elif error.validator == "additionalProperties":
        parts.append(error.message.split("'")[1])
    return ".".join(parts) or "<root>"


@dataclass(frozen=True)
class RunConfig:
    """Parsed and validated configuration plus the raw text it came from."""

    data: dict
    text: str = None

    @classmethod
    def from_dict(cls, data, text=None):
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            raise ConfigError(f"{_path(e)}: {e.message}")
        for key in ("training_window", "evaluation_window"):
            w = data.get("robust", {}).get(key)
            if w is not None and w[0] > w[1]:
                raise ConfigError(f"robust.{key}: bounds out of order {w}")
        sweep = data.get("sweep")
        if sweep is not None:
            if sweep["parameter"] == "gamma" and min(sweep["values"]) < 0:
                raise ConfigError("sweep.values: gamma values must be >= 0")
            if sweep["parameter"] == "T" and min(sweep["values"]) <= 0:
                raise ConfigError("sweep.values: T values must be positive")
        return cls(data, text)

    @classmethod
    def from_text(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<root>: not valid JSON ({exc})") from None
        return cls.from_dict(data, text)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"<config>: cannot read {path} ({exc.strerror})") from None
        return cls.from_text(text)

    def with_overrides(self, seed=None, restarts=None):
        """Copy with command-line overrides applied (the raw text is kept)."""
        if seed is None and restarts is None:
            return self
        data = json.loads(json.dumps(self.data))
        opt = data.setdefault("optimizer", {})
        if seed is not None:
            opt["seed"] = seed
        if restarts is not None:
            opt["restarts"] = restarts
        return RunConfig.from_dict(data, self.text)

    # Typed views ------------------------------------------------------------

    @property
    def scenario(self):
        s = dict(self.data["scenario"])
        s.setdefault("gamma_plus", 0.0)
        s.setdefault("detuning", 0.0)
        s.setdefault("measurement", "helstrom")
        s.setdefault("dt", 0.05)
        s.setdefault("n_slices", None)
        return s

    def problem(self, **changes):
        s = {**self.scenario, **changes}
        n = s["n_slices"] if s["n_slices"] is not None else max(1, round(s["T"] / s["dt"]))
        return make_problem(s["kind"], s["gamma"], s["T"], n_slices=n, detuning=s["detuning"],
                            measurement=s["measurement"], gamma_plus=s["gamma_plus"])

    @property
    def optimizer(self):
        o = self.data.get("optimizer", {})
        return {"method": o.get("method", "grape"), "restarts": o.get("restarts", 1),
                "seed": o.get("seed", 0), "init_scale": o.get("init_scale", 1.0)}

    @property
    def grape_options(self):
        o = self.data.get("optimizer", {})
        keys = ("tol", "max_iter", "gradient_mode", "u_max")
        return GrapeOptions(**{k: o[k] for k in keys if k in o})

    @property
    def anneal_options(self):
        return AnnealOptions(**self.data.get("optimizer", {}).get("anneal", {}))

    @property
    def robust(self):
        r = self.data.get("robust", {})
        return {"training_window": tuple(r.get("training_window", (-0.1, 0.1))),
                "n_train": r.get("n_train", 21),
                "evaluation_window": r.get("evaluation_window"),
                "samples": r.get("samples", 41)}

    @property
    def gradcheck(self):
        g = self.data.get("gradcheck", {})
        return {"amplitude": g.get("amplitude", 1.0), "step": g.get("step", 1e-6),
                "threshold": g.get("threshold", 1e-3)}

    @property
    def output(self):
        return self.data.get("output", "out")

    def sweep_spec(self):
        if "sweep" not in self.data:
            raise ConfigError("sweep: section required for the sweep command")
        sw = self.data["sweep"]
        s, o = self.scenario, self.optimizer
        try:
            return SweepSpec(parameter=sw["parameter"], values=tuple(sw["values"]),
                             kind=s["kind"], gamma=s["gamma"], T=s["T"],
                             detuning=s["detuning"], gamma_plus=s["gamma_plus"], dt=s["dt"],
                             measurement=s["measurement"],
                             method=sw.get("method", o["method"]), restarts=o["restarts"],
                             seed=o["seed"], grape_options=self.grape_options,
                             anneal_options=self.anneal_options)
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from None
