"""JSON scenario files for the command-line workflows.

A scenario holds one or more descriptor models, the uncertainty sets, the
input box and run settings::

    {
      "models": [{"E": [[...]], "A": ..., "B": ..., "Bw": ..., "C": ..., "D": ..., "Dv": ...}],
      "sets": {
        "X0": {"generators": [[...]], "center": [...],
               "constraint_lhs": [[...]], "constraint_rhs": [...]},
        "W": ..., "V": ..., "Xa": ...
      },
      "input_box": {"lower": [...], "upper": [...]},
      "limits": {"max_generators": 15, "max_constraints": 5},
      "horizon": 100,
      "epsilon": 0.01,
      "seed": 0,
      "x0": [...],
      "inputs": [[...], ...]
    }

``constraint_lhs``/``constraint_rhs`` may be omitted for plain zonotopes.
``limits`` entries may be ``null`` for no limit. ``x0`` (true initial state)
and ``inputs`` (one row per step, or a single constant row) are only used by
the estimation workflow; inputs default to zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .afd import ModelBank
from .estimator import DescriptorModel, UncertaintyBounds
from .reduction import ReductionLimits
from .setops import ConstrainedZonotope, IntervalBox

__all__ = ["ScenarioError", "Scenario", "parse_scenario", "scenario_to_dict", "load_scenario", "dump_scenario"]

MATRIX_FIELDS = ("E", "A", "B", "Bw", "C", "D", "Dv")
SET_FIELDS = ("X0", "W", "V", "Xa")


class ScenarioError(ValueError):
    """A scenario document is malformed; the message names the offending field."""


@dataclass(frozen=True, eq=False)
class Scenario:
    models: tuple
    X0: ConstrainedZonotope
    W: ConstrainedZonotope
    V: ConstrainedZonotope
    Xa: ConstrainedZonotope
    input_box: IntervalBox | None = None
    limits: ReductionLimits = field(default_factory=ReductionLimits.unlimited)
    horizon: int = 100
    epsilon: float = 0.01
    seed: int = 0
    x0: np.ndarray | None = None
    inputs: np.ndarray | None = None

    @property
    def model(self):
        return self.models[0]

    @property
    def bounds(self):
        return UncertaintyBounds(self.X0, self.W, self.V, self.Xa)

    def bank(self):
        if self.input_box is None:
            raise ScenarioError("input_box: required for fault diagnosis")
        return ModelBank(self.models, self.X0, self.W, self.V, self.Xa, self.input_box)


def _matrix(value, where):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: not a numeric array ({exc})") from None
    if M.ndim == 1 and M.size == 0:
        M = M.reshape(0, 0)
    if M.ndim != 2:
        raise ScenarioError(f"{where}: expected a list of rows, got {M.ndim}-D data")
    if not np.all(np.isfinite(M)):
        raise ScenarioError(f"{where}: non-finite entries")
    return M


def _vector(value, where):
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: not a numeric array ({exc})") from None
    if v.ndim != 1:
        raise ScenarioError(f"{where}: expected a flat list")
    if not np.all(np.isfinite(v)):
        raise ScenarioError(f"{where}: non-finite entries")
    return v


def _require(doc, key, where):
    if not isinstance(doc, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in doc:
        raise ScenarioError(f"{where}.{key}: missing")
    return doc[key]


def _parse_set(doc, where):
    c = _vector(_require(doc, "center", where), f"{where}.center")
    G = _matrix(_require(doc, "generators", where), f"{where}.generators")
    if G.size == 0:
        G = np.zeros((c.size, 0))
    if G.shape[0] != c.size:
        raise ScenarioError(f"{where}.generators: has {G.shape[0]} rows, center has {c.size} entries")
    A = doc.get("constraint_lhs")
    b = doc.get("constraint_rhs")
    if (A is None) != (b is None):
        raise ScenarioError(f"{where}: constraint_lhs and constraint_rhs must be given together")
    if A is None or np.size(A) == 0:
        return ConstrainedZonotope(G, c)
    A = _matrix(A, f"{where}.constraint_lhs")
    b = _vector(b, f"{where}.constraint_rhs")
    if A.shape[1] != G.shape[1]:
        raise ScenarioError(f"{where}.constraint_lhs: has {A.shape[1]} columns, expected {G.shape[1]}")
    if A.shape[0] != b.size:
        raise ScenarioError(f"{where}.constraint_rhs: has {b.size} entries, expected {A.shape[0]}")
    return ConstrainedZonotope(G, c, A, b)


def _parse_model(doc, where):
    mats = {name: _matrix(_require(doc, name, where), f"{where}.{name}") for name in MATRIX_FIELDS}
    n = mats["E"].shape[0]
    n_y = mats["C"].shape[0]
    n_u = mats["B"].shape[1]
    expected = {
        "E": (n, n),
        "A": (n, n),
        "B": (n, None),
        "Bw": (n, None),
        "C": (None, n),
        "D": (n_y, n_u),
        "Dv": (n_y, None),
    }
    for name, (rows, cols) in expected.items():
        r, c = mats[name].shape
        # an empty list means "no columns" (e.g. no inputs)
        if mats[name].size == 0 and rows is not None and r == 0:
            mats[name] = np.zeros((rows, 0 if cols is None else cols))
            continue
        if rows is not None and r != rows:
            raise ScenarioError(f"{where}.{name}: has {r} rows, expected {rows}")
        if cols is not None and c != cols:
            raise ScenarioError(f"{where}.{name}: has {c} columns, expected {cols}")
    try:
        return DescriptorModel(**mats)
    except ValueError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def parse_scenario(doc) -> Scenario:
    """Validate a decoded JSON document and build the scenario."""
    raw_models = _require(doc, "models", "scenario")
    if not isinstance(raw_models, list) or not raw_models:
        raise ScenarioError("models: expected a non-empty list")
    models = tuple(_parse_model(m, f"models[{i}]") for i, m in enumerate(raw_models))
    ref = models[0]
    for i, m in enumerate(models[1:], start=1):
        for attr in ("n", "n_u", "n_w", "n_y", "n_v"):
            if getattr(m, attr) != getattr(ref, attr):
                raise ScenarioError(f"models[{i}]: {attr}={getattr(m, attr)} differs from models[0] ({getattr(ref, attr)})")
    raw_sets = _require(doc, "sets", "scenario")
    sets = {name: _parse_set(_require(raw_sets, name, "sets"), f"sets.{name}") for name in SET_FIELDS}
    for name, dim in (("X0", ref.n), ("W", ref.n_w), ("V", ref.n_v), ("Xa", ref.n)):
        if sets[name].dim != dim:
            raise ScenarioError(f"sets.{name}: has dimension {sets[name].dim}, the models need {dim}")
    box = None
    if doc.get("input_box") is not None:
        lo = _vector(_require(doc["input_box"], "lower", "input_box"), "input_box.lower")
        hi = _vector(_require(doc["input_box"], "upper", "input_box"), "input_box.upper")
        if lo.size != ref.n_u or hi.size != ref.n_u:
            raise ScenarioError(f"input_box: bounds must have {ref.n_u} entries")
        if np.any(lo > hi):
            raise ScenarioError("input_box: lower exceeds upper")
        box = IntervalBox(lo, hi)
    lim_doc = doc.get("limits") or {}
    try:
        limits = ReductionLimits(
            np.inf if lim_doc.get("max_generators") is None else int(lim_doc["max_generators"]),
            np.inf if lim_doc.get("max_constraints") is None else int(lim_doc["max_constraints"]),
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"limits: {exc}") from None
    horizon = doc.get("horizon", 100)
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 0:
        raise ScenarioError("horizon: expected a non-negative integer")
    epsilon = doc.get("epsilon", 0.01)
    if not isinstance(epsilon, (int, float)) or isinstance(epsilon, bool) or not epsilon > 0:
        raise ScenarioError("epsilon: expected a positive number")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed: expected an integer")
    x0 = None
    if doc.get("x0") is not None:
        x0 = _vector(doc["x0"], "x0")
        if x0.size != ref.n:
            raise ScenarioError(f"x0: has {x0.size} entries, expected {ref.n}")
    inputs = None
    if doc.get("inputs") is not None:
        inputs = _matrix(doc["inputs"], "inputs")
        if inputs.shape[1] != ref.n_u:
            raise ScenarioError(f"inputs: rows have {inputs.shape[1]} entries, expected {ref.n_u}")
    return Scenario(
        models=models,
        input_box=box,
        limits=limits,
        horizon=horizon,
        epsilon=float(epsilon),
        seed=seed,
        x0=x0,
        inputs=inputs,
        **sets,
    )


def _set_to_dict(Z: ConstrainedZonotope):
    out = {"generators": Z.G.tolist(), "center": Z.c.tolist()}
    if Z.n_con:
        out["constraint_lhs"] = Z.A.tolist()
        out["constraint_rhs"] = Z.b.tolist()
    return out


def _limit(v):
    return None if not np.isfinite(v) else int(v)


def scenario_to_dict(sc: Scenario):
    doc = {
        "models": [{name: getattr(m, name).tolist() for name in MATRIX_FIELDS} for m in sc.models],
        "sets": {name: _set_to_dict(getattr(sc, name)) for name in SET_FIELDS},
        "limits": {"max_generators": _limit(sc.limits.max_generators), "max_constraints": _limit(sc.limits.max_constraints)},
        "horizon": sc.horizon,
        "epsilon": sc.epsilon,
        "seed": sc.seed,
    }
    if sc.input_box is not None:
        doc["input_box"] = {"lower": sc.input_box.lower.tolist(), "upper": sc.input_box.upper.tolist()}
    if sc.x0 is not None:
        doc["x0"] = sc.x0.tolist()
    if sc.inputs is not None:
        doc["inputs"] = sc.inputs.tolist()
    return doc


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: on unreadable JSON or invalid content.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return parse_scenario(doc)


def dump_scenario(sc: Scenario, path):
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2) + "\n")
