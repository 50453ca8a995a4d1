"""Run configuration: strict TOML parsing with every error collected."""
from __future__ import annotations

import hashlib
import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ModelError
from .model import CustomSampled, FamilyA, FamilyB, MaterialModel

__all__ = ["RunConfig", "parse_config", "load_config", "SCHEMA", "config_hash", "build_model"]

SCENARIOS = ("law", "profiles", "evolve", "phasefield", "verify")

# key -> (types, required); a nested dict is a sub-table
_NUM = (int, float)
_LIST = (list,)
_SERIES = (int, float, dict)  # constant or {times, values}

SCHEMA = {
    "model": {
        "family": ((str,), True),
        "ell": (_NUM, False),
        "b": (_NUM, False),
        "t": (_LIST, False),
        "values": (_LIST, False),
    },
    "law": {
        "s_max": (_NUM, False),
        "n_s": ((int,), False),
        "sprime": (_LIST, False),
        "tol": (_NUM, False),
    },
    "scenario": {
        "kind": ((str,), True),
    },
    "profiles": {
        "s": (_LIST, False),
        "s_prime": (_NUM, False),
        "window": (_NUM, False),
    },
    "evolve": {
        "n_cells": ((int,), False),
        "T_final": (_NUM, True),
        "tau": (_NUM, True),
        "s_bar": (_NUM, False),
        "penalty_weight": (_NUM, False),
        "b0": (_SERIES, False),
        "b1": (_SERIES, False),
        "w": ((dict,), False),
        "keep_every": ((int,), False),
    },
    "phasefield": {
        "b": (_LIST, False),
        "pins": (_LIST, False),
        "eps": (_LIST, True),
        "cells_per_eps": ((int,), False),
        "T_win": (_NUM, False),
        "notch_centers": (_LIST, False),
    },
    "verify": {
        "s": (_LIST, False),
        "pairs": (_LIST, False),
        "n_nodes": ((int,), False),
        "n_scenarios": ((int,), False),
        "tolerance": (_NUM, False),
        "step_tolerance": (_NUM, False),
    },
    "output": {
        "dir": ((str,), False),
        "downsample": ((int,), False),
        "json": ((bool,), False),
    },
}

_SERIES_KEYS = {"times", "values"}
_FIELD_KEYS = {"times", "values", "shape"}

DEFAULTS = {
    "law": {"s_max": 4.0, "n_s": 97, "sprime": [], "tol": 1e-6},
    "profiles": {"s": [0.5, 1.0, 1.5, 2.0], "s_prime": 0.0, "window": 20.0},
    "evolve": {"n_cells": 32, "s_bar": 0.05, "penalty_weight": 0.0, "b0": 0.0, "b1": 0.0, "keep_every": 1},
    "phasefield": {"b": [0.0, 1.0], "pins": [], "cells_per_eps": 8, "T_win": 20.0, "notch_centers": [0.5]},
    "verify": {
        "s": [0.05, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        "pairs": [[0.3, 1.0], [0.5, 1.5], [0.2, 0.8], [1.0, 2.0]],
        "n_nodes": 1024,
        "n_scenarios": 20,
        "tolerance": 1e-3,
        "step_tolerance": 1e-4,
    },
    "output": {"dir": "out", "downsample": 1, "json": True},
}


@dataclass
class RunConfig:
    model: dict
    law: dict
    scenario: str
    params: dict
    output: dict
    text: str = field(default="", repr=False)
    sections: dict = field(default_factory=dict, repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.text)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def build_model(block: dict) -> MaterialModel:
    fam = str(block["family"]).upper() if block["family"] != "custom" else "custom"
    if fam == "A":
        return FamilyA(float(block.get("ell", 1.0)))
    if fam == "B":
        return FamilyB(float(block.get("ell", 1.5)), float(block.get("b", 2.8)))
    return CustomSampled(tuple(block["t"]), tuple(block["values"]), block.get("ell"))


def _type_name(types):
    return " or ".join(sorted({t.__name__ for t in types}))


def _check_table(name, table, errors):
    fields = SCHEMA[name]
    for key in table:
        if key not in fields:
            errors.append(f"{name}.{key}: unknown key")
    for key, (types, required) in fields.items():
        if key not in table:
            if required:
                errors.append(f"{name}.{key}: missing required key")
            continue
        val = table[key]
        if isinstance(val, bool) and bool not in types:
            errors.append(f"{name}.{key}: expected {_type_name(types)}, got bool")
        elif not isinstance(val, types):
            errors.append(f"{name}.{key}: expected {_type_name(types)}, got {type(val).__name__}")


def _check_series(path, val, keys, errors):
    if not isinstance(val, dict):
        return
    for k in val:
        if k not in keys:
            errors.append(f"{path}.{k}: unknown key")
    for k in ("times", "values"):
        if k not in val:
            errors.append(f"{path}.{k}: missing required key")
    t, v = val.get("times"), val.get("values")
    if isinstance(t, list) and isinstance(v, list):
        if len(t) != len(v) or not t:
            errors.append(f"{path}: times and values need the same nonzero length")
        elif any(not isinstance(x, _NUM) for x in t + v):
            errors.append(f"{path}: times and values must be numbers")
        elif any(b <= a for a, b in zip(t, t[1:])):
            errors.append(f"{path}.times: must increase strictly")


def _positive(path, val, errors, strict=True):
    if isinstance(val, _NUM) and not isinstance(val, bool):
        if not math.isfinite(val) or (val <= 0 if strict else val < 0):
            errors.append(f"{path}: must be {'positive' if strict else 'nonnegative'}, got {val}")


def _semantic(doc, errors):
    m = doc.get("model", {})
    fam = m.get("family")
    if isinstance(fam, str):
        if fam not in ("A", "B", "custom"):
            errors.append(f"model.family: must be 'A', 'B' or 'custom', got '{fam}'")
        else:
            if fam == "custom" and not ("t" in m and "values" in m):
                errors.append("model: custom family needs 't' and 'values'")
            if fam != "custom" and ("t" in m or "values" in m):
                errors.append(f"model: 't'/'values' apply only to the custom family")
            if fam == "A" and "b" in m:
                errors.append("model.b: FamilyA has no parameter b")
            if fam == "B" and isinstance(m.get("b", 2.8), _NUM) and isinstance(m.get("ell", 1.5), _NUM):
                ell, b = float(m.get("ell", 1.5)), float(m.get("b", 2.8))
                if not -ell < b < 2 * ell:
                    errors.append(f"model.b: FamilyB requires -ell < b < 2*ell = ({-ell}, {2 * ell}), got {b}")
            if not any(e.startswith("model") for e in errors):
                try:
                    build_model(m)
                except (ModelError, ValueError, TypeError) as exc:
                    errors.append(f"model: {exc}")
    law = doc.get("law", {})
    _positive("law.s_max", law.get("s_max", 1.0), errors)
    _positive("law.tol", law.get("tol", 1.0), errors)
    if isinstance(law.get("n_s"), int) and law["n_s"] < 8:
        errors.append("law.n_s: at least 8 grid points are needed")
    kind = doc.get("scenario", {}).get("kind")
    if isinstance(kind, str) and kind not in SCENARIOS:
        errors.append(f"scenario.kind: must be one of {', '.join(SCENARIOS)}, got '{kind}'")
    elif isinstance(kind, str) and kind not in doc and kind in ("evolve", "phasefield"):
        errors.append(f"{kind}: scenario '{kind}' needs a [{kind}] table")
    ev = doc.get("evolve")
    if isinstance(ev, dict):
        for k in ("T_final", "tau"):
            _positive(f"evolve.{k}", ev.get(k, 1.0), errors)
        _positive("evolve.s_bar", ev.get("s_bar", 1.0), errors)
        _positive("evolve.penalty_weight", ev.get("penalty_weight", 0.0), errors, strict=False)
        if isinstance(ev.get("n_cells"), int) and ev["n_cells"] < 1:
            errors.append("evolve.n_cells: must be at least 1")
        for k in ("b0", "b1"):
            _check_series(f"evolve.{k}", ev.get(k), _SERIES_KEYS, errors)
        if "w" in ev:
            _check_series("evolve.w", ev["w"], _FIELD_KEYS, errors)
            if isinstance(ev["w"], dict) and "shape" not in ev["w"]:
                errors.append("evolve.w.shape: missing required key")
    pf = doc.get("phasefield")
    if isinstance(pf, dict):
        eps = pf.get("eps")
        if isinstance(eps, list):
            if not eps or any(not isinstance(e, _NUM) or e <= 0 for e in eps):
                errors.append("phasefield.eps: needs positive numbers")
            elif any(b >= a for a, b in zip(eps, eps[1:])):
                errors.append("phasefield.eps: must decrease strictly")
        b = pf.get("b")
        if isinstance(b, list) and (len(b) != 2 or any(not isinstance(x, _NUM) for x in b)):
            errors.append("phasefield.b: needs two numbers [b0, b1]")
        pins = pf.get("pins", [])
        if isinstance(pins, list):
            for k, p in enumerate(pins):
                if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, _NUM) for x in p)):
                    errors.append(f"phasefield.pins[{k}]: needs [x, s_prime]")
                elif not (0.0 <= p[0] <= 1.0 and p[1] > 0):
                    errors.append(f"phasefield.pins[{k}]: x must lie in [0, 1] and s_prime be positive")
    ver = doc.get("verify")
    if isinstance(ver, dict):
        for k, p in enumerate(ver.get("pairs", [])):
            if not (isinstance(p, list) and len(p) == 2 and 0 <= p[0] and 0 < p[1]):
                errors.append(f"verify.pairs[{k}]: needs [s, s_prime] with s >= 0 < s_prime")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML document; raise ConfigError listing every problem."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc
    errors = []
    for name in doc:
        if name not in SCHEMA:
            errors.append(f"{name}: unknown table")
        elif not isinstance(doc[name], dict):
            errors.append(f"{name}: must be a table")
    for name in ("model", "scenario"):
        if name not in doc:
            errors.append(f"{name}: missing required table")
    for name, table in doc.items():
        if name in SCHEMA and isinstance(table, dict):
            _check_table(name, table, errors)
    if not errors:
        _semantic(doc, errors)
    if errors:
        raise ConfigError(errors)
    sections = {}
    for name in SCHEMA:
        merged = dict(DEFAULTS.get(name, {}))
        merged.update(doc.get(name, {}))
        sections[name] = merged
    kind = doc["scenario"]["kind"]
    return RunConfig(
        model=sections["model"],
        law=sections["law"],
        scenario=kind,
        params=sections.get(kind, {}),
        output=sections["output"],
        text=text,
        sections=sections,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
