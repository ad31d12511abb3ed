"""Scenario config: a human-writable JSON document mirroring the Scenario
model.  parse -> serialize -> parse is the identity on the semantic model.

Schema sketch (laws are {K, Z, De, Dv, D0}; pair rule "law" is either a
material name, meaning the rule follows that material's live law, or an
inline law object):

    {
      "name": "...", "dim": 2, "dt": 0.003, "duration": 10000,
      "rng_seed": 0, "gravity": [0.0, -10.0], "ambient_viscosity": 1.0,
      "materials": {"grain": {"K": 1000, "Z": 0, "De": 1, "Dv": 1, "D0": 1}},
      "pair_rules": [{"a": "grain", "b": "grain", "law": "grain"}],
      "particles": [{"position": [0, 1], "velocity": [0, 0], "mass": 1.0,
                     "material": "grain", "kind": "free"}],
      "emitters": [{"origin": [0, 8], "direction": [0, -1], "speed": 1.0,
                    "rate": 20.0, "material": "grain", "jitter_seed": 21,
                    "width": 2.0, "velocity_jitter": 0.08, "max_count": 300}],
      "analysis": {"ground_height": 0.0, "flow_axis": null,
                   "contact_radius": 1.0}
    }

Boundary particles have unbounded effective mass, serialized as null.
"""

from __future__ import annotations

import json
import math

from .laws import MaterialLaw
from .scenarios import AnalysisHints, Emitter, Scenario
from .state import BOUNDARY, FREE, Particle

_KINDS = {FREE: "free", BOUNDARY: "boundary"}
_KIND_IDS = {v: k for k, v in _KINDS.items()}


class ConfigError(ValueError):
    """Malformed scenario document; message carries field diagnostics."""


def law_to_dict(law: MaterialLaw) -> dict:
    return {"K": law.K, "Z": law.Z, "De": law.De, "Dv": law.Dv, "D0": law.D0}


def law_from_dict(d: dict, where: str) -> MaterialLaw:
    try:
        return MaterialLaw(
            K=float(d["K"]), Z=float(d["Z"]), De=float(d["De"]),
            Dv=float(d["Dv"]), D0=float(d["D0"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"{where}: bad law {d!r}: {err}") from err


def scenario_to_dict(scenario: Scenario) -> dict:
    names = list(scenario.materials.keys())
    return {
        "name": scenario.name,
        "dim": scenario.dim,
        "dt": scenario.dt,
        "duration": scenario.duration,
        "rng_seed": scenario.rng_seed,
        "gravity": list(scenario.gravity),
        "ambient_viscosity": scenario.ambient_viscosity,
        "materials": {name: law_to_dict(law) for name, law in scenario.materials.items()},
        "pair_rules": [
            {"a": a, "b": b,
             "law": entry if isinstance(entry, str) else law_to_dict(entry)}
            for (a, b), entry in scenario.pair_rules.items()
        ],
        "particles": [
            {"position": [float(v) for v in p.position],
             "velocity": [float(v) for v in p.velocity],
             "mass": None if math.isinf(p.mass) else p.mass,
             "material": names[p.material_id],
             "kind": _KINDS[p.kind]}
            for p in scenario.particles
        ],
        "emitters": [
            {"origin": [float(v) for v in e.origin],
             "direction": [float(v) for v in e.direction],
             "speed": e.speed, "rate": e.rate, "material": e.material,
             "jitter_seed": e.jitter_seed, "width": e.width,
             "velocity_jitter": e.velocity_jitter, "max_count": e.max_count}
            for e in scenario.emitters
        ],
        "analysis": {
            "ground_height": scenario.analysis.ground_height,
            "flow_axis": scenario.analysis.flow_axis,
            "contact_radius": scenario.analysis.contact_radius,
        },
    }


def scenario_from_dict(d: dict) -> Scenario:
    for key in ("name", "dim", "materials"):
        if key not in d:
            raise ConfigError(f"missing required field {key!r}")
    dim = int(d["dim"])
    if dim not in (2, 3):
        raise ConfigError(f"dim must be 2 or 3, got {d['dim']}")
    materials = {name: law_from_dict(law, f"materials.{name}")
                 for name, law in d["materials"].items()}
    names = list(materials.keys())

    pair_rules = {}
    for k, entry in enumerate(d.get("pair_rules", [])):
        try:
            a, b, law = entry["a"], entry["b"], entry["law"]
        except (KeyError, TypeError) as err:
            raise ConfigError(f"pair_rules[{k}]: {err}") from err
        for name in (a, b):
            if name not in materials:
                raise ConfigError(f"pair_rules[{k}]: unknown material {name!r}")
        if isinstance(law, str):
            if law not in materials:
                raise ConfigError(f"pair_rules[{k}]: unknown law reference {law!r}")
            pair_rules[(a, b)] = law
        else:
            pair_rules[(a, b)] = law_from_dict(law, f"pair_rules[{k}]")

    particles = []
    for k, entry in enumerate(d.get("particles", [])):
        try:
            material = entry["material"]
            if material not in materials:
                raise ConfigError(f"particles[{k}]: unknown material {material!r}")
            kind = _KIND_IDS[entry.get("kind", "free")]
            mass = entry.get("mass", 1.0)
            particles.append(Particle(
                tuple(float(v) for v in entry["position"]),
                tuple(float(v) for v in entry["velocity"]),
                math.inf if mass is None else float(mass),
                names.index(material),
                kind,
            ))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"particles[{k}]: {err}") from err

    emitters = []
    for k, entry in enumerate(d.get("emitters", [])):
        try:
            if entry["material"] not in materials:
                raise ConfigError(f"emitters[{k}]: unknown material {entry['material']!r}")
            emitters.append(Emitter(
                origin=tuple(float(v) for v in entry["origin"]),
                direction=tuple(float(v) for v in entry["direction"]),
                speed=float(entry["speed"]),
                rate=float(entry["rate"]),
                material=entry["material"],
                jitter_seed=int(entry.get("jitter_seed", 0)),
                width=float(entry.get("width", 1.0)),
                velocity_jitter=float(entry.get("velocity_jitter", 0.0)),
                max_count=int(entry.get("max_count", 0)),
            ))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"emitters[{k}]: {err}") from err

    hints = d.get("analysis", {})
    analysis = AnalysisHints(
        ground_height=hints.get("ground_height"),
        flow_axis=hints.get("flow_axis"),
        contact_radius=hints.get("contact_radius"),
    )
    gravity = tuple(float(v) for v in d.get("gravity", [0.0] * dim))
    if len(gravity) != dim:
        raise ConfigError(f"gravity has {len(gravity)} components for dim {dim}")
    return Scenario(
        name=str(d["name"]), dim=dim, particles=particles, materials=materials,
        pair_rules=pair_rules, emitters=emitters, gravity=gravity,
        ambient_viscosity=float(d.get("ambient_viscosity", 0.0)),
        dt=float(d.get("dt", 1.0 / 1050.0)),
        duration=int(d.get("duration", 10_000)),
        rng_seed=int(d.get("rng_seed", 0)),
        analysis=analysis,
    )


def save_scenario(scenario: Scenario, path: str):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    return scenario_from_dict(d)
