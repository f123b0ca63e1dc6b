"""Scenario files: strict, unit-tagged experiment configurations.

A scenario is sectioned `key = value unit` text (see fsqubit.config).  Every
scenario declares `[scenario] name / kind / seed`; the remaining sections
are validated against the schema of that kind.  Unknown sections or keys,
missing units, and out-of-range values are rejected with line numbers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from ..config import ConfigError, convert, parse_config

# (section, key) -> (quantity kind, required).  Dimensionless counts double
# as integers where noted in the runners.
SCHEMAS: dict[str, dict[str, dict[str, tuple[str, bool]]]] = {
    "rabi": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
            "delta": ("frequency", False),
        },
        "ensemble": {
            "rabi_spread": ("dimensionless", False),
            "delta_sigma": ("frequency", False),
            "samples": ("dimensionless", False),
        },
        "simulation": {
            "duration": ("time", True),
            "samples": ("dimensionless", True),
        },
    },
    "lz": {
        "sweep": {
            "rabi": ("frequency", True),
            "range": ("frequency", True),
            "ramp_min": ("ramp", True),
            "ramp_max": ("ramp", True),
            "ramp_points": ("dimensionless", True),
        },
        "validation": {
            "range": ("frequency", True),
            "ramp": ("ramp", True),
        },
    },
    "ramsey": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
            "delta": ("frequency", False),
        },
        "ensemble": {
            "delta_sigma": ("frequency", False),
            "rabi_spread": ("dimensionless", False),
            "samples": ("dimensionless", False),
        },
        "scan": {
            "dark_min": ("time", True),
            "dark_max": ("time", True),
            "dark_points": ("dimensionless", True),
            "phases": ("dimensionless", True),
        },
    },
    "echo": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
            "delta": ("frequency", False),
        },
        "ensemble": {
            "delta_sigma": ("frequency", False),
            "rabi_spread": ("dimensionless", False),
            "samples": ("dimensionless", False),
        },
        "noise": {
            "ou_sigma": ("frequency", False),
            "ou_tau": ("time", False),
        },
        "scan": {
            "dark_min": ("time", True),
            "dark_max": ("time", True),
            "dark_points": ("dimensionless", True),
            "phases": ("dimensionless", True),
        },
    },
    "coherence": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
        },
        "ramsey": {
            "delta_sigma": ("frequency", True),
            "samples": ("dimensionless", True),
            "dark_min": ("time", True),
            "dark_max": ("time", True),
            "dark_points": ("dimensionless", True),
        },
        "echo": {
            "ou_sigma": ("frequency", True),
            "ou_tau": ("time", True),
            "samples": ("dimensionless", True),
            "dark_min": ("time", True),
            "dark_max": ("time", True),
            "dark_points": ("dimensionless", True),
        },
        "scan": {
            "phases": ("dimensionless", True),
        },
    },
    "scatter": {
        "drive": {
            "rabi_up": ("frequency", True),
            "detuning": ("frequency", True),
        },
        "times": {
            "min": ("time", True),
            "max": ("time", True),
            "points": ("dimensionless", True),
        },
        "detuning_scan": {
            "min": ("frequency", False),
            "max": ("frequency", False),
            "points": ("dimensionless", False),
        },
    },
    "at": {
        "scan": {
            "power_min": ("power", True),
            "power_max": ("power", True),
            "points": ("dimensionless", True),
            "calibration": ("calibration", True),
            "probe_rabi": ("frequency", True),
        },
    },
    "cpt": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
        },
        "scan": {
            "delta_max": ("frequency", True),
            "points": ("dimensionless", True),
        },
    },
    "detuning": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
        },
        "scan": {
            "detuning_min": ("frequency", True),
            "detuning_max": ("frequency", True),
            "points": ("dimensionless", True),
        },
        "ensemble": {
            "rabi_spread": ("dimensionless", False),
            "samples": ("dimensionless", False),
        },
        "simulation": {
            "cycles": ("dimensionless", False),
        },
    },
    "lightshift": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
            "delta": ("frequency", True),
        },
        "lattice": {
            "slope": ("slope", True),
            "depth_min": ("depth", True),
            "depth_max": ("depth", True),
            "depth_points": ("dimensionless", True),
            "frequency_noise": ("frequency", False),
        },
        "scan": {
            "dark_max": ("time", True),
            "dark_points": ("dimensionless", True),
        },
    },
    "pipeline": {
        "signal": {
            "rabi": ("frequency", True),
            "tau": ("time", True),
            "loss_amp": ("dimensionless", True),
            "tau_loss": ("time", True),
            "noise": ("dimensionless", True),
            "duration": ("time", True),
            "samples": ("dimensionless", True),
        },
    },
    "fidelity": {
        "drive": {
            "rabi_up": ("frequency", True),
            "rabi_down": ("frequency", True),
            "detuning": ("frequency", True),
        },
        "readout": {
            "lz_efficiency": ("dimensionless", True),
            "reference_drift": ("dimensionless", False),
        },
    },
}

_STRING_KEYS = {("at", "scan", "strong")}


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    seed: int
    params: dict[tuple[str, str], float]
    strings: dict[tuple[str, str], str] = field(default_factory=dict)
    raw: dict[tuple[str, str], str] = field(default_factory=dict)
    text: str = ""

    def get(self, section: str, key: str, default: float | None = None) -> float:
        if (section, key) in self.params:
            return self.params[(section, key)]
        if default is None:
            raise ConfigError(f"scenario {self.name!r}: missing [{section}] {key}")
        return default

    def get_int(self, section: str, key: str, default: int | None = None) -> int:
        val = self.get(section, key, None if default is None else float(default))
        rounded = int(round(val))
        if abs(val - rounded) > 1e-9:
            raise ConfigError(f"scenario {self.name!r}: [{section}] {key} must be an integer")
        return rounded

    def string(self, section: str, key: str, default: str | None = None) -> str:
        if (section, key) in self.strings:
            return self.strings[(section, key)]
        if default is None:
            raise ConfigError(f"scenario {self.name!r}: missing [{section}] {key}")
        return default

    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def resolved_lines(self) -> list[str]:
        out = [f"name = {self.name}", f"kind = {self.kind}", f"seed = {self.seed}"]
        for (section, key) in sorted(self.params):
            out.append(f"{section}.{key} = {self.raw.get((section, key), self.params[(section, key)])}")
        for (section, key), value in sorted(self.strings.items()):
            out.append(f"{section}.{key} = {value}")
        return out


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"scenario file {path} does not exist")
    return parse_scenario(path.read_text(), source=str(path))


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    sections = parse_config(text, source)
    if "scenario" not in sections:
        raise ConfigError(f"{source}: missing [scenario] section with the scenario name")
    head = sections.pop("scenario")
    if "name" not in head:
        raise ConfigError(f"{source}: missing scenario name")
    name = head.pop("name").text
    if "kind" not in head:
        raise ConfigError(f"{source}: missing scenario kind")
    kind = head.pop("kind").text
    if kind not in SCHEMAS:
        raise ConfigError(f"{source}: unknown scenario kind {kind!r} "
                          f"(known: {', '.join(sorted(SCHEMAS))})")
    seed_rv = head.pop("seed", None)
    seed = int(convert(seed_rv, "dimensionless", source)) if seed_rv is not None else 0
    for key, rv in head.items():
        raise ConfigError(f"{source}:{rv.line}: unknown key {key!r} in [scenario]")

    schema = SCHEMAS[kind]
    params: dict[tuple[str, str], float] = {}
    strings: dict[tuple[str, str], str] = {}
    raw: dict[tuple[str, str], str] = {}
    for sec_name, body in sections.items():
        if sec_name not in schema:
            raise ConfigError(f"{source}: unknown section [{sec_name}] for kind {kind!r}")
        sec_schema = schema[sec_name]
        for key, rv in body.items():
            if (kind, sec_name, key) in _STRING_KEYS:
                strings[(sec_name, key)] = rv.text
                continue
            if key not in sec_schema:
                raise ConfigError(f"{source}:{rv.line}: unknown key {key!r} in [{sec_name}]")
            qkind, _ = sec_schema[key]
            params[(sec_name, key)] = convert(rv, qkind, source)
            raw[(sec_name, key)] = rv.text
    for sec_name, sec_schema in schema.items():
        for key, (_, required) in sec_schema.items():
            if required and (sec_name, key) not in params:
                raise ConfigError(f"{source}: kind {kind!r} requires [{sec_name}] {key}")
    return Scenario(name=name, kind=kind, seed=seed, params=params, strings=strings,
                    raw=raw, text=text)
