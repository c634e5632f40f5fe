"""TOML experiment configuration with a fixed schema and environment overrides.

Every key has a type and a default, so an empty file is a valid config. An
environment variable QLINK_<SECTION>_<KEY> (upper case) overrides the file;
its value is parsed as a TOML literal when possible, else taken as a string.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import ConfigurationError

KINDS = ("cavity", "purify", "shuttle", "esd", "compare")

# section -> key -> (type, default, help); type is float, int, str, bool or (list, elem_type)
SCHEMA = {
    "run": {
        "kind": (str, "cavity", f"experiment kind, one of {', '.join(KINDS)}"),
        "master_seed": (int, 0, "seed from which every random stream is derived"),
        "out": (str, "results", "output directory"),
        "formats": ((list, str), ["csv", "json"], "output formats: csv and/or json"),
        "jobs": (int, 1, "worker processes for sweep points"),
        "id": (str, "", "experiment id used in file names (default: the kind)"),
    },
    "cavity": {
        "t2_charge": ((list, float), [400.0, 100.0, 50.0], "charge dephasing times T2,c in ns"),
        "t2_spin": (float, 120e3, "spin dephasing time in ns"),
        "cavity_loss": (float, 1.0, "photon loss rate kappa in 1/us"),
        "fock_cutoff": (int, 7, "resonator Fock states kept"),
        "stop_sigma": (float, 0.5, "Gaussian spread of the stop time in ns"),
        "stop_points": (int, 13, "quadrature points for the stop-time average"),
        "t_stop": (float, 15.0, "mean stop time in ns"),
        "backend": (str, "direct", "Lindblad backend: direct, propagator or expm_action"),
        "trace_times": ((list, float), [], "times (ns) for an optional time trace"),
    },
    "purification": {
        "rounds": ((list, int), [2, 4], "numbers of rounds to evaluate"),
        "depol_2q": (float, 0.001, "two-qubit gate depolarizing probability"),
        "depol_1q": (float, 0.0002, "single-qubit gate depolarizing probability"),
        "meas_error": (float, 0.001, "measurement flip probability"),
        "variant": (str, "canonical", "canonical or s-gate"),
    },
    "shuttle": {
        "n_dots": (int, 25, "dots in the chain"),
        "B": (float, 40.0, "Zeeman splitting in ueV"),
        "t_c": ((list, float), [30.0], "bare tunnel couplings in ueV"),
        "mean_valley": (float, 75.0, "mean |Delta| in ueV"),
        "sd_valley": (float, 10.0, "standard deviation of |Delta| in ueV"),
        "sd_phase": ((list, float), [math.pi / 4], "valley phase standard deviations in rad"),
        "phase_mode": (str, "site", "site: phases drawn per dot; link: differences drawn per link"),
        "b_x": (float, 1.0, "total transverse field inhomogeneity along the chain in ueV"),
        "b_z": (float, 3.0, "total longitudinal field inhomogeneity along the chain in ueV"),
        "e_soi": (float, 1.0, "spin-orbit energy in ueV"),
        "eps0": (float, 800.0, "detuning sweep half range in ueV"),
        "alpha": (float, 300.0, "detuning sweep rate in ueV/ns"),
        "n_steps": (int, 2000, "sub-steps per sweep"),
        "n_chains": (int, 100, "seeded chain realizations"),
        "noise_realizations": (int, 0, "charge-noise realizations for the single-DQD check (0: skip)"),
        "s_1mhz": (float, 1e-6, "charge noise PSD at 1 MHz in ueV^2/Hz"),
        "noise_t_c": (float, 20.0, "tunnel coupling of the single-DQD noise check in ueV"),
        "noise_delta_phi": ((list, float), [0.0, 0.7853981633974483, 1.5707963267948966, 2.356194490192345],
                            "valley phase differences of the single-DQD noise check"),
    },
    "esd": {
        "n": (int, 6, "spins in the ring"),
        "J": (float, 0.1, "ring coupling"),
        "layers": (int, 20, "ansatz layers"),
        "tolerance": (float, 1e-4, "target noiseless energy error"),
        "xi": ((list, float), [0.1, 0.3, 1.0, 3.0, 5.0], "expected gate errors in state preparation"),
        "bell_fidelity": (float, 0.995, "fidelity of the teleportation Bell pairs"),
        "modes": ((list, str), ["unmitigated", "ideal", "noisy-derangement", "noisy-bell", "both"],
                  "estimators to evaluate"),
        "n_copies": ((list, int), [2, 3, 4], "copy numbers for the formula-level estimator"),
    },
}


def _check(value, typ, path):
    if isinstance(typ, tuple):
        _, elem = typ
        if not isinstance(value, list):
            raise ConfigurationError(f"expected a list, got {type(value).__name__}", field=path)
        return [_check(v, elem, f"{path}[{i}]") for i, v in enumerate(value)]
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"expected a number, got {value!r}", field=path)
        if not math.isfinite(value):
            raise ConfigurationError("value must be finite", field=path)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"expected an integer, got {value!r}", field=path)
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"expected true/false, got {value!r}", field=path)
        return value
    if not isinstance(value, str):
        raise ConfigurationError(f"expected a string, got {value!r}", field=path)
    return value


def _parse_env(raw):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


@dataclass
class ExperimentConfig:
    kind: str
    master_seed: int
    out: Path
    formats: tuple
    jobs: int
    sections: dict = field(default_factory=dict)
    source: str = ""

    def __getitem__(self, section):
        return self.sections[section]

    @property
    def experiment_id(self):
        return self.sections["run"]["id"] or self.kind

    def canonical(self):
        """The resolved config as plain data; the output directory is not part of it."""
        data = {s: dict(v) for s, v in self.sections.items()}
        data["run"] = {k: v for k, v in data["run"].items() if k not in ("out", "jobs", "formats")}
        return data

    def hash(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def defaults():
    return {s: {k: spec[1] for k, spec in keys.items()} for s, keys in SCHEMA.items()}


def validate(data: dict, env=None, source="") -> ExperimentConfig:
    """Merge defaults, file data and environment overrides, checking every field."""
    env = os.environ if env is None else env
    resolved = defaults()
    for section, values in data.items():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}]", field=section)
        if not isinstance(values, dict):
            raise ConfigurationError("expected a table", field=section)
        for key, value in values.items():
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r}", field=f"{section}.{key}")
            resolved[section][key] = value
    for section, keys in SCHEMA.items():
        for key in keys:
            name = f"QLINK_{section.upper()}_{key.upper()}"
            if name in env:
                resolved[section][key] = _parse_env(env[name])
    for section, keys in SCHEMA.items():
        for key, (typ, _, _) in keys.items():
            resolved[section][key] = _check(resolved[section][key], typ, f"{section}.{key}")

    run = resolved["run"]
    if run["kind"] not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}", field="run.kind")
    bad = set(run["formats"]) - {"csv", "json"}
    if bad or not run["formats"]:
        raise ConfigurationError("formats must be a non-empty subset of csv, json", field="run.formats")
    if run["jobs"] < 1:
        raise ConfigurationError("jobs must be >= 1", field="run.jobs")
    for path, ok in (("cavity.t2_charge", all(t > 0 for t in resolved["cavity"]["t2_charge"])),
                     ("cavity.fock_cutoff", resolved["cavity"]["fock_cutoff"] >= 2),
                     ("cavity.backend", resolved["cavity"]["backend"] in ("direct", "propagator", "expm_action")),
                     ("purification.rounds", all(r >= 1 for r in resolved["purification"]["rounds"])),
                     ("purification.variant", resolved["purification"]["variant"] in ("canonical", "s-gate")),
                     ("shuttle.n_dots", resolved["shuttle"]["n_dots"] >= 2),
                     ("shuttle.phase_mode", resolved["shuttle"]["phase_mode"] in ("site", "link")),
                     ("shuttle.n_chains", resolved["shuttle"]["n_chains"] >= 1),
                     ("esd.n", 2 <= resolved["esd"]["n"] <= 8),
                     ("esd.bell_fidelity", 0 < resolved["esd"]["bell_fidelity"] <= 1),
                     ("esd.n_copies", all(n >= 2 for n in resolved["esd"]["n_copies"]))):
        if not ok:
            raise ConfigurationError("value out of range", field=path)
    return ExperimentConfig(run["kind"], run["master_seed"], Path(run["out"]), tuple(run["formats"]),
                            run["jobs"], resolved, source)


def load_config(path=None, env=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a TOML file (or nothing) and resolve it; ``overrides`` is {section: {key: value}}."""
    data = {}
    source = ""
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}", field="file") from exc
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"malformed TOML: {exc}", field="file") from exc
        source = str(p)
    for section, values in (overrides or {}).items():
        data.setdefault(section, {}).update(values)
    return validate(data, env, source)


def describe_schema():
    """Plain-text listing of every key with its default, for --help."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, default, text) in keys.items():
            lines.append(f"  {key} = {default!r}  # {text}")
    return "\n".join(lines)
