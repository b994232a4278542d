"""Experiment configuration: YAML file -> validated, hashable settings.

Schema (all keys optional; angles in degrees)::

    seed: 1234                 # integer; omitted -> fresh entropy, recorded in outputs
    shots: 38600               # shots per measurement setting
    mode: sampled              # sampled | analytic
    feedforward: postprocess   # postprocess | in_circuit
    bootstrap_resamples: 1000
    chain:
      squeezing_db: -4.0       # sets r_x = r_p; exclusive with r_x / r_p
      r_x: 0.46
      r_p: 0.46
      eta_resource: 1.0
      eta_detect: 1.0
      delta_t: 40.0
      phase_noise:             # omit or null to disable
        bits: 7
        jitter_sigma: 0.5
    sweeps:                    # gate-sweep grid
      rotation: [0, 22.5, ...]
      squeeze_rot: [15, 20, ...]
      shear: [-60, -50, ...]
    table:                     # nullifier-table grid (same keys as sweeps)
      rotation: [...]
    multistep:
      n_values: [1, 2, 5, 10, 20, 50, 100]
    trace:
      n_bins: 250
      noise_power: 0.1
    output:
      format: csv              # csv | json

Unknown keys are errors reported with their line number.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .chain import ChainConfig, ChainError, PhaseNoise, r_from_db
from .gates import GATES

GATE_SWEEPS = {
    "rotation": [22.5 * k for k in range(17)],
    "squeeze_rot": [15.0 + 5 * k for k in range(13)],
    "shear": [-60.0 + 10 * k for k in range(13)],
}
TABLE_SWEEPS = {
    "rotation": [0.0, 22.5, -22.5, 45.0, -45.0, 67.5, -67.5, 90.0, -90.0],
    "squeeze_rot": [15.0 + 5 * k for k in range(13)],
    "shear": [0.0, 10.0, -10.0, 20.0, -20.0, 30.0, -30.0, 45.0, -45.0, 60.0, -60.0],
}
MULTISTEP_N = [1, 2, 5, 10, 20, 50, 100]
DEFAULT_SHOTS = 38_600

_SCHEMA = {
    "seed": None,
    "shots": None,
    "mode": None,
    "feedforward": None,
    "bootstrap_resamples": None,
    "chain": {
        "squeezing_db": None, "r_x": None, "r_p": None, "eta_resource": None,
        "eta_detect": None, "delta_t": None, "phase_noise": {"bits": None, "jitter_sigma": None},
    },
    "sweeps": {name: None for name in GATES if name != "identity"},
    "table": {name: None for name in GATES if name != "identity"},
    "multistep": {"n_values": None},
    "trace": {"n_bins": None, "noise_power": None},
    "output": {"format": None},
}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


@dataclass
class ExperimentConfig:
    chain: ChainConfig = field(default_factory=ChainConfig)
    seed: int | None = None
    shots: int = DEFAULT_SHOTS
    mode: str = "sampled"
    feedforward: str = "postprocess"
    bootstrap_resamples: int = 1000
    sweeps: dict = field(default_factory=lambda: copy.deepcopy(GATE_SWEEPS))
    table: dict = field(default_factory=lambda: copy.deepcopy(TABLE_SWEEPS))
    n_values: list = field(default_factory=lambda: list(MULTISTEP_N))
    trace_bins: int = 250
    trace_noise_power: float = 0.1
    output_format: str = "csv"

    def to_dict(self) -> dict:
        """Canonical form embedded in outputs (everything that affects results)."""
        return {
            "seed": self.seed,
            "shots": self.shots,
            "mode": self.mode,
            "feedforward": self.feedforward,
            "bootstrap_resamples": self.bootstrap_resamples,
            "chain": {k: v for k, v in self.chain.to_dict().items() if k != "n_steps"},
            "sweeps": self.sweeps,
            "table": self.table,
            "multistep": {"n_values": self.n_values},
            "trace": {"n_bins": self.trace_bins, "noise_power": self.trace_noise_power},
            "output": {"format": self.output_format},
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def chain_for(self, n_steps: int) -> ChainConfig:
        d = self.chain.to_dict()
        d["n_steps"] = n_steps
        return ChainConfig.from_dict(d)


def _check_keys(node: yaml.Node, schema: dict, source: str, path: str = "") -> None:
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{path or 'top level'} must be a mapping", node.start_mark.line + 1, source)
    for key_node, value_node in node.value:
        key = key_node.value
        full = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(
                f"unknown key {full!r} (allowed: {', '.join(sorted(schema))})",
                key_node.start_mark.line + 1, source,
            )
        sub = schema[key]
        if isinstance(sub, dict) and not (isinstance(value_node, yaml.ScalarNode) and value_node.tag.endswith(":null")):
            _check_keys(value_node, sub, source, full)


def _lines(node: yaml.Node, path: str = "") -> dict:
    """Map dotted key paths to their line numbers."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            full = f"{path}.{k.value}" if path else k.value
            out[full] = k.start_mark.line + 1
            out.update(_lines(v, full))
    return out


def _number(value, key, lines, source, integer=False, minimum=None):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{key} must be {kind}, got {value!r}", lines.get(key), source)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value!r}", lines.get(key), source)
    return int(value) if integer else float(value)


def _sweep(section, name, lines, source) -> dict:
    out = {}
    for gate, values in (section or {}).items():
        key = f"{name}.{gate}"
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{key} must be a nonempty list of angles", lines.get(key), source)
        out[gate] = [_number(v, key, lines, source) for v in values]
    return out


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None, source) from None
    if node is None:
        return ExperimentConfig()
    _check_keys(node, _SCHEMA, source)
    lines = _lines(node)
    raw = yaml.safe_load(text) or {}
    cfg = ExperimentConfig()

    if "seed" in raw and raw["seed"] is not None:
        cfg.seed = _number(raw["seed"], "seed", lines, source, integer=True, minimum=0)
    if "shots" in raw:
        cfg.shots = _number(raw["shots"], "shots", lines, source, integer=True, minimum=2)
    if "mode" in raw:
        if raw["mode"] not in ("sampled", "analytic"):
            raise ConfigError(f"mode must be 'sampled' or 'analytic', got {raw['mode']!r}",
                              lines.get("mode"), source)
        cfg.mode = raw["mode"]
    if "feedforward" in raw:
        if raw["feedforward"] not in ("postprocess", "in_circuit"):
            raise ConfigError(f"feedforward must be 'postprocess' or 'in_circuit', got {raw['feedforward']!r}",
                              lines.get("feedforward"), source)
        cfg.feedforward = raw["feedforward"]
    if "bootstrap_resamples" in raw:
        cfg.bootstrap_resamples = _number(raw["bootstrap_resamples"], "bootstrap_resamples",
                                          lines, source, integer=True, minimum=2)

    chain = raw.get("chain") or {}
    kw = {}
    if "squeezing_db" in chain:
        if "r_x" in chain or "r_p" in chain:
            raise ConfigError("chain.squeezing_db cannot be combined with r_x/r_p",
                              lines.get("chain.squeezing_db"), source)
        db = _number(chain["squeezing_db"], "chain.squeezing_db", lines, source)
        if db > 0:
            raise ConfigError("chain.squeezing_db must be <= 0 (squeezing)", lines.get("chain.squeezing_db"), source)
        kw["r_x"] = kw["r_p"] = float(r_from_db(db))
    for key in ("r_x", "r_p", "eta_resource", "eta_detect", "delta_t"):
        if key in chain:
            kw[key] = _number(chain[key], f"chain.{key}", lines, source, minimum=0)
    if chain.get("phase_noise") is not None:
        pn = chain["phase_noise"]
        try:
            kw["phase_noise"] = PhaseNoise(
                bits=_number(pn.get("bits", 7), "chain.phase_noise.bits", lines, source, integer=True),
                jitter_sigma=_number(pn.get("jitter_sigma", 0.5), "chain.phase_noise.jitter_sigma",
                                     lines, source, minimum=0),
            )
        except ChainError as exc:
            raise ConfigError(str(exc), lines.get("chain.phase_noise"), source) from None
    try:
        cfg.chain = ChainConfig(**kw)
    except ChainError as exc:
        raise ConfigError(str(exc), lines.get("chain"), source) from None

    if "sweeps" in raw:
        cfg.sweeps = _sweep(raw["sweeps"], "sweeps", lines, source)
    if "table" in raw:
        cfg.table = _sweep(raw["table"], "table", lines, source)
    for name in ("sweeps", "table"):
        if not getattr(cfg, name):
            raise ConfigError(f"{name} must list at least one gate", lines.get(name), source)
    ms = raw.get("multistep") or {}
    if "n_values" in ms:
        vals = ms["n_values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("multistep.n_values must be a nonempty list", lines.get("multistep.n_values"), source)
        cfg.n_values = [_number(v, "multistep.n_values", lines, source, integer=True, minimum=0) for v in vals]
    tr = raw.get("trace") or {}
    if "n_bins" in tr:
        cfg.trace_bins = _number(tr["n_bins"], "trace.n_bins", lines, source, integer=True, minimum=1)
        if cfg.trace_bins > 250:
            raise ConfigError("trace.n_bins must be <= 250", lines.get("trace.n_bins"), source)
    if "noise_power" in tr:
        cfg.trace_noise_power = _number(tr["noise_power"], "trace.noise_power", lines, source, minimum=0)
    out = raw.get("output") or {}
    if "format" in out:
        if out["format"] not in ("csv", "json"):
            raise ConfigError(f"output.format must be 'csv' or 'json', got {out['format']!r}",
                              lines.get("output.format"), source)
        cfg.output_format = out["format"]
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))


def config_from_dict(d: dict) -> ExperimentConfig:
    """Rebuild a config from its embedded canonical form (used by replay)."""
    return parse_config(yaml.safe_dump(_yaml_ready(d)), "<embedded>")


def _yaml_ready(d: dict) -> dict:
    d = copy.deepcopy(d)
    chain = d.get("chain", {})
    chain.pop("squeezing_db", None)
    if chain.get("phase_noise") is None:
        chain.pop("phase_noise", None)
    if d.get("seed") is None:
        d.pop("seed", None)
    return d


def sub_seed(seed: int, *keys: int) -> int:
    """Independent child seed for one sub-run, stable across runs."""
    state = np.random.SeedSequence([seed, *keys]).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1
