"""Drivers behind the CLI subcommands and the report file format.

Every driver returns ``(columns, rows)``; :func:`write_report` adds a header
with the command, config hash, seed and the full config so that
:func:`replay_report` can regenerate the file byte for byte.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from . import estimation as est
from . import trace as tr
from .chain import (
    ChainConfig,
    MeasurementSchedule,
    derive_seed,
    effective_map,
    identity_schedule,
    run_analytic,
    run_sampled,
)
from .config import ExperimentConfig, config_from_dict, sub_seed
from .gates import GATES, angles_for, compile_target, sequence_map
from .targets import parse_target

S_KEYS = [(0, 0), (0, 1), (1, 0), (1, 1)]


# ---------------------------------------------------------------------------
# measurement helpers
# ---------------------------------------------------------------------------


def sample_s_records(
    cfg: ChainConfig, schedule: MeasurementSchedule, shots: int, seed: int,
    threads: int = 1, feedforward: str = "postprocess",
) -> dict:
    """Four sampled runs, output bin at quadrature i and reference bin at j."""
    recs = {}
    for idx, (i, j) in enumerate(S_KEYS):
        sch = schedule.with_bases(j * np.pi / 2, i * np.pi / 2)
        recs[(i, j)] = run_sampled(cfg, sch, shots, sub_seed(seed, idx), feedforward, threads)
    return recs


def sample_nullifier_records(
    cfg: ChainConfig, schedule: MeasurementSchedule, spec: est.NullifierSpec, shots: int,
    seed: int, threads: int = 1, feedforward: str = "postprocess",
) -> tuple:
    out = []
    for which in (1, 2):
        sch = schedule.with_bases(*spec.bases(which))
        out.append(run_sampled(cfg, sch, shots, sub_seed(seed, 10 + which), feedforward, threads))
    return tuple(out)


def measure_s(
    exp: ExperimentConfig, cfg: ChainConfig, schedule: MeasurementSchedule, seed: int, threads: int = 1
) -> est.SEstimate:
    den = est.epr_denominators(cfg)
    if exp.mode == "analytic":
        return est.estimate_s(run_analytic(cfg, schedule, exp.feedforward), den)
    recs = sample_s_records(cfg, schedule, exp.shots, seed, threads, exp.feedforward)
    return est.estimate_s(recs, den)


def _s_columns(prefix: str = "") -> list[str]:
    cols = []
    for i, j in S_KEYS:
        name = f"s{i + 1}{j + 1}"
        cols += [prefix + name, prefix + name + "_se"]
    return cols


def _s_values(s: est.SEstimate) -> list[float]:
    vals = []
    for i, j in S_KEYS:
        vals += [float(s.s_hat[i, j]), float(s.stderr[i, j])]
    return vals


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def gate_sweep(exp: ExperimentConfig, threads: int = 1):
    """S matrices of single-step gates over the configured angle grids."""
    seed = derive_seed(exp.seed)
    cols = ["gate", "phi_deg", *_s_columns(), *[f"theory_s{i + 1}{j + 1}" for i, j in S_KEYS]]
    rows = []
    cfg = exp.chain_for(1)
    for gi, gate in enumerate(g for g in GATES if g in exp.sweeps):
        for pi, phi_deg in enumerate(exp.sweeps[gate]):
            sch = MeasurementSchedule.build([angles_for(gate, np.deg2rad(phi_deg))])
            s = measure_s(exp, cfg, sch, sub_seed(seed, 100 + gi, pi), threads)
            theory = effective_map(sch)
            rows.append([gate, float(phi_deg), *_s_values(s), *[float(theory[i, j]) for i, j in S_KEYS]])
    return cols, rows


def threshold_2dp(value: float) -> float:
    return float(np.round(value, 2))


def nullifier_table(exp: ExperimentConfig, threads: int = 1):
    """Nullifier variances and the inseparability check for each operation."""
    seed = derive_seed(exp.seed)
    cols = ["operation", "phi_deg", "var1", "var1_se", "var2", "var2_se", "sum", "sum_se",
            "threshold", "threshold_2dp", "pass", "near_threshold"]
    rows = []
    cfg = exp.chain_for(1)
    for gi, gate in enumerate(g for g in GATES if g in exp.table):
        for pi, phi_deg in enumerate(exp.table[gate]):
            phi = np.deg2rad(phi_deg)
            sch = MeasurementSchedule.build([angles_for(gate, phi)])
            spec = est.NULLIFIER_FAMILIES[gate](phi)
            if exp.mode == "analytic":
                rep = est.verify(run_analytic(cfg, sch, exp.feedforward), spec)
                e1 = e2 = 0.0
            else:
                recs = sample_nullifier_records(cfg, sch, spec, exp.shots,
                                                sub_seed(seed, 200 + gi, pi), threads, exp.feedforward)
                rep = est.verify(recs, spec)
                e1, e2 = (_bootstrap_var_se(r, d, spec, exp, seed, gi, pi, k)
                          for k, (r, d) in enumerate(zip(recs, (spec.delta1, spec.delta2))))
            rows.append([
                gate, float(phi_deg), rep.var1, e1, rep.var2, e2, rep.sum, float(np.hypot(e1, e2)),
                rep.threshold, threshold_2dp(rep.threshold), rep.passed,
                bool(abs(rep.margin) < est.SIGNIFICANCE_SE * np.hypot(e1, e2)),
            ])
    return cols, rows


def _bootstrap_var_se(rec, delta, spec, exp, seed, gi, pi, k) -> float:
    samples = est._nullifier_samples(rec, *delta)
    res = est.bootstrap(samples, lambda x: np.var(x, ddof=1), exp.bootstrap_resamples,
                        sub_seed(seed, 300 + gi, pi, k))
    return res.stderr


def multistep(exp: ExperimentConfig, threads: int = 1):
    """S entries and identity-nullifier variances versus the number of steps."""
    seed = derive_seed(exp.seed)
    cols = ["n", *_s_columns(), "var_x", "var_x_se", "var_p", "var_p_se", "var_x_db", "var_p_db",
            "theory_var_x", "theory_var_p", "theory_x_db", "theory_p_db"]
    rows = []
    spec = est.identity_nullifiers()
    for ni, n in enumerate(exp.n_values):
        cfg = exp.chain_for(n)
        sch = identity_schedule(n)
        den = est.epr_denominators(cfg)
        if exp.mode == "analytic":
            jm = run_analytic(cfg, sch, exp.feedforward)
            s = est.estimate_s(jm, den)
            nv = est.nullifier_variance(jm, spec)
        else:
            recs = sample_s_records(cfg, sch, exp.shots, sub_seed(seed, 400, ni), threads, exp.feedforward)
            s = est.estimate_s(recs, den)
            # identity nullifiers use the (x, x) and (p, p) settings
            nv = est.nullifier_variance((recs[(0, 0)], recs[(1, 1)]), spec)
        tx, tp = est.predict_multistep_variance(n, cfg.r_x, cfg.r_p)
        rows.append([
            int(n), *_s_values(s), nv.var1, nv.err1, nv.var2, nv.err2,
            10 * np.log10(nv.var1), 10 * np.log10(nv.var2), tx, tp, 10 * np.log10(tx), 10 * np.log10(tp),
        ])
    return cols, rows


def compile_report(target_text: str):
    """Angle schedule (degrees) realising a parsed gate expression."""
    target = parse_target(target_text)
    pairs = compile_target(target)
    residual = float(np.linalg.norm(sequence_map(pairs) - target))
    cols = ["step", "theta_a_deg", "theta_b_deg", "residual"]
    rows = [[k + 1, *p.degrees(), residual] for k, p in enumerate(pairs)]
    return cols, rows


def trace_demo(exp: ExperimentConfig, out_path: Path | None = None):
    """Synthesise A/B detector frames from vacuum quadratures and integrate them back."""
    seed = derive_seed(exp.seed)
    rng = np.random.default_rng(sub_seed(seed, 500))
    values = rng.standard_normal((2, exp.trace_bins))
    cols = ["bin", "value_a", "recovered_a", "value_b", "recovered_b"]
    recovered = []
    for c, ch in enumerate("AB"):
        frame = tr.synthesize_frame(values[c], sub_seed(seed, 501, c), exp.trace_noise_power, ch)
        if out_path is not None:
            tr.write_trace(frame, out_path.with_name(f"{out_path.stem}_{ch}.trace"))
        recovered.append(tr.integrate_frame(frame)[: exp.trace_bins])
    rows = [[k, values[0, k], recovered[0][k], values[1, k], recovered[1][k]] for k in range(exp.trace_bins)]
    return cols, rows


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def header(command: str, exp: ExperimentConfig, extra: dict | None = None) -> dict:
    return {
        "command": command,
        "config_hash": exp.hash(),
        "seed": exp.seed,
        "config": exp.to_dict(),
        "args": extra or {},
    }


def render_report(meta: dict, cols, rows, fmt: str = "csv") -> str:
    if fmt == "json":
        body = {"meta": meta, "columns": cols,
                "rows": [{c: _json_value(v) for c, v in zip(cols, r)} for r in rows]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# command: {meta['command']}\n")
    buf.write(f"# config_hash: {meta['config_hash']}\n")
    buf.write(f"# seed: {meta['seed']}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    buf.write(f"# args: {json.dumps(meta['args'], sort_keys=True)}\n")
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def read_report_meta(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)["meta"]
    meta = {}
    for line in text.splitlines():
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        meta[key] = value
    try:
        return {
            "command": meta["command"],
            "config_hash": meta["config_hash"],
            "seed": json.loads(meta["seed"]),
            "config": json.loads(meta["config"]),
            "args": json.loads(meta.get("args", "{}")),
        }
    except (KeyError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: not a report file ({exc})") from None


def run_command(command: str, exp: ExperimentConfig, args: dict, threads: int = 1,
                out_path: Path | None = None):
    if command == "gate-sweep":
        return gate_sweep(exp, threads)
    if command == "nullifier-table":
        return nullifier_table(exp, threads)
    if command == "multistep":
        return multistep(exp, threads)
    if command == "compile":
        return compile_report(args["target"])
    if command == "trace-demo":
        return trace_demo(exp, out_path)
    raise ValueError(f"unknown command {command!r}")


def replay_report(path, threads: int = 1, out_path: Path | None = None) -> tuple[bool, str]:
    """Regenerate a report from its header; returns (identical, regenerated text)."""
    meta = read_report_meta(path)
    exp = config_from_dict(meta["config"])
    fmt = "json" if Path(path).read_text(encoding="utf-8").lstrip().startswith("{") else "csv"
    cols, rows = run_command(meta["command"], exp, meta["args"], threads, out_path)
    text = render_report(header(meta["command"], exp, meta["args"]), cols, rows, fmt)
    return text == Path(path).read_text(encoding="utf-8"), text
