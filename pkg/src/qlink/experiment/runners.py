"""Experiment runners: turn a resolved config into a ResultRecord.

Sweep points are plain picklable tuples evaluated by module-level functions,
so ``jobs > 1`` can farm them out to a process pool. ``Executor.map`` keeps
input order, which makes the aggregated output independent of scheduling.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import product

import numpy as np

from ..cavity import CavityParams, OptimizableParameters, generate_raw_pair, time_trace
from ..esd import SpinRingHamiltonian, energy_error_sweep, optimize_vha
from ..purification import NoiseModel, PurificationProtocol, alt_protocol_s_gates, run_protocol
from ..qmath import concurrence
from ..rng import derive_seed
from ..shuttle.chain import (
    ChainConfig, charge_noise_effect, purify_shuttled_pair, shuttle_chain, spin_transfer_fidelity,
)
from ..shuttle.hamiltonian import SweepParams
from .analysis import compare_bell_basis
from .config import ExperimentConfig, load_config
from .records import PartialWriter, ResultRecord


def parallel_map(fn, items, jobs=1):
    """Ordered map, in-process for one job and over a process pool otherwise."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        yield from pool.map(fn, items)


# ------------------------------------------------------------------ cavity and purification


def _cavity_params(sec, t2c):
    params = OptimizableParameters.table3().replace(t_stop=sec["t_stop"])
    c = CavityParams(fock_cutoff=sec["fock_cutoff"], cavity_loss=sec["cavity_loss"],
                     T2_spin=sec["t2_spin"], T2_charge=t2c)
    return params, c


def _raw_pair(sec, t2c):
    params, c = _cavity_params(sec, t2c)
    return generate_raw_pair(params, c, sec["stop_sigma"], sec["stop_points"], sec["backend"])


def _cavity_point(args):
    sec, t2c = args
    r = _raw_pair(sec, t2c)
    row = {"t2_charge_ns": t2c, "fidelity": r.fidelity, "concurrence": r.concurrence,
           "success_probability": r.success_probability, "vacuum_probability": r.vacuum_probability,
           "attempt_time_ns": r.attempt_time}
    return row, r.spin_state.matrix


def run_cavity(cfg: ExperimentConfig, sink=None):
    sec = cfg["cavity"]
    rows, mats = [], {}
    for row, m in parallel_map(_cavity_point, [(sec, t) for t in sec["t2_charge"]], cfg.jobs):
        rows.append(row)
        mats[f"spin_state_t2c_{row['t2_charge_ns']:g}"] = m
        sink and sink(row)
    series = {"table": rows}
    metrics = {f"fidelity_t2c_{r['t2_charge_ns']:g}": r["fidelity"] for r in rows}
    if sec["trace_times"]:
        params, c = _cavity_params(sec, sec["t2_charge"][0])
        tr = time_trace(params, c, sec["trace_times"], sec["backend"])
        series["trace"] = [dict(zip(tr, vals)) for vals in zip(*tr.values())]
        k = int(np.argmax(tr["concurrence"]))
        metrics.update(peak_time_ns=tr["time"][k], peak_concurrence=tr["concurrence"][k],
                       peak_probability=tr["probability"][k], peak_vacuum=tr["vacuum"][k])
    return metrics, series, mats


def _purify_point(args):
    sec, psec, t2c = args
    raw = _raw_pair(sec, t2c)
    noise = NoiseModel(psec["depol_1q"], psec["depol_2q"], psec["meas_error"])
    run = alt_protocol_s_gates if psec["variant"] == "s-gate" else run_protocol
    out = []
    for n in psec["rounds"]:
        s = run(raw, PurificationProtocol.canonical(n), noise)
        row = {"t2_charge_ns": t2c, "rounds": n, "fidelity": s.fidelity, "concurrence": s.concurrence,
               "raw_fidelity": raw.fidelity, "raw_failure": s.raw_failure}
        for i, f in enumerate(s.per_round_failure, 1):
            row[f"failure_round_{i}"] = f
        row.update(expected_raw_pairs=s.expected_raw_pairs, generation_rate_mhz=s.generation_rate)
        out.append((row, s.final_state.matrix))
    return out


def run_purify(cfg: ExperimentConfig, sink=None):
    sec, psec = cfg["cavity"], cfg["purification"]
    rows, mats = [], {}
    for point in parallel_map(_purify_point, [(sec, psec, t) for t in sec["t2_charge"]], cfg.jobs):
        for row, m in point:
            rows.append(row)
            mats[f"purified_t2c_{row['t2_charge_ns']:g}_rounds_{row['rounds']}"] = m
            sink and sink(row)
    metrics = {f"fidelity_t2c_{r['t2_charge_ns']:g}_rounds_{r['rounds']}": r["fidelity"] for r in rows}
    return metrics, {"table": rows}, mats


# ------------------------------------------------------------------ shuttling


def chain_seed(master_seed, k):
    return derive_seed(master_seed, "shuttle", "chain", k)


def _sweep(sec, t_c):
    return SweepParams(eps0=sec["eps0"], alpha=sec["alpha"], t_c=t_c, e_soi=sec["e_soi"],
                       n_steps=sec["n_steps"])


def _chain_config(sec, t_c, sd, seed):
    return ChainConfig(n_dots=sec["n_dots"], B=sec["B"], t_c=t_c, mean_valley=sec["mean_valley"],
                       sd_valley=sec["sd_valley"], sd_phase=sd, b_x_total=sec["b_x"],
                       b_z_total=sec["b_z"], e_soi=sec["e_soi"], seed=seed, phase_mode=sec["phase_mode"])


def _chain_point(args):
    sec, t_c, sd, k, seed = args
    res = shuttle_chain(_chain_config(sec, t_c, sd, seed), _sweep(sec, t_c), with_ptm=(k == 0))
    raw = res.final_state.matrix
    pur, p11 = purify_shuttled_pair(raw)
    row = {"t_c": t_c, "sd_phase": sd, "chain": k, "seed": seed,
           "raw_concurrence": res.concurrence_trace[-1], "raw_fidelity": spin_transfer_fidelity(raw),
           "purified_concurrence": concurrence(pur), "purified_probability": p11,
           "valley_success_probability": res.success_probability}
    trace = None
    if k == 0:
        trace = [{"t_c": t_c, "sd_phase": sd, "dot": d, "concurrence": c,
                  "valley_probability": (1.0 if d == 0 else res.valley_post_select_probs[d - 1])}
                 for d, c in enumerate(res.concurrence_trace)]
    ptm = None if res.ptm is None else res.ptm.entries
    return row, raw, pur.matrix, trace, ptm


def shuttle_ensemble(cfg: ExperimentConfig, t_c, sd, sink=None):
    """Rows plus ensemble-averaged raw and purified states for one (t_c, SD) setting."""
    sec = cfg["shuttle"]
    points = [(sec, t_c, sd, k, chain_seed(cfg.master_seed, k)) for k in range(sec["n_chains"])]
    rows, traces = [], []
    raw_avg = np.zeros((4, 4), complex)
    pur_avg = np.zeros((4, 4), complex)
    ptm = None
    for row, raw, pur, trace, p in parallel_map(_chain_point, points, cfg.jobs):
        rows.append(row)
        raw_avg += raw / len(points)
        pur_avg += pur / len(points)
        if trace is not None:
            traces.extend(trace)
            ptm = p
        sink and sink(row)
    return rows, traces, raw_avg, pur_avg, ptm


def run_shuttle(cfg: ExperimentConfig, sink=None):
    sec = cfg["shuttle"]
    rows, traces, mats, metrics = [], [], {}, {}
    for t_c, sd in product(sec["t_c"], sec["sd_phase"]):
        r, tr, raw_avg, pur_avg, ptm = shuttle_ensemble(cfg, t_c, sd, sink)
        rows += r
        traces += tr
        tag = f"tc_{t_c:g}_sd_{sd:.4f}"
        metrics[f"mean_raw_concurrence_{tag}"] = float(np.mean([x["raw_concurrence"] for x in r]))
        metrics[f"mean_raw_fidelity_{tag}"] = float(np.mean([x["raw_fidelity"] for x in r]))
        metrics[f"mean_purified_concurrence_{tag}"] = float(np.mean([x["purified_concurrence"] for x in r]))
        mats[f"ensemble_raw_{tag}"] = raw_avg
        mats[f"ensemble_purified_{tag}"] = pur_avg
        if ptm is not None:
            mats[f"ptm_chain0_{tag}"] = ptm
    series = {"chains": rows, "traces": traces}
    if sec["noise_realizations"] > 0:
        eff = charge_noise_effect(sec["noise_delta_phi"], sec["noise_realizations"], cfg.master_seed,
                                  sec["s_1mhz"], t_c=sec["noise_t_c"], valley_magnitude=sec["mean_valley"],
                                  zeeman=sec["B"], e_soi=sec["e_soi"], eps0=sec["eps0"],
                                  alpha=sec["alpha"], n_steps=sec["n_steps"])
        series["charge_noise"] = [
            {"delta_phi": d, **{k: eff[k][i] for k in eff}} for i, d in enumerate(sec["noise_delta_phi"])]
        metrics["max_raw_noise_effect"] = float(np.max(np.abs(eff["raw_noisy"] - eff["raw"])))
        metrics["max_purified_noise_effect"] = float(np.max(np.abs(eff["purified_noisy"] - eff["purified"])))
    return metrics, series, mats


# ------------------------------------------------------------------ ESD


def _esd_point(args):
    h, params, xi, modes, bell_f, n_copies = args
    return [{"xi": r.circuit_error_rate, "mode": r.mode, "n_copies": r.n_copies,
             "bell_fidelity": r.bell_fidelity, "unmitigated_error": r.unmitigated_error,
             "energy_error": r.mitigated_error, "mitigated_energy": r.mitigated_energy}
            for r in energy_error_sweep(h, params, [xi], modes, bell_f, n_copies)]


def run_esd(cfg: ExperimentConfig, sink=None):
    sec = cfg["esd"]
    h = SpinRingHamiltonian.random(sec["n"], sec["J"], seed=cfg.master_seed)
    opt = optimize_vha(h, sec["layers"], sec["tolerance"], seed=cfg.master_seed)
    points = [(h, opt.params, xi, tuple(sec["modes"]), sec["bell_fidelity"], tuple(sec["n_copies"]))
              for xi in sec["xi"]]
    rows = []
    for out in parallel_map(_esd_point, points, cfg.jobs):
        for row in out:
            rows.append(row)
            sink and sink(row)
    metrics = {"vqe_energy_error": opt.error, "exact_energy": opt.exact, "vqe_energy": opt.energy,
               "vqe_converged": opt.converged}
    mats = {"omega": np.asarray(h.omega, complex), "vha_parameters": opt.params.vector().astype(complex)}
    return metrics, {"errors": rows}, mats


# ------------------------------------------------------------------ comparison


def run_compare(cfg: ExperimentConfig, sink=None):
    sec, psec, ssec = cfg["cavity"], cfg["purification"], cfg["shuttle"]
    t2c = sec["t2_charge"][0]
    n_rounds = psec["rounds"][0]
    raw = _raw_pair(sec, t2c)
    noise = NoiseModel(psec["depol_1q"], psec["depol_2q"], psec["meas_error"])
    run = alt_protocol_s_gates if psec["variant"] == "s-gate" else run_protocol
    cav_raw = raw.spin_state.matrix
    cav_pur = run(raw, PurificationProtocol.canonical(n_rounds), noise).final_state.matrix
    _, _, sh_raw, sh_pur, _ = shuttle_ensemble(cfg, ssec["t_c"][0], ssec["sd_phase"][0], sink)
    cmp = compare_bell_basis(cav_raw, cav_pur, sh_raw, sh_pur)
    metrics = {}
    for name in cmp.magnitudes:
        metrics[f"best_bell_{name}"] = cmp.best_bell[name]
        metrics[f"best_bell_lu_{name}"] = cmp.best_bell_lu[name]
    rows = [{"state": name, **{f"weight_{lab}": w for lab, w in zip(cmp.labels, cmp.bell_weights[name])},
             "best_bell": cmp.best_bell[name], "best_bell_lu": cmp.best_bell_lu[name]}
            for name in cmp.magnitudes]
    mats = {f"bell_abs_{k}": v for k, v in cmp.magnitudes.items()}
    return metrics, {"bell": rows}, mats


RUNNERS = {"cavity": run_cavity, "purify": run_purify, "shuttle": run_shuttle, "esd": run_esd,
           "compare": run_compare}


def run_experiment(cfg: ExperimentConfig, flush_partial=True) -> ResultRecord:
    """Run the configured experiment; rows stream to a partial CSV until the record is complete."""
    writer = PartialWriter(cfg.out, cfg.experiment_id) if flush_partial else None
    t0 = time.perf_counter()
    metrics, series, mats = RUNNERS[cfg.kind](cfg, writer.add if writer else None)
    rec = ResultRecord(cfg.experiment_id, cfg.hash(), metrics, series, mats,
                       time.perf_counter() - t0, cfg.canonical())
    if writer:
        writer.close()
    return rec


# ------------------------------------------------------------------ reproduction recipes

RECIPES = {
    "table1": ("cavity", {"cavity": {"t2_charge": [400.0, 100.0, 50.0]}}),
    "table2": ("purify", {"cavity": {"t2_charge": [400.0, 100.0, 50.0]}, "purification": {"rounds": [2, 4]}}),
    "fig3": ("cavity", {"cavity": {"t2_charge": [400.0], "trace_times": [0.5 * k for k in range(61)]}}),
    "fig7": ("shuttle", {"shuttle": {"t_c": [20.0, 30.0, 40.0], "sd_phase": [np.pi / 4, np.pi / 2],
                                     "n_chains": 10}}),
    "fig8": ("compare", {"cavity": {"t2_charge": [400.0]}, "purification": {"rounds": [2]},
                         "shuttle": {"t_c": [30.0], "sd_phase": [np.pi / 4], "n_chains": 100}}),
    "fig10c": ("esd", {"esd": {"xi": [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 5.0]}}),
    "fig11": ("shuttle", {"shuttle": {"t_c": [30.0], "sd_phase": [np.pi / 4], "n_chains": 1,
                                      "noise_realizations": 100}}),
}


def recipe_config(name, path=None, env=None, extra: dict | None = None) -> ExperimentConfig:
    kind, overrides = RECIPES[name]
    merged = {s: dict(v) for s, v in overrides.items()}
    merged.setdefault("run", {}).update(kind=kind, id=name)
    for s, v in (extra or {}).items():
        merged.setdefault(s, {}).update(v)
    return load_config(path, env, merged)


def with_kind(cfg: ExperimentConfig, kind: str) -> ExperimentConfig:
    sections = {s: dict(v) for s, v in cfg.sections.items()}
    sections["run"]["kind"] = kind
    return replace(cfg, kind=kind, sections=sections)
