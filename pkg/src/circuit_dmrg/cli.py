"""Command-line driver: ``circuit-dmrg {run,validate,compare,sample} CONFIG``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config, validate
from .dmrg import compress_step
from .exact import StateVector, evolve
from .metrics import CSV_COLUMNS, check_sqrtF_relation, error_rate, fidelity, xeb_exact
from .mps import (GroupedMPS, load_mps, product_state, read_checkpoint_header, save_mps,
                  to_statevector)
from .sampling import conditional_samples, dense_prefix_oracle, metropolis_sample, write_samples
from .simulate import ForwardCache, prepare_forward, run_closed_batch, run_open, step_config

__all__ = ["RESULT_SCHEMA_VERSION", "compare_against_oracle", "main", "run", "sample"]

RESULT_SCHEMA_VERSION = 1


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _append_csv(path, rows, columns=CSV_COLUMNS):
    path = Path(path)
    fresh = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
        if fresh:
            w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k)) for k in columns})


def _write_json(path, cfg: RunConfig, rows, extra=None):
    doc = {"schema_version": RESULT_SCHEMA_VERSION, "mode": cfg.mode,
           "circuit_id": cfg.circuit_id, "results": rows}
    doc.update(extra or {})
    Path(path).write_text(json.dumps(doc, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _rate(F, n_2g):
    if F is None or not F > 0:
        return None
    return 0.0 if n_2g == 0 else error_rate(F, n_2g)


def _circuit_id(cfg: RunConfig, circuit) -> str:
    if cfg.circuit_id:
        return cfg.circuit_id
    fam = circuit.meta.get("family", "circuit")
    return f"{fam}-N{circuit.n_qubits}-s{cfg.seed('circuit')}"


def _row(cfg, circuit, grouping, chi, depth, n_2g, F_tilde, F=None, F_B=None, mode="open"):
    return {"circuit_id": _circuit_id(cfg, circuit), "mode": mode, "chi": chi, "K": cfg.K,
            "n_s": cfg.n_s, "grouping": grouping.name, "D": depth, "N_2g": n_2g,
            "F": F, "F_tilde": F_tilde, "F_B": F_B, "eps": _rate(F, n_2g),
            "eps_tilde": _rate(F_tilde, n_2g)}


def _oracle_metrics(mps: GroupedMPS, exact: StateVector):
    approx = to_statevector(mps)
    F = fidelity(approx, exact)
    Q = approx.probabilities / approx.probabilities.sum()
    P = exact.probabilities / exact.probabilities.sum()
    return F, xeb_exact(P, Q)


def _open_job(cfg: RunConfig, chi: int):
    circuit = cfg.build_circuit()
    grouping = cfg.build_grouping(circuit)
    result = run_open(circuit, grouping, cfg.compression(chi))
    F = F_B = None
    if cfg.oracle:
        F, F_B = _oracle_metrics(result.mps, evolve(circuit, max_qubits=cfg.max_qubits))
    row = _row(cfg, circuit, grouping, chi, circuit.depth, circuit.n_2g, result.F_tilde, F, F_B)
    return row, result


def _map(cfg: RunConfig, fn, items):
    if cfg.workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, [cfg] * len(items), items))
    return [fn(cfg, it) for it in items]


def _run_open(cfg: RunConfig):
    outs = _map(cfg, _open_job, cfg.chis)
    rows = [r for r, _ in outs]
    if cfg.outputs.get("traces"):
        path = Path(cfg.outputs["traces"])
        if path.exists():
            path.unlink()
        for (row, res) in outs:
            for step, tr in enumerate(res.traces):
                tr.to_csv(path, step=step, append=True)
    if cfg.outputs.get("checkpoint"):
        row, res = outs[-1]
        save_mps(res.mps, cfg.outputs["checkpoint"],
                 {"F_tilde": res.F_tilde, "chi": row["chi"], "kind": "open"})
    return rows, {}


def _forward_cache(cfg, circuit, grouping, chi) -> ForwardCache:
    path = cfg.outputs.get("checkpoint")
    comp = cfg.compression(chi)
    if path and Path(path).exists():
        meta = read_checkpoint_header(path).get("extra", {})
        if meta.get("kind") == "closed-forward" and meta.get("chi") == chi:
            mid = load_mps(path)
            return ForwardCache(meta["D1"], meta["D2"], meta["D3"], mid, meta["F_forward"], None)
    cache = prepare_forward(circuit, grouping, comp, cfg.D1, cfg.D2, cfg.D3)
    if path:
        save_mps(cache.middle, path, {"kind": "closed-forward", "chi": chi, "D1": cache.D1,
                                      "D2": cache.D2, "D3": cache.D3, "F_forward": cache.F_forward})
    return cache


def _closed_true_fidelity(circuit, cache: ForwardCache, res, max_qubits) -> float:
    """``F_f * F_b(x)``: each approximate half-run scored against its dense counterpart."""
    if cache.forward is None:
        return None
    fwd_exact = evolve(circuit.slice(0, cache.D1), max_qubits=max_qubits)
    F_f = fidelity(to_statevector(cache.forward.mps), fwd_exact)
    D = circuit.depth
    back = circuit.slice(D - cache.D3, D).adjoint()
    b_exact = evolve(back, StateVector.basis(circuit.n_qubits, res.bitstring), max_qubits)
    F_b = fidelity(to_statevector(res.backward.mps), b_exact)
    return F_f * F_b


def _run_closed(cfg: RunConfig):
    circuit = cfg.build_circuit()
    grouping = cfg.build_grouping(circuit)
    xs = cfg.parsed_bitstrings(circuit.n_qubits)
    rows, details = [], []
    exact = evolve(circuit, max_qubits=cfg.max_qubits) if cfg.oracle else None
    for chi in cfg.chis:
        cache = _forward_cache(cfg, circuit, grouping, chi)
        for res in run_closed_batch(circuit, xs, grouping, cfg.compression(chi), forward_cache=cache):
            F = None
            if exact is not None:
                F = _closed_true_fidelity(circuit, cache, res, cfg.max_qubits)
            row = _row(cfg, circuit, grouping, chi, circuit.depth, res.N_2g, res.F_tilde, F,
                       mode="closed")
            rows.append(row)
            det = {"chi": chi, "bitstring": format(res.bitstring, f"0{circuit.n_qubits}b"),
                   "amplitude": res.amplitude, "F_forward": res.F_forward,
                   "F_backward": res.F_backward, "eps_tilde_approx": res.eps_tilde_approx,
                   "N_2g_approx": res.N_2g_approx, "D1": cache.D1, "D2": cache.D2, "D3": cache.D3}
            if exact is not None:
                det["exact_amplitude"] = complex(exact.amplitudes[res.bitstring])
            details.append(det)
    return rows, {"amplitudes": details}


def compare_against_oracle(cfg: RunConfig) -> list[dict]:
    """Depth sweep with dense-oracle columns F, F_tilde, F_B and sqrt(F).

    Depths are the chunk boundaries (multiples of K, plus the final depth),
    optionally filtered by ``cfg.depths``; depth 0 is always reported.
    """
    circuit = cfg.build_circuit()
    grouping = cfg.build_grouping(circuit)
    if circuit.n_qubits > cfg.max_qubits:
        raise ConfigError(f"{circuit.n_qubits} qubits exceeds the oracle bound {cfg.max_qubits}")
    wanted = None if cfg.depths is None else set(int(d) for d in cfg.depths)
    rows = []
    for chi in cfg.chis:
        comp = cfg.compression(chi)
        mps = product_state(grouping, 0)
        psi = StateVector.basis(circuit.n_qubits)
        F_tilde = 1.0
        depth = 0
        step = 0

        def emit():
            F, F_B = _oracle_metrics(mps, psi)
            n_2g = circuit.layer_n_2g(0, depth)
            row = _row(cfg, circuit, grouping, chi, depth, n_2g, F_tilde, F, F_B, mode="compare")
            diag = check_sqrtF_relation(F, F_B)
            row.update(sqrt_F=diag["sqrt_F"], F_B_over_sqrt_F=diag["ratio"])
            rows.append(row)

        emit()
        while depth < circuit.depth:
            chunk = circuit.layers[depth:depth + cfg.K]
            mps, f, _ = compress_step(mps, chunk, step_config(comp, step))
            F_tilde *= f
            psi = evolve(circuit.slice(depth, depth + len(chunk)), psi, cfg.max_qubits)
            depth += len(chunk)
            step += 1
            if wanted is None or depth in wanted:
                emit()
    return rows


def sample(cfg: RunConfig) -> dict:
    circuit = cfg.build_circuit()
    s = cfg.sampling
    method = s.get("method", "conditional")
    n_samples = int(s.get("n_samples", 1000))
    L = int(s.get("L", 1))
    seed = cfg.seed("sampler")
    n = circuit.n_qubits
    stats = {"method": method, "n_samples": n_samples, "seed": seed}
    if method == "conditional":
        xs = conditional_samples(dense_prefix_oracle(circuit, cfg.max_qubits), circuit, n_samples, seed)
    else:
        if s.get("source", "exact") == "closed":
            grouping = cfg.build_grouping(circuit)
            chi = cfg.chis[0]
            cache = _forward_cache(cfg, circuit, grouping, chi)
            comp = cfg.compression(chi)

            def amp(x):
                return run_closed_batch(circuit, [x], grouping, comp, forward_cache=cache)[0].amplitude
            chain = metropolis_sample(amp, n, n_samples, L, seed, s.get("burn_in"))
        else:
            table = evolve(circuit, max_qubits=cfg.max_qubits).amplitudes
            chain = metropolis_sample(lambda x: table[x], n, n_samples, L, seed, s.get("burn_in"),
                                      vectorized=True)
        if chain.aborted:
            raise RuntimeError(f"metropolis chain aborted after {len(chain.samples)} samples: {chain.error}")
        xs = chain.samples
        stats.update(L=L, acceptance=chain.acceptance, proposed=chain.proposed)
    out = cfg.outputs.get("samples")
    if out:
        write_samples(out, xs, n, {"circuit_id": _circuit_id(cfg, circuit), **stats})
    stats["samples"] = [int(x) for x in xs]
    return stats


def run(cfg: RunConfig) -> list[dict]:
    if cfg.mode == "open":
        rows, extra = _run_open(cfg)
    elif cfg.mode == "closed":
        rows, extra = _run_closed(cfg)
    elif cfg.mode == "analyze":
        rows, extra = compare_against_oracle(cfg), {}
    else:
        stats = sample(cfg)
        rows, extra = [], {"sampling": {k: v for k, v in stats.items() if k != "samples"}}
    if cfg.outputs.get("csv") and rows:
        _append_csv(cfg.outputs["csv"], rows)
    if cfg.outputs.get("json"):
        _write_json(cfg.outputs["json"], cfg, rows, extra)
    return rows


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circuit-dmrg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "execute the configured workflow"),
                       ("validate", "check a config without running it"),
                       ("compare", "depth sweep against the dense oracle"),
                       ("sample", "draw bitstrings")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("config", help="YAML or JSON run config")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (dotted keys, YAML values)")
        if name != "validate":
            sp.add_argument("--csv", help="append result rows to this CSV")
            sp.add_argument("--json", help="write the JSON result document here")
            sp.add_argument("--workers", type=int, help="worker processes for chi sweeps")
    return p


def _print_rows(rows, extra_cols=()):
    cols = list(CSV_COLUMNS) + list(extra_cols)
    print(",".join(cols))
    for r in rows:
        print(",".join(str(_fmt(r.get(c))) for c in cols))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        doc = load_config(args.config, args.overrides)
        if args.command == "validate":
            problems = validate(doc)
            for msg in problems:
                print(f"config error: {msg}", file=sys.stderr)
            if not problems:
                print("ok")
            return 1 if problems else 0
        for key in ("csv", "json"):
            if getattr(args, key):
                doc.setdefault("outputs", {})[key] = getattr(args, key)
        if args.workers:
            doc["workers"] = args.workers
        if args.command == "compare":
            doc["mode"] = "analyze"
        elif args.command == "sample":
            doc["mode"] = "sample"
        cfg = RunConfig.from_dict(doc)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    try:
        rows = run(cfg)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error in {type(exc).__module__}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    if rows:
        _print_rows(rows, ("sqrt_F", "F_B_over_sqrt_F") if cfg.mode == "analyze" else ())
    return 0


if __name__ == "__main__":
    sys.exit(main())
