"""Scenario-driven command line: load a JSON scenario, run it, write outputs.

Usage:
    catsim run <scenario.json> [--out-dir DIR] [--threads N] [--dims M,B]
    catsim validate <scenario.json>
    catsim list

Outputs are deterministic (fixed-step solver, fixed seeds, no timestamps in
the metadata) so two runs of the same scenario produce byte-identical files.
Exit codes: 0 success, 2 schema/validation failure, 3 solver failure
(divergence or step-size), 4 truncation-guard violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .device import DeviceParams, build_reduced_model
from .errors import (
    CatsimError,
    DivergenceError,
    ScenarioError,
    StepSizeError,
    TruncationError,
)
from .fock import (
    cat_state,
    coherent_state,
    fock_state,
    min_dim_for_amplitude,
    number_op,
    parity_op,
)
from .gates import holonomic_x, optimize_pulse, x_gate_target, zeno_y, z_rotation
from .lindblad import evolve, steady_state_reached, suggest_dt
from .reconstruct import (
    bloch_vector,
    estimate_alpha_from_map,
    mle_logical,
    project_logical,
    trace_distance,
)
from .squeeze import extract_squeezing_db, integrate_amplitudes, simulate_squeezed_cat_sweep
from .wigner import WignerMap, map_cut, tomography, wigner_map

KINDS = (
    "stabilize",
    "tomography",
    "gate_x_sweep",
    "gate_y",
    "gate_z",
    "optimize_pulse",
    "squeeze_sweep",
    "reconstruct",
)

SCHEMA = {
    "type": "object",
    "required": ["kind", "name"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(KINDS)},
        "name": {"type": "string", "pattern": r"^[A-Za-z0-9_\-]+$"},
        "seed": {"type": "integer"},
        "threads": {"type": "integer", "minimum": 1},
        "params_override": {"type": "object"},
        "alpha": {"type": "number"},
        "dim": {"type": "integer", "minimum": 2},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 2}},
        "duration_ns": {"type": "number", "exclusiveMinimum": 0},
        "prepare_ns": {"type": "number", "exclusiveMinimum": 0},
        "dt_ns": {"type": "number", "exclusiveMinimum": 0},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "re_min": {"type": "number"},
                "re_max": {"type": "number"},
                "im_min": {"type": "number"},
                "im_max": {"type": "number"},
                "n_re": {"type": "integer", "minimum": 2},
                "n_im": {"type": "integer", "minimum": 2},
            },
        },
        "protocols": {"type": "array", "items": {"enum": ["ideal", "ramsey", "ramsey_enhanced"]}},
        "cut_re": {"type": "number"},
        "theta_list": {"type": "array", "items": {"type": "number"}},
        "tau_ns": {"type": "number", "exclusiveMinimum": 0},
        "sigma_ns": {"type": "number", "exclusiveMinimum": 0},
        "use_bipartite": {"type": "boolean"},
        "kappa_phi_variants": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "epsilon_y": {"type": "number"},
        "t_rot_list": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "ideal_rates": {"type": "boolean"},
        "epsilon_z": {"type": "number"},
        "durations_ns": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "tau_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "ratio_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "theta": {"type": "number"},
        "t_offs": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "pre_stabilize_ns": {"type": "number", "minimum": 0},
        "input_map": {"type": "string"},
        "state": {"enum": ["cat+", "cat-", "coherent-", "coherent+"]},
    },
}

REQUIRED_BY_KIND = {
    "stabilize": ["alpha", "dim", "duration_ns"],
    "tomography": ["alpha", "dim", "grid", "protocols"],
    "gate_x_sweep": ["alpha", "theta_list", "dims"],
    "gate_y": ["alpha", "epsilon_y", "t_rot_list", "dim"],
    "gate_z": ["alpha", "epsilon_z", "durations_ns", "dim"],
    "optimize_pulse": ["alpha", "tau_grid", "ratio_grid", "dims"],
    "squeeze_sweep": ["alpha", "t_offs", "dims"],
    "reconstruct": ["alpha"],
}


def _load_scenario(path: Path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"{path}: {exc.message} (at {'/'.join(map(str, exc.path))})") from exc
    missing = [k for k in REQUIRED_BY_KIND[doc["kind"]] if k not in doc]
    if missing:
        raise ScenarioError(f"{path}: kind {doc['kind']} requires fields {missing}")
    return doc


def _params_from(doc: dict) -> DeviceParams:
    override = doc.get("params_override", {})
    base = DeviceParams().to_json_dict()
    unknown = set(override) - set(base)
    if unknown:
        raise ScenarioError(f"unknown params_override keys: {sorted(unknown)}")
    base.update(override)
    return DeviceParams.from_json_dict(base)


def _guard_check(doc: dict) -> None:
    alpha = doc.get("alpha", 0.0)
    dim = doc.get("dim")
    if dim is None and "dims" in doc:
        dim = doc["dims"][0]
    if dim is not None:
        required = min_dim_for_amplitude(alpha)
        if dim < required:
            raise TruncationError(
                f"dim={dim} violates the truncation guard for alpha={alpha}; "
                f"need dim >= {required}",
                required_dim=required,
            )
    grid = doc.get("grid")
    if grid and dim is not None:
        extent = max(
            abs(grid.get("re_min", 0)), abs(grid.get("re_max", 0)),
            abs(grid.get("im_min", 0)), abs(grid.get("im_max", 0)),
        )
        required = min_dim_for_amplitude(abs(alpha) + extent)
        if dim < required:
            raise TruncationError(
                f"dim={dim} too small for |alpha|+|beta| = {abs(alpha) + extent:.2f}; "
                f"need dim >= {required}",
                required_dim=required,
            )


def _metadata(doc: dict, params: DeviceParams) -> dict:
    canonical = json.dumps(doc, sort_keys=True).encode()
    return {
        "toolkit_version": __version__,
        "scenario_hash": hashlib.sha256(canonical).hexdigest(),
        "scenario_name": doc["name"],
        "params": params.to_json_dict(),
    }


def _csv_meta_lines(meta: dict):
    yield f"# toolkit_version: {meta['toolkit_version']}\n"
    yield f"# scenario_hash: {meta['scenario_hash']}\n"
    yield f"# scenario_name: {meta['scenario_name']}\n"
    yield f"# params: {json.dumps(meta['params'], sort_keys=True)}\n"


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _grid_axes(grid: dict):
    re_axis = np.linspace(grid.get("re_min", -1.0), grid.get("re_max", 1.0), grid.get("n_re", 41))
    im_axis = np.linspace(grid.get("im_min", -1.0), grid.get("im_max", 1.0), grid.get("n_im", 41))
    return re_axis, im_axis


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def _run_stabilize(doc, params, out_dir, meta, threads):
    alpha, dim = doc["alpha"], doc["dim"]
    model = build_reduced_model(params, alpha_target=alpha, dims=(dim,))
    dt = suggest_dt(model, doc.get("dt_ns", 1.0))
    traj = evolve(
        model,
        fock_state(dim, 0).to_density_matrix(),
        (0.0, doc["duration_ns"]),
        dt,
        record={"n": number_op(dim), "parity": parity_op(dim)},
        store_states=True,
        state_decimation=10**9,
        record_decimation=max(1, int(round(1.0 / dt))),
    )
    target = cat_state(dim, alpha, "+")
    fidelity = traj.final_state().fidelity_to(target)
    path = out_dir / f"{doc['name']}.traj.csv"
    with open(path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write("t,n_re,n_im,parity_re,parity_im\n")
        for i, t in enumerate(traj.times):
            n = traj.records["n"][i]
            p = traj.records["parity"][i]
            fh.write(f"{float(t)!r},{float(n.real)!r},{float(n.imag)!r},{float(p.real)!r},{float(p.imag)!r}\n")
    _write_json(out_dir / f"{doc['name']}.json", {
        "metadata": meta,
        "final_fidelity_to_even_cat": fidelity,
        "steady_by_end": steady_state_reached(traj, "n", 200.0, 1e-3),
    })
    return [path, out_dir / f"{doc['name']}.json"]


def _prepare_cat(params, alpha, dim, prepare_ns, dt_ns=None):
    model = build_reduced_model(params, alpha_target=alpha, dims=(dim,))
    dt = suggest_dt(model, dt_ns or 1.0)
    traj = evolve(
        model, fock_state(dim, 0).to_density_matrix(), (0.0, prepare_ns), dt,
        store_states=True, state_decimation=10**9,
    )
    return traj.final_state()


def _run_tomography(doc, params, out_dir, meta, threads):
    alpha, dim = doc["alpha"], doc["dim"]
    prepared = _prepare_cat(params, alpha, dim, doc.get("prepare_ns", 300.0), doc.get("dt_ns"))
    re_axis, im_axis = _grid_axes(doc["grid"])
    written = []
    cuts = {}
    for protocol in doc["protocols"]:
        wmap = tomography(prepared, params, re_axis, im_axis, protocol)
        for suffix, writer in (("wigner.csv", wmap.to_csv), ("wigner.json", wmap.to_json)):
            path = out_dir / f"{doc['name']}.{protocol}.{suffix}"
            writer(path, metadata=meta)
            written.append(path)
        ys, cut = map_cut(wmap, doc.get("cut_re", 0.0))
        cuts[protocol] = cut
    cut_path = out_dir / f"{doc['name']}.cut.csv"
    with open(cut_path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write("im," + ",".join(f"w_{p}" for p in doc["protocols"]) + "\n")
        for i, y in enumerate(ys):
            row = ",".join(repr(float(cuts[p][i])) for p in doc["protocols"])
            fh.write(f"{float(y)!r},{row}\n")
    written.append(cut_path)
    return written


def _run_gate_x_sweep(doc, params, out_dir, meta, threads):
    alpha = doc["alpha"]
    dims = tuple(doc["dims"])
    variants = doc.get("kappa_phi_variants", [params.kappa_phi_m_over_2pi])
    rho0 = coherent_state(dims[0], -alpha).to_density_matrix()
    rows = []
    for theta in doc["theta_list"]:
        row = {"theta": theta}
        target = x_gate_target(rho0, theta, alpha)
        for kphi in variants:
            pv = params.replace(kappa_phi_m_over_2pi=kphi)
            out = holonomic_x(
                rho0, theta, pv,
                tau=doc.get("tau_ns", 300.0), sigma=doc.get("sigma_ns", 250.0),
                use_bipartite=doc.get("use_bipartite", True), alpha=alpha, dims=dims,
                dt=doc.get("dt_ns"),
            )
            tag = f"{kphi:g}"
            row[f"trace_distance_kphi_{tag}"] = trace_distance(out, target)
            x, y, z = bloch_vector(project_logical(out, alpha))
            row[f"sx_kphi_{tag}"], row[f"sy_kphi_{tag}"], row[f"sz_kphi_{tag}"] = x, y, z
        rows.append(row)
    path = out_dir / f"{doc['name']}.sweep.csv"
    keys = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(repr(float(row[k])) for k in keys) + "\n")
    return [path]


def _run_gate_y(doc, params, out_dir, meta, threads):
    alpha, dim = doc["alpha"], doc["dim"]
    pv = params
    if doc.get("ideal_rates", False):
        pv = params.replace(kappa1_over_2pi=0.0, kappa_phi_m_over_2pi=0.0)
    rho0 = cat_state(dim, alpha, "+").to_density_matrix()
    results = []
    for t_rot in doc["t_rot_list"]:
        final, deflated = zeno_y(
            rho0, doc["epsilon_y"], t_rot, pv, alpha=alpha, return_deflated=True,
        )
        pops = np.diag(deflated.entries).real
        results.append({
            "t_rot_ns": t_rot,
            "deflated_p0": float(pops[0]),
            "deflated_p1": float(pops[1]),
            "deflated_coherence01": abs(complex(deflated.entries[0, 1])),
            "final_parity": float(np.real(final.expect(parity_op(dim)))),
        })
    path = out_dir / f"{doc['name']}.json"
    _write_json(path, {"metadata": meta, "checkpoints": results})
    return [path]


def _run_gate_z(doc, params, out_dir, meta, threads):
    alpha, dim = doc["alpha"], doc["dim"]
    rho0 = cat_state(dim, alpha, "+").to_density_matrix()
    rows = []
    for dur in doc["durations_ns"]:
        out = z_rotation(rho0, doc["epsilon_z"], dur, params, alpha=alpha)
        st = project_logical(out, alpha)
        x, y, z = bloch_vector(st)
        rows.append((dur, x, y, z))
    path = out_dir / f"{doc['name']}.sweep.csv"
    with open(path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write("duration_ns,sx,sy,sz\n")
        for dur, x, y, z in rows:
            fh.write(f"{float(dur)!r},{float(x)!r},{float(y)!r},{float(z)!r}\n")
    return [path]


def _run_optimize_pulse(doc, params, out_dir, meta, threads):
    tau_star, sigma_star, landscape, errors = optimize_pulse(
        params,
        alpha=doc["alpha"],
        theta=doc.get("theta", np.pi / 2),
        tau_grid=doc["tau_grid"],
        ratio_grid=doc["ratio_grid"],
        dims=tuple(doc["dims"]),
        use_bipartite=doc.get("use_bipartite", True),
        n_jobs=threads,
    )
    path = out_dir / f"{doc['name']}.landscape.csv"
    with open(path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write("tau_ns,ratio,trace_distance\n")
        for i, tau in enumerate(doc["tau_grid"]):
            for j, ratio in enumerate(doc["ratio_grid"]):
                fh.write(f"{float(tau)!r},{float(ratio)!r},{float(landscape[i, j])!r}\n")
    jpath = out_dir / f"{doc['name']}.json"
    _write_json(jpath, {
        "metadata": meta,
        "tau_star_ns": tau_star,
        "sigma_star_ns": sigma_star,
        "errors": errors,
    })
    return [path, jpath]


def _run_squeeze_sweep(doc, params, out_dir, meta, threads):
    alpha = doc["alpha"]
    dims = tuple(doc["dims"])
    t_offs = doc["t_offs"]
    states = simulate_squeezed_cat_sweep(
        params, alpha, t_offs, dims=dims,
        pre_stabilize_ns=doc.get("pre_stabilize_ns", 120.0), dt=doc.get("dt_ns"),
    )
    extent = alpha + 0.8
    gr = np.linspace(-extent, extent, 91)
    gi = np.linspace(-2.6, 2.6, 61)
    rows = []
    best = None
    for t_off, st in zip(sorted(float(t) for t in t_offs), states):
        wmap = wigner_map(st, gr, gi)
        try:
            db, unc = extract_squeezing_db(wmap, rng_seed=doc.get("seed", 0))
        except CatsimError:
            db, unc = float("nan"), float("nan")
        rows.append((t_off, db, unc))
        if best is None or (db == db and db > best[1]):
            best = (t_off, db, wmap)
    path = out_dir / f"{doc['name']}.squeeze.csv"
    with open(path, "w") as fh:
        fh.writelines(_csv_meta_lines(meta))
        fh.write("t_off_ns,squeezing_db,uncertainty_db\n")
        for t_off, db, unc in rows:
            fh.write(f"{float(t_off)!r},{float(db)!r},{float(unc)!r}\n")
    written = [path]
    amp = integrate_amplitudes(
        params.g2_over_2pi, params.kappa_b_over_2pi, alpha,
        (0.0, max(t_offs) if t_offs else 24.0),
    )
    apath = out_dir / f"{doc['name']}.amplitudes.csv"
    amp.to_csv(apath, metadata=meta)
    written.append(apath)
    if best is not None:
        bpath = out_dir / f"{doc['name']}.best.wigner.csv"
        best[2].to_csv(bpath, metadata=meta)
        written.append(bpath)
    return written


def _run_reconstruct(doc, params, out_dir, meta, threads):
    alpha = doc["alpha"]
    if "input_map" in doc:
        path = Path(doc["input_map"])
        wmap = WignerMap.from_json(path) if path.suffix == ".json" else WignerMap.from_csv(path)
    else:
        dim = doc.get("dim", min_dim_for_amplitude(abs(alpha) + 3.0))
        state = doc.get("state", "cat+")
        maker = {
            "cat+": lambda: cat_state(dim, alpha, "+"),
            "cat-": lambda: cat_state(dim, alpha, "-"),
            "coherent+": lambda: coherent_state(dim, alpha),
            "coherent-": lambda: coherent_state(dim, -alpha),
        }[state]
        # widest grid whose corners still satisfy the truncation guard
        feasible = (-2.0 + np.sqrt(4.0 + dim - 1)) / np.sqrt(2.0)
        extent = min(abs(alpha) + 2.0, feasible)
        axis = np.linspace(-extent, extent, 61)
        wmap = wigner_map(maker().to_density_matrix(), axis, axis)
    logical = mle_logical(wmap, alpha)
    payload = {"metadata": meta, "logical_state": logical.to_json_dict()}
    try:
        alpha_hat = estimate_alpha_from_map(wmap)
        payload["alpha_estimate"] = {"re": alpha_hat.real, "im": alpha_hat.imag}
    except CatsimError:
        payload["alpha_estimate"] = None
    path = out_dir / f"{doc['name']}.logical.json"
    _write_json(path, payload)
    return [path]


RUNNERS = {
    "stabilize": _run_stabilize,
    "tomography": _run_tomography,
    "gate_x_sweep": _run_gate_x_sweep,
    "gate_y": _run_gate_y,
    "gate_z": _run_gate_z,
    "optimize_pulse": _run_optimize_pulse,
    "squeeze_sweep": _run_squeeze_sweep,
    "reconstruct": _run_reconstruct,
}


def bundled_scenarios() -> dict[str, Path]:
    root = resources.files("catsim") / "scenarios"
    return {p.name: p for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def run_scenario(path: Path, out_dir: Path, threads: int = 1, dims_override=None) -> list[Path]:
    doc = _load_scenario(path)
    if dims_override:
        if "dims" in doc:
            doc["dims"] = list(dims_override)
        if "dim" in doc:
            doc["dim"] = dims_override[0]
    _guard_check(doc)
    params = _params_from(doc)
    threads = doc.get("threads", threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = _metadata(doc, params)
    return RUNNERS[doc["kind"]](doc, params, out_dir, meta, threads)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="catsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario file")
    p_run.add_argument("scenario", help="scenario JSON path or bundled scenario name")
    p_run.add_argument("--out-dir", default=".", help="output directory")
    p_run.add_argument("--threads", type=int, default=1, help="cell-level parallelism cap")
    p_run.add_argument("--dims", default=None, help="override dims, e.g. 40,5")

    p_val = sub.add_parser("validate", help="schema + guard checks without running")
    p_val.add_argument("scenario")

    sub.add_parser("list", help="list bundled scenarios")

    args = parser.parse_args(argv)

    if args.command == "list":
        for name in bundled_scenarios():
            print(name)
        return 0

    path = Path(args.scenario)
    if not path.exists():
        bundled = bundled_scenarios()
        if path.name in bundled:
            path = Path(str(bundled[path.name]))
        else:
            print(f"error: scenario {args.scenario} not found", file=sys.stderr)
            return 2

    if args.command == "validate":
        try:
            doc = _load_scenario(path)
            _guard_check(doc)
            _params_from(doc)
        except ScenarioError as exc:
            print(f"invalid: {exc}", file=sys.stderr)
            return 2
        except TruncationError as exc:
            print(f"truncation guard: {exc}", file=sys.stderr)
            return 4
        print(f"ok: {path}")
        return 0

    dims_override = None
    if args.dims:
        try:
            dims_override = tuple(int(x) for x in args.dims.split(","))
        except ValueError:
            print("error: --dims expects comma-separated integers", file=sys.stderr)
            return 2
    try:
        written = run_scenario(path, Path(args.out_dir), threads=args.threads, dims_override=dims_override)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TruncationError as exc:
        print(f"truncation guard: {exc}", file=sys.stderr)
        return 4
    except (StepSizeError, DivergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
