"""Execute a validated RunConfig and write CSV, SVG and manifest atomically."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import shutil
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import LRConstants, lr_bound
from .config import RunConfig, expand_range
from .evolution import PropagatorPlan
from .experiments.correlations import correlation_spread, ghz_protocol_check
from .experiments.entanglement import entropy_growth, schmidt_input
from .experiments.information import holevo_experiment, pauli_ensemble
from .experiments.lightcone import (
    DENSE_SCAN_LIMIT, MATFREE_SCAN_LIMIT, ScanGrid, fit_lightcone, lightcone_scan, truncation_scan,
)
from .experiments.table import ExperimentResult, plot_csv
from .experiments.tqo import (
    circuit_lower_bound_demo, circuit_protocol, product_pair, random_two_local_layers,
    toric_preparation_layers, tqo_accuracy,
)
from .hamiltonian import (
    MAX_TORIC_QUBITS, Schedule, apply_x_string, build_heisenberg, build_product_coupling, build_tfim,
    build_toric_code,
)
from .lattice import GRAPH_BUILDERS, build_chain, build_toric_code_layout
from .quantum import MAX_QUBITS, PAULIS, PureState, check_size, ghz_state, pauli, plus_state, random_state

MANIFEST_SCHEMA = "lrlab-manifest/1"

# largest system each experiment can handle
EXPERIMENT_LIMITS = {
    "lightcone": MATFREE_SCAN_LIMIT,
    "truncation": DENSE_SCAN_LIMIT,
    "correlation_spread": MAX_QUBITS,
    "ghz_protocol": MAX_QUBITS,
    "holevo": 14,
    "entropy_growth": 14,
    "tqo": MAX_TORIC_QUBITS,
    "lower_bound": MAX_TORIC_QUBITS,
}


@dataclass
class RunOutcome:
    out_dir: Path
    files: dict[str, Path]
    result: ExperimentResult
    manifest: dict


def requested_qubits(cfg: RunConfig) -> int:
    m = cfg.model
    if m["name"] == "toric":
        return 2 * m.get("nx", 2) * m.get("ny", 2)
    if m["name"] == "product":
        return 2
    if cfg.experiment == "ghz_protocol":
        return int(max(expand_range(cfg.grid.get("n", [4]))))
    g = m.get("graph", {"kind": "chain", "n": 2})
    if g["kind"] == "chain":
        return g.get("n", 2)
    if g["kind"] == "torus2d":
        return g["nx"] * g["ny"]
    return 2 * g["nx"] * g["ny"]


def preflight(cfg: RunConfig) -> None:
    """Reject oversized requests before any model is built."""
    check_size(f"{cfg.experiment} experiment", requested_qubits(cfg), EXPERIMENT_LIMITS[cfg.experiment])


def build_model(cfg: RunConfig):
    """Return (HamiltonianSpec, SpinGraph or None, ToricLayout or None)."""
    m = dict(cfg.model)
    name = m.pop("name")
    if name == "toric":
        layout = build_toric_code_layout(m.get("nx", 2), m.get("ny", 2))
        return build_toric_code(layout).spec, layout.graph, layout
    if name == "product":
        ja, jb = pauli(m.get("ja", "X"), 0), pauli(m.get("jb", "X"), 1)
        return build_product_coupling(ja, jb, Schedule.constant(m.get("r", 1.0))), None, None
    gspec = dict(m.get("graph", {"kind": "chain", "n": 2}))
    graph = GRAPH_BUILDERS[gspec.pop("kind")](**gspec)
    if name == "tfim":
        return build_tfim(graph, m.get("J", 1.0), m.get("h", 1.0)), graph, None
    return build_heisenberg(graph, m.get("J", 1.0)), graph, None


def build_state(spec: dict, n: int) -> PureState:
    kind = spec["kind"]
    if kind == "zero":
        return PureState.basis("0" * n)
    if kind == "plus":
        return plus_state(n)
    if kind == "ghz":
        return ghz_state(n)
    if kind == "basis":
        if len(spec["bits"]) != n:
            raise ValueError(f"initial_state.bits has {len(spec['bits'])} bits, model has {n} qubits")
        return PureState.basis(spec["bits"])
    if kind == "schmidt":
        if n != 2:
            raise ValueError("schmidt initial state needs a 2-qubit model")
        return schmidt_input(spec.get("x", 0.9167785))
    return random_state(n, np.random.default_rng(spec.get("seed", 0)))


def make_plan(cfg: RunConfig) -> PropagatorPlan:
    p = cfg.plan
    return PropagatorPlan(dt=p.get("dt", 0.01), tolerance=p.get("tolerance", 1e-8),
                          method=p.get("method", "exact-step"), backend=p.get("backend", "auto"))


def _grid(cfg: RunConfig, key: str, default) -> list:
    return expand_range(cfg.grid[key]) if key in cfg.grid else list(default)


def _run_lightcone(cfg, model, graph, plan, threads):
    obs = cfg.observables
    grid = ScanGrid(model, graph, tuple(int(L) for L in _grid(cfg, "L", range(1, graph.diameter + 1))),
                    tuple(_grid(cfg, "t", [0.5, 1.0])), pauli(obs.get("a", "Z"), obs.get("site_a", 0)),
                    PAULIS[obs.get("b", "Z")])
    table = lightcone_scan(grid, plan=plan, workers=threads, seed=cfg.seed)
    meta = dict(table.metadata)
    try:
        fit = fit_lightcone(table)
        meta.update(v_est=fit.v_est, xi_est=fit.xi_est, theta=fit.theta,
                    arrivals_monotone=fit.arrivals_monotone, decay_r2=fit.decay_r2)
    except ValueError as exc:
        meta["fit_error"] = str(exc)
    if cfg.bounds is None:
        table.metadata = meta
        return table
    k = LRConstants(**cfg.bounds)
    res = ExperimentResult("lightcone", ("series", "L", "t"), metadata=meta)
    for L, t, value, error in table.rows:
        res.add("C", L, t, value=value, error=error)
    for L, t, _, _ in table.rows:
        res.add("bound", L, t, value=lr_bound(k, 1, L, t), error=0.0)
    return res


def _run_truncation(cfg, model, graph, plan, threads):
    obs = cfg.observables
    op_a = pauli(obs.get("a", "Z"), obs.get("site_a", 0))
    l_values = [int(l) for l in _grid(cfg, "l", range(1, graph.diameter + 1))]
    res = ExperimentResult("truncation", ("l", "t"), metadata={"model": model.name})
    for t in _grid(cfg, "t", [0.5]):
        res.rows.extend(truncation_scan(model, graph, op_a, t, l_values, plan).rows)
    return res


def _run_correlation(cfg, model, graph, plan, threads):
    n, obs = model.n_qubits, cfg.observables
    psi0 = build_state(cfg.initial_state, n)
    a = pauli(obs.get("a", "Z"), obs.get("site_a", 0))
    b = pauli(obs.get("b", "Z"), obs.get("site_b", n - 1))
    return correlation_spread(model, psi0, a, b, _grid(cfg, "t", np.arange(0.0, 2.01, 0.25)), plan)


def _run_ghz(cfg, model, graph, plan, threads):
    J, h = cfg.model.get("J", 1.0), cfg.model.get("h", 1.0)
    return ghz_protocol_check(lambda n: build_tfim(build_chain(n), J, h),
                              [int(n) for n in _grid(cfg, "n", [4, 6, 8])],
                              cfg.threshold or 0.1, cfg.t_max or 4.0, 0.05, plan)


def _run_holevo(cfg, model, graph, plan, threads):
    n = model.n_qubits
    region_a = cfg.regions.get("A", [0])
    region_b = cfg.regions.get("B", [n - 1])
    return holevo_experiment(model, pauli_ensemble(region_a), build_state(cfg.initial_state, n), region_b,
                             _grid(cfg, "t", np.arange(0.0, 2.01, 0.25)), plan)


def _run_entropy(cfg, model, graph, plan, threads):
    n = model.n_qubits
    return entropy_growth(model, build_state(cfg.initial_state, n), cfg.regions.get("A", [0]),
                          _grid(cfg, "t", np.arange(0.0, 1.01, 0.1)), plan)


def _tqo_pair(cfg, n, layout):
    kind = cfg.pair or ("toric_ground" if layout is not None else "ghz")
    if kind == "ghz":
        return ghz_state(n, 1), ghz_state(n, -1)
    if kind == "toric_ground":
        if layout is None:
            raise ValueError("pair 'toric_ground' needs the toric model")
        return build_toric_code(layout).ground_pair()
    if kind == "local_flip":
        return product_pair(n, [0])
    return product_pair(n)


def _run_tqo(cfg, model, graph, plan, threads):
    n = model.n_qubits
    psi1, psi2 = _tqo_pair(cfg, n, cfg_layout(cfg))
    l_values = _grid(cfg, "l", [1, 2])
    rep = tqo_accuracy(psi1, psi2, l_values, graph)
    res = ExperimentResult("tqo", ("l", "quantity"), metadata={"pair": cfg.pair, "region_count": rep.region_count})
    for i, l in enumerate(rep.l_values):
        res.add(l, "eps", value=rep.eps[i], error=0.0)
        res.add(l, "eps_diag", value=rep.eps_diag[i], error=0.0)
        res.add(l, "eps_offdiag", value=rep.eps_offdiag[i], error=0.0)
    return res


def cfg_layout(cfg: RunConfig):
    if cfg.model["name"] != "toric":
        return None
    return build_toric_code_layout(cfg.model.get("nx", 2), cfg.model.get("ny", 2))


def _run_lower_bound(cfg, model, graph, plan, threads):
    layout = cfg_layout(cfg)
    n = model.n_qubits
    proto = cfg.protocol
    if proto["kind"] == "toric_prep":
        if layout is None:
            raise ValueError("protocol 'toric_prep' needs the toric model")
        layers, loop = toric_preparation_layers(layout)
        zero = PureState.basis("0" * n)
        pair = (zero, PureState(apply_x_string(zero.amplitudes, loop)))
    elif proto["kind"] == "random":
        layers = random_two_local_layers(graph, proto.get("depth", 1), np.random.default_rng(cfg.seed))
        pair = product_pair(n)
    else:
        layers, pair = [], product_pair(n)
    spec, duration = circuit_protocol(n, layers, graph)
    res = ExperimentResult("lower_bound", ("stage", "l"), metadata={"protocol": proto["kind"], "duration": duration})
    for l_f in _grid(cfg, "l", [graph.diameter / 2]):
        rep = circuit_lower_bound_demo(pair, spec, duration, l_f, graph, plan=plan)
        res.add("initial", rep.l_i, value=rep.eps_initial, error=0.0)
        res.add("final", rep.l_f, value=rep.eps_final, error=0.0)
    return res


RUNNERS = {
    "lightcone": _run_lightcone,
    "truncation": _run_truncation,
    "correlation_spread": _run_correlation,
    "ghz_protocol": _run_ghz,
    "holevo": _run_holevo,
    "entropy_growth": _run_entropy,
    "tqo": _run_tqo,
    "lower_bound": _run_lower_bound,
}


def compute(cfg: RunConfig, threads: int = 1) -> ExperimentResult:
    """Run the experiment in memory; nothing touches the disk."""
    preflight(cfg)
    if cfg.experiment == "ghz_protocol":
        model, graph = None, None
    else:
        model, graph, _ = build_model(cfg)
        if graph is None and cfg.experiment in ("lightcone", "truncation", "tqo", "lower_bound"):
            raise ValueError(f"{cfg.experiment} needs a model with a graph")
    return RUNNERS[cfg.experiment](cfg, model, graph, make_plan(cfg), threads)


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def versions() -> dict[str, str]:
    import matplotlib
    import scipy

    return {"lrlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "matplotlib": matplotlib.__version__}


def run(cfg: RunConfig, out_dir: str | Path | None = None, threads: int | None = None) -> RunOutcome:
    """Compute, then write ``<experiment>.csv``, ``<experiment>.svg`` and ``manifest.json``.

    Output goes to a sibling temp directory first and is renamed into place,
    so a failure never leaves partial files behind.
    """
    out = Path(out_dir or os.environ.get("LRLAB_OUTPUT_DIR") or cfg.output_dir)
    threads = threads or int(os.environ.get("LRLAB_THREADS", 0)) or cfg.threads
    start = time.perf_counter()
    result = compute(cfg, threads)
    wall = time.perf_counter() - start

    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.tmp-", dir=out.parent))
    names = {"csv": f"{cfg.experiment}.csv", "svg": f"{cfg.experiment}.svg", "manifest": "manifest.json"}
    try:
        result.write_csv(tmp / names["csv"])
        plot_csv(tmp / names["csv"], tmp / names["svg"])
        manifest = {
            "schema": MANIFEST_SCHEMA,
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "threads": threads,
            "config": cfg.raw,
            "versions": versions(),
            "wall_time_s": round(wall, 6),
            "files": {names[k]: _sha256(tmp / names[k]) for k in ("csv", "svg")},
            "metadata": result.metadata,
        }
        (tmp / names["manifest"]).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
        if out.exists():
            for name in names.values():
                os.replace(tmp / name, out / name)
            tmp.rmdir()
        else:
            os.rename(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return RunOutcome(out, {k: out / v for k, v in names.items()}, result, manifest)
