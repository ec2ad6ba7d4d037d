"""Parameter sweeps over topology, hopping, noise and disorder.

Each sweep returns a :class:`SweepResult` holding one row per simulated point
(and per disorder realization), aggregate rows, and a provenance record. Sweep
points are independent; with ``workers > 1`` they run in a process pool, and
results are always collected in point order so output does not depend on
scheduling.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from . import __version__
from .evolve import IntegratorConfig, Trajectory, find_steady_state, integrate
from .hamiltonian import accessible_dark_dimension, build_hamiltonian, predicted_efficiency
from .lindblad import NoiseConfig, build_model
from .network import (
    DisorderConfig,
    NetworkSpec,
    apply_disorder,
    complete_network,
    delete_edge,
    set_hopping,
)
from .observables import (
    NotReached,
    RunSummary,
    config_digest,
    localization_report,
    saturation_time,
    summarize,
)

SCHEMA_VERSION = 1

DEPHASING_RATES = (0.0, 0.01, 0.1, 1.0)
DEFAULT_CHIS = (0.0, 0.1, 0.2, 0.3)


@dataclass
class SweepResult:
    """Rows of a sweep plus aggregates and provenance.

    ``rows`` and ``aggregate`` are lists of flat dicts (CSV-ready).
    ``extras`` holds non-tabular by-products such as trajectories or
    localization reports; it is not written by :meth:`write`.
    """

    name: str
    axis: str
    values: list
    rows: list[dict]
    aggregate: list[dict]
    config: dict
    seed: int = 0
    extras: dict = field(default_factory=dict, repr=False)
    tables: dict[str, list[dict]] = field(default_factory=dict, repr=False)

    @property
    def digest(self) -> str:
        return config_digest(self.config)

    def column(self, key: str, rows: list[dict] | None = None) -> np.ndarray:
        return np.array([r[key] for r in (self.rows if rows is None else rows)])

    def summary_csv(self) -> str:
        return _table_csv(self.rows)

    def aggregate_csv(self) -> str:
        return _table_csv(self.aggregate)

    def manifest(self, timestamp: str | None = None) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "experiment": self.name,
            "axis": self.axis,
            "seed": self.seed,
            "config": self.config,
            "config_digest": self.digest,
            "timestamp": timestamp
            or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }

    def write(self, out_dir, timestamp: str | None = None) -> dict[str, Path]:
        """Write ``summary.csv``, ``aggregate.csv`` and ``manifest.json`` atomically."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "summary": out / "summary.csv",
            "aggregate": out / "aggregate.csv",
            "manifest": out / "manifest.json",
        }
        write_atomic(paths["summary"], self.summary_csv())
        write_atomic(paths["aggregate"], self.aggregate_csv())
        for name, rows in self.tables.items():
            paths[name] = out / f"{name}.csv"
            write_atomic(paths[name], _table_csv(rows))
        write_atomic(
            paths["manifest"],
            json.dumps(self.manifest(timestamp), indent=2, sort_keys=True, default=_plain) + "\n",
        )
        return paths


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in keys])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parallel_map(fn, tasks, workers: int = 1) -> list:
    """Ordered map, optionally over a process pool."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _steady_point(task) -> dict:
    spec, noise, cfg, method = task
    model = build_model(spec, noise)
    ss = find_steady_state(model, cfg=cfg, method=method)
    s = summarize(ss, model.layout)
    return {
        "eta_inf": s.eta_inf,
        "residual_network": s.residual_network_population,
        "residual_ground": s.residual_ground_population,
        "converged": s.converged,
        "t_final": ss.converged_at,
    }


# --------------------------------------------------------------------------
# baseline


def fcn_baseline(
    n: int = 6,
    gamma_sink: float = 0.5,
    cfg: IntegratorConfig | None = None,
    injection: int = 0,
    sink: int | None = None,
) -> tuple[Trajectory, RunSummary]:
    """Noiseless complete network: full population history and its summary."""
    if n < 3:
        raise ValueError("baseline needs n >= 3")
    cfg = IntegratorConfig() if cfg is None else cfg
    spec = complete_network(n, injection, sink)
    model = build_model(spec, NoiseConfig(gamma_sink=gamma_sink))
    traj = integrate(model, cfg=cfg)
    ss = find_steady_state(model, cfg=cfg)
    config = {"experiment": "baseline", "network": spec.to_dict(),
              "noise": model.noise.to_dict(), "integrator": cfg.to_dict()}
    return traj, summarize(ss, model.layout, digest=config_digest(config))


# --------------------------------------------------------------------------
# hopping and edges


def hopping_sweep(
    values,
    edge: tuple[int, int] = (0, 5),
    spec: NetworkSpec | None = None,
    noise: NoiseConfig | None = None,
    cfg: IntegratorConfig | None = None,
    method: str = "rk",
    workers: int = 1,
) -> SweepResult:
    """Long-time efficiency as one coupling is varied (0-based ``edge``)."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("hopping grid is empty")
    spec = complete_network(6) if spec is None else spec
    noise = NoiseConfig() if noise is None else noise
    cfg = IntegratorConfig() if cfg is None else cfg
    a, b = edge
    tasks = [(set_hopping(spec, a, b, v), noise, cfg, method) for v in values]
    results = parallel_map(_steady_point, tasks, workers)
    rows = [{"edge": f"{a + 1}-{b + 1}", "hopping": v, **r} for v, r in zip(values, results)]
    config = {"experiment": "hopping-sweep", "network": spec.to_dict(), "edge": [a + 1, b + 1],
              "values": values, "noise": noise.to_dict(), "integrator": cfg.to_dict(),
              "method": method}
    return SweepResult("hopping-sweep", f"J_{a + 1}{b + 1}", values, rows, rows, config)


def _deletion_point(task) -> tuple[dict, object]:
    spec, noise, cfg, method = task
    model = build_model(spec, noise)
    ss = find_steady_state(model, cfg=cfg, method=method)
    rep = localization_report(ss.rho, model.layout)
    h = build_hamiltonian(spec)
    i, f = spec.injection_site, spec.sink_site
    row = {
        "eta_inf": ss.eta,
        "predicted_eta": predicted_efficiency(h, i, f),
        "residual_network": rep.network_population,
        "accessible_dark_dim": accessible_dark_dimension(h, i, f),
        "offsink_entries": rep.offsink_count,
        "converged": ss.converged,
    }
    return row, rep


def edge_deletion_scan(
    n: int = 6,
    noise: NoiseConfig | None = None,
    cfg: IntegratorConfig | None = None,
    method: str = "rk",
    workers: int = 1,
) -> SweepResult:
    """Delete each edge of the complete network in turn (``C(n, 2)`` rows)."""
    if n < 3:
        raise ValueError("edge deletion scan needs n >= 3")
    noise = NoiseConfig() if noise is None else noise
    cfg = IntegratorConfig() if cfg is None else cfg
    base = complete_network(n)
    pairs = list(itertools.combinations(range(n), 2))
    tasks = [(delete_edge(base, a, b), noise, cfg, method) for a, b in pairs]
    out = parallel_map(_deletion_point, tasks, workers)
    rows = [{"deleted": f"{a + 1}-{b + 1}", **row} for (a, b), (row, _) in zip(pairs, out)]
    config = {"experiment": "edge-scan", "n_sites": n, "noise": noise.to_dict(),
              "integrator": cfg.to_dict(), "method": method}
    result = SweepResult("edge-scan", "deleted_edge", [r["deleted"] for r in rows], rows, rows, config)
    result.extras["reports"] = {r["deleted"]: rep for r, (_, rep) in zip(rows, out)}
    return result


# --------------------------------------------------------------------------
# dephasing


def standard_dephasing_topologies(n: int = 6) -> dict[str, NetworkSpec]:
    """Complete network and the (1,6), (2,4), (3,6) single deletions."""
    f = complete_network(n)
    return {
        "fcn": f,
        "del_1-6": delete_edge(f, 0, n - 1),
        "del_2-4": delete_edge(f, 1, 3),
        "del_3-6": delete_edge(f, 2, n - 1),
    }


def _dephasing_point(task) -> dict:
    spec, noise, t_fixed, fraction, t_max, dt = task
    model = build_model(spec, noise)
    times = np.arange(0.0, t_max + 0.5 * dt, dt)
    k_fixed = int(round(t_fixed / dt))
    cfg = IntegratorConfig(t_max=t_max, sample_times=tuple(times))
    traj = integrate(model, cfg=cfg,
                     stop=lambda t, p: t >= t_fixed and p[model.layout.sink] >= fraction)
    sink_fixed = float(traj.sink[k_fixed]) if k_fixed < len(traj.times) else float(traj.sink[-1])
    tau = saturation_time(traj, fraction, cap=t_max)
    return {
        "sink_at_t": sink_fixed,
        "tau_s": float(tau),
        "tau_reached": not isinstance(tau, NotReached),
    }


def dephasing_scan(
    topologies: dict[str, NetworkSpec] | None = None,
    gammas=DEPHASING_RATES,
    t_fixed: float = 100.0,
    fraction: float = 0.99,
    t_max: float = 3000.0,
    dt: float = 0.01,
    gamma_sink: float = 0.5,
    workers: int = 1,
) -> SweepResult:
    """Sink population at ``t_fixed`` and time to reach ``fraction`` per (topology, rate)."""
    topologies = standard_dephasing_topologies() if topologies is None else topologies
    gammas = [float(g) for g in gammas]
    if any(g < 0 for g in gammas):
        raise ValueError("dephasing rates must be >= 0")
    keys = [(name, g) for name in topologies for g in gammas]
    tasks = [
        (topologies[name], NoiseConfig(gamma_sink=gamma_sink, gamma_deph=g), t_fixed, fraction, t_max, dt)
        for name, g in keys
    ]
    results = parallel_map(_dephasing_point, tasks, workers)
    rows = [{"topology": name, "gamma_deph": g, **r} for (name, g), r in zip(keys, results)]
    config = {"experiment": "dephasing", "topologies": {k: v.to_dict() for k, v in topologies.items()},
              "gammas": gammas, "t_fixed": t_fixed, "fraction": fraction, "t_max": t_max,
              "dt": dt, "gamma_sink": gamma_sink}
    return SweepResult("dephasing", "gamma_deph", gammas, rows, rows, config)


# --------------------------------------------------------------------------
# saturation time


def _saturation_point(task) -> dict:
    spec, noise, fraction, cap, dt, rel_tol, abs_tol = task
    model = build_model(spec, noise)
    times = np.arange(0.0, cap + 0.5 * dt, dt)
    cfg = IntegratorConfig(t_max=cap, sample_times=tuple(times), rel_tol=rel_tol, abs_tol=abs_tol)
    sink = model.layout.sink
    traj = integrate(model, cfg=cfg, stop=lambda t, p: p[sink] >= fraction)
    tau = saturation_time(traj, fraction, cap=cap)
    return {"tau_s": float(tau), "tau_reached": not isinstance(tau, NotReached),
            "sink_final": float(traj.sink[-1])}


def saturation_grid(start: float = 0.1, stop: float = 6.0, step: float = 0.02) -> np.ndarray:
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 10)


def saturation_sweep(
    values=None,
    edge: tuple[int, int] = (0, 5),
    spec: NetworkSpec | None = None,
    fraction: float = 0.99,
    cap: float = 500.0,
    dt: float = 0.01,
    gamma_sink: float = 0.5,
    rel_tol: float = 1e-8,
    abs_tol: float = 1e-10,
    workers: int = 1,
) -> SweepResult:
    """Saturation time versus one coupling; the aggregate row holds the argmin.

    Points that never reach ``fraction`` before ``cap`` are reported at the cap
    with ``tau_reached = false``.
    """
    values = saturation_grid() if values is None else np.asarray(values, dtype=float)
    spec = complete_network(6) if spec is None else spec
    noise = NoiseConfig(gamma_sink=gamma_sink)
    a, b = edge
    tasks = [(set_hopping(spec, a, b, v), noise, fraction, cap, dt, rel_tol, abs_tol) for v in values]
    results = parallel_map(_saturation_point, tasks, workers)
    rows = [{"hopping": float(v), **r} for v, r in zip(values, results)]
    taus = np.array([r["tau_s"] if r["tau_reached"] else np.inf for r in rows])
    k = int(np.argmin(taus))
    aggregate = [{
        "argmin_hopping": float(values[k]),
        "min_tau_s": float(taus[k]),
        "n_points": len(rows),
        "n_not_reached": int(np.sum(~np.isfinite(taus))),
    }]
    config = {"experiment": "saturation", "network": spec.to_dict(), "edge": [a + 1, b + 1],
              "values": [float(v) for v in values], "fraction": fraction, "cap": cap, "dt": dt,
              "gamma_sink": gamma_sink, "rel_tol": rel_tol, "abs_tol": abs_tol}
    return SweepResult("saturation", f"J_{a + 1}{b + 1}", [float(v) for v in values],
                       rows, aggregate, config)


# --------------------------------------------------------------------------
# disorder ensembles


def _disorder_point(task) -> dict:
    spec, dis, r, noise, cfg, method = task
    return _steady_point((apply_disorder(spec, dis, r), noise, cfg, method))


def _ensemble_stats(etas: np.ndarray) -> dict:
    r = len(etas)
    std = float(np.std(etas, ddof=1)) if r > 1 else 0.0
    return {"mean_eta": float(np.mean(etas)), "std_eta": std,
            "sem_eta": std / np.sqrt(r), "realizations": r}


def _run_ensembles(topologies, chis, realizations, seed, noise, cfg, method, workers):
    keys = [(name, chi, r) for name in topologies for chi in chis for r in range(realizations)]
    tasks = [
        (topologies[name], DisorderConfig(chi, seed, realizations), r, noise, cfg, method)
        for name, chi, r in keys
    ]
    results = parallel_map(_disorder_point, tasks, workers)
    rows = [
        {"topology": name, "chi": chi, "realization": r, **res}
        for (name, chi, r), res in zip(keys, results)
    ]
    aggregate = []
    for name in topologies:
        for chi in chis:
            sel = [row for row in rows if row["topology"] == name and row["chi"] == chi]
            etas = np.array([row["eta_inf"] for row in sel])
            aggregate.append({
                "topology": name, "chi": chi, **_ensemble_stats(etas),
                "n_converged": sum(row["converged"] for row in sel),
            })
    return rows, aggregate


def aggregate_from_rows(rows: list[dict]) -> list[dict]:
    """Recompute ensemble aggregates from per-realization rows."""
    out = []
    for key in dict.fromkeys((r["topology"], r["chi"]) for r in rows):
        sel = [r for r in rows if (r["topology"], r["chi"]) == key]
        out.append({"topology": key[0], "chi": key[1],
                    **_ensemble_stats(np.array([r["eta_inf"] for r in sel])),
                    "n_converged": sum(r["converged"] for r in sel)})
    return out


def disorder_sweep(
    spec: NetworkSpec | None = None,
    chis=DEFAULT_CHIS,
    realizations: int = 200,
    seed: int = 0,
    noise: NoiseConfig | None = None,
    cfg: IntegratorConfig | None = None,
    method: str = "expm",
    workers: int = 1,
    name: str = "network",
) -> SweepResult:
    """Ensemble of long-time efficiencies under off-diagonal disorder.

    Realization ``r`` uses the same uniform draws at every ``chi`` (only the
    width changes), which keeps the curve free of sampling jitter between
    points.
    """
    spec = complete_network(6) if spec is None else spec
    noise = NoiseConfig() if noise is None else noise
    cfg = IntegratorConfig() if cfg is None else cfg
    chis = [float(c) for c in chis]
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    rows, aggregate = _run_ensembles({name: spec}, chis, realizations, seed, noise, cfg,
                                     method, workers)
    config = {"experiment": "disorder", "network": spec.to_dict(), "chis": chis,
              "realizations": realizations, "seed": seed, "noise": noise.to_dict(),
              "integrator": cfg.to_dict(), "method": method}
    return SweepResult("disorder", "chi", chis, rows, aggregate, config, seed=seed)


HIGH_BASELINE = 0.9
LOW_BASELINE = 0.4


def dissipation_topology_scan(
    topologies: dict[str, NetworkSpec] | list[NetworkSpec],
    chis=DEFAULT_CHIS,
    gamma_n: float = 0.01,
    realizations: int = 200,
    seed: int = 0,
    gamma_deph: float = 0.0,
    gamma_sink: float = 0.5,
    cfg: IntegratorConfig | None = None,
    method: str = "expm",
    workers: int = 1,
) -> SweepResult:
    """Disorder ensembles on several topologies with uniform site dissipation.

    ``tables["trends"]`` classifies each topology by its zero-disorder
    efficiency (``high`` >= 0.9, ``low`` < 0.4, else ``mid``) and gives the
    relative change and least-squares slope of the mean over ``chis``.
    """
    if not isinstance(topologies, dict):
        topologies = {f"net{k:02d}": s for k, s in enumerate(topologies)}
    for name, spec in topologies.items():
        if not nx.has_path(spec.graph(), spec.injection_site, spec.sink_site):
            raise ValueError(f"topology {name}: injection and sink are disconnected")
    cfg = IntegratorConfig(t_max=5000.0, convergence_window=20.0) if cfg is None else cfg
    chis = [float(c) for c in chis]
    noise = NoiseConfig(gamma_sink=gamma_sink, gamma_deph=gamma_deph, gamma_diss=gamma_n)
    rows, aggregate = _run_ensembles(topologies, chis, realizations, seed, noise, cfg,
                                     method, workers)
    trends = []
    for name in topologies:
        means = np.array([a["mean_eta"] for a in aggregate if a["topology"] == name])
        base = means[0]
        group = "high" if base >= HIGH_BASELINE else "low" if base < LOW_BASELINE else "mid"
        slope = float(np.polyfit(chis, means, 1)[0]) if len(chis) > 1 else 0.0
        trends.append({
            "topology": name,
            "edges": len(topologies[name].edges),
            "group": group,
            "eta_chi0": float(base),
            "eta_chi_max": float(means[-1]),
            "ratio": float(means[-1] / base) if base > 0 else float("nan"),
            "relative_change": float((means[-1] - base) / base) if base > 0 else float("nan"),
            "slope": slope,
        })
    config = {"experiment": "topo-scan",
              "topologies": {k: v.to_dict() for k, v in topologies.items()},
              "chis": chis, "realizations": realizations, "seed": seed,
              "noise": noise.to_dict(), "integrator": cfg.to_dict(), "method": method}
    result = SweepResult("topo-scan", "chi", chis, rows, aggregate, config, seed=seed)
    result.tables["trends"] = trends
    return result
