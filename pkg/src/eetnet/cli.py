"""Command-line entry point.

Node labels on the command line and in every file are 1-based (``--delete-edge
1,6`` cuts the link between the injection site and the sink site of the
default network).

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 finished without convergence (results are still written).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from types import SimpleNamespace

from . import experiments as ex
from .errors import ConfigError, EETError, NumericalError
from .evolve import IntegratorConfig, find_steady_state, integrate, validate_integrator
from .lindblad import NoiseConfig, build_model, validate_noise
from .network import (
    NetworkSpec,
    complete_network,
    delete_edge,
    scan_family,
    set_hopping,
)
from .observables import config_digest, localization_report, saturation_time, summarize

EXPERIMENTS = (
    "baseline", "hopping-sweep", "edge-scan", "dephasing",
    "saturation", "disorder", "topo-scan", "simulate",
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 1, 2, 3


@dataclasses.dataclass
class RunConfig:
    """Everything needed to reproduce one run.

    ``network`` is either ``{"builder": "fcn", "n": N}`` or a full network
    document (see :meth:`NetworkSpec.to_dict`). Edge edits use 1-based labels.
    """

    experiment: str = "simulate"
    network: dict = dataclasses.field(default_factory=lambda: {"builder": "fcn", "n": 6})
    delete_edges: list = dataclasses.field(default_factory=list)
    set_edges: list = dataclasses.field(default_factory=list)
    noise: dict = dataclasses.field(default_factory=lambda: NoiseConfig().to_dict())
    integrator: dict = dataclasses.field(default_factory=dict)
    sweep: dict = dataclasses.field(default_factory=dict)
    output_dir: str = "eetnet-out"
    seed: int = 0
    workers: int = 1

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names - {"schema_version"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in doc.items() if k in names})

    def to_json(self) -> str:
        return json.dumps({"schema_version": ex.SCHEMA_VERSION, **self.to_dict()},
                          indent=2, sort_keys=True)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        return config_digest(d)

    def build_network(self) -> NetworkSpec:
        net = dict(self.network)
        if net.get("builder") == "fcn":
            n = int(net["n"])
            spec = complete_network(n, int(net.get("injection", 1)) - 1,
                                    int(net.get("sink", n)) - 1)
        else:
            spec = NetworkSpec.from_dict(net)
        for a, b in self.delete_edges:
            spec = delete_edge(spec, int(a) - 1, int(b) - 1)
        for a, b, w in self.set_edges:
            spec = set_hopping(spec, int(a) - 1, int(b) - 1, float(w))
        return spec

    def build_noise(self) -> NoiseConfig:
        noise = dict(self.noise)
        if isinstance(noise.get("gamma_diss"), list):
            noise["gamma_diss"] = tuple(noise["gamma_diss"])
        return NoiseConfig(**noise)

    def build_integrator(self, **defaults) -> IntegratorConfig:
        fields = {**defaults, **self.integrator}
        if fields.get("sample_times") is not None:
            fields["sample_times"] = tuple(fields["sample_times"])
        return IntegratorConfig(**fields)


def validate_config(cfg: RunConfig) -> list[str]:
    """Every invariant violation in ``cfg``; empty when the config is runnable."""
    out = []
    if cfg.experiment not in EXPERIMENTS:
        out.append(f"unknown experiment {cfg.experiment!r}")
    if cfg.workers < 1:
        out.append("workers must be >= 1")
    # The validators only read attributes, so plain namespaces let every
    # violation be collected instead of stopping at the first constructor error.
    noise_fields = {f.name for f in dataclasses.fields(NoiseConfig)}
    integ_fields = {f.name for f in dataclasses.fields(IntegratorConfig)}
    for section, given, known in (("noise", cfg.noise, noise_fields),
                                  ("integrator", cfg.integrator, integ_fields)):
        for key in sorted(set(given) - known):
            out.append(f"{section}: unknown key {key!r}")
    try:
        out += validate_noise(SimpleNamespace(**{**NoiseConfig().to_dict(), **cfg.noise}))
        defaults = {f.name: f.default for f in dataclasses.fields(IntegratorConfig)}
        out += validate_integrator(SimpleNamespace(**{**defaults, **cfg.integrator}))
    except (TypeError, ValueError) as exc:
        out.append(f"bad numeric value: {exc}")
    if out:
        return out
    try:
        cfg.build_network()
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        out.append(f"network: {exc}")
    return out


# --------------------------------------------------------------------------
# argument parsing


def _pair(text: str) -> list:
    """``a,b`` or ``a,b:weight``."""
    try:
        head, _, weight = text.partition(":")
        a, b = (int(x) for x in head.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"edge must look like a,b[:weight], got {text!r}")
    return [a, b] + ([float(weight)] if weight else [])


def _floats(text: str) -> list[float]:
    """Comma list ``0,0.1,0.2`` or range ``start:stop:step`` (inclusive)."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            return [float(x) for x in ex.saturation_grid(start, stop, step)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list or start:stop:step grid: {text!r}")


def _network_arg(text: str) -> dict:
    if text.startswith("fcn:"):
        try:
            return {"builder": "fcn", "n": int(text[4:])}
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad network shorthand {text!r}")
    path = Path(text)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"network file {text!r} not found (use fcn:N or a JSON file)")
    return json.loads(path.read_text())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", type=Path, help="JSON run config; flags override it")
    g.add_argument("--output-dir", "-o")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g = common.add_argument_group("network (1-based node labels)")
    g.add_argument("--network", type=_network_arg, help="fcn:N or a network JSON file")
    g.add_argument("--delete-edge", type=_pair, action="append", metavar="A,B")
    g.add_argument("--edge", type=_pair, action="append", metavar="A,B:W",
                   help="set the hopping of one edge")
    g = common.add_argument_group("noise")
    g.add_argument("--gamma-sink", type=float)
    g.add_argument("--gamma-deph", type=float)
    g.add_argument("--gamma-diss", type=float)
    g = common.add_argument_group("integrator")
    g.add_argument("--t-max", type=float)
    g.add_argument("--rel-tol", type=float)
    g.add_argument("--abs-tol", type=float)
    g.add_argument("--n-samples", type=int)

    p = _Parser(prog="eetnet", description="Excitation energy transport on quantum networks.")
    sub = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common], help="one trajectory and its summary")
    sub.add_parser("baseline", parents=[common], help="complete-network baseline")
    s = sub.add_parser("hopping-sweep", parents=[common], help="efficiency versus one coupling")
    s.add_argument("--sweep-edge", type=_pair, metavar="A,B")
    s.add_argument("--values", type=_floats)
    sub.add_parser("edge-scan", parents=[common], help="all single-edge deletions")
    s = sub.add_parser("dephasing", parents=[common], help="sink population versus dephasing")
    s.add_argument("--gammas", type=_floats)
    s.add_argument("--t-fixed", type=float)
    s = sub.add_parser("saturation", parents=[common], help="saturation time versus J_16")
    s.add_argument("--j16-grid", type=_floats)
    s.add_argument("--fraction", type=float)
    s.add_argument("--cap", type=float)
    s.add_argument("--dt", type=float)
    s = sub.add_parser("disorder", parents=[common], help="off-diagonal disorder ensembles")
    s.add_argument("--chis", type=_floats)
    s.add_argument("--realizations", type=int)
    s = sub.add_parser("topo-scan", parents=[common], help="dissipative topology scan")
    s.add_argument("--chis", type=_floats)
    s.add_argument("--realizations", type=int)
    s.add_argument("--gamma-n", type=float)
    s.add_argument("--family", choices=("family28", "fcn-vs-cut"))
    return p


_SWEEP_FLAGS = ("sweep_edge", "values", "gammas", "t_fixed", "j16_grid", "fraction", "cap",
                "dt", "chis", "realizations", "gamma_n", "family")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        try:
            cfg = RunConfig.from_dict(json.loads(args.config.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    else:
        cfg = RunConfig()
    cfg.experiment = args.experiment
    for flag, key in (("output_dir", "output_dir"), ("seed", "seed"), ("workers", "workers"),
                      ("network", "network")):
        if getattr(args, flag) is not None:
            setattr(cfg, key, getattr(args, flag))
    if args.delete_edge:
        cfg.delete_edges = list(cfg.delete_edges) + [e[:2] for e in args.delete_edge]
    if args.edge:
        for e in args.edge:
            if len(e) != 3:
                raise ConfigError(f"--edge needs a weight, e.g. 1,6:0.5 (got {e})")
        cfg.set_edges = list(cfg.set_edges) + args.edge
    noise = dict(cfg.noise)
    for flag in ("gamma_sink", "gamma_deph", "gamma_diss"):
        if getattr(args, flag) is not None:
            noise[flag] = getattr(args, flag)
    cfg.noise = noise
    integ = dict(cfg.integrator)
    for flag in ("t_max", "rel_tol", "abs_tol", "n_samples"):
        if getattr(args, flag) is not None:
            integ[flag] = getattr(args, flag)
    cfg.integrator = integ
    sweep = dict(cfg.sweep)
    for flag in _SWEEP_FLAGS:
        if getattr(args, flag, None) is not None:
            sweep[flag] = getattr(args, flag)
    cfg.sweep = sweep
    return cfg


# --------------------------------------------------------------------------
# dispatch


def _finish(result: ex.SweepResult, cfg: RunConfig) -> None:
    result.config = {**result.config, "run_config": {k: v for k, v in cfg.to_dict().items()
                                                     if k not in ("output_dir", "workers")}}
    result.write(cfg.output_dir)


def run(cfg: RunConfig) -> tuple[str, bool]:
    """Run ``cfg`` and write its outputs; returns the summary line and a convergence flag."""
    sw = cfg.sweep
    out = Path(cfg.output_dir)
    name = cfg.experiment
    if name in ("simulate", "baseline"):
        spec = cfg.build_network()
        if name == "baseline":
            spec = complete_network(spec.n_sites, spec.injection_site, spec.sink_site)
        model = build_model(spec, cfg.build_noise())
        icfg = cfg.build_integrator()
        traj = integrate(model, cfg=icfg)
        ss = find_steady_state(model, cfg=icfg)
        tau = saturation_time(traj, 0.99, cap=icfg.t_max)
        summary = summarize(ss, model.layout, tau=tau, digest=cfg.digest(), seed=cfg.seed)
        out.mkdir(parents=True, exist_ok=True)
        ex.write_atomic(out / "trajectory.csv", traj.to_csv())
        ex.write_atomic(out / "summary.json", summary.to_json() + "\n")
        ex.write_atomic(out / "localization.csv", localization_report(ss.rho, model.layout).to_csv())
        ex.write_atomic(out / "manifest.json", json.dumps({
            "schema_version": ex.SCHEMA_VERSION, "experiment": name,
            "config": cfg.to_dict(), "config_digest": cfg.digest(), "seed": cfg.seed,
            "network": spec.to_dict(),
            "timestamp": ex.SweepResult(name, "", [], [], [], {}).manifest()["timestamp"],
        }, indent=2, sort_keys=True) + "\n")
        return f"eta_inf={summary.eta_inf:.6f} converged={summary.converged}", summary.converged

    w = cfg.workers
    if name == "hopping-sweep":
        a, b = sw.get("sweep_edge", [1, 6])[:2]
        result = ex.hopping_sweep(sw.get("values", [0.0, 0.5, 0.9, 1.0, 1.1, 2.0]),
                                  edge=(a - 1, b - 1), spec=cfg.build_network(),
                                  noise=cfg.build_noise(), cfg=cfg.build_integrator(), workers=w)
        line = " ".join(f"J={r['hopping']:g}:eta={r['eta_inf']:.4f}" for r in result.rows)
        converged = all(r["converged"] for r in result.rows)
    elif name == "edge-scan":
        n = cfg.build_network().n_sites
        result = ex.edge_deletion_scan(n, noise=cfg.build_noise(), cfg=cfg.build_integrator(),
                                       workers=w)
        best = max(result.rows, key=lambda r: r["eta_inf"])
        line = f"best deletion {best['deleted']} eta_inf={best['eta_inf']:.4f}"
        converged = all(r["converged"] for r in result.rows)
    elif name == "dephasing":
        spec = cfg.build_network()
        tops = ex.standard_dephasing_topologies(spec.n_sites)
        result = ex.dephasing_scan(tops, sw.get("gammas", ex.DEPHASING_RATES),
                                   t_fixed=sw.get("t_fixed", 100.0),
                                   gamma_sink=cfg.build_noise().gamma_sink, workers=w)
        fcn_rows = [r for r in result.rows if r["topology"] == "fcn"]
        line = "fcn sink@t: " + " ".join(f"{r['gamma_deph']:g}:{r['sink_at_t']:.4f}" for r in fcn_rows)
        converged = True
    elif name == "saturation":
        grid = sw.get("j16_grid")
        result = ex.saturation_sweep(grid, spec=cfg.build_network(),
                                     fraction=sw.get("fraction", 0.99), cap=sw.get("cap", 500.0),
                                     dt=sw.get("dt", 0.01),
                                     gamma_sink=cfg.build_noise().gamma_sink, workers=w)
        agg = result.aggregate[0]
        line = f"argmin J16={agg['argmin_hopping']:g} tau_s={agg['min_tau_s']:.4f}"
        converged = True
    elif name == "disorder":
        result = ex.disorder_sweep(cfg.build_network(), sw.get("chis", ex.DEFAULT_CHIS),
                                   sw.get("realizations", 200), cfg.seed, cfg.build_noise(),
                                   cfg.build_integrator(), workers=w)
        line = " ".join(f"chi={a['chi']:g}:mean={a['mean_eta']:.4f}" for a in result.aggregate)
        converged = True  # finite-time ensembles; per-row flags live in summary.csv
    elif name == "topo-scan":
        if sw.get("family", "fcn-vs-cut") == "family28":
            tops = scan_family(cfg.seed)
        else:
            f = complete_network(6)
            tops = {"fcn": f, "del_1-6": delete_edge(f, 0, 5)}
        result = ex.dissipation_topology_scan(
            tops, sw.get("chis", ex.DEFAULT_CHIS), gamma_n=sw.get("gamma_n", 0.01),
            realizations=sw.get("realizations", 200), seed=cfg.seed,
            gamma_deph=cfg.build_noise().gamma_deph, workers=w)
        line = " ".join(f"{t['topology']}:x{t['ratio']:.3f}" for t in result.tables["trends"])
        converged = all(r["converged"] for r in result.rows)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown experiment {name!r}")
    _finish(result, cfg)
    return line, converged


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already printed
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"eetnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problems = validate_config(cfg)
    if problems:
        for p in problems:
            print(f"eetnet: config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        probe = Path(cfg.output_dir) / ".eetnet-write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"eetnet: cannot write to output dir {cfg.output_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        line, converged = run(cfg)
    except NumericalError as exc:
        print(f"eetnet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, EETError) as exc:
        print(f"eetnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{cfg.experiment}: {line}")
    if not converged:
        print("eetnet: warning: not converged before t_max", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
