"""Command-line front end: ``design``, ``verify``, ``decompose``, ``denoise``
and ``bench``.

Every command writes ``report.json`` into ``--out``; exit status is 0 only when
all tolerances of the command are met.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .design import (
    DesignConfig,
    DesignInfeasible,
    annihilation_residuals,
    build_filters,
    design,
    ideal_lowpass,
    validate_response,
)
from .filterbank import (
    AssemblyError,
    ChannelOutputs,
    assemble,
    error_bound,
    legacy_filters,
    pr_residual,
    save_bank,
    save_channels,
)
from .graph import GraphError, generate_graph, load_graph, normalize, save_graph
from .mra import (
    LevelError,
    decompose,
    denoise,
    level_errors,
    reconstruct_pyramid,
    relative_error,
    synthetic_signal,
)
from .sampling import (
    NotBipartiteError,
    RankDeficiencyError,
    SamplingPattern,
    bipartite_natural_partition,
    partition_search,
    sigma_min_diagnostic,
)
from .spectral import InfeasibleHyperparameters, dedup_eigenvalues, eigendecompose

PR_TOL = 1e-8
ANNIHILATION_TOL = 1e-6
STREAMS = {"graph": 0, "signal": 1, "noise": 2, "strategy": 3}
PIPELINE_KEYS = ("strategy", "zero_dc", "legacy_w")


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent PRNG stream per pipeline stage."""
    return np.random.default_rng([seed, STREAMS[name], *extra])


class Report:
    def __init__(self, command, seed):
        self.data = {"command": command, "seed": seed, "config": {}, "metrics": {},
                     "status": "ok", "errors": [], "timings": {}}

    @contextmanager
    def timed(self, stage):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.data["timings"][stage] = round(1000 * (time.perf_counter() - t0), 3)

    def metric(self, name, value):
        self.data["metrics"][name] = value

    def fail(self, status, message):
        self.data["status"] = status
        self.data["errors"].append(message)
        print(f"error: {message}", file=sys.stderr)

    @property
    def ok(self):
        return self.data["status"] == "ok"

    def write(self, out: Path):
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def load_config(path) -> tuple[DesignConfig, dict]:
    """Split a JSON config into design parameters and pipeline options.

    Pipeline keys: ``strategy`` (polarity, random, natural, identity),
    ``zero_dc`` and ``legacy_w``; ``"model": "legacy"`` selects the
    single-power legacy bank instead of a designed one.
    """
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    pipeline = {"strategy": "polarity", "zero_dc": False, "legacy_w": [1.0], "legacy": False}
    pipeline.update({k: raw.pop(k) for k in PIPELINE_KEYS if k in raw})
    if raw.get("model") == "legacy":
        raw.pop("model")
        pipeline["legacy"] = True
    if pipeline["strategy"] not in ("polarity", "random", "natural", "identity"):
        raise ValueError(f"unknown strategy {pipeline['strategy']!r}")
    return DesignConfig.from_dict(raw), pipeline


def read_signal(path) -> np.ndarray:
    return np.loadtxt(path, ndmin=1, dtype=float)


def write_signal(path, x) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in x:
            fh.write(f"{float(v)!r}\n")


def get_graph(args):
    if args.graph is not None:
        return load_graph(args.graph, args.coords), None
    if args.generate is None:
        raise GraphError("either --graph or --generate is required")
    params = {"n": args.n, "head": args.head, "radius": args.radius, "n_a": args.n_a,
              "n_b": args.n_b, "p": args.p}
    params = {k: v for k, v in params.items() if v is not None}
    seed = int(stream(args.seed, "graph").integers(2**31))
    return generate_graph(args.generate, seed=seed, **params), args.generate


def prepare_bank(g, cfg, pipeline, seed):
    """Design the filters and choose the partition; returns (sd, pair, design, pattern)."""
    ng = normalize(g)
    sd = eigendecompose(ng)
    if pipeline["legacy"]:
        pair = legacy_filters(g, pipeline["legacy_w"])
        fd = None
        r_eff = s_eff = 1
    else:
        fd = design(sd, cfg)
        t2 = validate_response(fd.gamma, fd.r_eff, fd.s_eff)
        if not t2:
            raise DesignInfeasible(f"designed response violates the invertibility conditions: "
                                   f"{t2.violations[:3]}", constraint_set="middle")
        pair = build_filters(ng, sd, fd)
        r_eff, s_eff = fd.r_eff, fd.s_eff
    strategy = pipeline["strategy"]
    if strategy == "identity":
        pattern = SamplingPattern(np.arange(g.n), np.array([], dtype=int), g.n)
    elif strategy == "natural":
        pattern, _ = bipartite_natural_partition(g, sd, r_eff, s_eff)
    else:
        pattern = partition_search(sd, r_eff, s_eff, strategy, stream(seed, "strategy"))
    return sd, pair, fd, pattern


# -- commands ----------------------------------------------------------------


def cmd_design(args, rep: Report) -> None:
    cfg, pipeline = load_config(args.config)
    rep.data["config"] = {**cfg.to_dict(), **pipeline}
    with rep.timed("graph"):
        g, _ = get_graph(args)
    with rep.timed("spectrum"):
        sd = eigendecompose(normalize(g))
        ds = dedup_eigenvalues(sd)
    with rep.timed("design"):
        try:
            fd = design(sd, cfg)
        except (DesignInfeasible, InfeasibleHyperparameters) as exc:
            rep.fail("infeasible", _infeasible_message(exc))
            return
    xi0 = float(np.median(ds.xi_unique)) if cfg.xi0 is None else cfg.xi0
    h_ideal = ideal_lowpass(ds.xi_unique, xi0)
    h_low = (1 + fd.gamma_unique) / 2
    # round away solver dust so exact responses print exactly
    h_ideal, h_low = np.round(h_ideal, 12) + 0.0, np.round(h_low, 12) + 0.0
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "response.csv", "w", encoding="utf-8") as fh:
        fh.write("lambda,xi,h_ideal,h_low,h_high\n")
        for xi, hi, hl in zip(ds.xi_unique, h_ideal, h_low):
            fh.write(f"{1 - xi:.12g},{xi:.12g},{hi:.12g},{hl:.12g},{1 - hl:.12g}\n")
    rep.metric("objective", fd.objective)
    rep.metric("residuals", fd.residuals)
    rep.metric("w", fd.w.tolist())
    t2 = validate_response(fd.gamma, fd.r_eff, fd.s_eff) if fd.model != "liter_opt" else None
    rep.metric("gamma_violations", [] if t2 is None else t2.violations)
    if t2 is not None and not t2:
        rep.fail("violation", "designed response violates the pinning/middle-band conditions")


def cmd_verify(args, rep: Report) -> None:
    cfg, pipeline = load_config(args.config)
    rep.data["config"] = {**cfg.to_dict(), **pipeline}
    with rep.timed("graph"):
        g, _ = get_graph(args)
    with rep.timed("assemble"):
        try:
            sd, pair, fd, pattern = prepare_bank(g, cfg, pipeline, args.seed)
        except (DesignInfeasible, InfeasibleHyperparameters) as exc:
            rep.fail("infeasible", _infeasible_message(exc))
            return
        except (RankDeficiencyError, NotBipartiteError) as exc:
            rep.fail("rank_deficient", str(exc))
            return
        smin, bound = sigma_min_diagnostic(pattern.k_diag, pair.g)
        rep.metric("sigma_min", smin)
        rep.metric("bound_const", bound if np.isfinite(bound) else None)
        try:
            bank = assemble(pair, pattern, zero_dc=pipeline["zero_dc"], deg=g.degrees)
        except AssemblyError as exc:
            rep.fail("singular", str(exc))
            return
    with rep.timed("trials"):
        rng = stream(args.seed, "signal")
        residuals = []
        ratios = []
        for _ in range(args.trials):
            x = rng.standard_normal(g.n)
            x /= np.linalg.norm(x)
            residuals.append(pr_residual(bank, x))
            er, bound = error_bound(bank, x)
            ratios.append((er, bound))
    max_res = float(max(residuals))
    rep.metric("pr_residual_max", max_res)
    rep.metric("condition", bank.condition)
    rep.metric("lp_only_error_max", float(max(e for e, _ in ratios)))
    rep.metric("bound_violations", int(sum(e > b for e, b in ratios)))
    ann = annihilation_residuals(pair, sd, fd.r_eff, fd.s_eff) if fd is not None else {}
    rep.metric("annihilation", ann)
    save_bank(bank, args.out_dir / "bank.json", None if fd is None else fd.w)
    if max_res > PR_TOL:
        rep.fail("tolerance", f"reconstruction residual {max_res:.3e} exceeds {PR_TOL}")
    if ann and max(ann.values()) > ANNIHILATION_TOL:
        rep.fail("tolerance", f"annihilation residual {max(ann.values()):.3e} exceeds {ANNIHILATION_TOL}")


def _infeasible_message(exc) -> str:
    which = getattr(exc, "constraint_set", None)
    return f"infeasible ({which} constraints): {exc}" if which else f"infeasible: {exc}"


def _decompose_setup(args, rep):
    cfg, pipeline = load_config(args.config)
    pipeline["zero_dc"] = not args.plain
    rep.data["config"] = {**cfg.to_dict(), **pipeline, "depth": args.depth}
    with rep.timed("graph"):
        g, kind = get_graph(args)
    return g, kind, cfg, pipeline


def cmd_decompose(args, rep: Report) -> None:
    g, kind, cfg, pipeline = _decompose_setup(args, rep)
    x = read_signal(args.signal) if args.signal else synthetic_signal(g, "ring" if kind == "ring" else None)
    if x.shape[0] != g.n:
        rep.fail("usage", f"signal has {x.shape[0]} values, graph has {g.n} vertices")
        return
    with rep.timed("decompose"):
        try:
            p = decompose(g, x, args.depth, cfg, zero_dc=pipeline["zero_dc"],
                          strategy=pipeline["strategy"], seed=stream(args.seed, "strategy"))
        except LevelError as exc:
            rep.fail("infeasible" if isinstance(exc.cause, DesignInfeasible) else "level_failure", str(exc))
            return
    out = args.out_dir
    for k, lev in enumerate(p.levels, start=1):
        save_channels(ChannelOutputs(lev.y_low, lev.y_high), lev.pattern,
                      out / f"level{k}_lp.csv", out / f"level{k}_hp.csv")
        np.savetxt(out / f"level{k}_vertices.txt", lev.kept_vertices, fmt="%d")
        if k < p.depth:
            save_graph(p.levels[k].graph, out / f"level{k}_graph.tsv")
    if p.coarse_graph is not None and p.coarse_graph.n > 1:
        save_graph(p.coarse_graph, out / f"level{p.depth}_graph.tsv")
    full = reconstruct_pyramid(p, "full")
    lp = reconstruct_pyramid(p, "lp_only")
    write_signal(out / "lp_only_reconstruction.txt", lp)
    rep.metric("depth", p.depth)
    rep.metric("level_sizes", [int(lev.pattern.set_a.size) for lev in p.levels])
    rep.metric("level_relative_errors", level_errors(p, x))
    rep.metric("lp_only_relative_error", relative_error(lp, x))
    res = float(np.abs(full - x).max() / max(np.abs(x).max(), 1e-300))
    rep.metric("pr_residual", res)
    rep.metric("sigma_min", [lev.bank.sigma_min for lev in p.levels])
    if res > PR_TOL:
        rep.fail("tolerance", f"pyramid reconstruction residual {res:.3e} exceeds {PR_TOL}")


def cmd_denoise(args, rep: Report) -> None:
    g, kind, cfg, pipeline = _decompose_setup(args, rep)
    rep.data["config"]["sigma"] = args.sigma
    clean = read_signal(args.clean) if args.clean else None
    if args.signal:
        noisy = read_signal(args.signal)
    else:
        clean = synthetic_signal(g, "smooth") if clean is None else clean
        noisy = clean + args.sigma * stream(args.seed, "noise").standard_normal(g.n)
        write_signal(args.out_dir / "noisy.txt", noisy)
    if noisy.shape[0] != g.n:
        rep.fail("usage", f"signal has {noisy.shape[0]} values, graph has {g.n} vertices")
        return
    with rep.timed("denoise"):
        try:
            p = decompose(g, noisy, args.depth, cfg, zero_dc=pipeline["zero_dc"],
                          strategy=pipeline["strategy"], seed=stream(args.seed, "strategy"))
        except LevelError as exc:
            rep.fail("infeasible" if isinstance(exc.cause, DesignInfeasible) else "level_failure", str(exc))
            return
        y = denoise(g, noisy, args.sigma, args.depth, cfg, pyramid=p)
    write_signal(args.out_dir / "denoised.txt", y)
    rep.metric("threshold", 3 * args.sigma)
    rep.metric("depth", p.depth)
    if clean is not None:
        rep.metric("noisy_relative_error", relative_error(noisy, clean))
        rep.metric("denoised_relative_error", relative_error(y, clean))


def cmd_bench(args, rep: Report) -> None:
    cfg, pipeline = load_config(args.config)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    rep.data["config"] = {**cfg.to_dict(), **pipeline, "count": args.count, "family": args.family,
                          "strategies": strategies}
    rows = []
    with rep.timed("ensemble"):
        for i in range(args.count):
            gseed = int(stream(args.seed, "graph", i).integers(2**31))
            try:
                if args.family == "sensor":
                    g = generate_graph("random_sensor", seed=gseed, n=args.n or 100, radius=args.radius)
                else:
                    g = generate_graph("random_bipartite", seed=gseed, n_a=args.n_a or 20,
                                       n_b=args.n_b or 80, p=args.p or 0.3)
                ng = normalize(g)
                sd = eigendecompose(ng)
                fd = design(sd, cfg)
                pair = build_filters(ng, sd, fd)
            except (GraphError, DesignInfeasible, InfeasibleHyperparameters) as exc:
                rep.fail("infeasible", f"graph {i}: {exc}")
                continue
            for strategy in strategies:
                try:
                    pat = partition_search(sd, fd.r_eff, fd.s_eff, strategy, stream(args.seed, "strategy", i))
                except RankDeficiencyError as exc:
                    rep.fail("rank_deficient", f"graph {i} ({strategy}): {exc}")
                    continue
                smin, _ = sigma_min_diagnostic(pat.k_diag, pair.g)
                rows.append((i, strategy, smin))
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "sigma_min.csv", "w", encoding="utf-8") as fh:
        fh.write("graph,strategy,sigma_min\n")
        for i, strategy, smin in rows:
            fh.write(f"{i},{strategy},{smin!r}\n")
    for strategy in strategies:
        vals = [v for _, s, v in rows if s == strategy]
        if vals:
            rep.metric(f"mean_sigma_min_{strategy}", float(np.mean(vals)))


# -- argument parsing --------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {v}")
    return v


def _nonneg_float(text):
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splinefb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", type=Path, help="edge-list file (u v [w] per line)")
    common.add_argument("--coords", type=Path, help="optional coordinates file (x y per line)")
    common.add_argument("--generate", choices=["ring", "path", "comet", "random_sensor", "random_bipartite"])
    common.add_argument("--n", type=int)
    common.add_argument("--head", type=int, help="comet: number of star leaves")
    common.add_argument("--radius", type=float, help="random_sensor: connection radius")
    common.add_argument("--n-a", dest="n_a", type=int)
    common.add_argument("--n-b", dest="n_b", type=int)
    common.add_argument("--p", type=float, help="random_bipartite: edge probability")
    common.add_argument("--config", type=Path, help="JSON design config")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))

    sub.add_parser("design", parents=[common], help="design filters and dump responses")
    p = sub.add_parser("verify", parents=[common], help="check perfect reconstruction")
    p.add_argument("--trials", type=_positive_int, default=100)
    for name in ("decompose", "denoise"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--depth", type=_positive_int, default=2)
        p.add_argument("--signal", type=Path, help="signal file, one value per line")
        p.add_argument("--plain", action="store_true", help="use plain instead of zero-DC banks")
        if name == "denoise":
            p.add_argument("--sigma", type=_nonneg_float, required=True)
            p.add_argument("--clean", type=Path, help="clean reference signal")
    p = sub.add_parser("bench", parents=[common], help="sigma_min study over random ensembles")
    p.add_argument("--count", type=_positive_int, default=100)
    p.add_argument("--family", choices=["sensor", "bipartite"], default="sensor")
    p.add_argument("--strategies", default="polarity,random")
    return parser


COMMANDS = {"design": cmd_design, "verify": cmd_verify, "decompose": cmd_decompose,
            "denoise": cmd_denoise, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.out_dir = args.out
    rep = Report(args.command, args.seed)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, rep)
    except GraphError as exc:
        rep.fail("input", str(exc))
    except (OSError, ValueError) as exc:
        rep.fail("error", str(exc))
    rep.write(args.out)
    return 0 if rep.ok else 1


if __name__ == "__main__":
    sys.exit(main())
