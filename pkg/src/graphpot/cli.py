"""Command-line front end.

Subcommands: gen, recur, capacity, royden, metric, paths, packing.
Every command emits a JSON report embedding the resolved configuration and
content hashes of its inputs; re-running with the same configuration and
seed produces byte-identical output.  Exit codes: 0 for a decided result,
2 for an inconclusive verdict, 1 for errors.
"""

from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

from . import __version__
from .capacity import (ClassifierConfig, NeighborhoodBasis, capacity,
                       classify_recurrence, effective_capacity,
                       flow_lower_bound, load_flow, tail_capacity_sequence)
from .errors import GraphFormatError, GraphPotError, StabilizationError
from .graph import (Exhaustion, Measure, Potential, generate,
                    induced_truncation, load_edge_function, load_graph,
                    load_measure, load_potential, save_graph, save_potential,
                    validate_graph)
from .harmonic import BoundaryData, boundary_to_harmonic, royden_limit
from .metrics import (discrete_topology_metric, greedy_net_size,
                      intrinsic_report, metric_ball, metric_diameter,
                      metric_from_potential, path_metric,
                      path_metric_idempotent)
from .paths import load_paths, root_path_potential, verify_witness
from .paths import witness_from_potential, NullWitness
from .reporting import sequence_csv, sha256_file, sha256_text, write_report

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--graph", help="edge-list file (u<TAB>v<TAB>weight)")
    p.add_argument("--gen", help="generator family, e.g. lattice:2 or tree:2")
    p.add_argument("--weight", type=float, default=1.0,
                   help="edge weight for generators (default 1)")
    p.add_argument("--m", default="unit",
                   help="measure rule: unit, file:PATH, or msigma")
    p.add_argument("--radii", help="comma-separated exhaustion radii")
    p.add_argument("--seed-vertex", type=int,
                   help="exhaustion seed (defaults to generator origin)")
    p.add_argument("--tol-solver", type=float, default=1e-10,
                   help="relative residual for linear solves")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", action="store_true",
                   help="also write sequence data as CSV next to --out")
    p.add_argument("--plot", action="store_true",
                   help="also render figures next to --out")


def _parse_radii(s: str | None) -> list[int]:
    if not s:
        raise GraphFormatError("--radii is required for this command")
    radii = [int(x) for x in s.replace(" ", "").split(",") if x]
    if not radii:
        raise GraphFormatError("empty --radii list")
    return radii


def _parse_vertex_set(s: str) -> list[int]:
    return [int(x) for x in re.split(r"[,\s]+", s.strip().strip("{}")) if x]


def _resolve_graph(args, need_radii=False):
    """Build the working graph and seed vertex; returns (graph, seed, inputs)."""
    inputs = {}
    if args.graph and args.gen:
        raise GraphFormatError("give either --graph or --gen, not both")
    if args.graph:
        graph = load_graph(args.graph)
        inputs["graph"] = {"path": args.graph, "sha256": sha256_file(args.graph)}
        seed = args.seed_vertex if args.seed_vertex is not None \
            else graph.vertices[0]
    elif args.gen:
        radii = _parse_radii(args.radii) if (need_radii or args.radii) else [0]
        size = max(radii) + 1
        graph, origin = generate(args.gen, size, weight=args.weight)
        spec = f"{args.gen}:size={size}:weight={args.weight!r}"
        inputs["generator"] = {"spec": spec, "sha256": sha256_text(spec)}
        seed = args.seed_vertex if args.seed_vertex is not None else origin
    else:
        raise GraphFormatError("a graph source is required (--graph or --gen)")
    return graph, seed, inputs


def _resolve_measure(args, graph, inputs, packing_measure=None) -> Measure:
    rule = args.m
    if rule == "unit":
        return Measure.uniform(graph)
    if rule.startswith("file:"):
        path = rule[5:]
        inputs["measure"] = {"path": path, "sha256": sha256_file(path)}
        return load_measure(path).restrict(graph.vertices)
    if rule == "msigma":
        if packing_measure is None:
            raise GraphFormatError(
                "--m msigma only applies where a metric load is available "
                "(packing command)")
        return packing_measure
    raise GraphFormatError(f"unknown measure rule {rule!r}")


def _config_dict(args, keys) -> dict:
    return {k: getattr(args, k.replace("-", "_")) for k in keys}


def _emit(args, report: dict, csv_payload=None, plot_fn=None) -> None:
    text = write_report(report, args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.csv and csv_payload is not None:
        if not args.out:
            raise GraphFormatError("--csv needs --out to name the file")
        header, rows = csv_payload
        Path(args.out).with_suffix(".csv").write_text(
            sequence_csv(header, rows), encoding="utf-8")
    if args.plot:
        if not args.out:
            raise GraphFormatError("--plot needs --out to name the figures")
        if plot_fn is not None:
            plot_fn(Path(args.out))


# -- subcommands ----------------------------------------------------------

def cmd_gen(args) -> int:
    if not args.gen:
        raise GraphFormatError("gen requires --gen FAMILY:PARAMS")
    size = args.size if args.size is not None else \
        (max(_parse_radii(args.radii)) if args.radii else None)
    if size is None:
        raise GraphFormatError("gen requires --size (radius/depth/count)")
    graph, origin = generate(args.gen, size, weight=args.weight)
    if not args.out:
        raise GraphFormatError("gen requires --out for the edge list")
    save_graph(graph, args.out)
    diag = validate_graph(graph)
    report = {
        "command": "gen",
        "config": {"gen": args.gen, "size": size, "weight": args.weight},
        "outputs": {"graph": {"path": args.out, "sha256": sha256_file(args.out)}},
        "results": {"origin": origin, "diagnostics": diag.as_dict()},
    }
    sys.stdout.write(write_report(report))
    return EXIT_OK


def cmd_recur(args) -> int:
    graph, seed, inputs = _resolve_graph(args, need_radii=True)
    radii = _parse_radii(args.radii)
    exhaustion = Exhaustion.from_balls(graph, seed, radii)
    config = ClassifierConfig(solver_rtol=min(args.tol_solver, 1e-10))
    verdict = classify_recurrence(graph, exhaustion, config=config)
    report = {
        "command": "recur",
        "problem": {"seed_vertex": seed, "radii": radii},
        "config": _config_dict(args, ["gen", "graph", "m", "weight",
                                      "tol-solver", "seed"]),
        "inputs": inputs,
        "levels": [dict(l) for l in verdict.levels],
        "fit": verdict.fit.as_dict() if verdict.fit else None,
        "flow_bound": verdict.flow_bound,
        "verdict": verdict.classification,
        "notes": list(verdict.notes),
    }

    def plot(out: Path):
        from .plots import plot_capacity_sequence
        if verdict.levels:
            plot_capacity_sequence(verdict.levels, verdict.fit,
                                   out.with_suffix(".png"),
                                   title=f"verdict: {verdict.classification}")

    rows = [[l["n"], l["value"], l["residual"]] for l in verdict.levels]
    _emit(args, report, csv_payload=(["n", "value", "residual"], rows),
          plot_fn=plot)
    return EXIT_OK if verdict.classification in ("Recurrent", "Transient") \
        else EXIT_INCONCLUSIVE


def cmd_capacity(args) -> int:
    graph, seed, inputs = _resolve_graph(args, need_radii=bool(args.tail))
    m = _resolve_measure(args, graph, inputs)
    results: dict = {}
    csv_payload = None
    plot_fn = None

    if args.tail:
        radii = _parse_radii(args.radii)
        exhaustion = Exhaustion.from_balls(graph, seed, radii)
        seqs = tail_capacity_sequence(graph, m, exhaustion,
                                      rtol=args.tol_solver)
        results["tail"] = seqs.as_dict()
        results["radii"] = radii
        rows = [[n, t, e] for n, t, e in zip(seqs.levels, seqs.tail_capacity,
                                             seqs.effective)]
        csv_payload = (["level", "tail_capacity", "effective"], rows)

        def plot_fn(out: Path):
            from .plots import plot_capacity_sequence
            levels = [{"n": radii[n], "value": e}
                      for n, e in zip(seqs.levels, seqs.effective)]
            plot_capacity_sequence(levels, None, out.with_suffix(".png"),
                                   title="ring-grounded capacity bounds")
    elif args.flow:
        if not (args.set and args.ground):
            raise GraphFormatError("--flow needs --set and --ground")
        flow = load_flow(args.flow)
        inputs["flow"] = {"path": args.flow, "sha256": sha256_file(args.flow)}
        bound = flow_lower_bound(graph, flow, _parse_vertex_set(args.set),
                                 _parse_vertex_set(args.ground))
        results["flow_lower_bound"] = bound
    elif args.set and args.ground:
        res = effective_capacity(graph, _parse_vertex_set(args.set),
                                 _parse_vertex_set(args.ground),
                                 rtol=args.tol_solver)
        results["effective_capacity"] = res.as_dict()
    elif args.set:
        res = capacity(graph, m, _parse_vertex_set(args.set),
                       rtol=args.tol_solver)
        results["capacity"] = res.as_dict()
        if args.optimizer_out:
            save_potential(res.optimizer, args.optimizer_out)
            results["optimizer_file"] = args.optimizer_out
    else:
        raise GraphFormatError("capacity needs --set, --tail, or --flow")

    report = {
        "command": "capacity",
        "config": _config_dict(args, ["gen", "graph", "m", "set", "ground",
                                      "tail", "flow", "tol-solver", "seed"]),
        "inputs": inputs,
        "results": results,
    }
    _emit(args, report, csv_payload=csv_payload, plot_fn=plot_fn)
    return EXIT_OK


def cmd_royden(args) -> int:
    graph, seed, inputs = _resolve_graph(args, need_radii=True)
    radii = _parse_radii(args.radii)
    exhaustion = Exhaustion.from_balls(graph, seed, radii, clamp_to_proper=True)
    if not args.f:
        raise GraphFormatError("royden requires --f file:PATH")
    if not args.f.startswith("file:"):
        raise GraphFormatError("--f must be file:PATH")
    fpath = args.f[5:]
    f = load_potential(fpath)
    inputs["potential"] = {"path": fpath, "sha256": sha256_file(fpath)}
    report_obj, split = royden_limit(graph, exhaustion, f, tol=args.tol)
    results = report_obj.as_dict()
    if split is not None:
        results["final_level"] = {
            "energy_f": split.energy_f, "energy_f0": split.energy_f0,
            "energy_fh": split.energy_fh,
            "orthogonality_defect": split.orthogonality_defect(),
        }
        if args.fh_out:
            save_potential(split.fh, args.fh_out)
            results["fh_file"] = args.fh_out
    report = {
        "command": "royden",
        "config": _config_dict(args, ["gen", "graph", "f", "radii", "tol",
                                      "tol-solver", "seed"]),
        "inputs": inputs,
        "results": results,
    }

    def plot(out: Path):
        from .plots import plot_stabilization
        plot_stabilization(report_obj, out.with_suffix(".png"))

    rows = [[l["n"], l["sup_diff"], l["energy_diff"]] for l in report_obj.levels]
    _emit(args, report, csv_payload=(["n", "sup_diff", "energy_diff"], rows),
          plot_fn=plot)
    return EXIT_OK


def cmd_metric(args) -> int:
    graph, seed, inputs = _resolve_graph(args)
    m = _resolve_measure(args, graph, inputs)
    results: dict = {}
    if args.w:
        path = args.w[5:] if args.w.startswith("file:") else args.w
        w = load_edge_function(path)
        inputs["edge_function"] = {"path": path, "sha256": sha256_file(path)}
        sigma = path_metric(graph, w)
        results["kind"] = "path_metric"
        results["idempotent"] = path_metric_idempotent(graph, w)
    elif args.f:
        path = args.f[5:] if args.f.startswith("file:") else args.f
        f = load_potential(path)
        inputs["potential"] = {"path": path, "sha256": sha256_file(path)}
        sigma, load = metric_from_potential(graph, f)
        results["kind"] = "gradient_metric"
        results["load_total"] = sum(load.values())
    elif args.disc_top:
        sigma, cert = discrete_topology_metric(graph)
        results["kind"] = "discrete_topology_metric"
        results["total_load"] = cert.total_load
        results["min_off_diagonal"] = cert.min_off_diagonal
    else:
        raise GraphFormatError("metric needs --w, --f, or --disc-top")

    rep = intrinsic_report(graph, sigma, m)
    results["intrinsic"] = rep.intrinsic
    results["edge_energy_total"] = rep.edge_energy_total
    results["min_slack"] = min(rep.slack.values())
    results["diameter"] = metric_diameter(sigma)
    if args.ball:
        x, r = args.ball.split(",")
        members = sorted(metric_ball(sigma, int(x), float(r)))
        results["ball"] = {"center": int(x), "radius": float(r),
                           "size": len(members), "members": members}
    if args.net:
        results["greedy_net"] = {"eps": args.net,
                                 "size": greedy_net_size(sigma, args.net)}
    report = {
        "command": "metric",
        "config": _config_dict(args, ["gen", "graph", "m", "w", "f",
                                      "disc-top", "ball", "net", "seed"]),
        "inputs": inputs,
        "results": results,
    }
    _emit(args, report)
    return EXIT_OK


def cmd_paths(args) -> int:
    graph, seed, inputs = _resolve_graph(args)
    results: dict = {}
    witness = None
    if args.witness:
        w = load_edge_function(args.witness)
        inputs["witness"] = {"path": args.witness,
                             "sha256": sha256_file(args.witness)}
        from .energy import edge_energy
        total = 2.0 * edge_energy(graph, w).value
        witness = NullWitness(w=w, total=total, provenance="file")
    elif args.from_potential:
        f = load_potential(args.from_potential)
        inputs["potential"] = {"path": args.from_potential,
                               "sha256": sha256_file(args.from_potential)}
        witness = witness_from_potential(graph, f, rng_seed=args.seed)
    if witness is not None:
        results["witness_total"] = witness.total
    if args.tree_root is not None:
        if witness is None:
            raise GraphFormatError("--tree-root needs a witness source")
        pot = root_path_potential(graph, witness.w, args.tree_root)
        if args.potential_out:
            save_potential(pot, args.potential_out)
            results["potential_file"] = args.potential_out
        results["root_path_potential"] = {
            "root": args.tree_root,
            "max": max(pot.values.values()),
        }
    if args.paths:
        if witness is None:
            raise GraphFormatError("verifying paths needs a witness source")
        sample = load_paths(args.paths, graph)
        inputs["paths"] = {"path": args.paths, "sha256": sha256_file(args.paths)}
        rep = verify_witness(witness, sample, args.threshold)
        results["verification"] = rep.as_dict()
    report = {
        "command": "paths",
        "config": _config_dict(args, ["gen", "graph", "witness",
                                      "from-potential", "paths", "threshold",
                                      "tree-root", "seed"]),
        "inputs": inputs,
        "results": results,
    }
    _emit(args, report)
    return EXIT_OK


_ANCHOR_RE = re.compile(r"\(\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\)")


def _parse_anchors(spec: str):
    from .packing import BoundaryAnchor, circle_anchors
    if spec.startswith("circle:"):
        return circle_anchors(int(spec.split(":", 1)[1]))
    pts = _ANCHOR_RE.findall(spec)
    if not pts:
        raise GraphFormatError(f"cannot parse anchors from {spec!r}")
    return [BoundaryAnchor((float(x), float(y))) for x, y in pts]


def _parse_anchor_values(spec: str):
    from .packing import BoundaryAnchor
    out = []
    for part in re.findall(r"(\([^)]*\))\s*=\s*([-+0-9.eE]+)", spec):
        (x, y), = _ANCHOR_RE.findall(part[0])
        out.append((BoundaryAnchor((float(x), float(y))), float(part[1])))
    if len(out) < 2:
        raise GraphFormatError(
            f"--harmonic needs at least two '(x,y)=value' anchors, got {spec!r}")
    return out


def cmd_packing(args) -> int:
    import numpy as np

    from .packing import (ResolvabilityConfig, contact_graph, hex_packing,
                          load_packing, packing_metric, resolvability_report)

    inputs = {}
    if args.hex is not None:
        packing = hex_packing(args.hex)
        spec = f"hex:{args.hex!r}"
        inputs["packing"] = {"spec": spec, "sha256": sha256_text(spec)}
    elif args.file:
        packing = load_packing(args.file)
        inputs["packing"] = {"path": args.file, "sha256": sha256_file(args.file)}
    else:
        raise GraphFormatError("packing needs --hex RHO or --file PATH")
    graph = contact_graph(packing, tangency_tol=args.tangency_tol)
    results: dict = {"discs": len(packing), "contacts": graph.num_edges,
                     "max_degree": graph.max_degree}

    if args.contact_out:
        save_graph(graph, args.contact_out)
        results["contact_graph_file"] = args.contact_out

    anchors = _parse_anchors(args.anchors) if args.anchors else []
    reports = None
    data = None
    if not args.contact_only:
        data = packing_metric(packing, graph)
        results["metric"] = data.as_dict()
        if anchors:
            cfg = ResolvabilityConfig(
                scale_count=args.scale_count, scale_ratio=args.scale_ratio,
                first_scale_factor=args.first_scale)
            rep = resolvability_report(packing, graph, anchors, config=cfg)
            reports = rep
            results["resolvability"] = rep.as_dict()

    harmonic_result = None
    if args.harmonic:
        from .graph import Exhaustion
        anchored = _parse_anchor_values(args.harmonic)
        for a, _ in anchored:
            a.validate(packing)
        if data is None:
            data = packing_metric(packing, graph)
        dists = tuple(a.distances(packing, graph) for a, _ in anchored)
        vals = tuple(v for _, v in anchored)
        pts = np.array([a.point for a, _ in anchored])
        seps = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        bdata = BoundaryData(distances=dists, values=vals, separations=seps)
        center = min(graph.vertices,
                     key=lambda v: float(np.hypot(*packing.centers[packing.index[v]])))
        ecc = graph.eccentricity(center)
        radii = sorted(set(min(r, ecc - 1) for r in (2, 4, 8, ecc - 1, ecc)))
        exhaustion = Exhaustion.from_balls(graph, center, radii,
                                           clamp_to_proper=True)
        harmonic_result = boundary_to_harmonic(graph, data.measure, bdata,
                                               exhaustion)
        from .harmonic import HarmonicFamily, harmonic_rank
        family = HarmonicFamily.build(
            graph, [Potential.constant(graph, 1.0), harmonic_result.harmonic_part],
            base_vertex=center)
        results["harmonic"] = {
            "lipschitz": harmonic_result.lipschitz,
            "energy_extension": harmonic_result.energy_extension,
            "energy_bound": harmonic_result.energy_bound,
            "energy_harmonic": harmonic_result.energy_harmonic,
            "stabilized": harmonic_result.report.stabilized,
            "rank_with_constant": harmonic_rank(family, tol=1e-8),
        }
        if args.fh_out:
            save_potential(harmonic_result.harmonic_part, args.fh_out)
            results["fh_file"] = args.fh_out

    report = {
        "command": "packing",
        "config": _config_dict(args, ["hex", "file", "anchors", "harmonic",
                                      "contact-only", "scale-count",
                                      "scale-ratio", "first-scale",
                                      "tangency-tol", "seed"]),
        "inputs": inputs,
        "results": results,
    }

    def plot(out: Path):
        from .plots import plot_cesaro, plot_packing
        pot = harmonic_result.harmonic_part if harmonic_result else None
        plot_packing(packing, graph, out.with_suffix(".png"),
                     anchors=anchors, potential=pot)
        if reports is not None:
            plot_cesaro(reports.anchors,
                        out.with_suffix("").parent /
                        (out.with_suffix("").name + "_cesaro.png"))

    csv_payload = None
    if reports is not None and reports.anchors:
        rows = []
        for rep in reports.anchors:
            for e in rep.entries:
                rows.append([rep.anchor, e.depth, e.value, e.raw_value])
        csv_payload = (["anchor", "depth", "value", "raw_value"], rows)
    _emit(args, report, csv_payload=csv_payload, plot_fn=plot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphpot",
        description="Discrete potential theory on weighted graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph and write its edge list")
    _add_common(p)
    p.add_argument("--size", type=int, help="radius / depth / vertex count")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("recur", help="recurrence / transience classification")
    _add_common(p)
    p.set_defaults(func=cmd_recur)

    p = sub.add_parser("capacity", help="capacities of sets, tails, and flows")
    _add_common(p)
    p.add_argument("--set", help="target vertex set, e.g. '{0}' or '0,1'")
    p.add_argument("--ground", help="grounded vertex set")
    p.add_argument("--tail", action="store_true",
                   help="capacity sequence along the exhaustion")
    p.add_argument("--flow", help="flow file for a Thomson lower bound")
    p.add_argument("--optimizer-out", help="write the optimizer potential here")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("royden", help="energy split across truncations")
    _add_common(p)
    p.add_argument("--f", help="potential source file:PATH")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="stabilization tolerance")
    p.add_argument("--fh-out", help="write the final harmonic part here")
    p.set_defaults(func=cmd_royden)

    p = sub.add_parser("metric", help="metric checks and queries")
    _add_common(p)
    p.add_argument("--w", help="edge-function file for a path metric")
    p.add_argument("--f", help="potential file for a gradient metric")
    p.add_argument("--disc-top", action="store_true",
                   help="build the discrete-topology ultrametric")
    p.add_argument("--ball", help="'x,r' ball query")
    p.add_argument("--net", type=float, help="greedy net resolution")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("paths", help="path lengths and null witnesses")
    _add_common(p)
    p.add_argument("--witness", help="edge-function witness file")
    p.add_argument("--from-potential", help="derive the witness from a potential")
    p.add_argument("--paths", help="path sample file (one path per line)")
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--tree-root", type=int,
                   help="accumulate the witness along root paths of a tree")
    p.add_argument("--potential-out", help="write the accumulated potential here")
    p.set_defaults(func=cmd_paths)

    p = sub.add_parser("packing", help="circle packings and their diagnostics")
    _add_common(p)
    p.add_argument("--hex", type=float, help="hex packing disc radius")
    p.add_argument("--file", help="packing file id<TAB>x<TAB>y<TAB>r")
    p.add_argument("--contact-only", action="store_true",
                   help="emit the contact graph and stop")
    p.add_argument("--contact-out", help="write the contact graph edge list")
    p.add_argument("--anchors", help="'circle:8' or '(x,y);(x,y)'")
    p.add_argument("--harmonic", help="'(x,y)=v,(x,y)=v' boundary data")
    p.add_argument("--fh-out", help="write the harmonic part here")
    p.add_argument("--scale-count", type=int, default=8)
    p.add_argument("--scale-ratio", type=float, default=0.75)
    p.add_argument("--first-scale", type=float, default=0.8,
                   help="first scale as a fraction of the bounding radius")
    p.add_argument("--tangency-tol", type=float)
    p.set_defaults(func=cmd_packing)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StabilizationError as e:
        print(f"error: {e}", file=sys.stderr)
        if e.report is not None:
            sys.stderr.write(write_report({"stabilization": e.report.as_dict()}))
        return EXIT_ERROR
    except GraphPotError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
