"""Command-line interface.

Subcommands: ``compare`` (classical or fusion distance between two
structures), ``stats`` (encoding sizes), ``validate`` (cost model
checks), ``verify`` (oracle cross-checks), ``multilevel`` (two-pass
colored comparison) and ``compare-batch``.  Exit codes: 0 success,
1 verification mismatch, 2 parse error, 3 configuration error,
4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

from . import cost_models, generators, multilevel, oracle
from .edit_distance import EditScript, extract_script, replay_script, zs_distance
from .fusion_distance import FusionParams, extract_fusion_script, fusion_dp
from .rna_structures import SecondaryStructure, StructureError, parse_ct, parse_dotbracket
from .tree_model import Label, build, index, to_dot, to_parenthesized

log = logging.getLogger("rnatreedit")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4


class ConfigError(ValueError):
    pass


def _setup_logging() -> None:
    level = os.environ.get("RNATREEDIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_structure(path: str, fmt: str, pairing: str) -> SecondaryStructure:
    text = Path(path).read_text()
    if fmt == "auto":
        suffix = Path(path).suffix.lower()
        if suffix == ".ct":
            fmt = "ct"
        elif suffix in (".db", ".dbn", ".dotbracket", ".fold"):
            fmt = "dotbracket"
        else:
            # content sniffing: CT starts with an integer record count
            first = text.lstrip().split(None, 1)
            fmt = "ct" if first and first[0].isdigit() else "dotbracket"
    parser = parse_ct if fmt == "ct" else parse_dotbracket
    s = parser(text, pairing=pairing)
    if not s.id:
        s = SecondaryStructure(s.sequence, s.pairs, Path(path).stem)
    return s


def _model_from_args(args: argparse.Namespace) -> cost_models.CostModel:
    if args.t is not None and args.t < 0:
        raise ConfigError("t must be >= 0")
    name = args.model
    if name in ("unit", "structural"):
        return cost_models.named_model(name, args.t)
    path = Path(name)
    if not path.exists():
        raise ConfigError(f"unknown model {name!r}: not a named model or a file")
    model = cost_models.parse_model_config(path.read_text())
    if args.t is not None:
        model = model.with_t(args.t)
    return model


def _fusion_params(args: argparse.Namespace) -> FusionParams:
    if not (0 <= args.l <= 3):
        raise ConfigError("l must be in [0, 3]")
    return FusionParams(cap=args.l, prune=not args.no_prune)


def _compare_pair(a: SecondaryStructure, b: SecondaryStructure,
                  rep: str, model: cost_models.CostModel,
                  params: FusionParams) -> dict:
    ta, tb = index(build(a, rep)), index(build(b, rep))
    started = time.perf_counter()
    if params.cap == 0:
        distance, tables = zs_distance(ta, tb, model)
        script, pairs = extract_script(tables)
        mapping = [([i], [j]) for i, j in sorted(pairs)]
    else:
        distance, state = fusion_dp(ta, tb, model, params)
        script, groups = extract_fusion_script(state)
        mapping = [(list(g[0]), list(g[1])) for g in sorted(groups)]
    elapsed = time.perf_counter() - started
    replayed = replay_script(ta, script)
    from .tree_model import trees_equal
    if not trees_equal(replayed.root, tb.tree.root) or script.total_cost != distance:
        raise AssertionError("script replay failed to reproduce the target tree")
    return {
        "a": ta, "b": tb, "distance": distance, "script": script,
        "mapping": mapping, "elapsed": elapsed,
    }


def _meta(args: argparse.Namespace, model: cost_models.CostModel,
          inputs: list[str]) -> dict:
    meta = {"inputs": inputs, "rep": args.rep, "l": args.l,
            "prune": not args.no_prune, "format": args.format}
    meta.update(model.describe())
    if getattr(args, "seed", None) is not None:
        meta["seed"] = args.seed
    return meta


def _emit(args: argparse.Namespace, payload: dict, text_lines: list[str],
          dot_text: Optional[str] = None) -> None:
    if args.emit == "json":
        rendered = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    elif args.emit == "dot":
        rendered = dot_text or ""
    else:
        rendered = "\n".join(text_lines) + "\n"
    if args.out:
        Path(args.out).write_text(rendered)
    else:
        sys.stdout.write(rendered)


def _mapping_dot(result: dict, colors_a: Optional[dict] = None,
                 colors_b: Optional[dict] = None) -> str:
    ta, tb = result["a"], result["b"]
    da = to_dot(ta.tree, "A").splitlines()[1:-1]
    db = to_dot(tb.tree, "B").splitlines()[1:-1]
    lines = ["digraph comparison {", "  rankdir=TB;"]
    lines.append("  subgraph cluster_a { label=\"T\";")
    lines.extend("  " + ln.replace("n", "a", 1) if ln.strip().startswith("n") else ln
                 for ln in da)
    lines.append("  }")
    lines.append("  subgraph cluster_b { label=\"T'\";")
    lines.extend("  " + ln.replace("n", "b", 1) if ln.strip().startswith("n") else ln
                 for ln in db)
    lines.append("  }")
    # postorder ids map to dot preorder ids via the preorder walk
    pre_a = {node: k for k, node in enumerate(ta.preorder())}
    pre_b = {node: k for k, node in enumerate(tb.preorder())}
    for src, dst in result["mapping"]:
        lines.append(f"  a{pre_a[src[0]]} -> b{pre_b[dst[0]]} "
                     "[style=dashed constraint=false color=gray];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_compare(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    params = _fusion_params(args)
    a = _load_structure(args.inputs[0], args.format, args.pairing)
    b = _load_structure(args.inputs[1], args.format, args.pairing)
    result = _compare_pair(a, b, args.rep, model, params)
    counts = result["script"].counts()
    payload = {
        "meta": _meta(args, model, args.inputs),
        "distance": result["distance"],
        "operations": counts,
        "script": result["script"].to_json(),
        "mapping": [[list(s), list(d)] for s, d in result["mapping"]],
    }
    lines = [f"distance: {result['distance']!r}"]
    lines.append("operations: " + ", ".join(
        f"{k}={v}" for k, v in sorted(counts.items())) if counts else "operations: none")
    lines.append(f"elapsed: {result['elapsed']:.3f}s")
    lines.append("parameters: " + ", ".join(
        f"{k}={v}" for k, v in sorted(_meta(args, model, args.inputs).items())))
    _emit(args, payload, lines, _mapping_dot(result))
    return EXIT_OK


def cmd_compare_batch(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    params = _fusion_params(args)
    pairs = []
    for line_no, line in enumerate(Path(args.pairs_file).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"pairs file line {line_no}: expected two paths")
        pairs.append((parts[0], parts[1]))
    jobs = max(1, args.jobs)
    work = [(pa, pb, args.format, args.pairing, args.rep, args.model,
             args.t, args.l, args.no_prune) for pa, pb in pairs]
    if jobs == 1:
        results = [_batch_one(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_one, work))
    for (pa, pb), distance in zip(pairs, results):
        print(f"{pa}\t{pb}\t{distance!r}")
    return EXIT_OK


def _batch_one(work: tuple) -> float:
    pa, pb, fmt, pairing, rep, model_name, t, l, no_prune = work
    ns = argparse.Namespace(model=model_name, t=t, l=l, no_prune=no_prune)
    model = _model_from_args(ns)
    params = _fusion_params(ns)
    a = _load_structure(pa, fmt, pairing)
    b = _load_structure(pb, fmt, pairing)
    return _compare_pair(a, b, rep, model, params)["distance"]


def cmd_stats(args: argparse.Namespace) -> int:
    s = _load_structure(args.inputs[0], args.format, args.pairing)
    lines = [f"structure: {s.id or args.inputs[0]} length={s.length} pairs={len(s.pairs)}"]
    for rep in "bcde":
        t = index(build(s, rep))
        d = max(2, t.max_degree)
        from .fusion_distance import path_count_bound
        bound = path_count_bound(d, args.l)
        lines.append(f"rep {rep}: nodes={t.n} leaves={t.leaf_count} "
                     f"height={t.height} max_degree={t.max_degree} "
                     f"path_bound(l={args.l})={bound}")
    print("\n".join(lines))
    return EXIT_OK


_SAMPLE_LABELS = [
    (Label("hairpin", (3,)), Label("helix", (4,))),
    (Label("hairpin", (7,)), Label("helix", (2,))),
    (Label("internal", (4,)), Label("helix", (1,))),
    (Label("bulge", (2,)), Label("helix", (6,))),
    (Label("multiloop", (5,)), Label("helix", (3,))),
    (Label("root"), None),
]


def cmd_validate(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    report = cost_models.validate(model, _SAMPLE_LABELS)
    print(report.summary())
    print("parameters: " + ", ".join(
        f"{k}={v}" for k, v in sorted(model.describe().items())))
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_verify(args: argparse.Namespace) -> int:
    if args.max_nodes > oracle.MAX_ORACLE_NODES:
        raise ConfigError(
            f"--max-nodes above the oracle budget ({oracle.MAX_ORACLE_NODES})")
    model = _model_from_args(args)
    rng = random.Random(args.seed)
    failures = run_verification(model, rng, exhaustive_max=args.max_nodes,
                                samples=args.samples)
    if failures:
        for f in failures:
            print(f"MISMATCH: {f}")
        return EXIT_MISMATCH
    print("verify: all oracle cross-checks and metric axioms passed")
    return EXIT_OK


def run_verification(model: cost_models.CostModel, rng: random.Random,
                     exhaustive_max: int = 5, samples: int = 200) -> list[str]:
    """Oracle cross-checks and the metric sampler; returns failure notes."""
    failures: list[str] = []
    alphabet = [Label("a"), Label("b")]
    indexed = []
    for n in range(1, exhaustive_max + 1):
        for shape in generators.all_tree_shapes(n):
            for labeling in range(len(alphabet) ** n):
                indexed.append(index(generators.shape_to_tree(
                    shape, alphabet, labeling)))
    cache = oracle.MappingOracleCache()
    for a in indexed:
        for b in indexed:
            d, _ = zs_distance(a, b, model)
            ref = cache.distance(a, b, model)
            if d != ref:
                failures.append(
                    f"classical {to_parenthesized(a.tree)} vs "
                    f"{to_parenthesized(b.tree)}: dp={d} oracle={ref}")
                if len(failures) > 3:
                    return failures
    node_labels = [Label("h", (1,)), Label("i", (9,))]
    edge_labels = [Label("x", (2,))]
    for _ in range(samples):
        a = index(generators.random_tree(rng, rng.randint(1, 8), 3,
                                         node_labels, edge_labels))
        b = index(generators.random_tree(rng, rng.randint(1, 8), 3,
                                         node_labels, edge_labels))
        d, _ = zs_distance(a, b, model)
        ref = oracle.mapping_oracle(a, b, model)
        if d != ref:
            failures.append(
                f"classical/random {to_parenthesized(a.tree)} vs "
                f"{to_parenthesized(b.tree)}: dp={d} oracle={ref}")
    for _ in range(max(20, samples // 10)):
        a = index(generators.random_tree(rng, rng.randint(1, 5), 3,
                                         node_labels, edge_labels))
        b = index(generators.random_tree(rng, rng.randint(1, 5), 3,
                                         node_labels, edge_labels))
        d, _ = fusion_dp(a, b, model, FusionParams(cap=1))
        ref = oracle.script_search_oracle(a, b, model,
                                          oracle.SearchBudget(fusion_cap=1))
        if d != ref:
            failures.append(
                f"fusion {to_parenthesized(a.tree)} vs "
                f"{to_parenthesized(b.tree)}: dp={d} oracle={ref}")
    # metric axioms on sampled trees
    trees = [index(generators.random_tree(rng, rng.randint(1, 6), 3,
                                          node_labels, edge_labels))
             for _ in range(24)]
    report = cost_models.validate(model, _SAMPLE_LABELS)
    if not report.ok:
        failures.extend(f"cost model: {c.condition} [{c.witness}]"
                        for c in report.failures())
    for i, a in enumerate(trees):
        d_self, _ = fusion_dp(a, a, model, FusionParams(cap=1))
        if d_self != 0:
            failures.append(f"identity violated: d(T,T)={d_self}")
        b = trees[(i + 1) % len(trees)]
        c = trees[(i + 2) % len(trees)]
        dab, _ = fusion_dp(a, b, model, FusionParams(cap=1))
        dba, _ = fusion_dp(b, a, model, FusionParams(cap=1))
        if dab != dba:
            failures.append(f"symmetry violated: {dab} != {dba}")
        dbc, _ = fusion_dp(b, c, model, FusionParams(cap=1))
        dac, _ = fusion_dp(a, c, model, FusionParams(cap=1))
        if dac > dab + dbc + 1e-9:
            failures.append(f"triangle violated: {dac} > {dab} + {dbc}")
    return failures


_PALETTE = ["lightblue", "lightgreen", "lightsalmon", "gold", "plum",
            "lightcyan", "wheat", "pink", "palegreen", "khaki"]


def cmd_multilevel(args: argparse.Namespace) -> int:
    model = _model_from_args(args)
    params = _fusion_params(args)
    a = _load_structure(args.inputs[0], args.format, args.pairing)
    b = _load_structure(args.inputs[1], args.format, args.pairing)
    result = multilevel.multilevel_compare(a, b, model, params, args.coarse_rep)
    payload = {
        "meta": _meta(args, model, args.inputs) | {"coarse_rep": args.coarse_rep},
        "distance": result.fine_distance,
        "colors": {
            "count": result.colors.n_colors,
            "a": {str(k): v for k, v in sorted(result.colors.colors_a.items())},
            "b": {str(k): v for k, v in sorted(result.colors.colors_b.items())},
        },
        "coarse_mapping": [[list(s), list(d)] for s, d in result.coarse_mapping],
        "fine_mapping": [[i, j] for i, j in sorted(result.fine_mapping)],
    }
    lines = [
        f"coarse colors: {result.colors.n_colors}",
        f"fine distance: {result.fine_distance!r}",
        f"fine mapping size: {len(result.fine_mapping)}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, inputs: int = 2) -> None:
    if inputs:
        p.add_argument("inputs", nargs=inputs, help="structure file(s)")
    p.add_argument("--format", choices=["auto", "dotbracket", "ct"],
                   default="auto", help="input format")
    p.add_argument("--rep", choices=list("bcde"), default="d",
                   help="tree representation")
    p.add_argument("--model", default="structural",
                   help="cost model name (unit|structural) or config file")
    p.add_argument("--t", type=float, default=None, help="fusion tuning parameter")
    p.add_argument("--l", type=int, default=1, help="consecutive fusion cap (0-3)")
    p.add_argument("--no-prune", action="store_true",
                   help="disable the node-then-edge fusion pruning rule")
    p.add_argument("--strict-pairs", dest="pairing", action="store_const",
                   const="strict", default="wobble",
                   help="reject wobble pairs on input")
    p.add_argument("--emit", choices=["text", "json", "dot"], default="text",
                   help="output format")
    p.add_argument("--out", default=None, help="write output to a file")
    p.add_argument("--seed", type=int, default=None, help="seed for sampling")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers (batch mode only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rnatreedit",
        description="Compare RNA secondary structures as ordered labeled trees")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="distance between two structures")
    _add_common(p, inputs=2)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("compare-batch", help="compare many pairs from a file")
    p.add_argument("pairs_file", help="file with two structure paths per line")
    _add_common(p, inputs=0)
    p.set_defaults(func=cmd_compare_batch)

    p = sub.add_parser("stats", help="encoding statistics for one structure")
    _add_common(p, inputs=1)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("validate", help="check cost model distance conditions")
    _add_common(p, inputs=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("verify", help="run oracle cross-checks")
    _add_common(p, inputs=0)
    p.add_argument("--max-nodes", type=int, default=5,
                   help="exhaustive enumeration size (hard limit 8)")
    p.add_argument("--samples", type=int, default=200,
                   help="random sample count")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("multilevel", help="two-pass colored comparison")
    _add_common(p, inputs=2)
    p.add_argument("--coarse-rep", choices=["c", "d"], default="c",
                   help="representation for the coarse pass")
    p.set_defaults(func=cmd_multilevel)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except StructureError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, cost_models.InvalidTError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
