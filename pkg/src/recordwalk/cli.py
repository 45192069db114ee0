"""Command line driver: experiment manifests, seeds and exporters.

Every subcommand reads its parameters from three layers, highest first:
explicit flags, the ``params`` block of a manifest, built-in defaults.  The
output directory may also come from ``RECORDWALK_OUT``.  Artifacts are JSON,
CSV and DOT files named after the command; they carry no timestamps, so a
manifest and seed reproduce them byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .record import RecordGraph, build_record_graph
from .samplers import (SamplerBudget, TreeOverflow, canopy_level_law, regular_tree_ball,
                       sample_canopy, sample_egwt, sample_ekt, sample_gw, sample_mekt,
                       sample_sbgw, sample_tgwt, sample_unimodular_mekt)
from .seq import (CensoredError, Window, parse_distribution, parse_offspring, sample_window)
from .transforms import (MarkedComponent, backward_phi, backward_phi_hat, construction1_zero_mean,
                         construction2_zero_mean, construction_positive_mean, forward_psi,
                         forward_psi_hat, roundtrip_psi_phi)
from .trees import OrderedTree, ball, materialize, tree_to_dot, undirected_ball_key
from . import verify

SCHEMA = "recordwalk.manifest/1"
OUT_ENV = "RECORDWALK_OUT"

SAMPLE_KINDS = ("gw", "tgwt", "sbgw", "egwt", "ekt", "mekt", "canopy")
TRANSFORM_KINDS = ("phi", "psi", "phi-hat", "psi-hat", "construct1", "construct2", "construct-pos")
VERIFY_OPS = ("tau-law", "hitting", "parent-prob", "phase", "dn", "fprob", "rperp", "represent")
FPROB_PAIRS = ("egwt-ekt", "tgwt-sbgw", "umekt-mekt", "canopy")


class ManifestError(ValueError):
    """Malformed manifest or parameter."""


# name -> (type, default, help); bool parameters become store_true flags
COMMON = {
    "seed": (int, 0, "RNG seed"),
    "out": (str, None, f"output directory (else ${OUT_ENV}, else stdout only)"),
    "stem": (str, None, "file name stem for artifacts"),
}
PARAMS = {
    "simulate-walk": {
        "dist": (str, "two_point:0.4,0.6", "increment law, two_point:q,p or k:p,k:p"),
        "window": (int, 1000, "marks on each side of 0"),
        "lo": (int, None, "left end (overrides --window)"),
        "hi": (int, None, "right end (overrides --window)"),
    },
    "record-graph": {
        "dist": (str, "two_point:0.5,0.5", "increment law"),
        "window": (int, 64, "marks on each side of 0"),
        "input": (str, None, "window JSON to read instead of sampling"),
        "strict": (bool, False, "strict record map instead of the weak one"),
        "component": (bool, False, "export only the component of 0"),
    },
    "sample": {
        "pi": (str, "0:0.5,2:0.5", "offspring law"),
        "dist": (str, "two_point:0.4,0.6", "increment law (mekt)"),
        "height": (int, 8, "truncation height of eternal samplers"),
        "radius": (int, None, "radius of the exported ball (default: height - 1)"),
        "node_cap": (int, 100_000, "arena size cap"),
        "children": (int, 2, "canopy children per vertex"),
        "unimodular": (bool, False, "mekt: re-root at a size-biased bush vertex"),
        "size_cap": (int, 16, "mekt: acceptance scale of the unimodular re-rooting"),
    },
    "transform": {
        "dist": (str, "two_point:0.5,0.5", "increment law"),
        "pi": (str, "0:0.5,2:0.5", "offspring law (phi on a sampled EKT)"),
        "input": (str, None, "tree JSON (phi) or window JSON (psi) to read"),
        "span": (int, 64, "succession-line span (phi) or construction length"),
        "window": (int, 64, "marks on each side of 0 (psi on a sampled walk)"),
        "height": (int, 64, "truncation height of sampled trees"),
    },
    "verify": {
        "dist": (str, None, "increment law (default depends on the op)"),
        "n": (int, 10_000, "samples"),
        "r": (int, None, "radius (default depends on the op)"),
        "window": (int, 1000, "window size (phase)"),
        "k_max": (int, 6, "largest start height (hitting)"),
        "steps": (str, "1,2", "shift powers (dn)"),
        "depth": (int, 5, "re-root depth (fprob)"),
        "pair": (str, "egwt-ekt", "fprob pair: " + ", ".join(FPROB_PAIRS)),
        "pi": (str, None, "offspring law (fprob)"),
        "shift": (str, "SR", "represent: SR or C"),
        "margin": (int, 30, "represent: climbing margin"),
        "threshold": (float, None, "override the TV threshold (fprob, rperp, represent)"),
    },
    "roundtrip": {
        "dist": (str, "two_point:0.5,0.5", "increment law"),
        "window": (int, 1000, "marks on each side of 0 (span = 2 * window)"),
        "count": (int, 100, "number of seeded windows"),
        "marked": (bool, False, "typed round trip on positive-mean construction windows"),
    },
}
KIND_ARG = {"sample": ("kind", SAMPLE_KINDS), "transform": ("kind", TRANSFORM_KINDS),
            "verify": ("op", VERIFY_OPS)}


@dataclass
class ExperimentManifest:
    command: str
    params: dict = field(default_factory=dict)
    kind: Optional[str] = None
    schema: str = SCHEMA

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentManifest":
        if not isinstance(obj, dict):
            raise ManifestError("manifest must be a JSON object")
        if obj.get("schema", SCHEMA) != SCHEMA:
            raise ManifestError(f"unsupported manifest schema {obj.get('schema')!r}")
        cmd = obj.get("command")
        if cmd not in PARAMS:
            raise ManifestError(f"unknown command {cmd!r}")
        params = dict(obj.get("params", {}))
        output = obj.get("output", {})
        for k in ("out", "stem"):
            if k in output:
                params.setdefault(k, output[k])
        allowed = set(PARAMS[cmd]) | set(COMMON)
        unknown = set(params) - allowed
        if unknown:
            raise ManifestError(f"unknown parameters for {cmd}: {sorted(unknown)}")
        kind = obj.get("kind")
        if cmd in KIND_ARG and kind not in KIND_ARG[cmd][1]:
            raise ManifestError(f"{cmd} needs kind in {KIND_ARG[cmd][1]}, got {kind!r}")
        return cls(cmd, params, kind)

    @classmethod
    def load(cls, path: str) -> "ExperimentManifest":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}: {exc}") from exc
        return cls.from_json(obj)

    def to_json(self) -> dict:
        out = {"schema": self.schema, "command": self.command, "params": self.params}
        if self.kind is not None:
            out["kind"] = self.kind
        return out


def resolve_params(command: str, flags: dict, manifest: Optional[ExperimentManifest]) -> dict:
    """Merge defaults, manifest params and explicit flags (in rising priority)."""
    table = {**COMMON, **PARAMS[command]}
    out = {k: v[1] for k, v in table.items()}
    if manifest is not None:
        for k, v in manifest.params.items():
            typ = table[k][0]
            try:
                out[k] = v if v is None else typ(v)
            except (TypeError, ValueError) as exc:
                raise ManifestError(f"parameter {k}: {exc}") from exc
    out.update(flags)
    if out["out"] is None:
        out["out"] = os.environ.get(OUT_ENV)
    return out


# ---------------------------------------------------------------------------
# Exporters


def graph_to_dot(g: RecordGraph, vertices: Optional[list] = None, name: str = "record") -> str:
    """DOT digraph of a record graph, edges ``i -> R(i)`` in position order.
    Censored vertices (unknown record or incomplete children) are dashed."""
    lo = g.lo
    vs = list(g.vertices()) if vertices is None else sorted(vertices)
    keep = set(vs)
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for p in vs:
        a = p - lo
        attrs = [f'label="{p}"']
        if g.censored[a] or not g.children_complete[a]:
            attrs.append("style=dashed")
        if p == 0:
            attrs.append("shape=doublecircle")
        lines.append(f"  v{_dot_id(p)} [{', '.join(attrs)}];")
    for p in vs:
        a = p - lo
        s = int(g.succ[a])
        if not g.censored[a] and s != p and s in keep:
            lines.append(f"  v{_dot_id(p)} -> v{_dot_id(s)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_id(p: int) -> str:
    return f"m{-p}" if p < 0 else str(p)


def export_dot(obj, path) -> Path:
    """Write a record graph, marked component or finite tree as DOT."""
    if isinstance(obj, RecordGraph):
        text = graph_to_dot(obj)
    elif isinstance(obj, MarkedComponent):
        labels = {k: str(p) for k, p in enumerate(obj.positions)}
        text = tree_to_dot(obj.tree, "component", labels)
        dashed = {obj.node_of[p] for p in obj.censored}
        text = "".join(_dash_line(line, dashed) for line in text.splitlines(keepends=True))
    elif isinstance(obj, OrderedTree):
        text = tree_to_dot(obj)
    else:
        raise TypeError(f"cannot export {type(obj).__name__} as DOT")
    path = Path(path)
    path.write_text(text)
    return path


def _dash_line(line: str, dashed: set) -> str:
    head = line.strip().split(" ", 1)[0]
    if head.startswith("n") and head[1:].isdigit() and int(head[1:]) in dashed and "->" not in line:
        return line.replace("];", ", style=dashed];")
    return line


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def graph_json(g: RecordGraph) -> dict:
    return {"kind": "record_graph", "window": g.window.to_json(), "graph": g.to_json(),
            "strict": g.strict}


def graph_from_json(obj: dict) -> RecordGraph:
    """Rebuild a record graph from :func:`graph_json` output; the stored graph
    must agree with the rebuilt one."""
    g = build_record_graph(Window.from_json(obj["window"]), strict=obj.get("strict", False))
    if g.to_json() != obj["graph"]:
        raise ManifestError("stored record graph disagrees with its window")
    return g


def report_rows(rep: verify.TestReport) -> list:
    """CSV rows ``(key, observed, expected)``; a summary row if the report has no table."""
    table = rep.details.get("table")
    if table:
        return [(_key_text(k), o, e) for k, o, e in table]
    return [(rep.name, rep.statistic, rep.threshold)]


def _key_text(k) -> str:
    if isinstance(k, bytes):
        return k.decode("ascii", "replace")
    return json.dumps(k) if isinstance(k, (tuple, list)) else str(k)


def report_json(rep: verify.TestReport) -> dict:
    out = rep.to_json()
    out.pop("runtime", None)
    out["details"].pop("table", None)
    return out


class Sink:
    """Collects artifacts; writes them under ``out`` or prints the JSON one."""

    def __init__(self, out: Optional[str], stem: str):
        self.dir = Path(out) if out else None
        self.stem = stem
        self.written: list[Path] = []
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def json(self, obj) -> None:
        if self.dir is None:
            sys.stdout.write(dumps(obj))
            return
        self._write(".json", dumps(obj))

    def dot(self, obj) -> None:
        if self.dir is not None:
            self.written.append(export_dot(obj, self.dir / f"{self.stem}.dot"))

    def csv(self, rows: list, header: tuple) -> None:
        if self.dir is None:
            return
        path = self.dir / f"{self.stem}.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            wr.writerows(rows)
        self.written.append(path)

    def _write(self, suffix: str, text: str) -> None:
        path = self.dir / f"{self.stem}{suffix}"
        path.write_text(text)
        self.written.append(path)


# ---------------------------------------------------------------------------
# Commands


def _window_bounds(p: dict) -> tuple[int, int]:
    lo = -p["window"] if p.get("lo") is None else p["lo"]
    hi = p["window"] if p.get("hi") is None else p["hi"]
    return lo, hi


def _finite_ball(t, root, radius: int) -> OrderedTree:
    """Materialise the radius ball of a (possibly lazy) tree in RLS order of the ball."""
    top, _, kids = ball(t, root, radius)
    order, stack = [], [top]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(reversed(kids[u]))
    return materialize(t, root, order)


def cmd_simulate_walk(p: dict, rng, sink: Sink) -> int:
    lo, hi = _window_bounds(p)
    w = sample_window(parse_distribution(p["dist"]), lo, hi, rng)
    sink.json(w.to_json())
    return 0


def _read_window(path: str) -> Window:
    with open(path) as fh:
        return Window.from_json(json.load(fh))


def cmd_record_graph(p: dict, rng, sink: Sink) -> int:
    if p["input"]:
        w = _read_window(p["input"])
    else:
        w = sample_window(parse_distribution(p["dist"]), -p["window"], p["window"], rng)
    g = build_record_graph(w, strict=p["strict"])
    sink.json(graph_json(g))
    if sink.dir is not None:
        verts = g.component(0) if p["component"] else None
        path = sink.dir / f"{sink.stem}.dot"
        path.write_text(graph_to_dot(g, verts))
        sink.written.append(path)
    return 0


def _sample_tree(kind: str, p: dict, rng):
    budget = SamplerBudget(node_cap=p["node_cap"], height_cap=p["height"])
    if kind == "canopy":
        return sample_canopy(canopy_level_law(p["children"]), p["children"], p["radius"], rng)
    if kind == "mekt":
        d = parse_distribution(p["dist"])
        if p["unimodular"]:
            return sample_unimodular_mekt(d, budget, rng, size_cap=p["size_cap"])
        return sample_mekt(d, budget, None, rng)
    pi = parse_offspring(p["pi"])
    fn = {"gw": sample_gw, "tgwt": sample_tgwt, "sbgw": sample_sbgw,
          "egwt": sample_egwt, "ekt": sample_ekt}[kind]
    return fn(pi, budget, rng)


def cmd_sample(p: dict, rng, sink: Sink, kind: str) -> int:
    if p["radius"] is None:
        p["radius"] = max(p["height"] - 1, 0)
    t = _sample_tree(kind, p, rng)
    try:
        fin = _finite_ball(t, t.root, p["radius"])
    except CensoredError as exc:
        raise ManifestError(f"radius {p['radius']} reaches past the truncation height "
                            f"{p['height']}") from exc
    obj = fin.to_json()
    obj["kind"] = kind
    if kind == "canopy":
        obj["root_level"] = t.level(t.root)
    sink.json(obj)
    sink.dot(fin)
    return 0


def cmd_transform(p: dict, rng, sink: Sink, kind: str) -> int:
    if kind in ("psi", "psi-hat"):
        if p["input"]:
            w = _read_window(p["input"])
        else:
            w = sample_window(parse_distribution(p["dist"]), -p["window"], p["window"], rng)
        comp = forward_psi(w) if kind == "psi" else forward_psi_hat(w)
        sink.json(comp.to_json())
        sink.dot(comp)
        return 0
    if kind in ("phi", "phi-hat"):
        if p["input"]:
            with open(p["input"]) as fh:
                t = OrderedTree.from_json(json.load(fh))
        elif kind == "phi":
            t = sample_ekt(parse_offspring(p["pi"]), SamplerBudget(height_cap=p["height"]), rng)
        else:
            t = sample_mekt(parse_distribution(p["dist"]), SamplerBudget(height_cap=p["height"]),
                            None, rng)
        fn = backward_phi if kind == "phi" else backward_phi_hat
        w = fn(t, t.root, p["span"])
        sink.json(Window(w.lo, w.marks, skip_free=w.skip_free).to_json())
        return 0
    d = parse_distribution(p["dist"])
    fn = {"construct1": construction1_zero_mean, "construct2": construction2_zero_mean,
          "construct-pos": construction_positive_mean}[kind]
    w = fn(d, p["span"], rng)
    obj = w.to_json()
    if w.tags is not None:
        obj["tags"] = np.asarray(w.tags).tolist()
    sink.json(obj)
    return 0


def _tree_source(name: str, pi, d, budget, size_cap: int = 16):
    def rooted(t):
        return t, t.root
    return {
        "egwt": lambda g: rooted(sample_egwt(pi, budget, g)),
        "ekt": lambda g: rooted(sample_ekt(pi, budget, g)),
        "tgwt": lambda g: rooted(sample_tgwt(pi, budget, g)),
        "sbgw": lambda g: rooted(sample_sbgw(pi, budget, g)),
        "umekt": lambda g: rooted(sample_unimodular_mekt(d, budget, g, size_cap=size_cap)),
        "mekt": lambda g: rooted(sample_mekt(d, budget, None, g)),
    }[name]


def run_verify(op: str, p: dict) -> verify.TestReport:
    seed, N = p["seed"], p["n"]
    thr = {} if p["threshold"] is None else {"threshold": p["threshold"]}
    if thr and op not in ("fprob", "rperp", "represent"):
        raise ManifestError(f"{op} has a fixed significance level; --threshold does not apply")
    dist = p["dist"]
    if op == "hitting":
        return verify.check_hitting_powers(parse_distribution(dist or "two_point:0.4,0.6"),
                                           p["k_max"], N, seed)
    if op == "tau-law":
        return verify.check_tau_joint_law(parse_distribution(dist or "two_point:0.4,0.6"), N, seed)
    if op == "parent-prob":
        return verify.check_parent_probability(parse_distribution(dist or "two_point:0.6,0.4"),
                                               N, seed)
    if op == "phase":
        return verify.check_phase(parse_distribution(dist or "two_point:0.6,0.4"),
                                  p["window"], N, seed)
    if op == "dn":
        steps = [int(s) for s in p["steps"].split(",")]
        r = p["r"] or 1
        return verify.check_dn_radon_nikodym(parse_distribution(dist or "two_point:0.5,0.5"),
                                             steps, r, N, seed,
                                             patterns=verify.DN_PATTERNS if r == 1 else None,
                                             z_threshold=3.0 if r == 1 else None)
    if op == "rperp":
        return verify.check_rperp_preservation(parse_distribution(dist or "two_point:0.5,0.5"),
                                               1 if p["r"] is None else p["r"], N, seed, **thr)
    if op == "represent":
        default = "-1:0.4,0:0.4,2:0.2" if p["shift"] == "SR" else "two_point:0.4,0.6"
        return verify.check_record_representation(p["shift"], parse_distribution(dist or default),
                                                  p["r"] or 2, N, seed, margin=p["margin"], **thr)
    if op == "fprob":
        return _run_fprob(p, thr)
    raise ManifestError(f"unknown verify op {op!r}")


def _run_fprob(p: dict, thr: dict) -> verify.TestReport:
    r, n, N, seed = p["r"] or 2, p["depth"], p["n"], p["seed"]
    pair = p["pair"]
    if pair not in FPROB_PAIRS:
        raise ManifestError(f"unknown fprob pair {pair!r}")
    if pair == "canopy":
        deg = 2
        return verify.check_fprob_limit(
            lambda g: (lambda t: (t, t.root))(sample_canopy(canopy_level_law(deg), deg, 0, g)),
            lambda g: (regular_tree_ball(deg + 1, r), 0), r, n, N, seed,
            key=lambda t, o: undirected_ball_key(t, o, r), name="fprob[canopy]", **thr)
    src, tgt = pair.split("-")
    default_pi = {"egwt": "0:0.5,2:0.5", "tgwt": "0:0.7,1:0.2,2:0.1"}.get(src)
    pi = parse_offspring(p["pi"] or default_pi) if default_pi else None
    d = parse_distribution(p["dist"] or "two_point:0.1,0.9")
    budget = SamplerBudget(node_cap=100_000, height_cap=64)
    return verify.check_fprob_limit(_tree_source(src, pi, d, budget), _tree_source(tgt, pi, d, budget),
                                    r, n, N, seed, name=f"fprob[{pair}]", **thr)


def cmd_verify(p: dict, rng, sink: Sink, op: str) -> int:
    rep = run_verify(op, p)
    print(rep.line())
    if sink.dir is not None:
        sink.json(report_json(rep))
        sink.csv(report_rows(rep), ("key", "observed", "expected"))
    return 0 if rep.passed else 1


def cmd_roundtrip(p: dict, rng, sink: Sink) -> int:
    d = parse_distribution(p["dist"])
    if p["marked"] and p["dist"] == PARAMS["roundtrip"]["dist"][1]:
        d = parse_distribution("two_point:0.4,0.6")
    mismatches, core = 0, 0
    rows = []
    for k in range(p["count"]):
        g = np.random.default_rng([p["seed"], k])
        if p["marked"]:
            w = construction_positive_mean(d, 2 * p["window"], g)
        else:
            w = sample_window(d, -p["window"], p["window"], g)
        rep = roundtrip_psi_phi(w, marked=p["marked"])
        mismatches += len(rep.mismatches)
        core += rep.core_hi - rep.core_lo
        rows.append((k, rep.core_lo, rep.core_hi, len(rep.mismatches)))
    summary = {"windows": p["count"], "mismatches": mismatches, "core_marks": core,
               "marked": p["marked"]}
    print(f"{'PASS' if mismatches == 0 else 'FAIL'} roundtrip: windows={p['count']} "
          f"core_marks={core} mismatches={mismatches}")
    if sink.dir is not None:
        sink.json(summary)
        sink.csv(rows, ("window", "core_lo", "core_hi", "mismatches"))
    return 0 if mismatches == 0 else 1


COMMANDS = {
    "simulate-walk": cmd_simulate_walk,
    "record-graph": cmd_record_graph,
    "sample": cmd_sample,
    "transform": cmd_transform,
    "verify": cmd_verify,
    "roundtrip": cmd_roundtrip,
}


# ---------------------------------------------------------------------------
# Entry points


def run(manifest: ExperimentManifest, flags: Optional[dict] = None) -> int:
    """Execute a manifest; ``flags`` override its parameters.  Returns the exit code."""
    cmd = manifest.command
    p = resolve_params(cmd, flags or {}, manifest)
    kind = manifest.kind
    stem = p["stem"] or (cmd if kind is None else f"{cmd}-{kind}")
    sink = Sink(p["out"], stem)
    rng = np.random.default_rng(p["seed"])
    fn = COMMANDS[cmd]
    code = fn(p, rng, sink) if kind is None else fn(p, rng, sink, kind)
    if sink.dir is not None:
        path = sink.dir / f"{stem}.manifest.json"
        resolved = ExperimentManifest(cmd, {k: v for k, v in p.items() if k != "out"}, kind)
        path.write_text(dumps(resolved.to_json()))
        for w in sink.written + [path]:
            print(f"wrote {w}", file=sys.stderr)
    return code


def _add_params(sp: argparse.ArgumentParser, table: dict) -> None:
    for name, (typ, default, hlp) in table.items():
        flag = "--" + name.replace("_", "-")
        shown = f"{hlp} (default: {default})" if default is not None else hlp
        if typ is bool:
            sp.add_argument(flag, dest=name, action="store_true", default=argparse.SUPPRESS,
                            help=hlp)
        else:
            sp.add_argument(flag, dest=name, type=typ, default=argparse.SUPPRESS, help=shown)


COMMAND_HELP = {
    "simulate-walk": "sample an i.i.d. walk window",
    "record-graph": "build the record graph of a window",
    "sample": "sample a tree law",
    "transform": "apply a forward or backward map, or a construction",
    "verify": "run a statistical check",
    "roundtrip": "check the forward-backward round trip on many windows",
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="recordwalk",
                                 description="Record graphs of skip-free random walks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, table in PARAMS.items():
        sp = sub.add_parser(cmd, help=COMMAND_HELP[cmd])
        if cmd in KIND_ARG:
            name, choices = KIND_ARG[cmd]
            sp.add_argument(name, choices=choices)
        sp.add_argument("--manifest", default=None, help="manifest JSON; flags override it")
        _add_params(sp, {**table, **COMMON})
    rp = sub.add_parser("run", help="execute a manifest file")
    rp.add_argument("manifest")
    _add_params(rp, COMMON)
    return ap


def main(argv: Optional[list] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    cmd = args.pop("command")
    try:
        if cmd == "run":
            manifest = ExperimentManifest.load(args.pop("manifest"))
        else:
            path = args.pop("manifest")
            kind = None
            if cmd in KIND_ARG:
                kind = args.pop(KIND_ARG[cmd][0])
            if path:
                manifest = ExperimentManifest.load(path)
                if manifest.command != cmd:
                    raise ManifestError(f"manifest is for {manifest.command!r}, not {cmd!r}")
                if kind is not None and manifest.kind not in (None, kind):
                    raise ManifestError(f"manifest kind {manifest.kind!r} differs from {kind!r}")
                manifest.kind = kind or manifest.kind
            else:
                manifest = ExperimentManifest(cmd, {}, kind)
        return run(manifest, args)
    except (ManifestError, TreeOverflow, CensoredError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
