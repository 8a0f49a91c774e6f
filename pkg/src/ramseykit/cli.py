"""Command line front end.

Exit codes: 0 success, 10 infeasibility proved, 20 indeterminate, 30 budget
exhausted, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import shutil
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from . import enumeration, flags, heuristics, ilp
from .graphs import ColoredCompleteGraph, GraphFormatError, parse_graph, serialize_graph
from .patterns import score
from .problems import ProblemSpec, Variant, parse_problem

EXIT_OK = 0
EXIT_INFEASIBLE = 10
EXIT_INDETERMINATE = 20
EXIT_BUDGET = 30
EXIT_USAGE = 2

log = logging.getLogger("ramseykit")


@dataclass
class ResultRecord:
    problem: str
    engine: str
    lower: Optional[int] = None
    witness: Optional[str] = None
    upper: Optional[int] = None
    certificate: Optional[str] = None
    runtime: float = 0.0

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def write(self, out: Path) -> Path:
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{enumeration.slug(self.problem)}.{self.engine}.json"
        path.write_text(json.dumps(asdict(self), sort_keys=True, indent=1) + "\n")
        return path


def _write_witness(out: Path, problem: ProblemSpec, g: ColoredCompleteGraph, tag: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{enumeration.slug(problem.id)}_{tag}_witness_n{g.n:02d}.txt"
    path.write_text(f"# problem={problem.id} n={g.n}\n{serialize_graph(g)}\n")
    return path


def _value_text(problem: ProblemSpec, lower, upper) -> str:
    if lower is not None and lower == upper:
        return f"{problem.id} = {lower}"
    if upper is None:
        return f"{problem.id} >= {lower}"
    if lower is None:
        return f"{problem.id} <= {upper}"
    return f"{problem.id} in [{lower}, {upper}]"


# --------------------------------------------------------------------------
# commands


def cmd_enumerate(args) -> int:
    problem = parse_problem(args.problem)
    out = Path(args.out)
    t0 = time.monotonic()
    cert, levels = enumeration.run_enumeration(
        problem, args.n_max, out, budget_seconds=args.budget_seconds, max_level_size=args.max_level_size
    )
    dt = time.monotonic() - t0
    print("counts " + " ".join(map(str, cert.counts)))
    if cert.kind == "exhaustion":
        wit = None
        if len(levels) >= 2 and levels[-2].count:
            wit = _write_witness(out, problem, levels[-2].representatives[0], "enum")
        rec = ResultRecord(problem.id, "enumerate", cert.n if wit or cert.n == 1 else None,
                           str(wit.name) if wit else None, cert.n, "exhaustion", dt)
        rec.write(out)
        print(f"{_value_text(problem, rec.lower, rec.upper)} (exhaustion)")
        return EXIT_OK
    wit = _write_witness(out, problem, cert.witness, "enum")
    rec = ResultRecord(problem.id, "enumerate", cert.lower_bound, wit.name, None, None, dt)
    rec.write(out)
    print(f"{_value_text(problem, rec.lower, None)} (witness)")
    return EXIT_OK if cert.complete else EXIT_BUDGET


def cmd_tabu(args) -> int:
    problem = parse_problem(args.problem)
    if args.n is None:
        raise SystemExit("tabu needs --n")
    out = Path(args.out)
    n = args.n[0]
    cfg = heuristics.TabuConfig(n, c_max=args.c_max, max_iters=args.iters, seed=args.seed, restarts=args.restarts)
    t0 = time.monotonic()
    res = heuristics.tabu_search(problem, cfg)
    dt = time.monotonic() - t0
    out.mkdir(parents=True, exist_ok=True)
    for tr in res.traces:
        tr.write_csv(out / f"{enumeration.slug(problem.id)}_tabu_n{n:02d}_seed{args.seed}_r{tr.restart}.csv")
    if not res.found:
        print(f"{problem.id}: no witness on {n} vertices after {len(res.traces)} restarts")
        return EXIT_INDETERMINATE
    wit = _write_witness(out, problem, res.witness, "tabu")
    ResultRecord(problem.id, "tabu", n + 1, wit.name, None, None, dt).write(out)
    print(f"{_value_text(problem, n + 1, None)} (tabu witness {wit.name})")
    return EXIT_OK


def cmd_dfs(args) -> int:
    problem = parse_problem(args.problem)
    out = Path(args.out)
    t0 = time.monotonic()
    ns = args.n if args.n else list(range(1, args.n_max + 1))
    lower = upper = None
    wit_path = None
    status = EXIT_OK
    for n in ns:
        r = heuristics.dfs_decide(problem, n, args.node_budget)
        print(f"n={n}: {r.status} ({r.nodes} nodes)")
        if r.status == "feasible":
            if lower is None or n + 1 > lower:
                lower = n + 1
                wit_path = _write_witness(out, problem, r.witness, "dfs").name
        elif r.status == "infeasible":
            upper = n if upper is None else min(upper, n)
            if not args.n:
                break
        else:
            status = EXIT_INDETERMINATE
            break
    dt = time.monotonic() - t0
    if lower is not None and upper is not None and lower > upper:
        raise RuntimeError("inconsistent dfs results")
    if lower is None and upper is None:
        return status
    ResultRecord(problem.id, "dfs", lower, wit_path, upper, "exhaustion" if upper else None, dt).write(out)
    print(_value_text(problem, lower, upper))
    if status == EXIT_OK and upper is not None and lower != upper:
        return EXIT_INFEASIBLE
    return status


def _build_model(problem: ProblemSpec, n: int, formulation: str, c_max) -> ilp.IlpModel:
    if formulation == "ordered":
        if problem.variant is not Variant.OR:
            raise ValueError("the ordered formulation is for OR problems")
        return ilp.gen_ordered_or(problem.g, n)
    if problem.variant is not Variant.CR:
        raise ValueError(f"the {formulation} formulation is for CR problems")
    if formulation == "naive":
        return ilp.gen_naive_cr(problem.g, problem.h, n, c_max)
    return ilp.gen_colorblind_cr(problem.g, problem.h, n)


def cmd_ilp(args) -> int:
    problem = parse_problem(args.problem)
    if args.n is None:
        raise SystemExit("ilp needs --n")
    n = args.n[0]
    out = Path(args.out)
    formulation = args.formulation or ("ordered" if problem.variant is Variant.OR else "colorblind")
    fmt = args.format or "lp"
    if fmt not in ("lp", "cnf"):
        raise ValueError("ilp exports lp or cnf")
    t0 = time.monotonic()
    model = _build_model(problem, n, formulation, args.c_max)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{enumeration.slug(problem.id)}_{formulation}_n{n:02d}.{fmt}"
    path.write_text(ilp.export_lp(model) if fmt == "lp" else ilp.export_cnf(model))
    print(f"wrote {path} ({model.num_vars} variables, {len(model.rows)} rows)")
    if not args.solver:
        return EXIT_OK
    if args.solver == "scipy":
        res = ilp.solve_with_scipy(model, args.budget_seconds)
    else:
        if shutil.which(args.solver) is None and not Path(args.solver).exists():
            raise FileNotFoundError(f"solver {args.solver!r} not found")
        res = ilp.SolverBridge(args.solver, args.solver_args, fmt, args.budget_seconds).solve(model)
    dt = time.monotonic() - t0
    print(f"solver status: {res.status}")
    if res.status == "feasible":
        if not res.values:
            return EXIT_OK
        g = ilp.coloring_from_assignment(model, res.values)
        if score(g, problem) != 0:
            raise RuntimeError("solver assignment is not a feasible coloring")
        wit = _write_witness(out, problem, g, "ilp")
        ResultRecord(problem.id, "ilp", n + 1, wit.name, None, None, dt).write(out)
        return EXIT_OK
    if res.status == "infeasible":
        ResultRecord(problem.id, "ilp", None, None, n, "external-ILP", dt).write(out)
        return EXIT_INFEASIBLE
    return EXIT_INDETERMINATE


def cmd_flags(args) -> int:
    problem = parse_problem(args.problem)
    if args.n is None:
        raise SystemExit("flags needs --n")
    N = args.n[0]
    out = Path(args.out)
    t0 = time.monotonic()
    bp = flags.BlowupProblem.of(problem)
    sdp = flags.assemble_sdp(bp, N, threads=args.threads)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{enumeration.slug(problem.id)}_flags_N{N}.dat-s"
    path.write_text(flags.export_sdp(sdp))
    print(f"wrote {path} (basis {len(sdp.basis)}, blocks {[len(b.flags) for b in sdp.blocks]})")
    if not args.solver:
        return EXIT_OK
    if args.solver == "cvxopt":
        sol = flags.solve_sdp_cvxopt(sdp)
    else:
        if shutil.which(args.solver) is None and not Path(args.solver).exists():
            raise FileNotFoundError(f"solver {args.solver!r} not found")
        sol = flags.ExternalSdpSolver(args.solver, args.solver_args, args.budget_seconds).solve(sdp)
    rep = flags.bound_report(sdp, sol)
    dt = time.monotonic() - t0
    (out / f"{enumeration.slug(problem.id)}_flags_N{N}_bound.json").write_text(rep.to_text())
    print(rep.to_text().strip())
    if rep.bound is None:
        return EXIT_INDETERMINATE
    ResultRecord(problem.id, "flags", None, None, rep.bound, "SDP-nonrigorous", dt).write(out)
    return EXIT_OK


def read_graphs(path: Path) -> list[ColoredCompleteGraph]:
    """Graphs from witness, level or certificate files."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line.startswith("witness "):
            line = line[len("witness "):]
        if not line or not line[0].isdigit():
            continue
        out.append(parse_graph(line))
    return out


def cmd_verify(args) -> int:
    problem = parse_problem(args.problem)
    graphs = read_graphs(Path(args.graph))
    if not graphs:
        raise GraphFormatError(f"no graphs in {args.graph}")
    worst = 0
    for g in graphs:
        s = score(g, problem)
        print(f"n={g.n}: {'feasible' if s == 0 else 'infeasible'}, score {s}")
        worst = max(worst, s)
    return EXIT_OK if worst == 0 else EXIT_INFEASIBLE


def build_table(results: Path) -> tuple[str, str]:
    """Markdown and CSV summaries of every result record in a directory."""
    merged: dict[str, dict] = {}
    for path in sorted(Path(results).glob("*.json")):
        try:
            rec = json.loads(path.read_text())
        except json.JSONDecodeError:
            continue
        if "engine" not in rec or "problem" not in rec:
            continue
        m = merged.setdefault(rec["problem"], {"lower": None, "upper": None, "certs": set(), "engines": set()})
        if rec.get("lower") is not None:
            m["lower"] = rec["lower"] if m["lower"] is None else max(m["lower"], rec["lower"])
        if rec.get("upper") is not None:
            m["upper"] = rec["upper"] if m["upper"] is None else min(m["upper"], rec["upper"])
            m["certs"].add(rec.get("certificate") or "")
        m["engines"].add(rec["engine"])
    md = ["| problem | value | lower | upper | certificate | engines |", "|---|---|---|---|---|---|"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["problem", "lower", "upper", "sharp", "certificate", "engines"])
    for pid in sorted(merged):
        m = merged[pid]
        lo, up = m["lower"], m["upper"]
        sharp = lo is not None and lo == up
        if sharp:
            value = str(lo)
        else:
            value = f"[{lo if lo is not None else '?'}, {up if up is not None else '?'}]"
        certs = ",".join(sorted(c for c in m["certs"] if c))
        engines = ",".join(sorted(m["engines"]))
        md.append(f"| {pid} | {value} | {lo if lo is not None else ''} | {up if up is not None else ''} | {certs} | {engines} |")
        w.writerow([pid, "" if lo is None else lo, "" if up is None else up, int(sharp), certs, engines])
    return "\n".join(md) + "\n", buf.getvalue()


def cmd_table(args) -> int:
    results = Path(args.results or args.out)
    md, csv_text = build_table(results)
    (results / "table.md").write_text(md)
    (results / "table.csv").write_text(csv_text)
    sys.stdout.write(md)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", help="shorthand such as 'ER(C3)', 'CR(3,4)', a preset name or a YAML file")
    common.add_argument("--n", type=int, nargs="+", help="number of vertices (flags: basis size N)")
    common.add_argument("--n-max", type=int, default=30)
    common.add_argument("--c-max", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=1)
    common.add_argument("--iters", type=int, default=100_000)
    common.add_argument("--formulation", choices=["naive", "colorblind", "ordered"])
    common.add_argument("--format", choices=["lp", "cnf", "sdpa"])
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--budget-seconds", type=float, default=None)
    common.add_argument("--out", default="results")
    common.add_argument("--max-level-size", type=int, default=None)
    common.add_argument("--node-budget", type=int, default=None)
    common.add_argument("--solver", help="external solver executable ('scipy' or 'cvxopt' for in-process)")
    common.add_argument("--solver-args", default="{model} {solution}")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ramseykit", description="Small Ramsey-type numbers by search, ILP and flag algebras")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [
        ("enumerate", cmd_enumerate, "complete enumeration up to --n-max"),
        ("tabu", cmd_tabu, "tabu search for a witness on --n vertices"),
        ("dfs", cmd_dfs, "exact two-color decision at each --n (or scan to --n-max)"),
        ("ilp", cmd_ilp, "export (and optionally solve) an integer program"),
        ("flags", cmd_flags, "assemble and export the flag SDP on --n vertices"),
        ("verify", cmd_verify, "re-check stored graphs against a problem"),
        ("table", cmd_table, "summarize result records in a directory"),
    ]:
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        if name == "verify":
            sp.add_argument("--graph", required=True)
        if name == "table":
            sp.add_argument("results", nargs="?")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command not in ("table",) and not args.problem:
        print("error: --problem is required", file=sys.stderr)
        return EXIT_USAGE
    if args.solver_args == "{model} {solution}" and args.command == "flags":
        args.solver_args = "{problem} {solution}"
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
