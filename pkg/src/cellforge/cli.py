"""Command-line front end: ``cellforge {verify,solve,recognize,export,report}``.

Exit codes: 0 success, 1 a check failed, 2 a check stayed undecided at the
precision cap, 3 the numeric solver did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3
COMMANDS = ("verify", "solve", "recognize", "export", "report")

log = logging.getLogger("cellforge")


@dataclass
class RunConfig:
    command: str
    precision: int = 256
    tol_exponent: int = 100
    seed: int = 0
    graph: str | None = None
    cells: str | None = None
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    report: str | None = None
    verbose: int = 0
    threads: int | None = None
    restarts: int = 100
    solve_tol: float = 1e-10
    formulation: str = "cell"
    recognize: bool = False
    bound: int = 7
    dump: bool = False
    what: str = "all"

    @property
    def tol(self) -> Fraction:
        return Fraction(1, 2**self.tol_exponent)


def parse_tol(text: str) -> int:
    """Accept ``2^-100``, ``2**-100`` or ``100`` and return the exponent k of 2⁻ᵏ."""
    t = text.strip().replace("**", "^").replace(" ", "")
    if t.startswith("2^"):
        t = t[2:]
    try:
        k = int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance must look like 2^-k, got {text!r}") from None
    k = abs(k)
    if k == 0:
        raise argparse.ArgumentTypeError("tolerance exponent must be nonzero")
    return k


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=256, help="working precision in bits (default 256)")
    common.add_argument("--tol", type=parse_tol, default=100, metavar="2^-k", help="certification tolerance (default 2^-100)")
    common.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    common.add_argument("--graph", help="graph JSON (default: bundled E4^12)")
    common.add_argument("--cells", help="cell-system JSON (default: bundled W)")
    common.add_argument("--out", help="output path")
    common.add_argument("--threads", type=int, help="cap on numeric worker threads")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="cellforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="certify the bundled data and every relation")
    v.add_argument("--report", help="also write a JSON report to this path")

    s = sub.add_parser("solve", parents=[common], help="numerically solve the gauge-fixed system for U")
    s.add_argument("--restarts", type=int, default=100)
    s.add_argument("--solve-tol", type=float, default=1e-10, help="residual threshold for success")
    s.add_argument("--formulation", choices=("cell", "direct"), default="cell")
    s.add_argument("--recognize", action="store_true", help="annotate magnitudes with closed forms")
    s.add_argument("--bound", type=int, default=7, help="recognition dictionary size bound")

    r = sub.add_parser("recognize", parents=[common], help="guess closed forms for numbers")
    r.add_argument("inputs", nargs="*", help="numbers, or files of numbers ('-' for stdin)")
    r.add_argument("--bound", type=int, default=7)
    r.add_argument("--dump", action="store_true", help="write the whole dictionary (size, text, value)")

    e = sub.add_parser("export", parents=[common], help="write graph, W, U and blocks as JSON")
    e.add_argument("what", nargs="?", default="all", choices=("all", "graph", "w", "u", "blocks"))

    rp = sub.add_parser("report", parents=[common], help="full JSON verification report")
    rp.add_argument("--report", help=argparse.SUPPRESS)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.command)
    for name in ("precision", "seed", "graph", "cells", "out", "verbose", "threads"):
        setattr(cfg, name, getattr(ns, name))
    cfg.tol_exponent = ns.tol
    for name in ("report", "restarts", "formulation", "recognize", "bound", "dump", "what", "inputs"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "solve_tol"):
        cfg.solve_tol = ns.solve_tol
    return cfg


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _load(cfg: RunConfig):
    from .cells import cell_system_from_json, load_w
    from .data import load_json
    from .graph import e412, load_graph

    g = load_graph(cfg.graph) if cfg.graph else e412()
    if cfg.cells or cfg.graph:
        w = cell_system_from_json(load_json(cfg.cells or "w_e412.json"), g, check=False)
    else:
        w = load_w()
    return g, w


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


@dataclass
class Row:
    name: str
    count: int
    max_residual: float
    status: str
    detail: str = ""

    def line(self) -> str:
        tail = f"  {self.detail}" if self.detail else ""
        return f"{self.name:<10} {self.count:>6}  {self.max_residual:>10.3e}  {self.status}{tail}"

    def to_json(self) -> dict:
        return {"relation": self.name, "count": self.count, "max_residual_upper": self.max_residual, "status": self.status, "detail": self.detail}


def _status_of(residuals, tol, prec) -> str:
    from .arith.scalar import to_arb, working_precision
    from .relations import FAIL, INDETERMINATE, PASS

    if all(r.certifies_zero(tol) for r in residuals):
        return PASS
    with working_precision(prec):
        if any(bool(r.ball.abs_lower() > to_arb(tol, prec)) for r in residuals):
            return FAIL
    return INDETERMINATE


def run_checks(cfg: RunConfig) -> list[Row]:
    """Every verification step, in order, as table rows."""
    from .arith import qint
    from .cells import (
        as_morphism,
        block,
        build_u,
        closure_residuals,
        compare_block,
        printed_idempotency_defect,
        published_blocks,
    )
    from .graph import fp_residuals
    from .relations import FAIL, PASS, check_hecke_suite, check_kuperberg, check_kw_aux
    from .solver import designated_block

    prec, tol = cfg.precision, cfg.tol
    g, w = _load(cfg)
    rows: list[Row] = []

    def add_scalar_row(name, res, detail=""):
        res = list(res)
        worst = max((r.abs_upper() for r in res), default=0.0)
        rows.append(Row(name, len(res), worst, _status_of(res, tol, prec), detail))

    add_scalar_row("FP", [r for _, _, r in fp_residuals(g, prec)])
    add_scalar_row("closure", [r for _, r in closure_residuals(w, prec)])
    wm = as_morphism(w)  # exact, so an undecided check can be repeated at higher precision
    for rep in check_kuperberg(wm, prec, tol):
        rows.append(Row(rep.name, rep.count, rep.max_residual.abs_upper(), rep.status))
    u = build_u(w)
    ue = u.evaluate(prec)
    for rep in check_hecke_suite(u, prec, tol):
        rows.append(Row(rep.name, rep.count, rep.max_residual.abs_upper(), rep.status))
    for rep in check_kw_aux(wm, u, prec, tol):
        rows.append(Row(rep.name, rep.count, rep.max_residual.abs_upper(), rep.status))
    try:
        v1, v2, _ = designated_block(g)
        tr = block(ue, v1, v2).trace(prec) - qint(2).evaluate(prec)
        add_scalar_row(f"tr U{v1},{v2}", [tr])
    except Exception as exc:  # a graph without the designated block
        rows.append(Row("trace", 0, 0.0, FAIL, str(exc)))

    if g.name == "E4^12" or not cfg.graph:
        entries = 0
        worst = 0.0
        mismatched = []
        for pb in published_blocks():
            diffs = compare_block(block(ue, pb.v1, pb.v2), pb, prec)
            entries += len(diffs)
            worst = max([worst] + [d.abs_upper() for *_, d in diffs])
            bad = [(i, j) for i, j, d in diffs if not d.certifies_zero(tol)]
            if bad:
                mismatched.append((pb, bad))
        if not mismatched:
            rows.append(Row("blocks", entries, worst, PASS))
        else:
            # a printed block that is itself not idempotent up to [2] cannot be a block of any U
            misprints = all(printed_idempotency_defect(pb, prec).abs_lower() > 0 for pb, _ in mismatched)
            where = "; ".join(
                f"U{pb.v1},{pb.v2} at " + ",".join(f"({i + 1},{j + 1})" for i, j in bad) for pb, bad in mismatched
            )
            if misprints:
                rows.append(Row("blocks", entries, worst, "misprint", f"printed block fails M²=[2]M: {where}"))
            else:
                rows.append(Row("blocks", entries, worst, FAIL, where))
    return rows


def _exit_code(rows: list[Row]) -> int:
    from .relations import FAIL, INDETERMINATE

    if any(r.status == FAIL for r in rows):
        return EXIT_FAIL
    if any(r.status == INDETERMINATE for r in rows):
        return EXIT_INDETERMINATE
    return EXIT_OK


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_verify(cfg: RunConfig) -> int:
    from .errors import CellforgeError
    from .relations import FAIL

    try:
        rows = run_checks(cfg)
    except CellforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{'relation':<10} {'count':>6}  {'max resid':>10}  status   (precision {cfg.precision}, tol 2^-{cfg.tol_exponent})")
    for r in rows:
        print(r.line())
    code = _exit_code(rows)
    first = next((r for r in rows if r.status == FAIL), None)
    if first:
        print(f"first failing relation: {first.name}", file=sys.stderr)
    if cfg.report:
        payload = {"schema": 1, "precision": cfg.precision, "tol_exponent": cfg.tol_exponent, "exit": code, "rows": [r.to_json() for r in rows]}
        Path(cfg.report).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return code


def cmd_report(cfg: RunConfig) -> int:
    from .solver import gauge_report

    rows = run_checks(cfg)
    g, _ = _load(cfg)
    code = _exit_code(rows)
    payload = {
        "schema": 1,
        "precision": cfg.precision,
        "tol_exponent": cfg.tol_exponent,
        "exit": code,
        "rows": [r.to_json() for r in rows],
        "gauge_report": gauge_report(g).to_json() if g.name == "E4^12" or not cfg.graph else None,
    }
    _emit(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", cfg.out)
    return code


def _magnitude_table(mags, recog: bool, bound: int) -> list[dict]:
    out = []
    d = None
    if recog:
        from .solver import default_dictionary, recognize

        d = default_dictionary(bound)
    for m in mags:
        item = {"value": round(m, 12)}
        if d is not None:
            r = recognize(m, d)
            item["match"] = r.text if r else None
        out.append(item)
    return out


def cmd_solve(cfg: RunConfig) -> int:
    from .errors import ConvergenceError
    from .solver import SolveConfig, assemble_system, gauge_fix, magnitudes, solve_numeric

    g, _ = _load(cfg)
    sysm = gauge_fix(assemble_system(g))
    scfg = SolveConfig(cfg.precision, cfg.restarts, cfg.solve_tol, cfg.seed, cfg.formulation)

    def progress(k, res, nfev):
        log.info("restart %d: residual %.3e after %d evaluations", k, res, nfev)

    try:
        res = solve_numeric(sysm, scfg, progress)
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    mags = [m for m in magnitudes(res.x) if m > 1e-9]
    table = _magnitude_table(mags, cfg.recognize, cfg.bound)
    for item in table:
        tail = ""
        if "match" in item:
            tail = f"  {item['match']}" if item["match"] else "  no-match"
        print(f"{item['value']:.6f}{tail}")
    print(f"residual {res.residual:.3e} after {res.restarts_used} restart(s)", file=sys.stderr)
    payload = res.to_json(sysm)
    payload["magnitudes"] = table
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return EXIT_OK


def _read_numbers(inputs: list[str]) -> list[str]:
    toks: list[str] = []
    for item in inputs or ["-"]:
        if item == "-":
            toks += sys.stdin.read().replace(",", " ").split()
        elif Path(item).is_file():
            toks += Path(item).read_text(encoding="utf-8").replace(",", " ").split()
        else:
            toks.append(item)
    return toks


def cmd_recognize(cfg: RunConfig) -> int:
    from .solver import default_dictionary, recognize

    d = default_dictionary(cfg.bound)
    if cfg.dump:
        lines = [f"{size}\t{text}\t{value:.12g}" for size, text, value in d.entries()]
        _emit("\n".join(lines) + "\n", cfg.out)
        return EXIT_OK
    out = []
    for tok in _read_numbers(cfg.inputs):
        try:
            float(tok)
        except ValueError:
            print(f"error: not a number: {tok!r}", file=sys.stderr)
            return EXIT_FAIL
        r = recognize(tok, d)
        out.append(f"{tok}\t{r.text if r else 'no-match'}")
    _emit("\n".join(out) + "\n", cfg.out)
    return EXIT_OK


def cmd_export(cfg: RunConfig) -> int:
    from .cells import as_morphism, build_u, nonempty_blocks

    g, w = _load(cfg)
    payload: dict = {"schema": 1}
    u = build_u(w)
    if cfg.what in ("all", "graph"):
        payload["graph"] = g.to_json()
    if cfg.what in ("all", "w"):
        payload["w"] = w.to_json(closed=True)
        payload["w_morphism"] = as_morphism(w).to_json(cfg.precision)
    if cfg.what in ("all", "u"):
        payload["u"] = u.to_json(cfg.precision)
    if cfg.what in ("all", "blocks"):
        payload["blocks"] = [b.to_json(cfg.precision) for b in nonempty_blocks(u)]
    _emit(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", cfg.out)
    return EXIT_OK


HANDLERS = {"verify": cmd_verify, "solve": cmd_solve, "recognize": cmd_recognize, "export": cmd_export, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    cfg = config_from_args(ns)
    if cfg.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(cfg.threads)
    logging.basicConfig(
        level=logging.DEBUG if cfg.verbose > 1 else logging.INFO if cfg.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return HANDLERS[cfg.command](cfg)
    except BrokenPipeError:  # output piped into a reader that closed early
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
