"""Exact linear completion of a partial assignment.

Once enough entries of U are fixed exactly, many (Hecke) and (R3) equations
have at most one unknown factor per monomial and so become linear.  The
completion runs in two passes over the same decisions:

1. A float planning pass walks the equations in index order and repeatedly
   consumes the first one that has a single unknown with a nonzero
   coefficient.  When no such equation remains, every remaining linear
   equation is stacked and an independent square subsystem is chosen by
   column-pivoted QR.
2. An exact pass replays the plan over QExpr values.  Single-unknown steps are
   a division; the square subsystem is solved by Gaussian elimination whose
   pivots are chosen by magnitude and must certifiably exclude zero.

(R2) is imposed by identification: conj(x_v) of an unknown is read as the
transposed entry x_vᵀ, so every equation stays complex-linear.  The completed
assignment is then checked against the whole system with certified balls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import qr

from ..arith import DEFAULT_PRECISION, DEFAULT_TOLERANCE, ONE, ZERO, QExpr, conj, qsum
from ..arith.qexpr import Evaluator, mul, neg
from ..errors import DivisionByZeroError, InconsistentError, PrecisionError, UnderdeterminedError
from ..arith.scalar import to_arb, working_precision
from ..relations.checks import PRECISION_CAP
from .system import PolySystem, decode

ZERO_COEFF = 1e-9  # float coefficients below this are treated as cancelled while planning


@dataclass
class CompletionResult:
    assignment: dict[int, QExpr]  # variable index -> exact value, total
    steps: list[tuple[int, int]] = field(default_factory=list)  # (equation, variable) single-unknown steps
    block: list[int] = field(default_factory=list)  # variables solved jointly
    block_equations: list[int] = field(default_factory=list)
    max_residual: float = 0.0
    precision: int = DEFAULT_PRECISION

    def values(self, sys: PolySystem) -> list[QExpr]:
        return [self.assignment[i] for i in range(sys.nvars)]

    def morphism(self, sys: PolySystem):
        return sys.morphism(self.values(sys))


def exact_solve(A: list[list[QExpr]], b: list[QExpr], prec: int = DEFAULT_PRECISION) -> list[QExpr]:
    """Solve the square system A x = b over QExpr by Gaussian elimination.

    Pivots are chosen by largest enclosure magnitude and must exclude zero;
    otherwise DivisionByZeroError is raised.
    """
    n = len(A)
    ev = Evaluator(prec)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for col in range(n):
        vals = [ev(M[r][col]) for r in range(col, n)]
        r = col + max(range(len(vals)), key=lambda i: vals[i].abs_lower())
        if not vals[r - col].excludes_zero():
            raise DivisionByZeroError(f"no certified pivot in column {col}")
        M[col], M[r] = M[r], M[col]
        inv_p = ONE / M[col][col]
        for rr in range(col + 1, n):
            f = M[rr][col]
            if f is ZERO or ev(f).certifies_zero(0):
                continue
            m = mul(f, inv_p)
            for c in range(col + 1, n + 1):
                if M[col][c] is not ZERO:
                    M[rr][c] = M[rr][c] - mul(m, M[col][c])
            M[rr][col] = ZERO
    x: list[QExpr] = [ZERO] * n
    for r in range(n - 1, -1, -1):
        s = qsum([M[r][n]] + [neg(mul(M[r][c], x[c])) for c in range(r + 1, n) if M[r][c] is not ZERO])
        x[r] = s / M[r][r]
    return x


def solve_rows(
    rows: list[tuple[dict, QExpr]], unknowns: list, prec: int = DEFAULT_PRECISION
) -> dict:
    """Exact solution of the linear rows Σ c_u·x_u + const = 0 in ``unknowns``.

    Rows with a single live unknown are consumed first, in row order; what is
    left is solved as one square block of independent rows.  Raises
    UnderdeterminedError when the rows leave free directions.
    """
    ev = Evaluator(prec)
    fl = [({u: complex(ev(c).midpoint) for u, c in coeffs.items()}, complex(ev(k).midpoint)) for coeffs, k in rows]
    xf: dict = {}
    xe: dict = {}
    done = [False] * len(rows)
    progressed = True
    while progressed and len(xf) < len(unknowns):
        progressed = False
        for i, (coeffs, const) in enumerate(fl):
            if done[i]:
                continue
            live = [u for u, c in coeffs.items() if u not in xf and abs(c) > ZERO_COEFF]
            if len(live) > 1:
                continue
            done[i] = True
            if not live:
                continue
            u = live[0]
            rest = const + sum(c * xf[v] for v, c in coeffs.items() if v in xf)
            xf[u] = -rest / coeffs[u]
            ec, ek = rows[i]
            a = ec[u]
            if not ev(a).excludes_zero():
                raise DivisionByZeroError(f"pivot for {u!r} in row {i} is not certified nonzero")
            xe[u] = neg(qsum([ek] + [mul(c, xe[v]) for v, c in ec.items() if v in xe])) / a
            progressed = True
    left = [u for u in unknowns if u not in xf]
    if not left:
        return xe
    col = {u: j for j, u in enumerate(left)}
    A, idx = [], []
    for i, (coeffs, _) in enumerate(fl):
        r = np.zeros(len(left), dtype=complex)
        for u, c in coeffs.items():
            if u in col:
                r[col[u]] += c
        if np.abs(r).max(initial=0.0) > ZERO_COEFF:
            A.append(r)
            idx.append(i)
    rank = int(np.linalg.matrix_rank(np.array(A), tol=1e-8)) if A else 0
    if rank < len(left):
        raise UnderdeterminedError(f"rank {rank} for {len(left)} unknowns", len(left) - rank)
    _, _, piv = qr(np.array(A).T, pivoting=True, mode="economic")
    sel = [idx[j] for j in sorted(piv[: len(left)])]
    EA, Eb = [], []
    for i in sel:
        ec, ek = rows[i]
        EA.append([ec.get(u, ZERO) for u in left])
        Eb.append(neg(qsum([ek] + [mul(c, xe[v]) for v, c in ec.items() if v in xe])))
    xe.update(zip(left, exact_solve(EA, Eb, prec)))
    return xe


class _Linearizer:
    """Rows of the system restricted to the current unknowns."""

    def __init__(self, sys: PolySystem):
        self.sys = sys
        self.transpose = {i: sys.index[(q, p)] for i, (p, q) in enumerate(sys.variables)}
        self.mono = [[(m, c) for m, c in e.terms.items()] for e in sys.equations]
        ev = Evaluator(64)
        self.fcoef = [[complex(ev(c).midpoint) for _, c in row] for row in self.mono]

    def factor(self, code: int, known) -> tuple[int | None, object]:
        """(unknown variable, None) or (None, known value) for one factor."""
        v, cj = decode(code)
        if v in known:
            return None, (v, cj)
        if cj:
            t = self.transpose[v]
            if t in known:
                return None, (t, False)  # conj(x_v) = x_vᵀ with x_vᵀ known
            return t, None
        return v, None

    def row(self, i: int, known: set[int]):
        """Linear structure of equation i: list of (unknown or None, coeff index, known factors), or None."""
        out = []
        for k, (mono, _) in enumerate(self.mono[i]):
            unk = None
            facs = []
            for code in mono:
                u, f = self.factor(code, known)
                if u is not None:
                    if unk is not None:
                        return None
                    unk = u
                else:
                    facs.append(f)
            out.append((unk, k, facs))
        return out

    def float_row(self, i, struct, xf) -> tuple[dict[int, complex], complex]:
        coeffs: dict[int, complex] = {}
        const = 0j
        for unk, k, facs in struct:
            t = self.fcoef[i][k]
            for v, cj in facs:
                t *= np.conj(xf[v]) if cj else xf[v]
            if unk is None:
                const += t
            else:
                coeffs[unk] = coeffs.get(unk, 0j) + t
        return coeffs, const

    def exact_row(self, i, struct, xe) -> tuple[dict[int, QExpr], QExpr]:
        coeffs: dict[int, list[QExpr]] = {}
        const: list[QExpr] = []
        for unk, k, facs in struct:
            t = self.mono[i][k][1]
            for v, cj in facs:
                t = mul(t, conj(xe[v]) if cj else xe[v])
            (const if unk is None else coeffs.setdefault(unk, [])).append(t)
        return {u: qsum(ts) for u, ts in coeffs.items()}, qsum(const) if const else ZERO


def _plan(lin: _Linearizer, known: set[int], xf: np.ndarray, nvars: int):
    """Float pass: ordered single-unknown steps, then an optional square block."""
    known = set(known)
    steps: list[tuple[int, int]] = []
    neq = len(lin.sys.equations)
    while len(known) < nvars:
        progressed = False
        for i in range(neq):
            struct = lin.row(i, known)
            if struct is None:
                continue
            coeffs, const = lin.float_row(i, struct, xf)
            live = [u for u, c in coeffs.items() if abs(c) > ZERO_COEFF]
            if len(live) != 1:
                continue
            u = live[0]
            xf[u] = -const / coeffs[u]
            if u == lin.transpose[u]:
                xf[u] = xf[u].real
            known.add(u)
            steps.append((i, u))
            progressed = True
            break
        if not progressed:
            break
    unknown = sorted(set(range(nvars)) - known)
    if not unknown:
        return steps, [], []
    rows, eqs = [], []
    col = {u: j for j, u in enumerate(unknown)}
    for i in range(neq):
        struct = lin.row(i, known)
        if struct is None:
            continue
        coeffs, _ = lin.float_row(i, struct, xf)
        r = np.zeros(len(unknown), dtype=complex)
        for u, c in coeffs.items():
            r[col[u]] += c
        if np.abs(r).max(initial=0.0) > ZERO_COEFF:
            rows.append(r)
            eqs.append(i)
    if not rows:
        raise UnderdeterminedError(f"{len(unknown)} unknowns appear in no linear equation", len(unknown))
    A = np.array(rows)
    rank = int(np.linalg.matrix_rank(A, tol=1e-8 * max(1.0, np.abs(A).max())))
    if rank < len(unknown):
        raise UnderdeterminedError(
            f"linear equations have rank {rank} for {len(unknown)} unknowns", len(unknown) - rank
        )
    _, _, piv = qr(A.T, pivoting=True, mode="economic")
    return steps, unknown, [eqs[j] for j in sorted(piv[: len(unknown)])]


def complete_linear(
    partial: dict[int, QExpr],
    sys: PolySystem,
    prec: int = DEFAULT_PRECISION,
    tol=DEFAULT_TOLERANCE,
) -> CompletionResult:
    """Complete ``partial`` (variable index -> exact value) to a full exact solution.

    Raises UnderdeterminedError with the nullity when the linear equations leave
    free directions, and InconsistentError with the worst certified residual
    when the completed assignment violates some equation.
    """
    n = sys.nvars
    lin = _Linearizer(sys)
    ev = Evaluator(prec)
    xe: dict[int, QExpr] = dict(partial)
    xf = np.zeros(n, dtype=complex)
    for v, e in xe.items():
        xf[v] = complex(ev(e).midpoint)
    steps, block, block_eqs = _plan(lin, set(xe), xf, n)

    known = set(xe)
    for i, u in steps:
        coeffs, const = lin.exact_row(i, lin.row(i, known), xe)
        a = coeffs[u]
        if not ev(a).excludes_zero():
            raise DivisionByZeroError(f"pivot for variable {u} in equation {i} is not certified nonzero")
        xe[u] = neg(const) / a
        known.add(u)
    if block:
        A, b = [], []
        for i in block_eqs:
            coeffs, const = lin.exact_row(i, lin.row(i, known), xe)
            A.append([coeffs.get(u, ZERO) for u in block])
            b.append(neg(const))
        for u, val in zip(block, exact_solve(A, b, prec)):
            xe[u] = val

    result = CompletionResult(xe, steps, block, block_eqs, precision=prec)
    verify_completion(result, sys, prec, tol)
    return result


def verify_completion(result: CompletionResult, sys: PolySystem, prec: int = DEFAULT_PRECISION, tol=DEFAULT_TOLERANCE) -> None:
    """Certify every equation at the completed assignment, doubling precision if undecided."""
    p = prec
    values = result.values(sys)
    while True:
        res = sys.certified_residuals(values, p)
        worst = max(res, key=lambda r: r.abs_lower())
        with working_precision(p):
            exceeded = bool(worst.ball.abs_lower() > to_arb(tol, p))
        result.max_residual = max(r.abs_upper() for r in res)
        result.precision = p
        if all(r.certifies_zero(tol) for r in res):
            return
        if exceeded:
            k = res.index(worst)
            e = sys.equations[k]
            raise InconsistentError(
                f"equation {e.tag}{e.key} has residual {worst.abs_lower():.3e}", worst.abs_lower()
            )
        if p * 2 > PRECISION_CAP:
            raise PrecisionError(f"completion undecided at {p} bits (max residual {result.max_residual:.3e})")
        p *= 2
