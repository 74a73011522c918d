"""Numerical solution of the embedding equations by damped least squares.

Two formulations share one driver:

``cell`` (default)
    Unknowns are the 21 rotation-orbit generators of a cell system W.  The
    residual is relation (i) (W†W = [2]·id) and relation (ii) (the square),
    and U = W∘W† is formed afterwards.  U then satisfies (R1), (R2) and
    (Hecke) by construction, and success is judged on the full U system.
``direct``
    Unknowns are the entries of U itself, with (R2) imposed by sharing storage
    between conjugate pairs; the residual is (R1), (Hecke), (R3) and the gauge
    pins.

Every restart draws its start point from its own generator seeded with
(seed, restart), so a run is reproducible and restarts are independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..arith import DEFAULT_PRECISION
from ..errors import ConvergenceError
from ..gpa import add, coev, compose, ev, identity
from ..graph import OrientedGraph, Path
from .system import GaugeReport, PolySystem, designated_block

FORMULATIONS = ("cell", "direct")


@dataclass(frozen=True)
class SolveConfig:
    precision: int = DEFAULT_PRECISION
    restarts: int = 100
    tol: float = 1e-10
    seed: int = 0
    formulation: str = "cell"
    max_nfev: int = 3000

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")


@dataclass
class SolveResult:
    x: np.ndarray  # U assignment in system variable order
    residual: float
    restarts_used: int
    successes: int
    history: list[tuple[int, float, int]] = field(default_factory=list)  # (restart, residual, nfev)
    w: dict | None = None  # triangle -> complex, for the cell formulation
    gauge: GaugeReport | None = None
    seconds: float = 0.0

    def to_json(self, sys: PolySystem) -> dict:
        return {
            "assignment": [
                {"p": str(p), "q": str(q), "re": float(v.real), "im": float(v.imag)}
                for (p, q), v in zip(sys.variables, self.x)
            ],
            "residual": self.residual,
            "restarts_used": self.restarts_used,
            "gauge_report": self.gauge.to_json() if self.gauge else None,
        }


def _dense(m, rows, cols) -> np.ndarray:
    ri = {p: i for i, p in enumerate(rows)}
    ci = {p: i for i, p in enumerate(cols)}
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    ev_m = m.evaluate(64) if m.is_exact else m
    for (p, q), c in ev_m.items():
        out[ri[q], ci[p]] += complex(c.midpoint)
    return out


class CellModel:
    """Dense index maps turning 21 orbit generators into W, U and the residuals."""

    def __init__(self, graph: OrientedGraph):
        from ..cells import all_triangles, rotate_triangle, triangle_vertices

        self.graph = graph
        g = graph
        self.minus = g.paths("-")
        self.pp = g.paths("++")
        self.pm = g.paths("+-")
        self.ppp = g.paths("+++")
        lam = {v: complex(x.midpoint).real for v, x in g.fp_values(64).items()}
        self.q2 = np.sin(2 * np.pi * 2 / 24) / np.sin(2 * np.pi / 24)

        # orbit generators: designated double-edge orbits first, then the rest in basis order
        seen: set = set()
        reps = []
        for t in all_triangles(g):
            if t in seen:
                continue
            reps.append(t)
            seen.update({t, rotate_triangle(t), rotate_triangle(rotate_triangle(t))})
        v1, v2, (pa, pb) = designated_block(g)
        fixed = []
        for p in (pa, pb):
            tri = next(t for t in all_triangles(g) if (t[0], t[1]) == p.edges and t[2].src == v2)
            rep = next(r for r in reps if tri in (r, rotate_triangle(r), rotate_triangle(rotate_triangle(r))))
            fixed.append((rep, tri))
        self.fixed_triangles = [tri for _, tri in fixed]
        reps = [r for r, _ in fixed] + [r for r in reps if r not in {r for r, _ in fixed}]
        self.generators = reps

        ri = {p: i for i, p in enumerate(self.pp)}
        ci = {p: i for i, p in enumerate(self.minus)}
        rows, cols, gen, fac = [], [], [], []
        self.triangles = []
        for k, t in enumerate(reps):
            f = 1.0
            cur = t
            for _ in range(3):
                e_ab, e_bc, e_ca = cur
                a = e_ab.src
                rows.append(ri[Path("++", a, (e_ab, e_bc))])
                cols.append(ci[Path("-", a, (e_ca,))])
                gen.append(k)
                fac.append(f)
                self.triangles.append(cur)
                _, b, c = triangle_vertices(cur)
                f = f * np.sqrt(lam[c] / lam[b])
                cur = rotate_triangle(cur)
        self.R = np.array(rows)
        self.C = np.array(cols)
        self.K = np.array(gen)
        self.F = np.array(fac)
        self.ngen = len(reps)
        # gauge: the designated orbit generators are fixed to (√[2], 0) up to rotation factors
        self.fixed_values = self._fixed_values(lam)

        # W -> id₊⊗W gather on (+++ rows, +- cols)
        P3 = {p: i for i, p in enumerate(self.ppp)}
        PM = {p: i for i, p in enumerate(self.pm)}
        xi = -np.ones((len(self.ppp), len(self.pm)), dtype=np.int64)
        for e in g.edges:
            head = Path("+", e.src, (e,))
            for p in g.paths("-", e.dst):
                for q in g.paths("++", e.dst, p.end):
                    xi[P3[head.concat(q)], PM[head.concat(p)]] = ri[q] * len(self.minus) + ci[p]
        self.XI = xi
        # U -> U⊗id₊ gather on (+++, +++)
        n2 = len(self.pp)
        ui = -np.ones((len(self.ppp), len(self.ppp)), dtype=np.int64)
        for e in g.edges:
            tail = Path("+", e.src, (e,))
            for p in g.paths("++", None, e.src):
                for q in g.paths("++", p.start, e.src):
                    ui[P3[q.concat(tail)], P3[p.concat(tail)]] = ri[q] * n2 + ri[p]
        self.UI = ui
        T = add(identity(g, "+-"), compose(coev(g, "+-"), ev(g, "+-")))
        self.T = _dense(T, self.pm, self.pm)

    def _fixed_values(self, lam):
        """Generator values realizing the designated block diag([2], 0)."""
        vals = {}
        for k in range(2):
            tri = self.fixed_triangles[k]
            # W on the designated triangle itself: (√[2], 0)
            target = np.sqrt(self.q2) if k == 0 else 0.0
            idx = [i for i, t in enumerate(self.triangles) if t == tri][0]
            vals[k] = target / self.F[idx]
        return vals

    def w_matrix(self, x: np.ndarray) -> np.ndarray:
        m = np.zeros((len(self.pp), len(self.minus)), dtype=complex)
        m[self.R, self.C] = self.F * x[self.K]
        return m

    def complete(self, xr: np.ndarray) -> np.ndarray:
        x = xr[: self.ngen] + 1j * xr[self.ngen :]
        for k, v in self.fixed_values.items():
            x[k] = v
        return x

    def residual(self, xr: np.ndarray) -> np.ndarray:
        x = self.complete(xr)
        W = self.w_matrix(x)
        U = W @ W.conj().T
        X = np.append(W.ravel(), 0)[self.XI]
        UL = np.append(U.ravel(), 0)[self.UI]
        r1 = (W.conj().T @ W - self.q2 * np.eye(W.shape[1])).ravel()
        r2 = (X.conj().T @ UL @ X - self.T).ravel()
        r = np.concatenate([r1, r2])
        return np.concatenate([r.real, r.imag])

    def u_vector(self, x: np.ndarray, sys: PolySystem) -> np.ndarray:
        W = self.w_matrix(x)
        U = W @ W.conj().T
        ri = {p: i for i, p in enumerate(self.pp)}
        return np.array([U[ri[q], ri[p]] for p, q in sys.variables])

    def w_dict(self, x: np.ndarray) -> dict:
        W = self.w_matrix(x)
        return {t: W[r, c] for t, r, c in zip(self.triangles, self.R, self.C)}


class DirectModel:
    """Entries of U with conjugate pairs sharing storage."""

    def __init__(self, sys: PolySystem):
        self.sys = sys
        idx = sys.index
        self.diag = []
        self.pairs = []
        for (p, q), i in idx.items():
            if p == q:
                self.diag.append(i)
            elif p < q:
                self.pairs.append((i, idx[(q, p)]))
        self.nparam = len(self.diag) + 2 * len(self.pairs)
        self.tags = {"R1r", "R1l", "Hecke", "R3", "gauge"}

    def complete(self, xr: np.ndarray) -> np.ndarray:
        x = np.zeros(self.sys.nvars, dtype=complex)
        nd = len(self.diag)
        x[self.diag] = xr[:nd]
        np_ = len(self.pairs)
        z = xr[nd : nd + np_] + 1j * xr[nd + np_ :]
        a = np.array([i for i, _ in self.pairs])
        b = np.array([j for _, j in self.pairs])
        x[a] = z
        x[b] = np.conj(z)
        return x

    def residual(self, xr: np.ndarray) -> np.ndarray:
        r = self.sys.evaluate(self.complete(xr), self.tags)
        return np.concatenate([r.real, r.imag])


def _start(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    """Uniform in the disk of the given radius, per complex unknown."""
    r = radius * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0, 2 * np.pi, size=n)
    z = r * np.exp(1j * th)
    return z


def solve_numeric(sys: PolySystem, cfg: SolveConfig = SolveConfig(), progress=None) -> SolveResult:
    """Random restarts of Levenberg–Marquardt until the U system is solved to ``cfg.tol``.

    Raises ConvergenceError carrying the best residual when no restart succeeds.
    """
    t0 = time.time()
    if sys.gauge is None:
        from .system import gauge_fix

        sys = gauge_fix(sys)
    radius = float(np.sin(2 * np.pi * 2 / 24) / np.sin(2 * np.pi / 24))
    model = CellModel(sys.graph) if cfg.formulation == "cell" else DirectModel(sys)
    best = None
    history = []
    for k in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, k])
        if cfg.formulation == "cell":
            z = _start(rng, model.ngen, radius)
            x0 = np.concatenate([z.real, z.imag])
        else:
            nd = len(model.diag)
            d = rng.uniform(-radius, radius, size=nd)
            z = _start(rng, len(model.pairs), radius)
            x0 = np.concatenate([d, z.real, z.imag])
        sol = least_squares(
            model.residual, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=cfg.max_nfev
        )
        if cfg.formulation == "cell":
            xc = model.complete(sol.x)
            u = model.u_vector(xc, sys)
        else:
            u = model.complete(sol.x)
            xc = None
        res = sys.max_residual(u)
        history.append((k, res, int(sol.nfev)))
        if progress:
            progress(k, res, int(sol.nfev))
        if best is None or res < best[0]:
            best = (res, u, xc)
        if res < cfg.tol:
            break
    res, u, xc = best
    successes = sum(1 for _, r, _ in history if r < cfg.tol)
    result = SolveResult(
        u,
        res,
        len(history),
        successes,
        history,
        model.w_dict(xc) if xc is not None else None,
        sys.gauge,
        time.time() - t0,
    )
    if res >= cfg.tol:
        raise ConvergenceError(
            f"no restart reached residual {cfg.tol:g} in {cfg.restarts} attempts (best {res:.3g})", res, result
        )
    return result


def magnitudes(x: np.ndarray, cluster: float = 1e-6) -> list[float]:
    """Distinct entry magnitudes (gauge invariant once the designated block is fixed)."""
    vals = np.sort(np.abs(np.asarray(x)))
    out: list[float] = []
    for v in vals:
        if not out or v - out[-1] > cluster:
            out.append(float(v))
    return out
