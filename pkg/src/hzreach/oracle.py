"""Exact semantic queries on hybrid zonotopes.

Fixing the binary factors of a hybrid zonotope leaves a constrained
zonotope ("leaf"); every query below reduces to linear programs over
leaves.  Small binary counts are enumerated exhaustively; larger ones
are answered through HiGHS mixed-integer programs (binaries mapped to
{0,1}) or a depth-first scan with relaxation pruning, which agree with
enumeration and avoid the 2^nb blowup.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import lp
from .setops import HybridZonotope, MatrixZonotope

DEFAULT_BIN_CAP = 20
_ENUM_LIMIT = 10  # exhaustive enumeration up to 2**_ENUM_LIMIT leaves


class EmptySetError(ValueError):
    """Raised when a query needs a nonempty set."""


class EnumerationCapError(RuntimeError):
    """Raised when a set has more binary factors than the configured cap."""


@dataclass(frozen=True)
class LeafProblem:
    """Constrained zonotope obtained by fixing the binary factors."""

    generators: np.ndarray
    center: np.ndarray
    con_matrix: np.ndarray
    con_rhs: np.ndarray
    assignment: np.ndarray


def leaf_problem(z: HybridZonotope, assignment) -> LeafProblem:
    xb = np.asarray(assignment, dtype=float).ravel()
    if xb.size != z.nb:
        raise ValueError("assignment length must equal the binary factor count")
    return LeafProblem(
        generators=z.Gc,
        center=z.c + z.Gb @ xb,
        con_matrix=z.Ac,
        con_rhs=z.b - z.Ab @ xb,
        assignment=xb,
    )


def _check_cap(z: HybridZonotope, bin_cap: int) -> None:
    if z.nb > bin_cap:
        raise EnumerationCapError(
            f"set has {z.nb} binary factors, cap is {bin_cap}"
        )


def _all_assignments(nb: int) -> np.ndarray:
    if nb == 0:
        return np.zeros((1, 0))
    return np.array(list(itertools.product((1.0, -1.0), repeat=nb)))


def _prescreen(z: HybridZonotope, S: np.ndarray, tol: float) -> np.ndarray:
    """Necessary feasibility: |b - Ab xb| per row within reach of Ac's box image."""
    if z.nc == 0:
        return np.ones(S.shape[0], dtype=bool)
    rhs = z.b[None, :] - S @ z.Ab.T
    cap = np.abs(z.Ac).sum(axis=1)
    return np.all(np.abs(rhs) <= cap[None, :] + tol + 1e-12, axis=1)


def _leaf_feasible(z, xb, tol, engine) -> bool:
    rhs = z.b - z.Ab @ xb
    if z.nc == 0:
        return True
    res = _feasibility_lp(z.Ac, rhs, tol, engine)
    return res.optimal


def _feasibility_lp(A, rhs, tol, engine) -> lp.LPResult:
    """Box feasibility of A @ xi = rhs, allowing a per-row residual of tol."""
    m, n = A.shape
    lb = -np.ones(n)
    ub = np.ones(n)
    if tol > 0.0 and m > 0:
        # Unit-coefficient slack columns bounded by +-tol keep the system
        # well scaled (a tol-scaled column would fight the pivot tolerance).
        A = np.hstack([A, np.eye(m)])
        lb = np.concatenate([lb, -tol * np.ones(m)])
        ub = np.concatenate([ub, tol * np.ones(m)])
    return lp.solve_box_lp(np.zeros(A.shape[1]), A, rhs, lb, ub, engine=engine)


def _milp_system(z: HybridZonotope, extra_rows=None, extra_rhs=None, tol=0.0):
    """Equality system over (xc, beta) with xb = 2*beta - 1 and beta in {0,1}."""
    A_top = np.hstack([z.Ac, 2.0 * z.Ab])
    rhs_top = z.b + z.Ab @ np.ones(z.nb)
    rows = [A_top]
    rhs = [rhs_top]
    if extra_rows is not None:
        rows.append(np.hstack([extra_rows[0], 2.0 * extra_rows[1]]))
        rhs.append(extra_rhs + extra_rows[1] @ np.ones(z.nb))
    A = np.vstack(rows)
    r = np.concatenate(rhs)
    m = A.shape[0]
    lb = np.concatenate([-np.ones(z.ng), np.zeros(z.nb)])
    ub = np.ones(z.ng + z.nb)
    if tol > 0.0 and m > 0:
        A = np.hstack([A, np.eye(m)])
        lb = np.concatenate([lb, -tol * np.ones(m)])
        ub = np.concatenate([ub, tol * np.ones(m)])
    integrality = np.zeros(A.shape[1], dtype=int)
    integrality[z.ng : z.ng + z.nb] = 1
    return A, r, lb, ub, integrality


def membership(
    z: HybridZonotope,
    x,
    tol: float = 1e-9,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    enum_limit: int | None = None,
) -> bool:
    """True iff some binary assignment admits in-box factors reproducing x.

    Both the generator equations and the constraint rows may be violated
    by at most tol per row.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != z.dim:
        raise ValueError("point dimension does not match the set")
    _check_cap(z, bin_cap)
    limit = _ENUM_LIMIT if enum_limit is None else enum_limit
    if z.nb <= limit:
        S = _all_assignments(z.nb)
        keep = _prescreen(z, S, tol)
        A = np.vstack([z.Gc, z.Ac])
        for xb in S[keep]:
            rhs = np.concatenate([x - z.c - z.Gb @ xb, z.b - z.Ab @ xb])
            if _feasibility_lp(A, rhs, tol, engine).optimal:
                return True
        return False
    A, r, lb, ub, integrality = _milp_system(
        z, extra_rows=(z.Gc, z.Gb), extra_rhs=x - z.c, tol=tol
    )
    res = lp.solve_box_milp(np.zeros(A.shape[1]), A, r, lb, ub, integrality)
    return res.optimal


def support(
    z: HybridZonotope,
    d,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    enum_limit: int | None = None,
) -> float:
    """max_{x in z} d @ x, or -inf when the set is empty."""
    d = np.asarray(d, dtype=float).ravel()
    if d.size != z.dim:
        raise ValueError("direction dimension does not match the set")
    if not np.any(d):
        raise ValueError("support direction must be nonzero")
    _check_cap(z, bin_cap)
    if z.nc == 0:
        # Unconstrained factors decouple; closed form.
        return float(d @ z.c + np.abs(d @ z.Gc).sum() + np.abs(d @ z.Gb).sum())
    dGc = d @ z.Gc
    limit = _ENUM_LIMIT if enum_limit is None else enum_limit
    if z.nb <= limit:
        S = _all_assignments(z.nb)
        keep = _prescreen(z, S, 0.0)
        best = -np.inf
        for xb in S[keep]:
            res = lp.solve_box_lp(
                dGc, z.Ac, z.b - z.Ab @ xb,
                -np.ones(z.ng), np.ones(z.ng), engine=engine,
            )
            if res.optimal:
                best = max(best, res.value + float(d @ (z.c + z.Gb @ xb)))
        return best
    A, r, lb, ub, integrality = _milp_system(z)
    c = np.concatenate([dGc, 2.0 * (d @ z.Gb)])
    res = lp.solve_box_milp(c, A, r, lb, ub, integrality, maximize=True)
    if not res.optimal:
        return -np.inf
    return res.value + float(d @ z.c - d @ z.Gb @ np.ones(z.nb))


def interval_hull(
    z: HybridZonotope,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    enum_limit: int | None = None,
):
    """Componentwise (lower, upper) bounds; raises EmptySetError when empty."""
    lower = np.zeros(z.dim)
    upper = np.zeros(z.dim)
    for k in range(z.dim):
        e = np.zeros(z.dim)
        e[k] = 1.0
        hi = support(z, e, bin_cap=bin_cap, engine=engine, enum_limit=enum_limit)
        if hi == -np.inf:
            raise EmptySetError("interval hull of an empty set")
        lower[k] = -support(z, -e, bin_cap=bin_cap, engine=engine, enum_limit=enum_limit)
        upper[k] = hi
    return lower, upper


def is_empty(
    z: HybridZonotope,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    enum_limit: int | None = None,
) -> bool:
    _check_cap(z, bin_cap)
    if z.nc == 0:
        return False
    limit = _ENUM_LIMIT if enum_limit is None else enum_limit
    if z.nb <= limit:
        S = _all_assignments(z.nb)
        keep = _prescreen(z, S, 0.0)
        return not any(_leaf_feasible(z, xb, 0.0, engine) for xb in S[keep])
    A, r, lb, ub, integrality = _milp_system(z)
    res = lp.solve_box_milp(np.zeros(A.shape[1]), A, r, lb, ub, integrality)
    return not res.optimal


def feasible_assignments(
    z: HybridZonotope,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    limit: int | None = None,
    enum_limit: int | None = None,
) -> list:
    """Binary assignments whose leaf is feasible, in deterministic order."""
    _check_cap(z, bin_cap)
    if z.nb <= (_ENUM_LIMIT if enum_limit is None else enum_limit):
        S = _all_assignments(z.nb)
        keep = _prescreen(z, S, 0.0)
        out = [xb for xb in S[keep] if _leaf_feasible(z, xb, 0.0, engine)]
        return out[:limit] if limit is not None else out
    return _dfs_assignments(z, engine, limit)


def _dfs_assignments(z, engine, limit) -> list:
    """Relaxation-pruned DFS over binaries, newest factor first."""
    found: list = []
    order = list(range(z.nb - 1, -1, -1))

    def relax_feasible(fixed: dict) -> bool:
        free = [i for i in range(z.nb) if i not in fixed]
        rhs = z.b.copy()
        for i, v in fixed.items():
            rhs = rhs - z.Ab[:, i] * v
        A = np.hstack([z.Ac, z.Ab[:, free]]) if free else z.Ac
        return _feasibility_lp(A, rhs, 0.0, engine).optimal

    def rec(depth: int, fixed: dict) -> bool:
        if limit is not None and len(found) >= limit:
            return True
        if not relax_feasible(fixed):
            return False
        if depth == z.nb:
            xb = np.zeros(z.nb)
            for i, v in fixed.items():
                xb[i] = v
            found.append(xb)
            return limit is not None and len(found) >= limit
        idx = order[depth]
        for v in (1.0, -1.0):
            fixed[idx] = v
            if rec(depth + 1, fixed):
                del fixed[idx]
                return True
            del fixed[idx]
        return False

    rec(0, {})
    return found


def enumerate_leaves(z: HybridZonotope, **kwargs) -> list:
    """Feasible leaves as LeafProblem instances."""
    return [leaf_problem(z, xb) for xb in feasible_assignments(z, **kwargs)]


def sample(
    z: HybridZonotope,
    count: int,
    seed: int,
    *,
    bin_cap: int = DEFAULT_BIN_CAP,
    engine: str = "auto",
    max_leaves: int = 64,
) -> np.ndarray:
    """Deterministic members of z, shape (count, dim).

    Per draw: pick a feasible leaf, draw factors uniformly in the box,
    apply the least-norm correction onto the leaf's affine constraint
    set, and if that leaves the box, shrink toward a strictly interior
    anchor of the leaf.  Every output passes membership at 1e-7.
    """
    _check_cap(z, bin_cap)
    assignments = feasible_assignments(
        z, bin_cap=bin_cap, engine=engine, limit=max_leaves
    )
    if not assignments:
        raise EmptySetError("cannot sample from an empty set")
    leaves = []
    for xb in assignments:
        leaf = leaf_problem(z, xb)
        pinv = np.linalg.pinv(leaf.con_matrix) if z.nc and z.ng else None
        anchor = _leaf_anchor(leaf) if z.ng else np.zeros(0)
        leaves.append((leaf, pinv, anchor))

    out = np.zeros((count, z.dim))
    children = np.random.SeedSequence(seed).spawn(count)
    for i in range(count):
        rng = np.random.default_rng(children[i])
        leaf, pinv, anchor = leaves[int(rng.integers(len(leaves)))]
        if z.ng == 0:
            out[i] = leaf.center
            continue
        xi = rng.uniform(-1.0, 1.0, z.ng)
        if pinv is not None:
            xi = xi - pinv @ (leaf.con_matrix @ xi - leaf.con_rhs)
        overshoot = np.abs(xi).max()
        if overshoot > 1.0:
            step = xi - anchor
            t = 1.0
            for k in np.flatnonzero(np.abs(step) > 1e-14):
                bound = 1.0 if step[k] > 0 else -1.0
                t = min(t, (bound - anchor[k]) / step[k])
            xi = anchor + max(t, 0.0) * step
        xi = np.clip(xi, -1.0, 1.0)
        out[i] = leaf.center + leaf.generators @ xi
    return out


def _leaf_anchor(leaf: LeafProblem) -> np.ndarray:
    """Point of the leaf's factor polytope maximizing distance to the box walls."""
    ng = leaf.generators.shape[1]
    if leaf.con_matrix.shape[0] == 0:
        return np.zeros(ng)
    c = np.zeros(ng + 1)
    c[-1] = -1.0
    A_ub = np.vstack(
        [
            np.hstack([np.eye(ng), np.ones((ng, 1))]),
            np.hstack([-np.eye(ng), np.ones((ng, 1))]),
        ]
    )
    b_ub = np.ones(2 * ng)
    A_eq = np.hstack([leaf.con_matrix, np.zeros((leaf.con_matrix.shape[0], 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=leaf.con_rhs,
        bounds=[(-1.0, 1.0)] * ng + [(0.0, 1.0)],
        method="highs",
    )
    if res.status != 0:
        raise EmptySetError("leaf became infeasible while anchoring")
    return np.asarray(res.x[:ng])


def matrix_membership(M: MatrixZonotope, X, tol: float = 1e-9) -> bool:
    """True iff X = center + sum_j beta_j G_j for some |beta|_inf <= 1."""
    X = np.asarray(X, dtype=float)
    if X.shape != M.shape:
        raise ValueError("candidate matrix shape does not match the set")
    if M.num_generators == 0:
        return bool(np.all(np.abs(X - M.center) <= tol))
    A = np.column_stack([G.ravel() for G in M.generators])
    rhs = (X - M.center).ravel()
    return _feasibility_lp(A, rhs, tol, "auto").optimal
