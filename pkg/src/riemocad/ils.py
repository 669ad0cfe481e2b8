"""Integer ambiguity resolution: decorrelation, bounded enumeration and
the fixed-solution solvers.

The quadratic search core is shared by everything: an integer-least-squares
problem is decorrelated by a lattice (LLL) reduction of its weight Gram
matrix, then enumerated depth-first with per-level interval pruning
(Schnorr-Euchner order) under a strict radius, keeping at most ``cap``
best candidates.

The orthonormality-constrained solvers run the same two radius-adaptation
strategies on top of the bound machinery of :mod:`riemocad.costs`:

* search-and-shrink: pin the radius at the best upper-bound value found
  inside an initial superset, then evaluate the full cost on every
  candidate the lower bound cannot exclude;
* search-and-expand: grow the radius from a small start until a candidate
  survives the full-cost test.

The tight-form solver anchors the quadratic at the manifold float
solution, the baseline solver at the affine-constrained one; both share
enumeration, bounds and inner manifold solves, so paired comparisons are
like-for-like within this codebase.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .costs import CostContext, FixingCost, make_ac_cost, make_tf_cost
from .floats import (FloatSolutionAC, FloatSolutionUC, conditional_r,
                     conditional_x, weighted_procrustes)
from .linalg import vec, weighted_sq_norm

try:  # pragma: no cover - exercised implicitly
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    def _njit(*args, **kwargs):
        def wrap(fn):
            return fn
        return wrap

DEFAULT_CANDIDATE_CAP = 10_000

#: keep at least this many candidates in the final evaluation stage of the
#: shrink search (best + runner-up), mirroring the usual practice of always
#: requesting two integer candidates from the quadratic search.
_MIN_FINAL_CANDIDATES = 2

_LLL_DELTA = 0.99


def _enum_allowance(cap: int) -> int:
    """Internal enumeration budget for quadratic supersets.

    The cap proper limits expensive full-cost evaluations; the superset
    enumeration may look somewhat further so that lower-bound filtering,
    not quadratic truncation, decides what gets evaluated.
    """
    return max(4 * cap, 32_768)


class Method(str, Enum):
    UC_ILS = "uc_ils"
    AC_ILS = "ac_ils"
    RIEMOCAD_LF = "riemocad_lf"
    MC_LAMBDA = "mc_lambda"
    RIEMOCAD_TF = "riemocad_tf"


@dataclass(frozen=True)
class IlsProblem:
    """Quadratic form ||n - center||^2_weight over integer vectors."""

    center: np.ndarray
    weight: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        weight = np.asarray(self.weight, dtype=float)
        s, a = self.shape
        if center.shape != (s * a,):
            raise ValueError(f"center must have length {s * a}")
        if weight.shape != (s * a, s * a):
            raise ValueError("weight must be square and match the center")
        try:
            np.linalg.cholesky(0.5 * (weight + weight.T))
        except np.linalg.LinAlgError as exc:
            raise ValueError("weight must be positive definite") from exc
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "weight", 0.5 * (weight + weight.T))

    def value(self, n: np.ndarray) -> float:
        d = np.asarray(n, dtype=float).reshape(-1, order="F") - self.center
        return float(d @ (self.weight @ d))


@dataclass(frozen=True)
class CandidateSet:
    """Integer candidates with quadratic-form values, sorted ascending.

    Ties are ordered lexicographically by the integer matrix in row-major
    order.  ``truncated`` is set when more candidates satisfied the radius
    than the cap allowed; the kept ones are the best by value.
    """

    candidates: list
    radius_chi: float
    truncated: bool

    def __len__(self):
        return len(self.candidates)

    def matrices(self) -> np.ndarray:
        return np.array([c[0] for c in self.candidates], dtype=np.int64)

    def values(self) -> np.ndarray:
        return np.array([c[1] for c in self.candidates], dtype=float)


@dataclass
class SolverReport:
    """Outcome of one fixed-ambiguity solve.

    ``objective`` is the method's own minimized criterion: the ILS
    quadratic for the float-centered methods, the full quadratic-plus-
    manifold cost for the orthonormality-constrained ones.  ``r_fixed``
    is orthonormal for the orthonormality-constrained methods, the
    unconstrained conditional estimate otherwise (None when the body
    geometry is unavailable).
    """

    method: Method
    n_fixed: np.ndarray
    r_fixed: np.ndarray | None
    objective: float
    candidates_evaluated: int
    manifold_solves: int
    wall_time: float
    truncated: bool = False


# ---------------------------------------------------------------------------
# Decorrelation (lattice reduction on the weight Gram matrix)


def _gram_schmidt(basis: np.ndarray):
    n = basis.shape[1]
    ortho = np.array(basis)
    mu = np.zeros((n, n))
    norms = np.zeros(n)
    norms[0] = ortho[:, 0] @ ortho[:, 0]
    for i in range(1, n):
        mu[i, :i] = (ortho[:, :i].T @ basis[:, i]) / norms[:i]
        ortho[:, i] = basis[:, i] - ortho[:, :i] @ mu[i, :i]
        norms[i] = ortho[:, i] @ ortho[:, i]
    return mu, norms


def _lll_reduce(basis: np.ndarray, delta: float = _LLL_DELTA):
    """LLL reduction of basis columns; returns (z, z_inv) integer unimodular."""
    basis = np.array(basis, dtype=float)
    n = basis.shape[1]
    z = np.eye(n, dtype=np.int64)
    z_inv = np.eye(n, dtype=np.int64)
    mu, norms = _gram_schmidt(basis)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100_000:
            raise RuntimeError("lattice reduction failed to terminate")
        for j in range(k - 1, -1, -1):
            q = int(np.floor(mu[k, j] + 0.5))
            if q != 0:
                basis[:, k] -= q * basis[:, j]
                z[:, k] -= q * z[:, j]
                z_inv[j, :] += q * z_inv[k, :]
                # size reduction leaves the GS vectors untouched; only the
                # projections of column k change
                mu[k, :j] -= q * mu[j, :j]
                mu[k, j] -= q
        if norms[k] >= (delta - mu[k, k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            basis[:, [k - 1, k]] = basis[:, [k, k - 1]]
            z[:, [k - 1, k]] = z[:, [k, k - 1]]
            z_inv[[k - 1, k], :] = z_inv[[k, k - 1], :]
            mu, norms = _gram_schmidt(basis)
            k = max(k - 1, 1)
    return z, z_inv


def decorrelate(problem: IlsProblem):
    """Unimodular reparameterization n = Z m that decorrelates the problem.

    Returns (Z, transformed problem) with transformed weight Z^T W Z and
    transformed center Z^{-1} c, so quadratic-form values are preserved
    exactly on integers.  An already-decorrelated (diagonal-correlation)
    weight passes through unchanged.
    """
    w = problem.weight
    n = w.shape[0]
    scale = np.sqrt(np.outer(np.diag(w), np.diag(w)))
    off = np.abs(w / scale - np.eye(n)).max() if n > 1 else 0.0
    if off < 1e-14:
        return np.eye(n, dtype=np.int64), problem
    basis = np.linalg.cholesky(w).T  # upper factor: basis^T basis = w
    z, z_inv = _lll_reduce(basis)
    w_new = z.T @ w @ z
    center_new = z_inv @ problem.center
    return z, IlsProblem(center=center_new, weight=w_new, shape=problem.shape)


# ---------------------------------------------------------------------------
# Bounded depth-first enumeration


def _se_enum_impl(rfac, center, radius, cap):
    """Schnorr-Euchner enumeration of {m : ||rfac (m - center)||^2 < radius}.

    Keeps at most ``cap`` best candidates (radius tightens once the buffer
    fills).  Returns (matrices (k, n), values (k,), truncated).
    """
    n = center.shape[0]
    buf = 2 * cap if 2 * cap > 64 else 64
    out_m = np.zeros((buf, n), np.int64)
    out_v = np.zeros(buf, np.float64)
    count = 0
    truncated = False
    radius_eff = radius

    m = np.zeros(n, np.int64)
    delta = np.zeros(n, np.float64)
    bvec = np.zeros(n, np.float64)
    dist_in = np.zeros(n, np.float64)
    step = np.zeros(n, np.int64)

    k = n - 1
    bvec[k] = center[k]
    dist_in[k] = 0.0
    m[k] = int(np.floor(bvec[k] + 0.5))
    step[k] = 1 if (bvec[k] - m[k]) >= 0.0 else -1

    while True:
        t = rfac[k, k] * (m[k] - bvec[k])
        newdist = dist_in[k] + t * t
        if newdist < radius_eff:
            if k > 0:
                delta[k] = m[k] - center[k]
                k -= 1
                acc = 0.0
                for j in range(k + 1, n):
                    acc += rfac[k, j] * delta[j]
                bvec[k] = center[k] - acc / rfac[k, k]
                dist_in[k] = newdist
                m[k] = int(np.floor(bvec[k] + 0.5))
                step[k] = 1 if (bvec[k] - m[k]) >= 0.0 else -1
            else:
                if count == buf:
                    order = np.argsort(out_v[:count])
                    keep = order[:cap]
                    tmp_m = out_m[keep, :].copy()
                    tmp_v = out_v[keep].copy()
                    out_m[:cap, :] = tmp_m
                    out_v[:cap] = tmp_v
                    count = cap
                    radius_eff = out_v[cap - 1]
                    truncated = True
                if newdist < radius_eff:
                    out_m[count, :] = m
                    out_v[count] = newdist
                    count += 1
                m[0] += step[0]
                step[0] = -step[0] - (1 if step[0] > 0 else -1)
        else:
            if k == n - 1:
                break
            k += 1
            m[k] += step[k]
            step[k] = -step[k] - (1 if step[k] > 0 else -1)

    if count > cap:
        order = np.argsort(out_v[:count])
        keep = order[:cap]
        return out_m[keep, :].copy(), out_v[keep].copy(), True
    return out_m[:count, :].copy(), out_v[:count].copy(), truncated


_se_enum = _njit(cache=True)(_se_enum_impl)


def _row_major_mats(ncols: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """(d, K) stack of vec's -> (K, S, A) integer matrices."""
    s, a = shape
    k = ncols.shape[1]
    return np.ascontiguousarray(
        ncols.T.reshape(k, a, s).transpose(0, 2, 1)).astype(np.int64)


def _lex_order(values: np.ndarray, mats: np.ndarray) -> np.ndarray:
    """Sort order: ascending value, row-major matrix entries break ties."""
    k = mats.shape[0]
    flat = mats.reshape(k, -1)
    keys = tuple(flat[:, j] for j in range(flat.shape[1] - 1, -1, -1))
    return np.lexsort(keys + (values,))


@dataclass(frozen=True)
class _SearchSpace:
    """Decorrelated enumeration state reused across radius adaptations."""

    problem: IlsProblem
    z: np.ndarray
    transformed: IlsProblem
    rfac: np.ndarray

    @classmethod
    def build(cls, problem: IlsProblem) -> "_SearchSpace":
        z, transformed = decorrelate(problem)
        rfac = np.linalg.cholesky(transformed.weight).T
        return cls(problem=problem, z=z, transformed=transformed,
                   rfac=np.ascontiguousarray(rfac))

    def enumerate_vecs(self, chi: float, cap: int):
        """Returns (vec columns (d, K) float, values (K,), truncated)."""
        if chi <= 0.0 or cap < 1:
            d = self.problem.center.size
            return np.zeros((d, 0)), np.zeros(0), False
        mats, vals, truncated = _se_enum(
            self.rfac, np.ascontiguousarray(self.transformed.center),
            float(chi), int(cap))
        ncols = (self.z @ mats.T).astype(float)
        return ncols, vals, truncated


def enumerate_candidates(problem: IlsProblem, chi: float,
                         cap: int = DEFAULT_CANDIDATE_CAP) -> CandidateSet:
    """All integer points with quadratic form strictly below ``chi``.

    When more than ``cap`` points qualify, the best ``cap`` by value are
    returned and the set is flagged truncated.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    space = _SearchSpace.build(problem)
    ncols, vals, truncated = space.enumerate_vecs(chi, cap)
    if ncols.shape[1] == 0:
        return CandidateSet(candidates=[], radius_chi=chi, truncated=truncated)
    mats = _row_major_mats(ncols, problem.shape)
    order = _lex_order(vals, mats)
    cands = [(mats[i], float(vals[i])) for i in order]
    return CandidateSet(candidates=cands, radius_chi=chi, truncated=truncated)


def solve_ils(problem: IlsProblem, k_best: int = 1) -> CandidateSet:
    """The ``k_best`` smallest quadratic-form integer points, exactly.

    The radius starts at the rounding solution's value (which always
    contains the optimum) and the enumeration tightens it to the current
    k-th best as candidates are found, so only a narrow shell is visited.
    The radius grows geometrically in the rare case the initial shell
    holds fewer than ``k_best`` points.
    """
    rounded = np.rint(problem.center)
    chi = weighted_sq_norm(rounded - problem.center, problem.weight)
    chi = chi * (1.0 + 1e-9) + 1e-12
    space = _SearchSpace.build(problem)
    for _ in range(64):
        ncols, vals, _ = space.enumerate_vecs(chi, k_best)
        if ncols.shape[1] >= k_best:
            mats = _row_major_mats(ncols, problem.shape)
            order = _lex_order(vals, mats)
            cands = [(mats[i], float(vals[i])) for i in order]
            return CandidateSet(candidates=cands, radius_chi=chi,
                                truncated=False)
        chi = chi * 4.0 + 1.0
    raise RuntimeError("integer search radius grew without finding candidates")


# ---------------------------------------------------------------------------
# Bound-driven searches for the orthonormality-constrained methods


def _containment_radius(x: float) -> float:
    return x * (1.0 + 1e-9) + 1e-12


@dataclass
class _SearchOutcome:
    n_best: np.ndarray
    value: float
    evaluated: int
    manifold_solves: int
    truncated: bool


def _key_tuple(mat: np.ndarray) -> tuple:
    return tuple(int(v) for v in mat.ravel())


def _shrink_search(cost: FixingCost, space: _SearchSpace, cap: int) -> _SearchOutcome:
    """Search-and-shrink: drive the radius down to the best upper bound.

    Each round enumerates the quadratic superset of the current
    upper-bound region, evaluates the upper bound on the candidates found
    and pins the radius at the best value seen; the region shrinks until
    it is fully enumerated and no better upper bound exists inside it.
    The candidates the lower bound cannot exclude at the final radius
    (always at least the best two, when available) are then evaluated
    with the full cost.

    ``candidates_evaluated`` counts the integers in the established
    search space, i.e. those needing a full-cost (manifold) evaluation;
    the cap limits both this count and the internal bound-phase
    enumeration budget.
    """
    ctx = cost.ctx
    shape = ctx.fs.shape_n
    n0 = np.rint(cost.center_vec)
    n0_mat = _row_major_mats(n0[:, None], shape)[0]
    examined = {n0_mat.tobytes()}
    best_u = float(cost.upper_values(n0[:, None])[0])
    best_key = _key_tuple(n0_mat)
    chi_u = _containment_radius(best_u)
    truncated = False
    work_cap = 256
    for _ in range(64):
        radius = _containment_radius(chi_u + cost.offset_to_ac)
        ncols, quads, etrunc = space.enumerate_vecs(radius, min(work_cap, cap))
        improved = False
        if ncols.shape[1]:
            mats = _row_major_mats(ncols, shape)
            order = _lex_order(quads, mats)
            fresh = []
            for i in order:
                key = mats[i].tobytes()
                if key in examined:
                    continue
                if len(examined) >= cap:
                    truncated = True
                    break
                examined.add(key)
                fresh.append(i)
            if fresh:
                uvals = cost.upper_values(ncols[:, fresh])
                for pos, i in enumerate(fresh):
                    val = float(uvals[pos])
                    key = _key_tuple(mats[i])
                    if val < best_u or (val == best_u and key < best_key):
                        best_u, best_key = val, key
                        improved = True
        new_chi = _containment_radius(best_u)
        if improved and new_chi < chi_u:
            chi_u = new_chi
            continue
        if not etrunc:
            break  # region fully enumerated, upper-bound minimum certified
        if truncated or work_cap >= cap:
            truncated = True
            break
        work_cap = min(work_cap * 8, cap)
    chi_final = _containment_radius(best_u)

    # establish the final search space from the lower bound; the radius is
    # grown as needed so the runner-up is always available for evaluation
    radius = _containment_radius(chi_final + cost.offset_to_ac)
    for _ in range(64):
        ncols, _, etrunc = space.enumerate_vecs(radius, _enum_allowance(cap))
        if ncols.shape[1] >= _MIN_FINAL_CANDIDATES or etrunc:
            break
        radius = radius * 4.0 + 1.0
    truncated |= bool(etrunc)
    if ncols.shape[1] == 0:
        ncols = n0[:, None]
    mats = _row_major_mats(ncols, shape)
    lvals = cost.lower_values(ncols)
    idx = np.where(lvals < chi_final)[0]
    if idx.size < _MIN_FINAL_CANDIDATES and ncols.shape[1] >= _MIN_FINAL_CANDIDATES:
        idx = _lex_order(lvals, mats)[:_MIN_FINAL_CANDIDATES]
    else:
        idx = idx[_lex_order(lvals[idx], mats[idx])]
    kept = []
    for i in idx:
        key = mats[i].tobytes()
        if key in examined:
            kept.append(i)
        elif len(examined) < cap:
            examined.add(key)
            kept.append(i)
        else:
            truncated = True
            break
    if not kept:
        kept = [int(_lex_order(lvals, mats)[0])]
    kept = np.asarray(kept, dtype=int)
    cvals, _ = cost.cost_values(ncols[:, kept])
    best_c = _lex_order(cvals, mats[kept])[0]
    pick = kept[best_c]
    return _SearchOutcome(
        n_best=mats[pick], value=float(cvals[best_c]),
        evaluated=int(kept.size), manifold_solves=int(kept.size),
        truncated=truncated)


def _expand_search(cost: FixingCost, space: _SearchSpace, cap: int) -> _SearchOutcome:
    """Search-and-expand: grow the radius until a full-cost survivor exists.

    ``candidates_evaluated`` counts distinct integers evaluated with the
    full cost, as in the shrink search; the cap limits both that count
    and the internal bound-phase enumeration budget.
    """
    ctx = cost.ctx
    shape = ctx.fs.shape_n
    d = cost.center_vec.size
    n0 = np.rint(cost.center_vec)
    l0 = float(cost.lower_values(n0[:, None])[0])
    chi = 0.1 * l0 if l0 > 0 else 1.0
    examined: set[bytes] = set()
    evaluated: set[bytes] = set()
    eval_vecs = np.zeros((d, 0))
    eval_cvals = np.zeros(0)
    n_solves = 0
    truncated = False
    for _ in range(70):
        ncols, quads, enum_trunc = space.enumerate_vecs(
            _containment_radius(chi + cost.offset_to_ac), _enum_allowance(cap))
        truncated |= bool(enum_trunc)
        if ncols.shape[1]:
            mats = _row_major_mats(ncols, shape)
            lvals = cost.lower_values(ncols)
            order = _lex_order(quads, mats)
            new_cols = []
            for i in order:
                key = mats[i].tobytes()
                if key not in examined:
                    if len(examined) >= cap:
                        truncated = True
                        break
                    examined.add(key)
                if lvals[i] < chi and key not in evaluated:
                    evaluated.add(key)
                    new_cols.append(i)
            if new_cols:
                fresh = ncols[:, new_cols]
                cvals, _ = cost.cost_values(fresh)
                n_solves += len(new_cols)
                eval_vecs = np.hstack([eval_vecs, fresh])
                eval_cvals = np.concatenate([eval_cvals, cvals])
        if eval_cvals.size:
            surv = np.where(eval_cvals < chi)[0]
            if surv.size:
                mats_e = _row_major_mats(eval_vecs[:, surv], shape)
                best = _lex_order(eval_cvals[surv], mats_e)[0]
                return _SearchOutcome(
                    n_best=mats_e[best], value=float(eval_cvals[surv][best]),
                    evaluated=len(evaluated), manifold_solves=n_solves,
                    truncated=truncated)
        if truncated:
            if not eval_cvals.size:  # budget gone before any full evaluation
                cvals, _ = cost.cost_values(n0[:, None])
                n_solves += 1
                eval_vecs, eval_cvals = n0[:, None], cvals
            mats_e = _row_major_mats(eval_vecs, shape)
            best = _lex_order(eval_cvals, mats_e)[0]
            return _SearchOutcome(
                n_best=mats_e[best], value=float(eval_cvals[best]),
                evaluated=max(len(evaluated), 1), manifold_solves=n_solves,
                truncated=True)
        chi *= 2.0
    raise RuntimeError("expand search radius grew without finding a survivor")


def _finalize_oc_report(method: Method, cost: FixingCost, out: _SearchOutcome,
                        t0: float) -> SolverReport:
    """Re-solve the winner's attitude with the multi-start driver."""
    ctx = cost.ctx
    target = conditional_r(ctx.fs, out.n_best)
    point, _, inner_val, runs = weighted_procrustes(
        target, ctx.fs.weight_rr_cond, ctx.opt_cfg)
    base = float(cost.base_values(vec(out.n_best.astype(float))[:, None])[0])
    objective = min(out.value, base + inner_val)
    return SolverReport(
        method=method, n_fixed=out.n_best, r_fixed=point.x,
        objective=objective, candidates_evaluated=out.evaluated,
        manifold_solves=out.manifold_solves + runs,
        wall_time=time.perf_counter() - t0, truncated=out.truncated)


def _base_space(ctx: CostContext) -> _SearchSpace:
    """Decorrelated quadratic problem centered at the AC float solution."""
    cached = getattr(ctx, "_base_space", None)
    if cached is None:
        problem = IlsProblem(center=ctx.vec_n_hat, weight=ctx.w_nn,
                             shape=ctx.fs.shape_n)
        cached = _SearchSpace.build(problem)
        ctx._base_space = cached
    return cached


# ---------------------------------------------------------------------------
# Fixed-solution solvers


def solve_uc_ils(fsu: FloatSolutionUC,
                 body_baselines: np.ndarray | None = None) -> SolverReport:
    """Integer least squares on the unconstrained float solution.

    The attitude-like report entry is the conditional baseline estimate
    mapped through the body geometry by plain least squares, without any
    orthonormality (None if the geometry is not supplied).
    """
    t0 = time.perf_counter()
    s, a = fsu.n_hat.shape
    problem = IlsProblem(center=vec(fsu.n_hat), weight=fsu.weight_nn,
                         shape=(s, a))
    cands = solve_ils(problem, k_best=1)
    n_fixed, value = cands.candidates[0]
    r_fixed = None
    if body_baselines is not None:
        x_fixed = conditional_x(fsu, n_fixed)
        xb = np.asarray(body_baselines, dtype=float)
        r_fixed = x_fixed @ np.linalg.pinv(xb)
    return SolverReport(
        method=Method.UC_ILS, n_fixed=n_fixed, r_fixed=r_fixed,
        objective=value, candidates_evaluated=len(cands),
        manifold_solves=0, wall_time=time.perf_counter() - t0,
        truncated=cands.truncated)


def solve_ac_ils(fs: FloatSolutionAC) -> SolverReport:
    """Integer least squares on the affine-constrained float solution."""
    t0 = time.perf_counter()
    problem = IlsProblem(center=vec(fs.n_hat), weight=fs.weight_nn,
                         shape=fs.shape_n)
    cands = solve_ils(problem, k_best=1)
    n_fixed, value = cands.candidates[0]
    return SolverReport(
        method=Method.AC_ILS, n_fixed=n_fixed,
        r_fixed=conditional_r(fs, n_fixed), objective=value,
        candidates_evaluated=len(cands), manifold_solves=0,
        wall_time=time.perf_counter() - t0, truncated=cands.truncated)


def solve_riemocad_lf(ctx: CostContext) -> SolverReport:
    """Loose form: closest integers to the manifold float solution.

    The quadratic metric is the affine-constrained ambiguity weight; the
    attitude is the multi-start manifold solve at the fixed integers.
    """
    if ctx.rm is None:
        raise ValueError("loose-form solver requires the manifold float solution")
    t0 = time.perf_counter()
    problem = IlsProblem(center=ctx.vec_n_rm, weight=ctx.w_nn,
                         shape=ctx.fs.shape_n)
    cands = solve_ils(problem, k_best=1)
    n_fixed, value = cands.candidates[0]
    target = conditional_r(ctx.fs, n_fixed)
    point, _, _, runs = weighted_procrustes(target, ctx.fs.weight_rr_cond,
                                            ctx.opt_cfg)
    return SolverReport(
        method=Method.RIEMOCAD_LF, n_fixed=n_fixed, r_fixed=point.x,
        objective=value, candidates_evaluated=len(cands),
        manifold_solves=runs, wall_time=time.perf_counter() - t0,
        truncated=cands.truncated)


def solve_riemocad_tf(ctx: CostContext, strategy: str = "shrink",
                      cap: int = DEFAULT_CANDIDATE_CAP) -> SolverReport:
    """Tight form: bound-driven search of the manifold-anchored cost."""
    if strategy not in ("shrink", "expand"):
        raise ValueError("strategy must be 'shrink' or 'expand'")
    t0 = time.perf_counter()
    cost = make_tf_cost(ctx)
    space = _base_space(ctx)
    search = _shrink_search if strategy == "shrink" else _expand_search
    out = search(cost, space, cap)
    return _finalize_oc_report(Method.RIEMOCAD_TF, cost, out, t0)


def solve_mc_lambda(fs: FloatSolutionAC, strategy: str = "shrink",
                    cap: int = DEFAULT_CANDIDATE_CAP,
                    ctx: CostContext | None = None) -> SolverReport:
    """Baseline orthonormality-constrained solver centered at the AC float.

    Runs the same bound-driven drivers and inner manifold solves as the
    tight form, with the quadratic centered at the affine-constrained
    float solution and no cross term.
    """
    if strategy not in ("shrink", "expand"):
        raise ValueError("strategy must be 'shrink' or 'expand'")
    t0 = time.perf_counter()
    if ctx is None:
        from .stiefel import OptimizerConfig
        ctx = CostContext(fs=fs, rm=None, opt_cfg=OptimizerConfig())
    cost = make_ac_cost(ctx)
    space = _base_space(ctx)
    search = _shrink_search if strategy == "shrink" else _expand_search
    out = search(cost, space, cap)
    return _finalize_oc_report(Method.MC_LAMBDA, cost, out, t0)
