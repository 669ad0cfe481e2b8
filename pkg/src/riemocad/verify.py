"""Self-verification: the core identities checked on random instances.

Used by the ``verify`` CLI subcommand.  Each check returns (name, passed,
detail); all of them are cheap enough to run in bulk.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import costs, floats, ils, model
from .linalg import vec, weighted_sq_norm
from .stiefel import (OptimizerConfig, project_tangent, random_stiefel,
                      retract_polar, riemannian_gradient)


def _random_case(rng, sigma=0.004):
    nsat = int(rng.integers(4, 9))
    nbl = int(rng.integers(1, 4))
    scn, _ = model.sample_scenario(nsat, nbl, sigma, rng)
    obs = model.simulate_observations(scn, int(rng.integers(2**63)))
    return scn, obs


def check_lemma_identities(n_seeds: int, rng) -> tuple:
    """Three-term, five-term and alternative decompositions of the objective."""
    worst = 0.0
    for _ in range(max(1, n_seeds // 10)):
        scn, obs = _random_case(rng)
        fs = floats.solve_float_ac(obs)
        s, a = fs.shape_n
        for _ in range(10):
            r_bar = rng.standard_normal((3, fs.q))
            n_bar = rng.standard_normal((s, a))
            r = rng.standard_normal((3, fs.q))
            n = rng.standard_normal((s, a))
            lhs = model.objective_value(obs, r, n)
            # three-term orthogonal decomposition
            n_cond = floats.conditional_n(fs, r)
            rhs = fs.residual_sq \
                + weighted_sq_norm(vec(r - fs.r_hat), fs.weight_rr) \
                + weighted_sq_norm(vec(n - n_cond), fs.weight_nn_cond)
            worst = max(worst, abs(lhs - rhs) / max(1.0, lhs))
            # five-term decomposition at an arbitrary point
            terms = costs.decompose_at_point(fs, obs, r_bar, n_bar, r, n)
            worst = max(worst, abs(sum(terms) - lhs) / max(1.0, lhs))
            # alternative form
            t1, t2, _, t4, _ = terms
            d3 = vec(r) - vec(floats.conditional_r(fs, n))
            d5 = vec(r_bar) - vec(floats.conditional_r(fs, n_bar))
            alt = t1 + t2 + t4 \
                + weighted_sq_norm(d3, fs.weight_rr_cond) \
                - weighted_sq_norm(d5, fs.weight_rr_cond)
            worst = max(worst, abs(alt - lhs) / max(1.0, lhs))
    return "decomposition identities", worst <= 1e-8, f"max rel err {worst:.2e}"


def check_gradients(n_seeds: int, rng) -> tuple:
    """Riemannian gradient vs central finite differences through retraction."""
    worst = 0.0
    h = 1e-5
    for _ in range(max(1, n_seeds // 5)):
        q = int(rng.integers(1, 4))
        c = rng.standard_normal((3, q))
        w = rng.standard_normal((3 * q, 3 * q))
        w = w @ w.T + 0.5 * np.eye(3 * q)

        def cost(p):
            d = vec(p.x) - vec(c)
            return float(d @ (w @ d))

        def egrad(x):
            d = vec(x.x) - vec(c)
            return (2.0 * (w @ d)).reshape((3, q), order="F")

        x = random_stiefel(q, rng)
        g = riemannian_gradient(x, egrad(x))
        for _ in range(4):
            xi = project_tangent(x, rng.standard_normal((3, q)))
            nrm = np.linalg.norm(xi.v)
            if nrm < 1e-12:
                continue
            xi_v = xi.v / nrm
            xi = project_tangent(x, xi_v)
            fp = cost(retract_polar(x, project_tangent(x, h * xi.v)))
            fm = cost(retract_polar(x, project_tangent(x, -h * xi.v)))
            fd = (fp - fm) / (2.0 * h)
            an = float(np.sum(g.v * xi.v))
            worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return "gradient finite differences", worst <= 1e-5, f"max rel err {worst:.2e}"


def check_retractions(n_seeds: int, rng) -> tuple:
    worst = 0.0
    for _ in range(n_seeds):
        q = int(rng.integers(1, 4))
        x = random_stiefel(q, rng)
        v = project_tangent(x, rng.standard_normal((3, q)))
        y = retract_polar(x, v)
        worst = max(worst, np.linalg.norm(y.x.T @ y.x - np.eye(q)))
        zero = retract_polar(x, project_tangent(x, np.zeros((3, q))))
        if zero.x is not x.x and not np.array_equal(zero.x, x.x):
            return "retraction", False, "retract(0) != x"
    return "retraction orthonormality", worst <= 1e-12, f"max defect {worst:.2e}"


def check_ils_oracle(n_seeds: int, rng) -> tuple:
    """Enumeration equals a brute-force box scan on small problems."""
    for _ in range(max(1, n_seeds // 4)):
        d = int(rng.integers(2, 5))
        a = rng.standard_normal((d, d))
        w = a @ a.T + 0.4 * np.eye(d)
        center = rng.uniform(-3, 3, d)
        problem = ils.IlsProblem(center=center, weight=w, shape=(d, 1))
        box = 6
        lo = np.floor(center).astype(int) - box
        pts = []
        for tup in itertools.product(*[range(l, l + 2 * box + 1) for l in lo]):
            val = problem.value(np.array(tup, dtype=float).reshape((d, 1)))
            pts.append((tup, val))
        pts.sort(key=lambda t: t[1])
        chi = pts[min(11, len(pts) - 1)][1] * 1.000001
        expect = {t for t, v in pts if v < chi}
        got = {tuple(c[0].ravel()) for c in
               ils.enumerate_candidates(problem, chi, cap=100_000).candidates}
        if got != expect:
            return "ils brute-force oracle", False, \
                f"set mismatch ({len(got)} vs {len(expect)})"
    return "ils brute-force oracle", True, "exact set equality"


def check_bounds(n_seeds: int, rng) -> tuple:
    """Sandwich C_L <= C <= C_U on random integer candidates."""
    viol = 0
    total = 0
    for _ in range(max(1, n_seeds // 10)):
        scn, obs = _random_case(rng)
        fs = floats.solve_float_ac(obs)
        rm = floats.solve_float_riemannian(fs)
        ctx = costs.CostContext(fs, rm, OptimizerConfig())
        cost = costs.make_tf_cost(ctx)
        s, a = fs.shape_n
        base = np.rint(rm.n_rm).astype(np.int64)
        cands = base[:, :, None] + rng.integers(-3, 4, size=(s, a, 20))
        ncols = np.asarray([vec(cands[:, :, j]) for j in range(20)]).T
        cvals, _ = cost.cost_values(ncols)
        lvals = cost.lower_values(ncols)
        uvals = cost.upper_values(ncols)
        tol = 1e-8 * np.maximum(1.0, np.abs(cvals))
        viol += int(np.sum(lvals > cvals + tol) + np.sum(cvals > uvals + tol))
        total += 20
    return "cost bounds sandwich", viol == 0, f"{viol}/{total} violations"


def check_decorrelation(n_seeds: int, rng) -> tuple:
    for _ in range(n_seeds):
        d = int(rng.integers(2, 7))
        a = rng.standard_normal((d, d))
        w = a @ a.T + 0.2 * np.eye(d)
        problem = ils.IlsProblem(center=rng.uniform(-5, 5, d), weight=w,
                                 shape=(d, 1))
        z, tp = ils.decorrelate(problem)
        det = round(float(np.linalg.det(z)))
        if abs(det) != 1:
            return "decorrelation", False, f"|det Z| = {abs(det)}"
        for _ in range(5):
            n = rng.integers(-20, 20, d).astype(float)
            v0 = problem.value(n.reshape((d, 1)))
            v1 = tp.value(np.linalg.solve(z, n).reshape((d, 1)))
            if abs(v0 - v1) > 1e-8 * max(1.0, v0):
                return "decorrelation", False, "value not preserved"
    return "decorrelation contract", True, "unimodular, values preserved"


ALL_CHECKS = (check_lemma_identities, check_gradients, check_retractions,
              check_ils_oracle, check_bounds, check_decorrelation)


def run_verification(n_seeds: int = 100, seed: int = 0) -> list:
    """Run every check; returns a list of (name, passed, detail)."""
    results = []
    for fn in ALL_CHECKS:
        rng = np.random.default_rng(seed)
        results.append(fn(n_seeds, rng))
    return results
