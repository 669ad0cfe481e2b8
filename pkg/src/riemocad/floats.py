"""Float (real-valued) solutions of the attitude models.

Three float solutions are provided:

* unconstrained: baseline coordinates X free in R^{3xA};
* affine-constrained: X = R X_b with R free in R^{3xq};
* manifold: R constrained to orthonormal columns, solved by Riemannian
  descent of the weighted distance to the affine-constrained estimate.

Both least-squares solutions come from the normal equations of the
vectorized model; all covariance blocks are blocks of the inverse normal
matrix, and the conditional estimates/covariances follow from the usual
block-triangular factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .linalg import spd_inverse, sym, unvec, vec
from .model import ObservationSet, baseline_objective_value
from .stiefel import (MinimizeDiagnostics, OptimizerConfig, StiefelPoint,
                      _minimize_arrays, polar_factor, random_stiefel)

#: Condition-number threshold beyond which geometry is declared degenerate.
COND_LIMIT = 1e12

#: Number of extra random starts used when the warm-started descent stalls.
N_RANDOM_STARTS = 4

# Fixed seed for the deterministic multi-start draws.
_MULTISTART_SEED = 421


class DegenerateGeometryError(RuntimeError):
    """Raised when a normal-equation block is numerically rank deficient."""


@dataclass(frozen=True)
class FloatSolutionUC:
    """Least-squares solution with both X and N free."""

    x_hat: np.ndarray          # (3, A)
    n_hat: np.ndarray          # (S, A) real-valued
    cov_xx: np.ndarray
    cov_xn: np.ndarray
    cov_nx: np.ndarray
    cov_nn: np.ndarray
    cond_cov_xx_given_n: np.ndarray
    cond_cov_nn_given_x: np.ndarray
    residual_sq: float
    obs: ObservationSet
    info_matrix: np.ndarray | None = None

    @property
    def weight_nn(self) -> np.ndarray:
        return self._weight_nn

    @property
    def gain_xn(self) -> np.ndarray:
        return self._gain_xn

    def __post_init__(self):
        nx = self.x_hat.size
        if self.info_matrix is not None:
            m = self.info_matrix
            m_xx, m_xn, m_nn = m[:nx, :nx], m[:nx, nx:], m[nx:, nx:]
            object.__setattr__(self, "_weight_nn",
                               sym(m_nn - m_xn.T @ np.linalg.solve(m_xx, m_xn)))
            object.__setattr__(self, "_gain_xn", -np.linalg.solve(m_xx, m_xn))
        else:
            object.__setattr__(self, "_weight_nn", spd_inverse(self.cov_nn))
            object.__setattr__(self, "_gain_xn", self.cov_xn @ self._weight_nn)


@dataclass(frozen=True)
class FloatSolutionAC:
    """Least-squares solution of the affine-constrained model X = R X_b.

    Covariance blocks are ordered for theta = [vec(R); vec(N)].  The
    conditional covariances do not depend on the conditioning value;
    ``xi_min``/``xi_max`` are the extreme eigenvalues of the inverse
    conditional covariance of the attitude given fixed ambiguities.
    """

    r_hat: np.ndarray          # (3, q)
    n_hat: np.ndarray          # (S, A) real-valued
    cov_rr: np.ndarray
    cov_rn: np.ndarray
    cov_nr: np.ndarray
    cov_nn: np.ndarray
    cond_cov_rr_given_n: np.ndarray
    cond_cov_nn_given_r: np.ndarray
    residual_sq: float
    xi_min: float
    xi_max: float
    body_baselines: np.ndarray
    obs: ObservationSet
    info_matrix: np.ndarray | None = None

    def __post_init__(self):
        nr = self.r_hat.size
        if self.info_matrix is not None:
            # derive weights and conditional gains from the information
            # matrix: better conditioned than re-inverting covariance blocks
            m = self.info_matrix
            m_rr, m_rn, m_nn = m[:nr, :nr], m[:nr, nr:], m[nr:, nr:]
            object.__setattr__(self, "_weight_nn",
                               sym(m_nn - m_rn.T @ np.linalg.solve(m_rr, m_rn)))
            object.__setattr__(self, "_weight_rr",
                               sym(m_rr - m_rn @ np.linalg.solve(m_nn, m_rn.T)))
            object.__setattr__(self, "_weight_rr_cond", sym(m_rr))
            object.__setattr__(self, "_weight_nn_cond", sym(m_nn))
            object.__setattr__(self, "_gain_rn", -np.linalg.solve(m_rr, m_rn))
            object.__setattr__(self, "_gain_nr", -np.linalg.solve(m_nn, m_rn.T))
        else:
            object.__setattr__(self, "_weight_nn", spd_inverse(self.cov_nn))
            object.__setattr__(self, "_weight_rr", spd_inverse(self.cov_rr))
            object.__setattr__(self, "_weight_rr_cond",
                               spd_inverse(self.cond_cov_rr_given_n))
            object.__setattr__(self, "_weight_nn_cond",
                               spd_inverse(self.cond_cov_nn_given_r))
            object.__setattr__(self, "_gain_rn", self.cov_rn @ self._weight_nn)
            object.__setattr__(self, "_gain_nr", self.cov_nr @ self._weight_rr)

    @property
    def weight_nn(self) -> np.ndarray:
        return self._weight_nn

    @property
    def weight_rr(self) -> np.ndarray:
        return self._weight_rr

    @property
    def weight_rr_cond(self) -> np.ndarray:
        return self._weight_rr_cond

    @property
    def weight_nn_cond(self) -> np.ndarray:
        return self._weight_nn_cond

    @property
    def gain_rn(self) -> np.ndarray:
        return self._gain_rn

    @property
    def gain_nr(self) -> np.ndarray:
        return self._gain_nr

    @property
    def shape_n(self) -> tuple[int, int]:
        return self.n_hat.shape

    @property
    def q(self) -> int:
        return self.r_hat.shape[1]


@dataclass(frozen=True)
class RieMFloat:
    """Manifold float solution: orthonormal attitude plus conditional N."""

    r_rm: StiefelPoint
    n_rm: np.ndarray
    diagnostics: MinimizeDiagnostics


def _normal_solve(g: np.ndarray, obs: ObservationSet, block_names: tuple[str, str],
                  split: int):
    """Solve the weighted normal equations; return estimate, covariance, M.

    ``split`` is the boundary between the two parameter blocks inside
    theta; ``block_names`` names them for the degeneracy error message.
    """
    wg = obs.apply_weight(g)
    m = sym(g.T @ wg)
    rhs = wg.T @ vec(obs.y)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        sub_a = m[:split, :split]
        sub_b = m[split:, split:]
        worse = block_names[0] if np.linalg.cond(sub_a) >= np.linalg.cond(sub_b) \
            else block_names[1]
        raise DegenerateGeometryError(
            f"degenerate geometry: normal matrix ill-conditioned "
            f"(cond {cond:.2e}), dominated by the {worse} block")
    chol = cho_factor(m, lower=True)
    theta = cho_solve(chol, rhs)
    cov = sym(cho_solve(chol, np.eye(m.shape[0])))
    return theta, cov, m


def solve_float_uc(obs: ObservationSet) -> FloatSolutionUC:
    """Unconstrained float solution and its covariance blocks.

    Conditional covariances come straight from the normal (information)
    matrix: conditioning on one block drops its rows/columns, so the
    inverse conditional covariance of the other block is its diagonal
    block of M.  This avoids the cancellation-prone Schur subtraction of
    covariance blocks.
    """
    s, a = obs.n_sat_dd, obs.n_baselines
    eye_a = np.eye(a)
    g = np.hstack([np.kron(eye_a, obs.design_geometry),
                   np.kron(eye_a, obs.design_ambiguity)])
    nx = 3 * a
    theta, cov, m = _normal_solve(g, obs, ("baseline", "ambiguity"), nx)
    x_hat = unvec(theta[:nx], 3, a)
    n_hat = unvec(theta[nx:], s, a)
    cov_xx = cov[:nx, :nx]
    cov_xn = cov[:nx, nx:]
    cov_nx = cov[nx:, :nx]
    cov_nn = cov[nx:, nx:]
    cond_xx = spd_inverse(m[:nx, :nx])
    cond_nn = spd_inverse(m[nx:, nx:])
    residual_sq = baseline_objective_value(obs, x_hat, n_hat)
    return FloatSolutionUC(
        x_hat=x_hat, n_hat=n_hat, cov_xx=cov_xx, cov_xn=cov_xn,
        cov_nx=cov_nx, cov_nn=cov_nn, cond_cov_xx_given_n=cond_xx,
        cond_cov_nn_given_x=cond_nn, residual_sq=residual_sq, obs=obs,
        info_matrix=m)


def solve_float_ac(obs: ObservationSet,
                   body_baselines: np.ndarray | None = None) -> FloatSolutionAC:
    """Affine-constrained float solution and its covariance blocks."""
    xb = obs.body_baselines if body_baselines is None \
        else np.asarray(body_baselines, dtype=float)
    s, a = obs.n_sat_dd, obs.n_baselines
    q = xb.shape[0]
    if xb.shape != (q, a) or q != min(3, a):
        raise ValueError("body_baselines must be min(3,A) x A")
    g = np.hstack([np.kron(xb.T, obs.design_geometry),
                   np.kron(np.eye(a), obs.design_ambiguity)])
    nr = 3 * q
    theta, cov, m = _normal_solve(g, obs, ("attitude", "ambiguity"), nr)
    r_hat = unvec(theta[:nr], 3, q)
    n_hat = unvec(theta[nr:], s, a)
    cov_rr = cov[:nr, :nr]
    cov_rn = cov[:nr, nr:]
    cov_nr = cov[nr:, :nr]
    cov_nn = cov[nr:, nr:]
    # information-matrix identities: inverse conditional covariances are
    # the diagonal blocks of M (see solve_float_uc)
    cond_rr = spd_inverse(m[:nr, :nr])
    cond_nn = spd_inverse(m[nr:, nr:])
    eigs = np.linalg.eigvalsh(sym(m[:nr, :nr]))
    resid = vec(obs.y) - g @ theta
    residual_sq = float(resid @ obs.apply_weight(resid))
    return FloatSolutionAC(
        r_hat=r_hat, n_hat=n_hat, cov_rr=cov_rr, cov_rn=cov_rn,
        cov_nr=cov_nr, cov_nn=cov_nn, cond_cov_rr_given_n=cond_rr,
        cond_cov_nn_given_r=cond_nn, residual_sq=residual_sq,
        xi_min=float(eigs[0]), xi_max=float(eigs[-1]),
        body_baselines=xb, obs=obs, info_matrix=m)


def conditional_r(fs: FloatSolutionAC, n: np.ndarray) -> np.ndarray:
    """Attitude estimate conditioned on fixed ambiguities N (affine in N)."""
    n = np.asarray(n, dtype=float)
    out = vec(fs.r_hat) - fs.gain_rn @ vec(fs.n_hat - n)
    return unvec(out, 3, fs.q)


def conditional_n(fs: FloatSolutionAC, r: np.ndarray) -> np.ndarray:
    """Ambiguity estimate conditioned on a fixed attitude R (affine in R)."""
    r = np.asarray(r, dtype=float)
    out = vec(fs.n_hat) - fs.gain_nr @ vec(fs.r_hat - r)
    s, a = fs.shape_n
    return unvec(out, s, a)


def conditional_x(fsu: FloatSolutionUC, n: np.ndarray) -> np.ndarray:
    """Baseline coordinates conditioned on fixed ambiguities (UC model)."""
    n = np.asarray(n, dtype=float)
    out = vec(fsu.x_hat) - fsu.gain_xn @ vec(fsu.n_hat - n)
    return unvec(out, 3, fsu.x_hat.shape[1])


def weighted_procrustes(target: np.ndarray, weight: np.ndarray,
                        cfg: OptimizerConfig | None = None,
                        multi_start: bool = True):
    """Minimize ||vec(R - target)||^2_weight over orthonormal 3 x q matrices.

    Starts from the SVD polar factor of the target; when that run does not
    reach the gradient tolerance and ``multi_start`` is set, four extra
    deterministic random starts are tried and the best cost wins.

    Returns (StiefelPoint, diagnostics, value, n_runs).
    """
    cfg = cfg or OptimizerConfig()
    target = np.asarray(target, dtype=float)
    tvec = vec(target)

    def cost(xarr):
        d = vec(xarr) - tvec
        return float(d @ (weight @ d))

    def egrad(xarr):
        d = vec(xarr) - tvec
        return unvec(2.0 * (weight @ d), 3, target.shape[1])

    x0 = polar_factor(target)
    best_x, best_diag = _minimize_arrays(cost, egrad, x0, cfg)
    best_val = best_diag.cost
    runs = 1
    if multi_start and best_diag.grad_norm > cfg.grad_tol:
        rng = np.random.default_rng(_MULTISTART_SEED)
        for _ in range(N_RANDOM_STARTS):
            start = random_stiefel(target.shape[1], rng)
            x_try, diag_try = _minimize_arrays(cost, egrad, start.x, cfg)
            runs += 1
            if diag_try.cost < best_val:
                best_x, best_diag, best_val = x_try, diag_try, diag_try.cost
    return StiefelPoint(best_x), best_diag, best_val, runs


def solve_float_riemannian(fs: FloatSolutionAC,
                           opt_cfg: OptimizerConfig | None = None) -> RieMFloat:
    """Manifold float solution.

    The attitude minimizes the weighted distance to the affine-constrained
    estimate over the Stiefel manifold; the ambiguities are the conditional
    estimate at that attitude.
    """
    point, diag, _, _ = weighted_procrustes(fs.r_hat, fs.weight_rr, opt_cfg)
    n_rm = conditional_n(fs, point.x)
    return RieMFloat(r_rm=point, n_rm=n_rm, diagnostics=diag)
