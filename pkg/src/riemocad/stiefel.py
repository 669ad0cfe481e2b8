"""Geometry of St(3, q) and a first-order Riemannian descent solver.

Only the 3 x q case with q in {1, 2, 3} is supported: that is where the
attitude matrix lives.  Tangent vectors are kept in the implicit form
(X^T V skew) rather than the explicit X S + X_perp K parameterization,
so no orthogonal complement basis is ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import sym

_ORTHO_TOL = 1e-10
_SKEW_TOL = 1e-9
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class StiefelPoint:
    """A 3 x q matrix with orthonormal columns."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(np.asarray(self.x, dtype=float))
        if x.ndim != 2 or x.shape[0] != 3 or x.shape[1] not in (1, 2, 3):
            raise ValueError("point must be 3 x q with q in {1, 2, 3}")
        q = x.shape[1]
        err = np.linalg.norm(x.T @ x - np.eye(q))
        if err > _ORTHO_TOL:
            raise ValueError(f"columns are not orthonormal (defect {err:.2e})")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def q(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector at ``base``: satisfies base^T v + v^T base = 0."""

    v: np.ndarray
    base: StiefelPoint

    def __post_init__(self):
        v = np.array(np.asarray(self.v, dtype=float))
        if v.shape != self.base.x.shape:
            raise ValueError("tangent vector shape must match the base point")
        skew = np.linalg.norm(self.base.x.T @ v + v.T @ self.base.x)
        if skew > _SKEW_TOL:
            raise ValueError(f"not tangent at base (skew defect {skew:.2e})")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class OptimizerConfig:
    """Backtracking steepest-descent settings.

    ``initial_step`` seeds the very first line search; afterwards the
    accepted step size carries over (grown by one backtrack notch) so the
    solver adapts to the local curvature scale.
    """

    max_iters: int = 500
    grad_tol: float = 1e-9
    armijo_slope: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0
    retraction: str = "polar"

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if not 0.0 < self.armijo_slope < 1.0:
            raise ValueError("armijo_slope must be in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")
        if self.retraction not in ("polar", "qr"):
            raise ValueError("retraction must be 'polar' or 'qr'")


@dataclass
class MinimizeDiagnostics:
    iterations: int
    grad_norm: float
    reason: str
    cost: float


def random_stiefel(q: int, rng: np.random.Generator) -> StiefelPoint:
    """Haar-uniform point: QR of a Gaussian matrix with sign correction."""
    g = rng.standard_normal((3, q))
    qm, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return StiefelPoint(qm * signs)


def polar_factor(m: np.ndarray) -> np.ndarray:
    """Orthonormal polar factor of a 3 x q matrix via thin SVD."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float), full_matrices=False)
    return u @ vt


def project_tangent(x: StiefelPoint, u: np.ndarray) -> TangentVector:
    """Orthogonal projection U - X (X^T U + U^T X) / 2 onto the tangent space."""
    u = np.asarray(u, dtype=float)
    if u.shape != x.x.shape:
        raise ValueError("shape mismatch")
    return TangentVector(u - x.x @ sym(x.x.T @ u), x)


def riemannian_gradient(x: StiefelPoint, egrad: np.ndarray) -> TangentVector:
    """Project the Euclidean gradient: egrad - X sym(X^T egrad)."""
    return project_tangent(x, egrad)


def riemannian_hessian(x: StiefelPoint, egrad: np.ndarray,
                       ehess_along: np.ndarray, xi: TangentVector) -> TangentVector:
    """Riemannian Hessian along xi: Pi_X(ehess) - xi sym(X^T egrad)."""
    egrad = np.asarray(egrad, dtype=float)
    ehess_along = np.asarray(ehess_along, dtype=float)
    out = _project(x.x, ehess_along) - xi.v @ sym(x.x.T @ egrad)
    return project_tangent(x, out)


def _project(x: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u - x @ sym(x.T @ u)


def _retract_polar(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    # (x + v)((x + v)^T (x + v))^{-1/2}, which equals (x + v)(I + v^T v)^{-1/2}
    # for tangent v; the first form also scrubs accumulated orthonormality
    # drift from the base point.
    y = x + v
    if y.shape[1] == 1:
        return y / np.linalg.norm(y)
    w, e = np.linalg.eigh(y.T @ y)
    inv_sqrt = (e / np.sqrt(w)) @ e.T
    return y @ inv_sqrt


def _retract_qr(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    qm, r = np.linalg.qr(x + v)
    diag = np.diag(r)
    if np.any(np.abs(diag) < 1e-12):
        raise ValueError("retraction step produced rank-deficient point")
    signs = np.sign(diag)
    return qm * signs


def retract_polar(x: StiefelPoint, v: TangentVector) -> StiefelPoint:
    """Polar retraction; exact at v = 0."""
    if not np.any(v.v):
        return x
    return StiefelPoint(_retract_polar(x.x, v.v))


def retract_qr(x: StiefelPoint, v: TangentVector) -> StiefelPoint:
    """Q-factor retraction with nonnegative-diagonal sign convention."""
    if not np.any(v.v):
        return x
    return StiefelPoint(_retract_qr(x.x, v.v))


def _minimize_arrays(cost, egrad, x0: np.ndarray, cfg: OptimizerConfig):
    """Steepest descent with Armijo backtracking on raw 3 x q arrays.

    ``cost`` and ``egrad`` take plain ndarrays.  Returns
    (x, MinimizeDiagnostics).  The cost sequence over accepted iterates is
    non-increasing by construction.
    """
    retract = _retract_polar if cfg.retraction == "polar" else _retract_qr
    x = np.array(x0, dtype=float)
    fx = float(cost(x))
    step = cfg.initial_step
    reason = "max iterations"
    it = 0
    gnorm = np.inf
    for it in range(1, cfg.max_iters + 1):
        g = _project(x, np.asarray(egrad(x), dtype=float))
        gnorm = float(np.linalg.norm(g))
        if gnorm <= cfg.grad_tol:
            reason = "gradient tolerance"
            it -= 1
            break
        accepted = False
        t = step
        for _ in range(_MAX_BACKTRACKS):
            try:
                x_new = retract(x, -t * g)
            except ValueError:
                t *= cfg.backtrack_factor
                continue
            f_new = float(cost(x_new))
            # strict decrease: once improvements sink below float resolution
            # the search is allowed to stall out instead of treading water
            if f_new < fx - cfg.armijo_slope * t * gnorm * gnorm:
                accepted = True
                break
            if f_new <= fx:
                # near the floor of cost resolution the gradient norm is
                # still trustworthy; accept steps that shrink it markedly
                # without ever increasing the stored cost
                g_new = _project(x_new, np.asarray(egrad(x_new), dtype=float))
                if np.linalg.norm(g_new) <= 0.9 * gnorm:
                    accepted = True
                    break
            t *= cfg.backtrack_factor
        if not accepted:
            reason = "line-search stall"
            break
        x, fx = x_new, f_new
        step = t / cfg.backtrack_factor
    return x, MinimizeDiagnostics(iterations=it, grad_norm=gnorm, reason=reason, cost=fx)


def minimize(cost, egrad, x0: StiefelPoint, cfg: OptimizerConfig | None = None):
    """Minimize a smooth cost over St(3, q) by Riemannian steepest descent.

    Args:
        cost: StiefelPoint -> float.
        egrad: StiefelPoint -> 3 x q Euclidean gradient.
        x0: feasible starting point.
        cfg: optimizer settings (defaults used when None).

    Returns:
        (StiefelPoint, MinimizeDiagnostics).  Termination reasons are
        "gradient tolerance", "max iterations" or "line-search stall";
        on a stall the best point found so far is returned.
    """
    cfg = cfg or OptimizerConfig()
    x, diag = _minimize_arrays(
        lambda a: cost(StiefelPoint(a)),
        lambda a: egrad(StiefelPoint(a)),
        x0.x, cfg,
    )
    return StiefelPoint(x), diag
