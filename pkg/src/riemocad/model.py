"""Double-difference GNSS attitude observation model.

A ``Scenario`` is a complete ground truth: DD satellite geometry, the
antenna array expressed in the body frame, the true attitude, the true
integer carrier-phase ambiguities and the undifferenced noise levels.
``simulate_observations`` turns a scenario plus a seed into a stacked
phase/code ``ObservationSet`` with its full DD covariance.

Observation equations (per baseline, in meters)::

    phase = H (R X_b) + lam * N + noise_phase
    code  = H (R X_b)           + noise_code

which stack into ``Y = A (R X_b) + B N + noise`` with ``A = [H; H]`` and
``B = [lam*I; 0]``.  The covariance of vec(Y) is ``P ⊗ Q_y`` where ``P``
has unit diagonal and 0.5 off-diagonal entries (baselines sharing the
master antenna) and ``Q_y`` is the per-baseline DD covariance
``blkdiag(2*sp^2 (I + 11^T), 2*sc^2 (I + 11^T))``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag, cho_factor, cho_solve

from .linalg import is_spd, unvec, vec

#: Default carrier wavelength in meters (GPS L1).
DEFAULT_WAVELENGTH_M = 0.19029

#: Default ratio of code noise to phase noise.
DEFAULT_CODE_OVER_PHASE = 100.0

#: Elevation cut-off for synthetic sky sampling, degrees.
ELEVATION_CUTOFF_DEG = 10.0

#: True integer ambiguities are drawn uniformly from [-AMB_RANGE, AMB_RANGE].
AMBIGUITY_RANGE = 50

#: Smallest singular value accepted for the body-frame antenna matrix.
MIN_BODY_SV = 0.1

#: Smallest singular value accepted for the DD line-of-sight matrix.
MIN_LOS_SV = 0.05

# Covariance floor (meters) substituted when a sigma is exactly zero, so a
# noiseless scenario still yields an SPD weight for the solvers.
_SIGMA_FLOOR = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    """Ground-truth world for one simulated attitude epoch.

    Attributes:
        los_matrix: (S, 3) DD line-of-sight difference rows.
        wavelength: carrier wavelength, meters.
        body_baselines: (q, A) antenna baseline coordinates in the body
            frame, q = min(3, A), full row rank.
        true_rotation: (3, q) attitude with orthonormal columns.
        true_ambiguities: (S, A) integer DD ambiguities, cycles.
        sigma_phase: undifferenced carrier-phase noise std, meters.
        sigma_code: undifferenced pseudo-range noise std, meters.
    """

    los_matrix: np.ndarray
    wavelength: float
    body_baselines: np.ndarray
    true_rotation: np.ndarray
    true_ambiguities: np.ndarray
    sigma_phase: float
    sigma_code: float

    def __post_init__(self):
        los = np.asarray(self.los_matrix, dtype=float)
        xb = np.asarray(self.body_baselines, dtype=float)
        rot = np.asarray(self.true_rotation, dtype=float)
        amb = np.asarray(self.true_ambiguities)
        if los.ndim != 2 or los.shape[1] != 3 or los.shape[0] < 3:
            raise ValueError("los_matrix must be S x 3 with S >= 3")
        s = los.shape[0]
        q, a = xb.shape
        if q != min(3, a):
            raise ValueError(f"body_baselines must be min(3,A) x A, got {xb.shape}")
        if rot.shape != (3, q):
            raise ValueError(f"true_rotation must be 3 x {q}")
        if np.linalg.norm(rot.T @ rot - np.eye(q)) > 1e-12:
            raise ValueError("true_rotation columns are not orthonormal")
        if amb.shape != (s, a):
            raise ValueError(f"true_ambiguities must be {s} x {a}")
        if not np.all(amb == np.round(amb)):
            raise ValueError("true_ambiguities must be integers")
        if np.linalg.svd(xb, compute_uv=False)[-1] <= 0:
            raise ValueError("body_baselines must have full row rank")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if self.sigma_phase < 0 or self.sigma_code < 0:
            raise ValueError("noise sigmas must be nonnegative")
        object.__setattr__(self, "los_matrix", _readonly(los))
        object.__setattr__(self, "body_baselines", _readonly(xb))
        object.__setattr__(self, "true_rotation", _readonly(rot))
        object.__setattr__(self, "true_ambiguities", _readonly(amb.astype(np.int64)))

    @property
    def n_sat_dd(self) -> int:
        return self.los_matrix.shape[0]

    @property
    def n_baselines(self) -> int:
        return self.body_baselines.shape[1]

    @property
    def q(self) -> int:
        return self.body_baselines.shape[0]


@dataclass(frozen=True)
class ObservationSet:
    """Stacked DD observations with their design matrices and covariance.

    ``y`` is 2S x A (phase rows on top of code rows, one column per
    baseline), ``design_geometry`` is the 2S x 3 matrix [H; H],
    ``design_ambiguity`` the 2S x S matrix [lam*I; 0] and ``cov_yy`` the
    2SA x 2SA covariance of vec(y).  ``body_baselines`` carries the known
    antenna-array geometry alongside the data.
    """

    y: np.ndarray
    design_geometry: np.ndarray
    design_ambiguity: np.ndarray
    cov_yy: np.ndarray
    n_sat_dd: int
    n_baselines: int
    body_baselines: np.ndarray

    def __post_init__(self):
        s, a = self.n_sat_dd, self.n_baselines
        y = np.asarray(self.y, dtype=float)
        ag = np.asarray(self.design_geometry, dtype=float)
        ab = np.asarray(self.design_ambiguity, dtype=float)
        cov = np.asarray(self.cov_yy, dtype=float)
        xb = np.asarray(self.body_baselines, dtype=float)
        if y.shape != (2 * s, a):
            raise ValueError(f"y must be {2 * s} x {a}")
        if ag.shape != (2 * s, 3):
            raise ValueError(f"design_geometry must be {2 * s} x 3")
        if ab.shape != (2 * s, s):
            raise ValueError(f"design_ambiguity must be {2 * s} x {s}")
        if cov.shape != (2 * s * a, 2 * s * a):
            raise ValueError(f"cov_yy must be {2 * s * a} square")
        if not is_spd(cov):
            raise ValueError("cov_yy must be symmetric positive definite")
        if xb.shape != (min(3, a), a):
            raise ValueError(f"body_baselines must be {min(3, a)} x {a}")
        for name, val in (("y", y), ("design_geometry", ag),
                          ("design_ambiguity", ab), ("cov_yy", cov),
                          ("body_baselines", xb)):
            object.__setattr__(self, name, _readonly(val))

    @cached_property
    def _cov_chol(self):
        return cho_factor(self.cov_yy, lower=True)

    def apply_weight(self, v: np.ndarray) -> np.ndarray:
        """Solve cov_yy @ x = v, i.e. apply the inverse covariance."""
        return cho_solve(self._cov_chol, v)

    @property
    def q(self) -> int:
        return self.body_baselines.shape[0]


def build_design_matrices(los_matrix: np.ndarray, wavelength: float):
    """Stack the geometry and ambiguity design matrices [H; H] and [lam*I; 0].

    Rejects S < 3: with fewer than three DD rows the 3D attitude is
    underdetermined even with the ambiguities fixed.
    """
    h = np.asarray(los_matrix, dtype=float)
    if h.ndim != 2 or h.shape[1] != 3:
        raise ValueError("los_matrix must be S x 3")
    s = h.shape[0]
    if s < 3:
        raise ValueError("need at least 3 DD observations for 3D attitude")
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    design_geometry = np.vstack([h, h])
    design_ambiguity = np.vstack([wavelength * np.eye(s), np.zeros((s, s))])
    return design_geometry, design_ambiguity


def build_covariance(sigma_phase: float, sigma_code: float,
                     n_sat_dd: int, n_baselines: int) -> np.ndarray:
    """DD covariance of vec(Y): P ⊗ Q_y.

    Q_y is the single-baseline covariance obtained by double-differencing
    i.i.d. undifferenced noise across a pivot satellite and the master
    antenna; P has unit diagonal and 0.5 off-diagonal entries because all
    baselines share the master antenna.
    """
    if sigma_phase <= 0 or sigma_code <= 0:
        raise ValueError("noise sigmas must be positive")
    s, a = n_sat_dd, n_baselines
    dd = np.eye(s) + np.ones((s, s))
    q_y = block_diag(2.0 * sigma_phase**2 * dd, 2.0 * sigma_code**2 * dd)
    p = 0.5 * (np.eye(a) + np.ones((a, a)))
    return np.kron(p, q_y)


def simulate_observations(scenario: Scenario, seed: int) -> ObservationSet:
    """Draw one noisy ObservationSet from a scenario, deterministic in seed.

    The noiseless mean is A (R X_b) + B N; additive noise is vec-Gaussian
    with the covariance of :func:`build_covariance`.  Exactly-zero sigmas
    are floored at a tiny value inside the *covariance* only, so the weight
    matrix stays SPD while the simulated noise is exactly zero.
    """
    s, a = scenario.n_sat_dd, scenario.n_baselines
    a_geo, b_amb = build_design_matrices(scenario.los_matrix, scenario.wavelength)
    mean = a_geo @ (scenario.true_rotation @ scenario.body_baselines) \
        + b_amb @ scenario.true_ambiguities
    sp = scenario.sigma_phase if scenario.sigma_phase > 0 else _SIGMA_FLOOR
    sc = scenario.sigma_code if scenario.sigma_code > 0 else _SIGMA_FLOOR
    cov = build_covariance(sp, sc, s, a)
    if scenario.sigma_phase > 0 or scenario.sigma_code > 0:
        rng = np.random.default_rng(seed)
        chol = np.linalg.cholesky(cov)
        noise = unvec(chol @ rng.standard_normal(2 * s * a), 2 * s, a)
    else:
        noise = np.zeros_like(mean)
    return ObservationSet(
        y=mean + noise,
        design_geometry=a_geo,
        design_ambiguity=b_amb,
        cov_yy=cov,
        n_sat_dd=s,
        n_baselines=a,
        body_baselines=scenario.body_baselines,
    )


def objective_value(obs: ObservationSet, r: np.ndarray, n: np.ndarray) -> float:
    """Weighted squared residual norm ||vec(Y - A R X_b - B N)||^2_{Qyy^-1}."""
    r = np.asarray(r, dtype=float)
    n = np.asarray(n, dtype=float)
    if r.shape != (3, obs.q):
        raise ValueError(f"attitude must be 3 x {obs.q}")
    if n.shape != (obs.n_sat_dd, obs.n_baselines):
        raise ValueError(f"ambiguity matrix must be {obs.n_sat_dd} x {obs.n_baselines}")
    resid = vec(obs.y - obs.design_geometry @ (r @ obs.body_baselines)
                - obs.design_ambiguity @ n)
    return float(resid @ obs.apply_weight(resid))


def baseline_objective_value(obs: ObservationSet, x: np.ndarray, n: np.ndarray) -> float:
    """Residual norm of the geometry-unconstrained model, with X = R X_b free."""
    x = np.asarray(x, dtype=float)
    n = np.asarray(n, dtype=float)
    resid = vec(obs.y - obs.design_geometry @ x - obs.design_ambiguity @ n)
    return float(resid @ obs.apply_weight(resid))


# ---------------------------------------------------------------------------
# Scenario sampling


def random_sky(n_satellites: int, rng: np.random.Generator) -> np.ndarray:
    """Unit line-of-sight vectors for tracked satellites, ENU frame.

    Azimuth is uniform; elevation density is proportional to cos(elev) on
    [cutoff, 90 deg], i.e. uniform on the spherical cap above the cut-off.
    """
    az = rng.uniform(0.0, 2.0 * np.pi, n_satellites)
    sin_cut = np.sin(np.deg2rad(ELEVATION_CUTOFF_DEG))
    sin_el = rng.uniform(sin_cut, 1.0, n_satellites)
    cos_el = np.sqrt(1.0 - sin_el**2)
    return np.column_stack([cos_el * np.cos(az), cos_el * np.sin(az), sin_el])


def dd_los_rows(unit_los: np.ndarray) -> np.ndarray:
    """DD line-of-sight difference rows against the highest-elevation pivot."""
    u = np.asarray(unit_los, dtype=float)
    pivot = int(np.argmax(u[:, 2]))
    keep = [i for i in range(u.shape[0]) if i != pivot]
    return u[keep] - u[pivot]


def sample_scenario(n_satellites: int, n_baselines: int, sigma_phase: float,
                    rng: np.random.Generator, *, sigma_code: float | None = None,
                    wavelength: float = DEFAULT_WAVELENGTH_M,
                    los_matrix: np.ndarray | None = None,
                    max_rejects: int = 200) -> tuple[Scenario, int]:
    """Draw a random scenario; returns (scenario, number of rejected draws).

    Rotation is Haar-uniform on the Stiefel manifold, ambiguities are
    uniform integers, antenna baselines are unit random directions
    resampled until the body matrix is well conditioned.  A fixed
    ``los_matrix`` (e.g. from a geometry file) bypasses sky sampling.
    """
    from .stiefel import random_stiefel  # local import to avoid a cycle

    if n_satellites < 4:
        raise ValueError("need at least 4 tracked satellites (S >= 3)")
    if sigma_code is None:
        sigma_code = DEFAULT_CODE_OVER_PHASE * sigma_phase
    a = n_baselines
    q = min(3, a)
    rejects = 0
    if los_matrix is None:
        for _ in range(max_rejects):
            los = dd_los_rows(random_sky(n_satellites, rng))
            if np.linalg.svd(los, compute_uv=False)[-1] >= MIN_LOS_SV:
                break
            rejects += 1
        else:
            raise RuntimeError("could not sample a well-conditioned sky geometry")
    else:
        los = np.asarray(los_matrix, dtype=float)
    for _ in range(max_rejects):
        cols = rng.standard_normal((q, a))
        cols /= np.linalg.norm(cols, axis=0, keepdims=True)
        if np.linalg.svd(cols, compute_uv=False)[-1] >= MIN_BODY_SV:
            xb = cols
            break
        rejects += 1
    else:
        raise RuntimeError("could not sample a full-row-rank antenna array")
    rot = random_stiefel(q, rng).x
    amb = rng.integers(-AMBIGUITY_RANGE, AMBIGUITY_RANGE + 1, size=(n_satellites - 1, a))
    scenario = Scenario(
        los_matrix=los, wavelength=wavelength, body_baselines=xb,
        true_rotation=rot, true_ambiguities=amb,
        sigma_phase=sigma_phase, sigma_code=sigma_code,
    )
    return scenario, rejects


# ---------------------------------------------------------------------------
# Serialization


def scenario_to_json(scenario: Scenario) -> dict:
    """Plain-JSON form of a scenario (row-major nested arrays)."""
    return {
        "los": scenario.los_matrix.tolist(),
        "wavelength_m": scenario.wavelength,
        "body_baselines_m": scenario.body_baselines.tolist(),
        "true_rotation": scenario.true_rotation.tolist(),
        "true_ambiguities": scenario.true_ambiguities.tolist(),
        "sigma_phase_m": scenario.sigma_phase,
        "sigma_code_m": scenario.sigma_code,
    }


def scenario_from_json(data: dict) -> Scenario:
    try:
        return Scenario(
            los_matrix=np.asarray(data["los"], dtype=float),
            wavelength=float(data["wavelength_m"]),
            body_baselines=np.asarray(data["body_baselines_m"], dtype=float),
            true_rotation=np.asarray(data["true_rotation"], dtype=float),
            true_ambiguities=np.asarray(data["true_ambiguities"]),
            sigma_phase=float(data["sigma_phase_m"]),
            sigma_code=float(data["sigma_code_m"]),
        )
    except KeyError as exc:
        raise ValueError(f"scenario JSON is missing field {exc.args[0]!r}") from exc


def observations_to_json(obs: ObservationSet) -> dict:
    return {
        "y": obs.y.tolist(),
        "design_geometry": obs.design_geometry.tolist(),
        "design_ambiguity": obs.design_ambiguity.tolist(),
        "cov_yy": obs.cov_yy.tolist(),
        "n_sat_dd": obs.n_sat_dd,
        "n_baselines": obs.n_baselines,
        "body_baselines_m": obs.body_baselines.tolist(),
    }


def observations_from_json(data: dict) -> ObservationSet:
    try:
        return ObservationSet(
            y=np.asarray(data["y"], dtype=float),
            design_geometry=np.asarray(data["design_geometry"], dtype=float),
            design_ambiguity=np.asarray(data["design_ambiguity"], dtype=float),
            cov_yy=np.asarray(data["cov_yy"], dtype=float),
            n_sat_dd=int(data["n_sat_dd"]),
            n_baselines=int(data["n_baselines"]),
            body_baselines=np.asarray(data["body_baselines_m"], dtype=float),
        )
    except KeyError as exc:
        raise ValueError(f"observation JSON is missing field {exc.args[0]!r}") from exc


def save_json(path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def load_los_csv(path) -> np.ndarray:
    """Read undifferenced unit LOS vectors and form DD rows against the pivot.

    Expected header: ``sat_id,ux,uy,uz``, one row per tracked satellite.
    The pivot is the highest-elevation satellite (largest uz).
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"sat_id", "ux", "uy", "uz"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError("geometry CSV must have header sat_id,ux,uy,uz")
        for rec in reader:
            rows.append([float(rec["ux"]), float(rec["uy"]), float(rec["uz"])])
    u = np.asarray(rows, dtype=float)
    if u.shape[0] < 4:
        raise ValueError("geometry CSV needs at least 4 tracked satellites")
    norms = np.linalg.norm(u, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"line-of-sight row {bad} is not a unit vector")
    return dd_los_rows(u)
