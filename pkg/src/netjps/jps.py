"""Joint propensity-score pipeline for continuous treatments under interference.

The estimation procedure has five stages: fit the Gaussian treatment models
(individual treatment on its covariates after a zero-skewness power
transform; neighborhood treatment on its covariates plus the individual
treatment), evaluate both propensity scores at the observed treatments, fit
the polynomial outcome model on treatments and scores, impute per-unit
potential outcomes over a (z, g) grid under counterfactual scores, and
average over units.  Marginal curves average the per-unit imputations over
the observed distribution of the other treatment.

Grid imputation is embarrassingly parallel over cells: the fitted objects
are read-only and each cell's unit average uses numpy's pairwise summation,
so results do not depend on evaluation order.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateExposureError, DomainError, InputError
from .linear_model import (
    LinearFit,
    build_outcome_matrix,
    fit_ols,
    normal_density,
)
from .transforms import BoxCoxFit, boxcox_apply, boxcox_zero_skew

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridPolicy:
    """Evaluation grid: equispaced between empirical percentiles by default,
    or explicit values when given."""

    n_z: int = 20
    n_g: int = 20
    lower_pct: float = 5.0
    upper_pct: float = 95.0
    z_values: tuple | None = None
    g_values: tuple | None = None

    def resolve(self, z_obs, g_obs=None):
        z_grid = self._axis(self.z_values, self.n_z, z_obs, "z")
        g_grid = None
        if g_obs is not None:
            g_grid = self._axis(self.g_values, self.n_g, g_obs, "g")
        return z_grid, g_grid

    def _axis(self, explicit, n, obs, label):
        if explicit is not None:
            grid = np.asarray(explicit, dtype=float)
        else:
            lo, hi = np.percentile(obs, [self.lower_pct, self.upper_pct])
            grid = np.linspace(lo, hi, n)
        if grid.size == 0:
            raise InputError(f"empty {label} grid")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise InputError(f"{label} grid must be strictly increasing")
        if grid[0] < np.min(obs) or grid[-1] > np.max(obs):
            logger.warning(
                "%s grid [%g, %g] extends outside the observed support [%g, %g]",
                label, grid[0], grid[-1], np.min(obs), np.max(obs),
            )
        return grid


@dataclass(frozen=True)
class JpsConfig:
    """Covariate bindings and grid policy for one estimation run."""

    x_z: tuple
    x_g: tuple
    grid: GridPolicy = field(default_factory=GridPolicy)
    retain_unit_level: bool = True

    def __post_init__(self):
        object.__setattr__(self, "x_z", tuple(self.x_z))
        object.__setattr__(self, "x_g", tuple(self.x_g))


@dataclass(frozen=True)
class GpsFit:
    """Fitted treatment models: the transform, Z*-model and G-model."""

    boxcox: BoxCoxFit
    z_model: LinearFit
    g_model: LinearFit
    x_z: tuple
    x_g: tuple

    def __post_init__(self):
        if self.g_model.names != ("const", *self.x_g, "z"):
            raise InputError(
                "neighborhood-treatment design must be (const, *x_g, z); "
                f"got {self.g_model.names}"
            )
        if self.z_model.names != ("const", *self.x_z):
            raise InputError(
                f"individual-treatment design must be (const, *x_z); got {self.z_model.names}"
            )


@dataclass(frozen=True)
class PropensityScores:
    """Gaussian density values of both scores at the observed treatments."""

    phi: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        for arr, label in ((self.phi, "individual"), (self.lam, "neighborhood")):
            arr = np.asarray(arr, dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise DomainError(f"{label} propensity scores must be positive and finite")


@dataclass(frozen=True)
class OutcomeFit:
    fit: LinearFit
    variant: str


@dataclass
class DrfGrid:
    """Imputed dose-response surface, marginals, and optional per-unit detail.

    ``surface[iz, ig]`` averages the imputed potential outcomes at
    (z_grid[iz], g_grid[ig]); a z-only grid (the no-interference estimator)
    has ``g_grid``/``surface``/``marginal_g`` set to None.
    """

    z_grid: np.ndarray
    g_grid: np.ndarray | None
    surface: np.ndarray | None
    marginal_z: np.ndarray
    marginal_g: np.ndarray | None
    unit_marginal_z: np.ndarray | None = None
    unit_marginal_g: np.ndarray | None = None
    unit_surface: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.z_grid.size > 1 and not np.all(np.diff(self.z_grid) > 0):
            raise InputError("z grid must be strictly increasing")
        if self.g_grid is not None:
            if self.g_grid.size > 1 and not np.all(np.diff(self.g_grid) > 0):
                raise InputError("g grid must be strictly increasing")
            if self.surface is not None and self.surface.shape != (
                self.z_grid.size,
                self.g_grid.size,
            ):
                raise InputError("surface dimensions must match the grids")


def _design(dataset, names, extra=None):
    cols = [np.ones(dataset.n)]
    labels = ["const"]
    mat = dataset.covariate_matrix(list(names))
    for j, nm in enumerate(names):
        cols.append(mat[:, j])
        labels.append(nm)
    if extra is not None:
        cols.append(extra[0])
        labels.append(extra[1])
    return np.column_stack(cols), tuple(labels)


def fit_treatment_models(dataset, config):
    """Stage 1: Gaussian models for both treatments.

    The individual treatment is transformed to zero skewness first; the
    neighborhood-treatment design always includes the individual treatment.
    """
    g = dataset.require_g()
    if np.ptp(g) == 0:
        raise DegenerateExposureError(
            "all exposures identical; the joint model is unidentified - "
            "use the no-interference estimator (naive_drf)"
        )
    bc, zstar = boxcox_zero_skew(dataset.z)
    xz, names_z = _design(dataset, config.x_z)
    z_model = fit_ols(xz, zstar, names=names_z)
    xg, names_g = _design(dataset, config.x_g, extra=(dataset.z, "z"))
    g_model = fit_ols(xg, g, names=names_g)
    return GpsFit(boxcox=bc, z_model=z_model, g_model=g_model,
                  x_z=tuple(config.x_z), x_g=tuple(config.x_g))


def _score_parts(gps, dataset):
    """Per-unit conditional means used by both score prediction and imputation."""
    if gps.z_model.sigma <= 0:
        raise DomainError("individual-treatment residual scale is zero; scores degenerate")
    if gps.g_model.sigma <= 0:
        raise DomainError("neighborhood-treatment residual scale is zero; scores degenerate")
    xz, _ = _design(dataset, gps.x_z)
    mean_zstar = xz @ gps.z_model.theta
    xg_base, _ = _design(dataset, gps.x_g)
    beta_gz = gps.g_model.coef("z")
    base_g = xg_base @ gps.g_model.theta[:-1]
    return mean_zstar, base_g, beta_gz


def predict_scores(gps, dataset):
    """Stage 2: both scores evaluated at each unit's observed treatments.

    The individual score is the Gaussian density of the transformed
    treatment (no Jacobian back to the raw scale: the score only enters the
    outcome model as a balancing covariate).
    """
    mean_zstar, base_g, beta_gz = _score_parts(gps, dataset)
    zstar = boxcox_apply(dataset.z, gps.boxcox.k)
    phi = normal_density(zstar, mean_zstar, gps.z_model.sigma)
    lam = normal_density(dataset.require_g(), base_g + beta_gz * dataset.z, gps.g_model.sigma)
    return PropensityScores(phi=phi, lam=lam)


def fit_outcome(dataset, scores, variant="with_interference"):
    """Stage 3: polynomial outcome model on treatments and scores."""
    g = dataset.g if dataset.g is not None else np.zeros(dataset.n)
    x, names = build_outcome_matrix(dataset.z, g, scores.phi, scores.lam, variant)
    fit = fit_ols(x, dataset.y, names=names)
    return OutcomeFit(fit=fit, variant=variant)


def _impute_cells(outcome, z, g, phi, lam):
    x, _ = build_outcome_matrix(z, g, phi, lam, outcome.variant)
    return x @ outcome.fit.theta


def impute_drf(gps, outcome, dataset, grid=None, retain_unit_level=True):
    """Stages 4-5: counterfactual scores, per-unit imputation, unit averages.

    For every grid pair (z, g) each unit's scores are re-evaluated at that
    treatment level; the surface averages the imputed outcomes.  Marginal
    curves plug in the observed values of the other treatment
    (mu_z(z) averages Y_i(z, G_i), mu_g(g) averages Y_i(Z_i, g)).
    """
    grid = grid or GridPolicy()
    g_obs = dataset.require_g()
    z_grid, g_grid = grid.resolve(dataset.z, g_obs)
    mean_zstar, base_g, beta_gz = _score_parts(gps, dataset)
    sigma_z, sigma_g = gps.z_model.sigma, gps.g_model.sigma
    k = gps.boxcox.k
    n, nz, ng = dataset.n, z_grid.size, g_grid.size

    # unit-level arrays are grid-major, (grid..., n): each grid point's unit
    # vector is contiguous, so its mean is bit-identical to the stored curve
    surface = np.empty((nz, ng))
    unit_surface = np.empty((nz, ng, n)) if retain_unit_level else None
    unit_mz = np.empty((nz, n)) if retain_unit_level else None
    unit_mg = np.empty((ng, n)) if retain_unit_level else None
    marginal_z = np.empty(nz)
    marginal_g = np.empty(ng)
    flagged = []

    for iz, zv in enumerate(z_grid):
        zs = boxcox_apply(zv, k)
        phi_z = normal_density(zs, mean_zstar, sigma_z)
        gmean_z = base_g + beta_gz * zv
        for ig, gv in enumerate(g_grid):
            lam_zg = normal_density(gv, gmean_z, sigma_g)
            yhat = _impute_cells(outcome, zv, gv, phi_z, lam_zg)
            if not np.all(np.isfinite(yhat)):
                flagged.append((iz, ig))
                surface[iz, ig] = np.nan
            else:
                surface[iz, ig] = yhat.mean()
            if retain_unit_level:
                unit_surface[iz, ig] = yhat
        # marginal over the observed exposure distribution
        lam_obs = normal_density(g_obs, gmean_z, sigma_g)
        yhat_z = _impute_cells(outcome, zv, g_obs, phi_z, lam_obs)
        marginal_z[iz] = yhat_z.mean()
        if retain_unit_level:
            unit_mz[iz] = yhat_z

    zstar_obs = boxcox_apply(dataset.z, k)
    phi_obs = normal_density(zstar_obs, mean_zstar, sigma_z)
    gmean_obs = base_g + beta_gz * dataset.z
    for ig, gv in enumerate(g_grid):
        lam_g = normal_density(gv, gmean_obs, sigma_g)
        yhat_g = _impute_cells(outcome, dataset.z, gv, phi_obs, lam_g)
        marginal_g[ig] = yhat_g.mean()
        if retain_unit_level:
            unit_mg[ig] = yhat_g

    if flagged:
        logger.warning("%d non-finite surface cells flagged", len(flagged))
    meta = {
        "n": n,
        "variant": outcome.variant,
        "grid": {"n_z": nz, "n_g": ng, "lower_pct": grid.lower_pct, "upper_pct": grid.upper_pct},
        "flagged_cells": flagged,
    }
    return DrfGrid(
        z_grid=z_grid, g_grid=g_grid, surface=surface,
        marginal_z=marginal_z, marginal_g=marginal_g,
        unit_marginal_z=unit_mz, unit_marginal_g=unit_mg, unit_surface=unit_surface,
        meta=meta,
    )


def marginals(drf, dataset):
    """Marginal dose-response curves re-averaged from per-unit imputations.

    Requires ``impute_drf(..., retain_unit_level=True)``; averages each grid
    point's contiguous unit vector, the same arithmetic path that produced
    the stored curves, so the result is exactly equal to them.
    """
    if drf.unit_marginal_z is None:
        raise InputError("per-unit imputations were not retained")
    mu_z = np.array([row.mean() for row in drf.unit_marginal_z])
    mu_g = None
    if drf.unit_marginal_g is not None:
        mu_g = np.array([row.mean() for row in drf.unit_marginal_g])
    return mu_z, mu_g


@dataclass(frozen=True)
class ContrastSpec:
    """Requested pairwise contrasts on the marginal curves."""

    z_pairs: tuple = ()
    g_pairs: tuple = ()


@dataclass
class EffectReport:
    """Contrasts delta(a, a') = mu(a) - mu(a') and central-difference derivatives."""

    z_grid: np.ndarray
    dz: np.ndarray
    g_grid: np.ndarray | None
    dg: np.ndarray | None
    direct: tuple
    spillover: tuple

    def to_payload(self):
        return {
            "z_grid": self.z_grid.tolist(),
            "dz": self.dz.tolist(),
            "g_grid": None if self.g_grid is None else self.g_grid.tolist(),
            "dg": None if self.dg is None else self.dg.tolist(),
            "direct": [list(t) for t in self.direct],
            "spillover": [list(t) for t in self.spillover],
        }


def _interp(grid, curve, v, label):
    if v < grid[0] or v > grid[-1]:
        raise InputError(f"{label} contrast point {v:g} outside grid hull [{grid[0]:g}, {grid[-1]:g}]")
    return float(np.interp(v, grid, curve))


def _finite_diff(grid, curve):
    d = np.empty_like(curve)
    if curve.size == 1:
        d[:] = np.nan
        return d
    d[0] = (curve[1] - curve[0]) / (grid[1] - grid[0])
    d[-1] = (curve[-1] - curve[-2]) / (grid[-1] - grid[-2])
    if curve.size > 2:
        d[1:-1] = (curve[2:] - curve[:-2]) / (grid[2:] - grid[:-2])
    return d


def effects(drf, spec=ContrastSpec()):
    """Direct and spillover effects from a fitted dose-response grid."""
    direct = tuple(
        (a, b, _interp(drf.z_grid, drf.marginal_z, a, "z") - _interp(drf.z_grid, drf.marginal_z, b, "z"))
        for a, b in spec.z_pairs
    )
    dz = _finite_diff(drf.z_grid, drf.marginal_z)
    if drf.marginal_g is not None:
        spill = tuple(
            (a, b, _interp(drf.g_grid, drf.marginal_g, a, "g") - _interp(drf.g_grid, drf.marginal_g, b, "g"))
            for a, b in spec.g_pairs
        )
        dg = _finite_diff(drf.g_grid, drf.marginal_g)
    else:
        if spec.g_pairs:
            raise InputError("spillover contrasts requested but no neighborhood marginal available")
        spill, dg = (), None
    return EffectReport(z_grid=drf.z_grid, dz=dz, g_grid=drf.g_grid, dg=dg,
                        direct=direct, spillover=spill)


@dataclass
class JpsResult:
    gps: GpsFit
    scores: PropensityScores
    outcome: OutcomeFit
    drf: DrfGrid


def run_jps(dataset, config):
    """Stages 1-5 in sequence."""
    gps = fit_treatment_models(dataset, config)
    scores = predict_scores(gps, dataset)
    outcome = fit_outcome(dataset, scores, "with_interference")
    drf = impute_drf(gps, outcome, dataset, config.grid,
                     retain_unit_level=config.retain_unit_level)
    return JpsResult(gps=gps, scores=scores, outcome=outcome, drf=drf)


@dataclass
class NaiveResult:
    boxcox: BoxCoxFit
    z_model: LinearFit
    outcome: OutcomeFit
    drf: DrfGrid


def run_naive(dataset, config):
    """No-interference pipeline: no exposure, no neighborhood score anywhere."""
    bc, zstar = boxcox_zero_skew(dataset.z)
    xz, names_z = _design(dataset, config.x_z)
    z_model = fit_ols(xz, zstar, names=names_z)
    if z_model.sigma <= 0:
        raise DomainError("individual-treatment residual scale is zero; scores degenerate")
    mean_zstar = xz @ z_model.theta
    phi_obs = normal_density(zstar, mean_zstar, z_model.sigma)
    ones = np.ones(dataset.n)
    x, names = build_outcome_matrix(dataset.z, 0.0, phi_obs, 1.0, "without_interference")
    outcome = OutcomeFit(fit=fit_ols(x, dataset.y, names=names), variant="without_interference")

    z_grid, _ = config.grid.resolve(dataset.z)
    nz = z_grid.size
    marginal_z = np.empty(nz)
    unit_mz = np.empty((nz, dataset.n)) if config.retain_unit_level else None
    for iz, zv in enumerate(z_grid):
        zs = boxcox_apply(zv, bc.k)
        phi_z = normal_density(zs, mean_zstar, z_model.sigma)
        yhat = _impute_cells(outcome, zv, 0.0 * ones, phi_z, ones)
        marginal_z[iz] = yhat.mean()
        if unit_mz is not None:
            unit_mz[iz] = yhat
    drf = DrfGrid(
        z_grid=z_grid, g_grid=None, surface=None,
        marginal_z=marginal_z, marginal_g=None,
        unit_marginal_z=unit_mz, unit_marginal_g=None, unit_surface=None,
        meta={"n": dataset.n, "variant": "without_interference",
              "grid": {"n_z": nz}, "flagged_cells": []},
    )
    return NaiveResult(boxcox=bc, z_model=z_model, outcome=outcome, drf=drf)


def naive_drf(dataset, grid=None, x_z=None):
    """No-interference dose-response curve (z-only grid)."""
    if x_z is None:
        x_z = dataset.covariate_names()
    config = JpsConfig(x_z=tuple(x_z), x_g=(), grid=grid or GridPolicy())
    return run_naive(dataset, config).drf
