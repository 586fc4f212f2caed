"""Monte-Carlo harness: ensembles, empirical densities and fluctuation statistics.

Sample ``i`` of a run always draws from ``RngStream(seed, i)``. Per-sample
results are gathered in sample order before any reduction, so a report does not
depend on how many worker processes produced it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .analytic import (
    Sector,
    delta_mu_theory,
    density_finite_n,
    density_occupied,
    density_semicircle,
    fermi_level,
    gap_prediction,
    semicircle_quantile,
    support_radius,
)
from .core import (
    EnsembleParams,
    RngStream,
    eigenvalues_hermitian,
    fermi_midpoint,
    regime_check,
    sample_displaced_block_spectra,
    sample_hermitian_gaussian,
    sample_joint_ground,
)
from .errors import ParameterError


# =============================
# Curves and grids
# =============================
@dataclass(frozen=True)
class Grid:
    """Uniform binning of [xmin, xmax] into ``bins`` cells."""

    xmin: float
    xmax: float
    bins: int

    def __post_init__(self) -> None:
        if int(self.bins) != self.bins or self.bins < 1:
            raise ParameterError(f"bins must be a positive integer, got {self.bins!r}")
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax) and self.xmax > self.xmin):
            raise ParameterError(f"need finite xmin < xmax, got [{self.xmin}, {self.xmax}]")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, self.bins + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def width(self) -> float:
        return (self.xmax - self.xmin) / self.bins

    def to_dict(self) -> dict:
        return {"xmin": self.xmin, "xmax": self.xmax, "bins": self.bins}


def default_grid(params: EnsembleParams, bins: int = 101) -> Grid:
    """Support of the combined ensemble padded by three quantum widths and the shift."""
    half = params.radius + 3.0 / math.sqrt(params.omega) + params.shift
    return Grid(-half, half, bins)


@dataclass
class DensityCurve:
    """Function sampled on an ascending grid with its declared total mass."""

    grid: np.ndarray
    values: np.ndarray
    mass: float

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ParameterError("grid and values must be 1-d arrays of equal length")
        if self.grid.size > 1 and not np.all(np.diff(self.grid) > 0):
            raise ParameterError("grid must be strictly ascending")
        if np.any(self.values < 0):
            raise ParameterError("density values must be non-negative")

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def peak(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0


def histogram(values, grid: Grid, mass: float) -> tuple[DensityCurve, int]:
    """Density histogram on bin centres scaled to total ``mass``.

    Returns the curve and the number of values falling outside the grid; the
    in-range counts alone carry the mass.
    """
    values = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(values)):
        raise ParameterError("histogram input contains non-finite values")
    counts, _ = np.histogram(values, bins=grid.edges)
    inside = int(counts.sum())
    overflow = values.size - inside
    if inside == 0:
        if mass != 0:
            raise ParameterError("no values inside the grid but a nonzero mass was requested")
        dens = np.zeros(grid.bins)
    else:
        dens = counts * (mass / (inside * grid.width))
    return DensityCurve(grid.centers, dens, mass), overflow


def l1_distance(a: DensityCurve, b: DensityCurve) -> float:
    """Trapezoidal integral of |a - b| on their common grid."""
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise ParameterError("curves are sampled on different grids")
    return float(np.trapezoid(np.abs(a.values - b.values), a.grid))


# =============================
# Configuration and reports
# =============================
@dataclass(frozen=True)
class ExperimentConfig:
    params: EnsembleParams
    n_samples: int
    seed: int = 0
    grid: Grid | None = None
    rho0: str = "semicircle"
    ensemble: str = "quenched"  # Fermi-level experiment: "quenched" (omega_tilde) or "combined" (c)
    edge_threshold: float = 0.01

    def __post_init__(self) -> None:
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ParameterError(f"n_samples must be >= 1, got {self.n_samples!r}")
        if self.rho0 not in ("semicircle", "finite-n"):
            raise ParameterError(f"unknown rho0 {self.rho0!r}")
        if self.ensemble not in ("quenched", "combined"):
            raise ParameterError(f"unknown ensemble {self.ensemble!r}")
        if not 0 < self.edge_threshold < 1:
            raise ParameterError("edge_threshold must lie in (0, 1)")
        if self.grid is None:
            object.__setattr__(self, "grid", default_grid(self.params))
        if self.grid.bins < 10:
            raise ParameterError(f"need at least 10 bins, got {self.grid.bins}")
        need = default_grid(self.params)
        if self.grid.xmin > need.xmin or self.grid.xmax < need.xmax:
            raise ParameterError(
                f"grid [{self.grid.xmin:.6g}, {self.grid.xmax:.6g}] does not cover "
                f"[{need.xmin:.6g}, {need.xmax:.6g}]"
            )

    def manifest(self, command: str) -> dict:
        return {
            "tool_version": __version__,
            "command": command,
            "params": self.params.to_dict(),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "grid": self.grid.to_dict(),
            "rho0": self.rho0,
            "ensemble": self.ensemble,
            "edge_threshold": self.edge_threshold,
        }


@dataclass
class ExperimentReport:
    """Curves on one shared grid, named scalars, and the run manifest."""

    command: str
    x: np.ndarray
    curves: dict[str, DensityCurve]
    scalars: dict[str, float | int | str | bool | None]
    manifest: dict
    warnings: list[str] = field(default_factory=list)


# =============================
# Per-sample kernels
# =============================
def _density_sample(params: EnsembleParams, i: int, seed: int, extra) -> np.ndarray:
    _, m = sample_joint_ground(params, RngStream(seed, i))
    return eigenvalues_hermitian(m)


def _gap_sample(params: EnsembleParams, i: int, seed: int, extra) -> np.ndarray:
    gen = RngStream(seed, i).generator()
    m0 = sample_hermitian_gaussian(params.n, params.omega_tilde, gen)
    filled, empty = sample_displaced_block_spectra(params, eigenvalues_hermitian(m0), gen)
    return np.concatenate([filled, empty])


def _fermi_sample(params: EnsembleParams, i: int, seed: int, stiffness) -> np.ndarray:
    m0 = sample_hermitian_gaussian(params.n, stiffness, RngStream(seed, i))
    return np.array([fermi_midpoint(eigenvalues_hermitian(m0), params.n_f)])


def _count_sample(params: EnsembleParams, i: int, seed: int, extra) -> np.ndarray:
    stiffness, lo, hi = extra
    m = sample_hermitian_gaussian(params.n, stiffness, RngStream(seed, i))
    ev = eigenvalues_hermitian(m)
    return np.array([np.count_nonzero((ev >= lo) & (ev < hi))], dtype=float)


_KERNELS = {
    "density": _density_sample,
    "gap": _gap_sample,
    "fermi": _fermi_sample,
    "count": _count_sample,
}


def _run_chunk(kernel: str, params: EnsembleParams, seed: int, start: int, stop: int, extra):
    fn = _KERNELS[kernel]
    return np.stack([fn(params, i, seed, extra) for i in range(start, stop)])


def sample_many(
    kernel: str, params: EnsembleParams, n_samples: int, seed: int, extra=None, workers: int = 1
) -> np.ndarray:
    """Run ``n_samples`` per-sample kernels; rows are returned in sample order."""
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    workers = min(workers, n_samples)
    if workers == 1:
        return _run_chunk(kernel, params, seed, 0, n_samples, extra)
    bounds = np.linspace(0, n_samples, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [
            pool.submit(_run_chunk, kernel, params, seed, int(a), int(b), extra)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        return np.concatenate([f.result() for f in futs])


def _gap_edges(filled: DensityCurve, empty: DensityCurve, threshold: float):
    """Highest filled bin and lowest empty bin above ``threshold`` times each peak."""
    f_idx = np.nonzero(filled.values > threshold * filled.peak())[0]
    e_idx = np.nonzero(empty.values > threshold * empty.peak())[0]
    upper = float(filled.grid[f_idx[-1]]) if f_idx.size else math.nan
    lower = float(empty.grid[e_idx[0]]) if e_idx.size else math.nan
    return upper, lower


# =============================
# Experiments
# =============================
def run_density_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Level density of M without fermions against the finite-n and semicircle curves."""
    t0 = time.perf_counter()
    p, grid = cfg.params, cfg.grid
    ev = sample_many("density", p, cfg.n_samples, cfg.seed, workers=workers)
    emp, overflow = histogram(ev, grid, p.n)
    x = grid.centers
    fin = DensityCurve(x, density_finite_n(x, p.n, p.c), p.n)
    semi = DensityCurve(x, density_semicircle(x, p.n, p.c), p.n)
    l1_fin, l1_semi = l1_distance(emp, fin), l1_distance(emp, semi)
    scalars = {
        "l1_finite_n": l1_fin,
        "l1_semicircle": l1_semi,
        "l1_finite_n_per_level": l1_fin / p.n,
        "l1_semicircle_per_level": l1_semi / p.n,
        "empirical_mass": float(emp.values.sum() * grid.width),
        "overflow": overflow,
        "mean_level": float(ev.mean()),
        "mean_trace_sq": float(np.mean(np.sum(ev**2, axis=1))),
        "mean_trace_sq_predicted": p.n**2 / (2.0 * p.c),
        "support_radius": p.radius,
    }
    manifest = cfg.manifest("density")
    manifest["regime"] = regime_check(p).to_dict()
    manifest["wall_time_s"] = time.perf_counter() - t0
    return ExperimentReport(
        "density",
        x,
        {"rho_empirical": emp, "rho_finite_n": fin, "rho_semicircle": semi},
        scalars,
        manifest,
    )


def run_gap_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Filled/empty level densities under the block approximation versus the erfc curves."""
    t0 = time.perf_counter()
    p, grid = cfg.params, cfg.grid
    if not 1 <= p.n_f <= p.n - 1:
        raise ParameterError(f"gap experiment needs 1 <= n_f <= n-1, got n_f={p.n_f}")
    regime = regime_check(p)
    pred = gap_prediction(p, rho0=cfg.rho0)

    levels = sample_many("gap", p, cfg.n_samples, cfg.seed, workers=workers)
    filled_emp, of_filled = histogram(levels[:, : p.n_f], grid, p.n_f)
    empty_emp, of_empty = histogram(levels[:, p.n_f :], grid, p.n - p.n_f)

    x = grid.centers
    filled_th = DensityCurve(
        x, density_occupied(x, p, Sector.FILLED, rho0=cfg.rho0, prediction=pred), p.n_f
    )
    empty_th = DensityCurve(
        x, density_occupied(x, p, Sector.EMPTY, rho0=cfg.rho0, prediction=pred), p.n - p.n_f
    )
    upper, lower = _gap_edges(filled_emp, empty_emp, cfg.edge_threshold)
    l1_f, l1_e = l1_distance(filled_emp, filled_th), l1_distance(empty_emp, empty_th)
    scalars = {
        "l1_filled": l1_f,
        "l1_empty": l1_e,
        "l1_filled_per_level": l1_f / p.n,
        "l1_empty_per_level": l1_e / p.n,
        "l1_total_per_level": (l1_f + l1_e) / p.n,
        "filled_mass": float(filled_emp.values.sum() * grid.width),
        "empty_mass": float(empty_emp.values.sum() * grid.width),
        "filled_upper_edge": upper,
        "empty_lower_edge": lower,
        "gap_width_empirical": lower - upper,
        "gap_width_predicted": pred.gap_width,
        "gap_midpoint_empirical": 0.5 * (upper + lower),
        "gap_edge_tolerance": 2.0 * grid.width + 2.0 / math.sqrt(pred.omega_f),
        "bin_width": grid.width,
        "mu_f": pred.mu_f,
        "omega_f": pred.omega_f,
        "delta_mu_f": pred.delta_mu_f,
        "shift": pred.shift,
        "overflow_filled": of_filled,
        "overflow_empty": of_empty,
        "regime_ok": regime.ok,
    }
    manifest = cfg.manifest("gap")
    manifest["regime"] = regime.to_dict()
    manifest["prediction"] = pred.to_dict()
    manifest["wall_time_s"] = time.perf_counter() - t0
    return ExperimentReport(
        "gap",
        x,
        {
            "filled_empirical": filled_emp,
            "filled_analytic": filled_th,
            "empty_empirical": empty_emp,
            "empty_analytic": empty_th,
        },
        scalars,
        manifest,
        warnings=regime.warnings(),
    )


def run_fermi_fluctuation_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Statistics of the per-sample Fermi midpoint of the quenched (or combined) spectrum."""
    t0 = time.perf_counter()
    p = cfg.params
    if not 1 <= p.n_f <= p.n - 1:
        raise ParameterError(f"Fermi-level experiment needs 1 <= n_f <= n-1, got n_f={p.n_f}")
    if p.n < 2:
        raise ParameterError("Fermi-level experiment needs n >= 2")
    stiffness = p.omega_tilde if cfg.ensemble == "quenched" else p.c
    mu_f = fermi_level(p.n, p.n_f, stiffness, rho0=cfg.rho0)
    rho_mu = float(
        (density_semicircle if cfg.rho0 == "semicircle" else density_finite_n)(mu_f, p.n, stiffness)
    )
    dmu = delta_mu_theory(p.n, rho_mu)

    mu = sample_many("fermi", p, cfg.n_samples, cfg.seed, extra=stiffness, workers=workers)[:, 0]
    mean = float(mu.mean())
    std = float(mu.std(ddof=1)) if mu.size > 1 else 0.0
    stderr = std / math.sqrt(mu.size)

    grid = Grid(mu_f - 6.0 * dmu, mu_f + 6.0 * dmu, cfg.grid.bins)
    x = grid.centers
    emp, overflow = histogram(mu, grid, 1.0)
    gauss = DensityCurve(x, stats.norm.pdf(x, loc=mu_f, scale=dmu), 1.0)
    scalars = {
        "stiffness": stiffness,
        "mu_mean": mean,
        "mu_std": std,
        "mu_stderr": stderr,
        "mu_f_predicted": mu_f,
        "delta_mu_predicted": dmu,
        "std_ratio": std / dmu,
        "mean_offset_in_stderr": (mean - mu_f) / stderr if stderr > 0 else math.nan,
        "skewness": float(stats.skew(mu)) if mu.size > 2 else math.nan,
        "excess_kurtosis": float(stats.kurtosis(mu)) if mu.size > 3 else math.nan,
        "overflow": overflow,
    }
    manifest = cfg.manifest("fermi-fluct")
    manifest["regime"] = regime_check(p).to_dict()
    manifest["wall_time_s"] = time.perf_counter() - t0
    return ExperimentReport(
        "fermi-fluct", x, {"mu_empirical": emp, "mu_gaussian": gauss}, scalars, manifest
    )


def centered_half_interval(order: int, stiffness: float) -> tuple[float, float]:
    """Symmetric interval holding half the semicircle levels."""
    a = semicircle_quantile(0.75 * order, order, stiffness)
    return -a, a


def run_number_variance_experiment(
    order: int,
    stiffness: float,
    interval: tuple[float, float] | None = None,
    n_samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> ExperimentReport:
    """Ensemble variance of the number of eigenvalues in ``[lo, hi)``.

    Default interval is centred and holds half the levels on average.
    """
    t0 = time.perf_counter()
    if int(order) != order or order < 2:
        raise ParameterError(f"order must be >= 2, got {order!r}")
    if int(n_samples) != n_samples or n_samples < 1:
        raise ParameterError(f"n_samples must be >= 1, got {n_samples!r}")
    if interval is None:
        interval = centered_half_interval(order, stiffness)
    lo, hi = map(float, interval)
    if not hi > lo:
        raise ParameterError(f"empty interval [{lo}, {hi})")

    # n_f is unused by the counting kernel
    params = EnsembleParams(order, 0, 1.0, 1.0)
    counts = sample_many(
        "count", params, n_samples, seed, extra=(stiffness, lo, hi), workers=workers
    )[:, 0]
    mean = float(counts.mean())
    var = float(counts.var(ddof=1)) if counts.size > 1 else 0.0
    predicted = math.log(order) / math.pi**2

    x = np.arange(order + 1, dtype=float)
    p_emp = np.bincount(counts.astype(int), minlength=order + 1) / counts.size
    # unit-spaced integer grid: sums and trapezoid agree up to the end points
    p_gauss = stats.norm.pdf(x, loc=mean, scale=math.sqrt(predicted))
    r = support_radius(order, stiffness)
    scalars = {
        "order": order,
        "stiffness": stiffness,
        "interval_lo": lo,
        "interval_hi": hi,
        "support_radius": r,
        "mean_count": mean,
        "var_count": var,
        "var_predicted": predicted,
        "var_ratio": var / predicted,
    }
    manifest = {
        "tool_version": __version__,
        "command": "number-variance",
        "order": order,
        "stiffness": stiffness,
        "interval": [lo, hi],
        "n_samples": n_samples,
        "seed": seed,
        "wall_time_s": time.perf_counter() - t0,
    }
    return ExperimentReport(
        "number-variance",
        x,
        {"p_empirical": DensityCurve(x, p_emp, 1.0), "p_gaussian": DensityCurve(x, p_gauss, 1.0)},
        scalars,
        manifest,
    )


def run_prediction(cfg: ExperimentConfig) -> ExperimentReport:
    """Analytic curves and gap scalars only; no sampling."""
    t0 = time.perf_counter()
    p, grid = cfg.params, cfg.grid
    regime = regime_check(p)
    pred = gap_prediction(p, rho0=cfg.rho0)
    x = grid.centers
    curves = {
        "rho_finite_n": DensityCurve(x, density_finite_n(x, p.n, p.c), p.n),
        "rho_semicircle": DensityCurve(x, density_semicircle(x, p.n, p.c), p.n),
        "filled_analytic": DensityCurve(
            x, density_occupied(x, p, Sector.FILLED, rho0=cfg.rho0, prediction=pred), p.n_f
        ),
        "empty_analytic": DensityCurve(
            x, density_occupied(x, p, Sector.EMPTY, rho0=cfg.rho0, prediction=pred), p.n - p.n_f
        ),
    }
    scalars = dict(pred.to_dict())
    scalars["c"] = p.c
    scalars["support_radius"] = p.radius
    scalars["regime_ok"] = regime.ok
    manifest = cfg.manifest("predict")
    manifest["regime"] = regime.to_dict()
    manifest["prediction"] = pred.to_dict()
    manifest["wall_time_s"] = time.perf_counter() - t0
    return ExperimentReport("predict", x, curves, scalars, manifest, warnings=regime.warnings())
