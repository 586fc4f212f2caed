"""Closed-form level densities, Fermi level and the erfc-smeared gap densities.

Every density here is normalised to the number of levels it describes, so the
no-fermion density integrates to ``n``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import integrate, special

from .core import EnsembleParams
from .errors import ParameterError

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)


def _check_nc(n: int, c: float) -> None:
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")
    if not (math.isfinite(c) and c > 0):
        raise ParameterError(f"stiffness must be positive, got {c!r}")


def effective_stiffness(omega: float, omega_tilde: float) -> float:
    """Stiffness of the convolved ensemble, omega*omega_tilde/(omega+omega_tilde)."""
    for name, v in (("omega", omega), ("omega_tilde", omega_tilde)):
        if not (v > 0):
            raise ParameterError(f"{name} must be positive, got {v!r}")
    if math.isinf(omega_tilde):
        return float(omega)
    if math.isinf(omega):
        return float(omega_tilde)
    return omega * omega_tilde / (omega + omega_tilde)


def support_radius(n: int, c: float) -> float:
    """Edge of the large-n spectrum for weight exp(-c Tr M^2)."""
    _check_nc(n, c)
    return math.sqrt(2.0 * n / c)


# =============================
# No-fermion densities
# =============================
def density_finite_n(x, n: int, c: float):
    """Exact mean level density at order ``n`` and stiffness ``c``.

    sqrt(c) * sum_{i<n} psi_i(sqrt(c) x)^2 with orthonormal Hermite functions,
    accumulated through the normalised three-term recurrence. The Gaussian factor
    is held back and running values are rescaled, so nothing under- or overflows
    for large n or far into the tails.
    """
    _check_nc(n, c)
    xa = np.asarray(x, dtype=float)
    y = math.sqrt(c) * np.atleast_1d(xa).ravel()

    prev = np.zeros_like(y)
    cur = np.full_like(y, math.pi**-0.25)
    acc = cur * cur
    log_scale = np.zeros_like(y)
    for i in range(1, n):
        nxt = math.sqrt(2.0 / i) * y * cur - math.sqrt((i - 1) / i) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            cur[big] /= _RESCALE
            prev[big] /= _RESCALE
            acc[big] /= _RESCALE**2
            log_scale[big] += _LOG_RESCALE
        acc += cur * cur

    with np.errstate(divide="ignore"):
        out = math.sqrt(c) * np.exp(np.log(acc) + 2.0 * log_scale - y * y)
    out = out.reshape(np.shape(xa))
    return float(out) if out.ndim == 0 else out


def density_semicircle(x, n: int, c: float):
    """Large-n limit (c/pi) * sqrt(R^2 - x^2) on |x| <= R = sqrt(2n/c)."""
    r = support_radius(n, c)
    xa = np.asarray(x, dtype=float)
    out = (c / math.pi) * np.sqrt(np.clip(r * r - xa * xa, 0.0, None))
    return float(out) if out.ndim == 0 else out


def semicircle_cdf(x, n: int, c: float):
    """Number of semicircle levels below ``x``."""
    r = support_radius(n, c)
    t = np.clip(np.asarray(x, dtype=float) / r, -1.0, 1.0)
    out = n * (0.5 + (t * np.sqrt(1.0 - t * t) + np.arcsin(t)) / math.pi)
    return float(out) if out.ndim == 0 else out


def finite_n_cdf(x: float, n: int, c: float) -> float:
    """Number of levels below ``x`` for the exact finite-n density."""
    lo = -support_radius(n, c) - 12.0 / math.sqrt(c)
    if x <= lo:
        return 0.0
    val, _ = integrate.quad(lambda t: density_finite_n(t, n, c), lo, x, limit=400)
    return val


def _bisect(f, lo: float, hi: float, xtol: float, maxiter: int = 400) -> float:
    flo = f(lo)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def semicircle_quantile(count: float, n: int, c: float) -> float:
    """Energy below which ``count`` semicircle levels lie (0 <= count <= n)."""
    r = support_radius(n, c)
    if not 0 <= count <= n:
        raise ParameterError(f"count must lie in [0, {n}], got {count!r}")
    if count == 0:
        return -r
    if count == n:
        return r
    return _bisect(lambda x: semicircle_cdf(x, n, c) - count, -r, r, 1e-12 * r)


def fermi_level(n: int, n_f: int, c: float, rho0: str = "semicircle") -> float:
    """Energy below which ``n_f`` of the ``n`` levels lie, found by bisection.

    ``rho0`` selects the no-fermion density: ``"semicircle"`` (default) or
    ``"finite-n"``.
    """
    _check_nc(n, c)
    if int(n_f) != n_f or not 0 <= n_f <= n:
        raise ParameterError(f"n_f must lie in [0, {n}], got {n_f!r}")
    if rho0 == "semicircle":
        return semicircle_quantile(n_f, n, c)
    if rho0 != "finite-n":
        raise ParameterError(f"unknown rho0 {rho0!r}")
    r = support_radius(n, c)
    lo, hi = -r - 12.0 / math.sqrt(c), r + 12.0 / math.sqrt(c)
    if n_f == 0:
        return lo
    if n_f == n:
        return hi
    return _bisect(lambda x: finite_n_cdf(x, n, c) - n_f, lo, hi, 1e-12 * r)


def _rho0(rho0: str):
    if rho0 == "semicircle":
        return density_semicircle
    if rho0 == "finite-n":
        return density_finite_n
    raise ParameterError(f"unknown rho0 {rho0!r}")


# =============================
# Fermi-level fluctuations
# =============================
def _check_width_args(n: int, rho_at_mu: float) -> None:
    if int(n) != n or n < 2:
        raise ParameterError(f"Fermi width needs n >= 2 (ln n > 0), got {n!r}")
    if not (rho_at_mu > 0 and math.isfinite(rho_at_mu)):
        raise ParameterError(f"density at the Fermi level must be positive, got {rho_at_mu!r}")


def fermi_width(n: int, rho_at_mu: float) -> float:
    """Inverse double variance (pi rho)^2 / ln n of the fluctuating Fermi level."""
    _check_width_args(n, rho_at_mu)
    return (math.pi * rho_at_mu) ** 2 / math.log(n)


def delta_mu_theory(n: int, rho_at_mu: float) -> float:
    """Standard deviation sqrt(ln n) / (sqrt(2) pi rho) of the Fermi level."""
    _check_width_args(n, rho_at_mu)
    return math.sqrt(math.log(n)) / (math.sqrt(2.0) * math.pi * rho_at_mu)


def erfc(z):
    """Complementary error function (Cephes via scipy; abs error < 1e-15 on |z| <= 10)."""
    return special.erfc(z)


# =============================
# Filled / empty densities
# =============================
class Sector(enum.Enum):
    FILLED = "filled"
    EMPTY = "empty"


@dataclass(frozen=True)
class GapPrediction:
    mu_f: float
    omega_f: float
    shift: float
    gap_width: float
    delta_mu_f: float
    rho_at_mu: float

    def to_dict(self) -> dict:
        return asdict(self)


def gap_prediction(params: EnsembleParams, rho0: str = "semicircle") -> GapPrediction:
    """Fermi level, smearing parameter and gap width for ``params``.

    ``rho0`` picks the density used both for the Fermi level and for rho(mu_F).
    """
    n, c = params.n, params.c
    if n < 2:
        raise ParameterError("gap prediction needs n >= 2")
    mu = fermi_level(n, params.n_f, c, rho0=rho0)
    rho_mu = float(_rho0(rho0)(mu, n, c))
    s = params.shift
    return GapPrediction(
        mu_f=mu,
        omega_f=fermi_width(n, rho_mu),
        shift=s,
        gap_width=2.0 * s,
        delta_mu_f=delta_mu_theory(n, rho_mu),
        rho_at_mu=rho_mu,
    )


def density_occupied(
    x,
    params: EnsembleParams,
    sector: Sector | str,
    rho0: str = "semicircle",
    omega_f: float | None = None,
    prediction: GapPrediction | None = None,
):
    """Mean density of filled or empty levels in the fermion ground state.

    Filled: 0.5 erfc(sqrt(w_F)(x + s - mu_F)) rho0(x + s).
    Empty:  0.5 erfc(-sqrt(w_F)(x - s - mu_F)) rho0(x - s).

    ``omega_f`` overrides the predicted smearing parameter; pass a precomputed
    ``prediction`` to avoid repeating the Fermi-level search.
    """
    sector = Sector(sector)
    pred = prediction if prediction is not None else gap_prediction(params, rho0=rho0)
    wf = pred.omega_f if omega_f is None else omega_f
    if not wf > 0:
        raise ParameterError(f"omega_f must be positive, got {wf!r}")
    density = _rho0(rho0)
    xa = np.asarray(x, dtype=float)
    s, mu, k = pred.shift, pred.mu_f, math.sqrt(wf)
    if sector is Sector.FILLED:
        out = 0.5 * special.erfc(k * (xa + s - mu)) * density(xa + s, params.n, params.c)
    else:
        out = 0.5 * special.erfc(-k * (xa - s - mu)) * density(xa - s, params.n, params.c)
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out
