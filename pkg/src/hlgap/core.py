"""Model parameters, ensemble samplers and the block-approximation level sampler.

Matrices are plain ``numpy`` complex arrays and spectra are ascending real
arrays. All samplers are pure functions of their arguments and the random
stream they are handed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import NumericError, ParameterError


# =============================
# Parameters
# =============================
@dataclass(frozen=True)
class EnsembleParams:
    """Constants of the model.

    n           -- matrix order (number of single-fermion levels)
    n_f         -- number of filled levels
    omega       -- stiffness of the dynamical (quantum) fluctuations
    omega_tilde -- stiffness of the quenched distribution
    g           -- fermion coupling
    """

    n: int
    n_f: int
    omega: float
    omega_tilde: float
    g: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if int(self.n_f) != self.n_f or not 0 <= self.n_f <= self.n:
            raise ParameterError(f"n_f must lie in [0, n={self.n}], got {self.n_f!r}")
        for name in ("omega", "omega_tilde"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ParameterError(f"g must be non-negative and finite, got {self.g!r}")

    @property
    def c(self) -> float:
        """Stiffness of the combined ensemble for M."""
        return self.omega * self.omega_tilde / (self.omega + self.omega_tilde)

    @property
    def shift(self) -> float:
        """Displacement g/(2 omega^2) of each filled (down) and empty (up) level."""
        return self.g / (2.0 * self.omega**2)

    @property
    def radius(self) -> float:
        """Semicircle support radius of the combined ensemble, sqrt(2n/c)."""
        return math.sqrt(2.0 * self.n / self.c)

    def to_dict(self) -> dict:
        return asdict(self)


# =============================
# Random streams
# =============================
@dataclass(frozen=True)
class RngStream:
    """Substream ``index`` of master ``seed``.

    Each (seed, index) pair yields the same generator on every call, and distinct
    indices give independent substreams (``SeedSequence`` spawn keys).
    """

    seed: int
    index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.index),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# =============================
# Samplers
# =============================
def sample_hermitian_gaussian(order: int, stiffness: float, rng) -> np.ndarray:
    """Draw M with density proportional to exp(-stiffness * Tr M^2).

    Diagonal entries have variance 1/(2k); real and imaginary parts of the
    off-diagonal entries have variance 1/(4k) each.
    """
    if int(order) != order or order < 1:
        raise ParameterError(f"order must be a positive integer, got {order!r}")
    if not (math.isfinite(stiffness) and stiffness > 0):
        raise ParameterError(f"stiffness must be positive, got {stiffness!r}")
    gen = _as_generator(rng)

    sigma_off = math.sqrt(1.0 / (4.0 * stiffness))
    re = gen.standard_normal((order, order))
    im = gen.standard_normal((order, order))
    m = np.triu(sigma_off * (re + 1j * im), 1)
    m = m + m.conj().T
    # variance 1/(2k) on the diagonal: sqrt(2) * sigma_off
    m[np.diag_indices(order)] = math.sqrt(2.0) * sigma_off * re.diagonal()
    return m


def sample_joint_ground(params: EnsembleParams, rng) -> tuple[np.ndarray, np.ndarray]:
    """Sample the quenched minimum M0 and the ground-state matrix M = M0 + X.

    X follows |Psi_0|^2 ~ exp(-omega Tr X^2), so M alone has stiffness ``params.c``.
    """
    gen = _as_generator(rng)
    m0 = sample_hermitian_gaussian(params.n, params.omega_tilde, gen)
    x = sample_hermitian_gaussian(params.n, params.omega, gen)
    return m0, m0 + x


# =============================
# Spectra
# =============================
def eigenvalues_hermitian(m: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK ``heevd`` via numpy)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    return np.linalg.eigvalsh(m)


def split_spectrum(s, n_f: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the ``n_f`` lowest levels and the rest."""
    s = np.asarray(s, dtype=float)
    if int(n_f) != n_f or not 0 <= n_f <= s.size:
        raise ParameterError(f"n_f must lie in [0, {s.size}], got {n_f!r}")
    return s[:n_f].copy(), s[n_f:].copy()


def fermi_midpoint(s, n_f: int) -> float:
    """Fluctuating Fermi level: midpoint of the highest filled and lowest empty level."""
    s = np.asarray(s, dtype=float)
    if int(n_f) != n_f or not 1 <= n_f <= s.size - 1:
        raise ParameterError(
            f"midpoint needs both sectors non-empty: 1 <= n_f <= {s.size - 1}, got {n_f!r}"
        )
    return 0.5 * (s[n_f - 1] + s[n_f])


def sample_displaced_block_spectra(
    params: EnsembleParams, s, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Filled and empty levels given the quenched spectrum ``s``.

    Off-diagonal blocks are dropped: each sector fluctuates independently around
    its own diagonal block and is displaced by -/+ g/(2 omega^2).
    """
    s = np.asarray(s, dtype=float)
    if s.size != params.n:
        raise ParameterError(f"spectrum has {s.size} levels, params.n = {params.n}")
    gen = _as_generator(rng)
    d1, d2 = split_spectrum(s, params.n_f)
    shift = params.shift

    def block(d: np.ndarray) -> np.ndarray:
        if d.size == 0:
            return d
        x = sample_hermitian_gaussian(d.size, params.omega, gen)
        x[np.diag_indices(d.size)] += d
        return eigenvalues_hermitian(x)

    filled = block(d1) - shift
    empty = block(d2) + shift
    return filled, empty


# =============================
# Regime of validity
# =============================
@dataclass(frozen=True)
class RegimeReport:
    r1: float  # omega^3 / g^2, shift vs second-order correction
    r2: float  # sqrt(omega_tilde) * omega / g, quenched spread vs correction
    r3: float  # g / omega^(3/2), shift vs quantum width
    valid_push: bool
    valid_offdiag: bool
    quenched_dominant: bool

    @property
    def ok(self) -> bool:
        return self.valid_push and self.valid_offdiag and self.quenched_dominant

    def warnings(self) -> list[str]:
        out = []
        if not self.valid_push:
            out.append(f"shift not large against quantum width: g/omega^1.5 = {self.r3:.4g}")
        if not self.valid_offdiag:
            out.append(
                f"off-diagonal blocks not negligible: omega^3/g^2 = {self.r1:.4g}, "
                f"sqrt(omega_tilde)*omega/g = {self.r2:.4g}"
            )
        if not self.quenched_dominant:
            out.append("quenched fluctuations do not dominate (omega_tilde >= omega)")
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["warnings"] = self.warnings()
        return d


def regime_check(
    params: EnsembleParams, push_min: float = 5.0, small_max: float = 0.2
) -> RegimeReport:
    """Dimensionless ratios controlling the block approximation.

    ``push_min`` is the threshold used for "much larger than one" and
    ``small_max`` for "small compared to unity".
    """
    w, wt, g = params.omega, params.omega_tilde, params.g
    r3 = g / w**1.5
    if g == 0:
        r1 = r2 = math.inf
    else:
        r1 = w**3 / g**2
        r2 = math.sqrt(wt) * w / g
    return RegimeReport(
        r1=r1,
        r2=r2,
        r3=r3,
        valid_push=r3 >= push_min,
        valid_offdiag=r1 <= small_max and r2 <= small_max,
        quenched_dominant=wt < w,
    )
