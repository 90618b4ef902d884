"""Signal model for a half-wavelength uniform linear array.

Steering vectors and their angle derivatives, deterministic source scenes,
noisy observations, threshold generation and the complex one-bit / mixed
quantizers.  Angles are in radians throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array with ``num_elements`` sensors at half-wavelength spacing."""

    num_elements: int

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise ValueError(f"array needs at least 2 elements, got {self.num_elements}")

    @property
    def M(self) -> int:
        return int(self.num_elements)


@dataclass(frozen=True, eq=False)
class SourceScene:
    """Deterministic sources impinging on the array.

    ``source_matrix`` is K x N.  Angle distinctness is an identifiability
    condition; it is not enforced here, the CRB routines detect it.
    """

    angles: np.ndarray
    source_matrix: np.ndarray
    noise_variance: float

    def __post_init__(self):
        angles = np.atleast_1d(np.asarray(self.angles, dtype=float))
        S = np.atleast_2d(np.asarray(self.source_matrix, dtype=complex))
        if angles.ndim != 1 or angles.size < 1:
            raise ValueError("need at least one source angle")
        if S.shape[0] != angles.size:
            raise ValueError(f"source matrix has {S.shape[0]} rows for {angles.size} angles")
        if S.shape[1] < 1:
            raise ValueError("need at least one snapshot")
        _check_angles(angles)
        if not (np.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "source_matrix", S)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def num_sources(self) -> int:
        return self.angles.size

    @property
    def num_snapshots(self) -> int:
        return self.source_matrix.shape[1]

    @property
    def powers(self) -> np.ndarray:
        """Empirical per-source power, mean of |s_k(t)|^2 over snapshots."""
        return np.mean(np.abs(self.source_matrix) ** 2, axis=1)

    @property
    def snrs(self) -> np.ndarray:
        return self.powers / self.noise_variance

    def sample_covariance(self) -> np.ndarray:
        S = self.source_matrix
        return S @ S.conj().T / S.shape[1]


@dataclass(frozen=True)
class OptimalThreshold:
    """Threshold equal to the noiseless array output, H = A S."""


@dataclass(frozen=True)
class DiscreteRandomThreshold:
    """Real and imaginary parts drawn uniformly from ``levels`` evenly spaced
    values on [-h_max, h_max]."""

    h_max: float = 2.0
    levels: int = 8
    seed: int | np.random.SeedSequence | None = 0

    def __post_init__(self):
        if self.h_max <= 0:
            raise ValueError("h_max must be positive")
        if int(self.levels) != self.levels or self.levels < 2:
            raise ValueError("need at least two threshold levels")

    def values(self) -> np.ndarray:
        return np.linspace(-self.h_max, self.h_max, int(self.levels))


@dataclass(frozen=True, eq=False)
class ExplicitThreshold:
    H: np.ndarray = field(repr=False)


ThresholdScheme = OptimalThreshold | DiscreteRandomThreshold | ExplicitThreshold


@dataclass(frozen=True, eq=False)
class Snapshots:
    unquantized: np.ndarray
    quantized: np.ndarray
    mixed: np.ndarray


def _check_angles(theta):
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)) or np.any(np.abs(theta) >= HALF_PI):
        raise ValueError(f"angles must lie strictly inside (-pi/2, pi/2), got {theta}")


def _positions(M):
    return np.arange(M, dtype=float)


def steering_vector(cfg: ArrayConfig, theta: float) -> np.ndarray:
    _check_angles(theta)
    return np.exp(1j * np.pi * _positions(cfg.M) * np.sin(theta))


def steering_derivative(cfg: ArrayConfig, theta: float) -> np.ndarray:
    """d a(theta) / d theta."""
    _check_angles(theta)
    pos = _positions(cfg.M)
    return 1j * np.pi * pos * np.cos(theta) * np.exp(1j * np.pi * pos * np.sin(theta))


def steering_matrix(cfg: ArrayConfig, angles) -> np.ndarray:
    """M x K matrix of steering vectors."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    _check_angles(angles)
    return np.exp(1j * np.pi * np.outer(_positions(cfg.M), np.sin(angles)))


def steering_derivative_matrix(cfg: ArrayConfig, angles) -> np.ndarray:
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    A = steering_matrix(cfg, angles)
    return 1j * np.pi * np.outer(_positions(cfg.M), np.cos(angles)) * A


def synthesize_scene(cfg: ArrayConfig, K: int, N: int, angles, powers, seed,
                     noise_variance: float = 1.0) -> SourceScene:
    """Constant-modulus sources with i.i.d. uniform phases.

    Each ``|s_k(t)|`` equals ``sqrt(powers[k])`` so the empirical power is
    exact.  ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    powers = np.broadcast_to(np.asarray(powers, dtype=float), (K,))
    if angles.size != K:
        raise ValueError(f"expected {K} angles, got {angles.size}")
    if K >= cfg.M:
        raise ValueError(f"need fewer sources than sensors (K={K}, M={cfg.M})")
    if N < 1:
        raise ValueError("need at least one snapshot")
    if np.any(powers <= 0):
        raise ValueError("source powers must be positive")
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=(K, N))
    S = np.sqrt(powers)[:, None] * np.exp(1j * phases)
    return SourceScene(angles, S, noise_variance)


def orthogonal_scene(cfg: ArrayConfig, N: int, angles, powers,
                     noise_variance: float = 1.0) -> SourceScene:
    """Constant-modulus sources on distinct DFT frequencies.

    For K <= N the rows are orthogonal, so the sample covariance is exactly
    ``diag(powers)``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    K = angles.size
    powers = np.broadcast_to(np.asarray(powers, dtype=float), (K,))
    if K >= cfg.M:
        raise ValueError(f"need fewer sources than sensors (K={K}, M={cfg.M})")
    if K > N:
        raise ValueError(f"orthogonal sources need N >= K (K={K}, N={N})")
    t = np.arange(N)
    S = np.sqrt(powers)[:, None] * np.exp(2j * np.pi * np.outer(np.arange(K), t) / N)
    return SourceScene(angles, S, noise_variance)


def noiseless_output(scene: SourceScene, cfg: ArrayConfig) -> np.ndarray:
    return steering_matrix(cfg, scene.angles) @ scene.source_matrix


def observe(scene: SourceScene, cfg: ArrayConfig, seed) -> np.ndarray:
    """X = A S + E with circular complex Gaussian noise of total variance sigma^2."""
    rng = np.random.default_rng(seed)
    shape = (cfg.M, scene.num_snapshots)
    scale = np.sqrt(scene.noise_variance / 2)
    E = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return noiseless_output(scene, cfg) + E


def draw_threshold(scheme: DiscreteRandomThreshold, shape, rng=None) -> np.ndarray:
    """Threshold matrix for a discrete random scheme.

    ``rng`` overrides the scheme's own seed when given.
    """
    if rng is None:
        rng = np.random.default_rng(scheme.seed)
    values = scheme.values()
    re = rng.integers(0, values.size, size=shape)
    im = rng.integers(0, values.size, size=shape)
    return values[re] + 1j * values[im]


def resolve_threshold(scheme, scene: SourceScene, cfg: ArrayConfig) -> np.ndarray:
    shape = (cfg.M, scene.num_snapshots)
    if isinstance(scheme, OptimalThreshold):
        return noiseless_output(scene, cfg)
    if isinstance(scheme, DiscreteRandomThreshold):
        return draw_threshold(scheme, shape)
    if isinstance(scheme, ExplicitThreshold):
        H = np.asarray(scheme.H, dtype=complex)
        if H.shape != shape:
            raise ValueError(f"threshold shape {H.shape} does not match {shape}")
        return H
    raise TypeError(f"unknown threshold scheme {scheme!r}")


def _sign(x):
    # sign(0) := +1
    return np.where(x >= 0, 1.0, -1.0)


def quantize(X, H) -> np.ndarray:
    """Complex one-bit quantizer sign(Re(X - H)) + j sign(Im(X - H))."""
    X = np.asarray(X, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if X.shape != H.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {H.shape}")
    D = X - H
    return _sign(D.real) + 1j * _sign(D.imag)


def mix(X, Z, delta) -> np.ndarray:
    """Rows with ``delta[i] == 1`` come from X, the rest from Z."""
    X = np.asarray(X)
    Z = np.asarray(Z)
    delta = np.asarray(delta).astype(bool)
    if X.shape != Z.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Z.shape}")
    if delta.shape != (X.shape[0],):
        raise ValueError(f"indicator length {delta.size} does not match {X.shape[0]} rows")
    return np.where(delta[:, None], X, Z)


def acquire(scene: SourceScene, cfg: ArrayConfig, delta, threshold, seed) -> Snapshots:
    """Noisy observation followed by one-bit quantization and row mixing."""
    X = observe(scene, cfg, seed)
    H = resolve_threshold(threshold, scene, cfg)
    Z = quantize(X, H)
    return Snapshots(X, Z, mix(X, Z, delta))
