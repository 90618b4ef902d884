"""Fisher information and Cramer-Rao bounds for DOA with mixed-precision ADCs.

Parameter layout is ``[theta (K), Re vec(S) (KN), Im vec(S) (KN)]`` with
``vec`` column-major, so observation entry ``(i, t)`` sits at flat index
``t*M + i`` and source entry ``(k, t)`` at ``t*K + k``.

Two families of routines live here:

* dense routines (:func:`build_u`, :func:`fim_general`, :func:`fim_optimal`,
  :func:`crb_from_fim`) that assemble the full (K+2KN)-square FIM;
* compact routines (:func:`crb_general`, :func:`crb_optimal_hadamard`, the
  closed forms) that never materialise it and scale to long snapshot records.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .array_model import (
    ArrayConfig,
    SourceScene,
    noiseless_output,
    steering_derivative_matrix,
    steering_matrix,
)
from .arrangement import Arrangement, dispersion_score

CONDITION_CAP = 1e12
DENSE_BUDGET = 5 * 10**7  # complex entries in U


class FormulaTag(str, enum.Enum):
    GENERAL_THRESHOLD = "GeneralThreshold"
    OPTIMAL_EXACT = "OptimalExact"
    SINGLE_TARGET = "SingleTarget"
    ASYMPTOTIC = "Asymptotic"


class UnidentifiableError(ValueError):
    """Raised when the Fisher information is singular to working precision."""

    def __init__(self, message, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


@dataclass(frozen=True, eq=False)
class FimResult:
    matrix: np.ndarray
    num_sources: int
    num_snapshots: int


@dataclass(frozen=True, eq=False)
class CrbResult:
    matrix: np.ndarray
    formula_tag: FormulaTag

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()


class UBlocks(NamedTuple):
    U: np.ndarray       # (K + 2KN) x MN, rows indexed by parameters
    Delta: np.ndarray   # MN x K
    G: np.ndarray       # MN x KN


# ---------------------------------------------------------------------------
# one-bit information weight


def b_function(x):
    """exp(-x^2) / (Phi(x) Phi(-x)), the one-bit information factor.

    Written as ``2 exp(-x^2/2) / (Phi(|x|) erfcx(|x|/sqrt 2))`` so that the
    Gaussian tail never underflows in the denominator.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("b_function needs finite input")
    a = np.abs(x)
    out = 2.0 * np.exp(-0.5 * a * a) / (special.ndtr(a) * special.erfcx(a / np.sqrt(2.0)))
    return out if out.ndim else float(out)


def lambda_vector(zeta, sigma: float) -> np.ndarray:
    """Per-sample one-bit weights B(Re zeta/(sigma/sqrt2)) + j B(Im zeta/(sigma/sqrt2))."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    zeta = np.asarray(zeta, dtype=complex)
    scale = sigma / np.sqrt(2.0)
    return b_function(zeta.real / scale) + 1j * b_function(zeta.imag / scale)


# ---------------------------------------------------------------------------
# dense FIM assembly


def _vec(X):
    return np.asarray(X).reshape(-1, order="F")


def _check_scene(scene: SourceScene, cfg: ArrayConfig):
    if scene.num_sources >= cfg.M:
        raise ValueError(f"need fewer sources than sensors (K={scene.num_sources}, M={cfg.M})")


def _check_arrangement(arrangement: Arrangement, cfg: ArrayConfig):
    if arrangement.M != cfg.M:
        raise ValueError(f"arrangement has {arrangement.M} elements, array has {cfg.M}")


def build_u(scene: SourceScene, cfg: ArrayConfig, budget: int = DENSE_BUDGET) -> UBlocks:
    """Derivative matrix U = [Delta, G, jG]^H with Delta = S^T (Khatri-Rao) dA, G = I_N kron A."""
    _check_scene(scene, cfg)
    M, K, N = cfg.M, scene.num_sources, scene.num_snapshots
    size = M * N * (K + 2 * K * N)
    if size > budget:
        raise MemoryError(f"dense U needs {size} entries, over the budget of {budget}")
    A = steering_matrix(cfg, scene.angles)
    Ad = steering_derivative_matrix(cfg, scene.angles)
    S = scene.source_matrix
    Delta = (S.T[:, None, :] * Ad[None, :, :]).reshape(N * M, K)
    G = np.kron(np.eye(N), A)
    U = np.hstack([Delta, G, 1j * G]).conj().T
    return UBlocks(U, Delta, G)


def _finish(F, scene):
    F = 0.5 * (F + F.T)
    return FimResult(F, scene.num_sources, scene.num_snapshots)


def fim_general(scene: SourceScene, cfg: ArrayConfig, arrangement: Arrangement, H) -> FimResult:
    """Mixed-data FIM for an arbitrary known threshold matrix ``H``."""
    _check_arrangement(arrangement, cfg)
    if not arrangement.is_two_level:
        raise ValueError("the general-threshold FIM needs a two-level arrangement")
    H = np.asarray(H, dtype=complex)
    N = scene.num_snapshots
    if H.shape != (cfg.M, N):
        raise ValueError(f"threshold shape {H.shape} does not match {(cfg.M, N)}")
    sigma2 = scene.noise_variance
    U = build_u(scene, cfg).U
    high = np.tile(arrangement.delta, N).astype(float)
    U0 = U * high
    U1 = U * (1.0 - high)
    lam = lambda_vector(_vec(noiseless_output(scene, cfg) - H), np.sqrt(sigma2))
    F = (2.0 / sigma2) * (U0 @ U0.conj().T).real
    U1R, U1I = U1.real, U1.imag
    F += ((U1R * lam.real) @ U1R.T + (U1I * lam.imag) @ U1I.T) / (np.pi * sigma2)
    return _finish(F, scene)


def fim_optimal(scene: SourceScene, cfg: ArrayConfig, arrangement: Arrangement) -> FimResult:
    """Mixed-data FIM under the threshold H = A S.

    Each element contributes with weight ``g_i``; for multi-precision
    arrangements the weights are taken as given.
    """
    _check_arrangement(arrangement, cfg)
    U = build_u(scene, cfg).U
    Ubar = U * np.sqrt(np.tile(arrangement.weights, scene.num_snapshots))
    F = (2.0 / scene.noise_variance) * (Ubar @ Ubar.conj().T).real
    return _finish(F, scene)


# ---------------------------------------------------------------------------
# inversion


def _guard(matrix, what, cap=CONDITION_CAP):
    eig = np.linalg.eigvalsh(matrix)
    top = np.max(np.abs(eig), axis=-1)
    low = np.min(eig, axis=-1)
    bad = ~(low > top / cap)
    if np.any(bad):
        worst = float(np.min(np.where(bad, low, np.inf)))
        raise UnidentifiableError(
            f"{what} is singular (smallest eigenvalue {worst:.3e}, largest {float(np.max(top)):.3e}); "
            "parameters are unidentifiable",
            smallest_eigenvalue=worst,
        )


def crb_from_fim(fim: FimResult, K: int | None = None, method: str = "block",
                 cap: float = CONDITION_CAP) -> CrbResult:
    """DOA block of the inverse FIM.

    ``method="block"`` uses the Schur complement of the nuisance block,
    ``method="full"`` inverts the whole matrix and takes the top-left corner.
    """
    K = fim.num_sources if K is None else K
    F = fim.matrix
    _guard(F, "Fisher information matrix", cap)
    if method == "full":
        C = np.linalg.inv(F)[:K, :K]
    elif method == "block":
        Ftt, Fts, Fss = F[:K, :K], F[:K, K:], F[K:, K:]
        schur = Ftt - Fts @ np.linalg.solve(Fss, Fts.T)
        C = np.linalg.inv(schur)
    else:
        raise ValueError(f"unknown inversion method {method!r}")
    return CrbResult(0.5 * (C + C.T), FormulaTag.GENERAL_THRESHOLD)


def _invert_info(J, tag, cap=CONDITION_CAP):
    J = 0.5 * (J + J.T)
    _guard(J, "DOA information matrix", cap)
    C = np.linalg.inv(J)
    return CrbResult(0.5 * (C + C.T), tag)


# ---------------------------------------------------------------------------
# compact routines


def _concentrated_info(A, Ad, S, wR, wI, cap=CONDITION_CAP):
    """DOA information with per-snapshot source nuisances eliminated.

    ``wR``/``wI`` are M x N Fisher weights of the real and imaginary
    observation channels.  The nuisance block is block diagonal over
    snapshots, so the Schur complement is a sum of 3K x 3K pieces.
    """
    K = A.shape[1]
    # D[t] = [dA diag(s(t)), A, jA], shape N x M x 3K
    D = np.concatenate([
        Ad[None, :, :] * S.T[:, None, :],
        np.broadcast_to(A, (S.shape[1],) + A.shape),
        np.broadcast_to(1j * A, (S.shape[1],) + A.shape),
    ], axis=2)
    wR, wI = wR.T, wI.T
    F = (np.einsum("tmi,tm,tmj->tij", D.real, wR, D.real)
         + np.einsum("tmi,tm,tmj->tij", D.imag, wI, D.imag))
    Ftt, Fts, Fss = F[:, :K, :K], F[:, :K, K:], F[:, K:, K:]
    Fss = 0.5 * (Fss + np.swapaxes(Fss, 1, 2))
    _guard(Fss, "per-snapshot source information", cap)
    X = np.linalg.solve(Fss, np.swapaxes(Fts, 1, 2))
    return np.sum(Ftt - Fts @ X, axis=0)


def crb_general(scene: SourceScene, cfg: ArrayConfig, arrangement: Arrangement, H,
                cap: float = CONDITION_CAP) -> CrbResult:
    """DOA CRB for mixed data with an arbitrary known threshold ``H``.

    Same quantity as ``crb_from_fim(fim_general(...))`` without forming the
    full FIM.
    """
    _check_scene(scene, cfg)
    _check_arrangement(arrangement, cfg)
    if not arrangement.is_two_level:
        raise ValueError("the general-threshold CRB needs a two-level arrangement")
    H = np.asarray(H, dtype=complex)
    if H.shape != (cfg.M, scene.num_snapshots):
        raise ValueError(f"threshold shape {H.shape} does not match {(cfg.M, scene.num_snapshots)}")
    sigma2 = scene.noise_variance
    A = steering_matrix(cfg, scene.angles)
    Ad = steering_derivative_matrix(cfg, scene.angles)
    zeta = A @ scene.source_matrix - H
    scale = np.sqrt(sigma2 / 2.0)
    high = arrangement.delta.astype(bool)[:, None]
    wR = np.where(high, 2.0 / sigma2, b_function(zeta.real / scale) / (np.pi * sigma2))
    wI = np.where(high, 2.0 / sigma2, b_function(zeta.imag / scale) / (np.pi * sigma2))
    J = _concentrated_info(A, Ad, scene.source_matrix, wR, wI, cap)
    return _invert_info(J, FormulaTag.GENERAL_THRESHOLD, cap)


def crb_optimal_weighted(scene: SourceScene, cfg: ArrayConfig, arrangement: Arrangement,
                         cap: float = CONDITION_CAP) -> CrbResult:
    """Optimal-threshold CRB through the per-snapshot elimination path."""
    _check_scene(scene, cfg)
    _check_arrangement(arrangement, cfg)
    A = steering_matrix(cfg, scene.angles)
    Ad = steering_derivative_matrix(cfg, scene.angles)
    w = np.broadcast_to((2.0 / scene.noise_variance) * arrangement.weights[:, None],
                        (cfg.M, scene.num_snapshots))
    J = _concentrated_info(A, Ad, scene.source_matrix, w, w, cap)
    return _invert_info(J, FormulaTag.OPTIMAL_EXACT, cap)


def crb_optimal_power(cfg: ArrayConfig, angles, power_matrix, noise_variance: float, N: int,
                      arrangement: Arrangement, cap: float = CONDITION_CAP) -> CrbResult:
    """(sigma^2 / 2N) Re{(dA^H Omega dA) o P^T}^{-1} for a given source covariance P.

    ``Omega = Sigma0 - Sigma0 A (A^H Sigma0 A)^{-1} A^H Sigma0`` with
    ``Sigma0 = diag(g)``.
    """
    _check_arrangement(arrangement, cfg)
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size >= cfg.M:
        raise ValueError(f"need fewer sources than sensors (K={angles.size}, M={cfg.M})")
    if not noise_variance > 0:
        raise ValueError("noise variance must be positive")
    P = np.atleast_2d(np.asarray(power_matrix, dtype=complex))
    A = steering_matrix(cfg, angles)
    Ad = steering_derivative_matrix(cfg, angles)
    g = arrangement.weights
    SA = g[:, None] * A
    AhSA = A.conj().T @ SA
    AhSA = 0.5 * (AhSA + AhSA.conj().T)
    _guard_hermitian(AhSA, "weighted steering Gram matrix", cap)
    Omega = np.diag(g) - SA @ np.linalg.solve(AhSA, SA.conj().T)
    J = ((Ad.conj().T @ Omega @ Ad) * P.T).real
    crb = _invert_info(J, FormulaTag.OPTIMAL_EXACT, cap)
    return CrbResult(crb.matrix * noise_variance / (2.0 * N), FormulaTag.OPTIMAL_EXACT)


def _guard_hermitian(Mh, what, cap):
    # Hermitian K x K -> real symmetric 2K x 2K with the same spectrum (doubled)
    real = np.block([[Mh.real, -Mh.imag], [Mh.imag, Mh.real]])
    _guard(real, what, cap)


def crb_optimal_hadamard(scene: SourceScene, cfg: ArrayConfig, arrangement: Arrangement,
                         cap: float = CONDITION_CAP) -> CrbResult:
    """Optimal-threshold DOA CRB from the sample source covariance."""
    _check_scene(scene, cfg)
    return crb_optimal_power(cfg, scene.angles, scene.sample_covariance(), scene.noise_variance,
                             scene.num_snapshots, arrangement, cap)


def crb_single_target(arrangement: Arrangement, p: float, sigma2: float, theta: float) -> float:
    """Closed-form CRB for one source and one snapshot."""
    if abs(theta) >= np.pi / 2:
        raise ValueError("theta must lie strictly inside (-pi/2, pi/2)")
    if p <= 0 or sigma2 <= 0:
        raise ValueError("power and noise variance must be positive")
    S = dispersion_score(arrangement)
    if S <= 0:
        raise ValueError("dispersion score is zero; a single element cannot resolve angle")
    return sigma2 * arrangement.total_weight / (2 * p * S * np.pi**2 * np.cos(theta) ** 2)


def crb_asymptotic(angles, snrs, arrangement: Arrangement, N: int) -> CrbResult:
    """Large-array diagonal CRB; entry k is Wsum / (2 pi^2 N S SNR_k cos^2 theta_k)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    snrs = np.broadcast_to(np.asarray(snrs, dtype=float), angles.shape)
    if np.any(np.abs(angles) >= np.pi / 2):
        raise ValueError("angles must lie strictly inside (-pi/2, pi/2)")
    if np.any(snrs <= 0) or N < 1:
        raise ValueError("SNRs must be positive and N >= 1")
    if np.unique(angles).size != angles.size:
        raise UnidentifiableError("duplicate source angles are unidentifiable")
    S = dispersion_score(arrangement)
    if S <= 0:
        raise ValueError("dispersion score is zero")
    scale = arrangement.total_weight / (2 * np.pi**2 * N * S)
    return CrbResult(np.diag(scale / (snrs * np.cos(angles) ** 2)), FormulaTag.ASYMPTOTIC)
