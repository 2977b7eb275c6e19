"""MMSE channel estimation: single-shot, Kalman tracking, and closed forms.

Conventions: ``x`` is an ``N_t x T`` training matrix with ``x^H x = rho I``;
``r`` is the ``N_t x N_t`` spatial correlation with ``trace(r) = N_t``. All
MSE values are normalized by ``N_t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError, PreconditionError
from .numerics import as_cmatrix, cholesky_hpd, hermitian_eig, hermitize, htrace
from .rng import complex_normal

UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class KalmanState:
    """Predicted and corrected estimates for block ``block_index``."""

    h_pred: np.ndarray = field(repr=False)
    h_corr: np.ndarray = field(repr=False)
    r_pred: np.ndarray = field(repr=False)
    r_corr: np.ndarray = field(repr=False)
    block_index: int = 0

    @classmethod
    def initial(cls, r) -> "KalmanState":
        r = hermitize(as_cmatrix(r))
        zero = np.zeros(r.shape[0], dtype=complex)
        return cls(zero, zero, r, r, 0)

    @property
    def n_tx(self) -> int:
        return self.r_pred.shape[0]

    def mse(self) -> float:
        """Normalized trace of the corrected error covariance."""
        return htrace(self.r_corr) / self.n_tx


@dataclass(frozen=True)
class TrainingObservation:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)


def training_power(x: np.ndarray) -> float:
    return htrace(x.conj().T @ x) / x.shape[1]


def check_unitary(x, tol: float = UNITARY_TOL) -> float:
    """Validate ``x^H x = rho I`` and return ``rho``."""
    x = as_cmatrix(x)
    if x.shape[1] > x.shape[0]:
        raise PreconditionError(f"training length {x.shape[1]} exceeds N_t={x.shape[0]}")
    rho = training_power(x)
    t = x.shape[1]
    err = np.linalg.norm(x.conj().T @ x - rho * np.eye(t))
    if err > tol * max(rho, 1.0) * t:
        raise PreconditionError(f"training matrix is not unitary (deviation {err:.3e})")
    return rho


def observe(x, h, rng: np.random.Generator | None, noiseless: bool = False) -> TrainingObservation:
    """Received pilots ``y = x^H h + n`` with ``n ~ CN(0, I_T)``."""
    x = as_cmatrix(x)
    check_unitary(x)
    h = np.asarray(h, dtype=complex)
    if h.shape != (x.shape[0],):
        raise DimensionError(f"channel length {h.shape} does not match training {x.shape}")
    y = x.conj().T @ h
    if not noiseless:
        y = y + complex_normal(rng, x.shape[1])
    return TrainingObservation(x, y)


def _gain_factor(r: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(rx, b)`` with ``rx = r x`` and ``b b^H`` the posterior gain matrix.

    ``b = r x L^{-H}`` where ``L L^H = I + x^H r x``.
    """
    if r.shape[0] != x.shape[0]:
        raise DimensionError(f"covariance {r.shape} does not match training {x.shape}")
    rx = r @ x
    low = cholesky_hpd(np.eye(x.shape[1]) + x.conj().T @ rx)
    b = scipy.linalg.solve_triangular(low, rx.conj().T, lower=True, check_finite=False).conj().T
    return rx, b


def posterior_gain_matrix(r_pred, x) -> np.ndarray:
    """``R_p = R x (I + x^H R x)^{-1} x^H R``, the covariance explained by ``x``."""
    _, b = _gain_factor(as_cmatrix(r_pred), as_cmatrix(x))
    return hermitize(b @ b.conj().T)


def single_shot_mmse(x, y, r) -> tuple[np.ndarray, np.ndarray]:
    """MMSE estimate from one block of pilots, plus the covariance of the estimate."""
    x, r = as_cmatrix(x), as_cmatrix(r)
    y = np.asarray(y, dtype=complex)
    if y.shape != (x.shape[1],):
        raise DimensionError(f"observation length {y.shape} does not match training {x.shape}")
    rx, b = _gain_factor(r, x)
    low = cholesky_hpd(np.eye(x.shape[1]) + x.conj().T @ rx)
    h_hat = rx @ scipy.linalg.cho_solve((low, True), y, check_finite=False)
    return h_hat, hermitize(b @ b.conj().T)


def mse_of_training(x, r) -> float:
    """Normalized MSE ``tr(R - R_p) / N_t`` of single-shot MMSE with training ``x``."""
    x, r = as_cmatrix(x), as_cmatrix(r)
    _, b = _gain_factor(r, x)
    return (htrace(r) - float(np.vdot(b, b).real)) / r.shape[0]


def _dominant_training(r, t_len: int, rho: float) -> np.ndarray:
    r = as_cmatrix(r)
    if not 1 <= t_len <= r.shape[0]:
        raise DomainError(f"training length must lie in [1, {r.shape[0]}], got {t_len}")
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho}")
    return np.sqrt(rho) * hermitian_eig(r).vectors[:, :t_len]


def x_ss_opt(r, t_len: int, rho: float) -> np.ndarray:
    """MSE-optimal single-shot training: the ``t_len`` dominant eigenvectors of ``r``."""
    return _dominant_training(r, t_len, rho)


def x_opt_full_feedback(r_pred, t_len: int, rho: float) -> np.ndarray:
    """MSE-optimal training for the current block given the prediction covariance."""
    return _dominant_training(r_pred, t_len, rho)


def kalman_predict(state: KalmanState, eta: float, r) -> KalmanState:
    """Advance one block: ``h <- eta h``, ``P <- eta^2 P + (1 - eta^2) R``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    h_pred = eta * state.h_corr
    r_pred = hermitize(eta ** 2 * state.r_corr + (1.0 - eta ** 2) * np.asarray(r))
    return KalmanState(h_pred, h_pred, r_pred, r_pred, state.block_index + 1)


def kalman_correct(state: KalmanState, obs: TrainingObservation) -> KalmanState:
    """Fold the pilots of the current block into the prediction."""
    x = as_cmatrix(obs.x)
    y = np.asarray(obs.y, dtype=complex)
    if x.shape[0] != state.n_tx or y.shape != (x.shape[1],):
        raise DimensionError(f"observation shapes {x.shape}, {y.shape} do not match N_t={state.n_tx}")
    rx, b = _gain_factor(state.r_pred, x)
    low = cholesky_hpd(np.eye(x.shape[1]) + x.conj().T @ rx)
    innovation = y - x.conj().T @ state.h_pred
    h_corr = state.h_pred + rx @ scipy.linalg.cho_solve((low, True), innovation, check_finite=False)
    r_corr = hermitize(state.r_pred - b @ b.conj().T)
    return replace(state, h_corr=h_corr, r_corr=r_corr)


def shrinkage_gain(lam, rho: float):
    """``rho lam^2 / (rho lam + 1)``, the error reduction along an eigen-direction."""
    lam = np.asarray(lam, dtype=float)
    return rho * lam ** 2 / (rho * lam + 1.0)


def mse_closed_form_ss(r, t_len: int, rho: float) -> float:
    """Closed-form MSE of :func:`x_ss_opt` training."""
    lam = hermitian_eig(r).values
    return 1.0 - float(np.sum(shrinkage_gain(lam[:t_len], rho))) / len(lam)


def snr_upper_bound_ss(r, t_len: int, rho: float) -> float:
    """Upper bound on the beamforming SNR of optimal single-shot training (linear)."""
    lam = hermitian_eig(r).values
    if not 1 <= t_len <= len(lam):
        raise DomainError(f"training length must lie in [1, {len(lam)}], got {t_len}")
    return float(np.sum(shrinkage_gain(lam[:t_len], rho))) + float(lam[0])


def snr_ceiling_bound_exp(t_len: int, a: float) -> float:
    """``(T + 1)(1 + a)/(1 - a)``: an N_t-free ceiling for the exponential model."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"a must lie in [0, 1), got {a}")
    return (t_len + 1) * (1.0 + a) / (1.0 - a)


def full_feedback_gains(r, eta: float, t_len: int, rho: float, i_max: int) -> np.ndarray:
    """Per-block MSE reductions ``sum_t rho l^2/(rho l + 1)`` under full-feedback training.

    ``R`` and every prediction covariance share the eigenvectors of ``R``, so
    the recursion runs on the diagonal in that basis: train the ``t_len``
    largest entries, then ``mu <- eta^2 (mu - gain) + (1 - eta^2) lambda``.
    """
    lam = hermitian_eig(r).values
    mu = lam.copy()
    gains = np.empty(i_max + 1)
    for i in range(i_max + 1):
        top = np.argsort(-mu, kind="stable")[:t_len]
        reduction = shrinkage_gain(mu[top], rho)
        gains[i] = reduction.sum()
        corrected = mu.copy()
        corrected[top] -= reduction
        mu = eta ** 2 * corrected + (1.0 - eta ** 2) * lam
    return gains


def mse_lower_bound_closed_loop(r, eta: float, t_len: int, rho: float, i_max: int) -> np.ndarray:
    """MSE of blocks ``0..i_max`` under full-feedback closed-loop training."""
    n_tx = as_cmatrix(r).shape[0]
    gains = full_feedback_gains(r, eta, t_len, rho, i_max)
    out = np.empty(i_max + 1)
    for i in range(i_max + 1):
        weights = eta ** (2.0 * (i - np.arange(i + 1)))
        out[i] = 1.0 - float(np.dot(weights, gains[: i + 1])) / n_tx
    return out
