"""Training-signal selection strategies and data-phase beamforming."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .codebook import TrainingCodebook
from .estimation import KalmanState, x_opt_full_feedback

log = logging.getLogger(__name__)

UNBOUNDED_FEEDBACK = -1
ZERO_NORM_TOL = 1e-12
DEGENERATE_TOL = 1e-12
TIE_TOL = 1e-10


class StrategyKind(str, enum.Enum):
    OL_SS = "ol-ss"
    OL_MEM = "ol-mem"
    CL_MEM_MSE = "cl-mem-mse"
    CL_MEM_SNR = "cl-mem-snr"
    CL_SS_FULL = "cl-ss-full"
    CL_MEM_FULL = "cl-mem-full"

    @property
    def uses_memory(self) -> bool:
        return self in (StrategyKind.OL_MEM, StrategyKind.CL_MEM_MSE,
                        StrategyKind.CL_MEM_SNR, StrategyKind.CL_MEM_FULL)

    @property
    def uses_codebook(self) -> bool:
        return self in (StrategyKind.OL_SS, StrategyKind.OL_MEM,
                        StrategyKind.CL_MEM_MSE, StrategyKind.CL_MEM_SNR)

    @property
    def closed_loop(self) -> bool:
        return self not in (StrategyKind.OL_SS, StrategyKind.OL_MEM)

    def feedback_bits(self, bits: int) -> int:
        if not self.closed_loop:
            return 0
        return bits if self.uses_codebook else UNBOUNDED_FEEDBACK


@dataclass(frozen=True)
class StrategyDecision:
    x: np.ndarray
    feedback_bits: int
    codebook_index: int | None = None


class MomentConvention(str, enum.Enum):
    """Constants in the variance/covariance terms of the ratio approximation.

    ``REAL`` uses ``4 m^H A m + 2 tr(...)``, the moments of a real-valued
    Gaussian vector; it is the default. ``COMPLEX`` uses the circular complex
    Gaussian values ``2 m^H A m + tr(...)``.
    """

    REAL = "real"
    COMPLEX = "complex"

    @property
    def constants(self) -> tuple[float, float]:
        return (4.0, 2.0) if self is MomentConvention.REAL else (2.0, 1.0)


class SnrScore(NamedTuple):
    value: float
    q: float
    degenerate: bool


def select_round_robin(codebook: TrainingCodebook, block_index: int,
                       order: np.ndarray | None = None) -> StrategyDecision:
    """Entry ``block_index mod 2**B`` (after an optional index permutation)."""
    k = block_index % len(codebook)
    if order is not None:
        k = int(order[k])
    return StrategyDecision(codebook[k], 0, k)


def _gain_factors(r_pred: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """``B_k`` with ``B_k B_k^H = R_p(P_k)`` for every entry, shape ``(K, N, T)``."""
    t = stack.shape[2]
    rx = r_pred @ stack
    innov = np.eye(t) + stack.conj().transpose(0, 2, 1) @ rx
    low = np.linalg.cholesky(innov)
    return np.linalg.solve(low, rx.conj().transpose(0, 2, 1)).conj().transpose(0, 2, 1)


def gain_traces(r_pred: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """``tr(R_p(P_k))`` for each entry ``P_k`` of ``stack``."""
    b = _gain_factors(r_pred, stack)
    return np.sum(np.abs(b) ** 2, axis=(1, 2))


def argmax_lowest(scores: np.ndarray) -> int:
    """First index within ``TIE_TOL`` (relative) of the maximum score."""
    top = float(np.max(scores))
    return int(np.argmax(scores >= top - TIE_TOL * max(1.0, abs(top))))


def select_min_mse(codebook: TrainingCodebook, kalman: KalmanState,
                   order: np.ndarray | None = None) -> StrategyDecision:
    """Entry that minimizes the post-correction MSE, i.e. maximizes ``tr(R_p)``."""
    stack = codebook.stacked() if order is None else codebook.stacked()[order]
    k = argmax_lowest(gain_traces(kalman.r_pred, stack))
    if order is not None:
        k = int(order[k])
    return StrategyDecision(codebook[k], codebook.bits, k)


def snr_scores(r_pred: np.ndarray, h_pred: np.ndarray, stack: np.ndarray,
               convention: MomentConvention = MomentConvention.REAL
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expected beamforming SNR after training with each entry of ``stack``.

    Returns ``(objective, q, degenerate)`` arrays. The objective is
    ``tr(R_p) + ||m||^2 + q`` where ``m`` is the predicted channel and ``q``
    is the second-order ratio approximation of
    ``E[m'^H R_c m' / ||m'||^2]`` over ``m' ~ CN(m, R_p)`` with
    ``R_c = R_pred - R_p`` the corrected covariance.
    """
    c_mean, c_tr = MomentConvention(convention).constants
    b = _gain_factors(r_pred, stack)                       # (K, N, T)
    bh = b.conj().transpose(0, 2, 1)
    g = bh @ b                                             # B^H B
    w = bh @ r_pred @ b                                    # B^H R_pred B
    bm = bh @ h_pred                                       # B^H m, (K, T)
    bpm = bh @ (r_pred @ h_pred)                           # B^H R_pred m

    tr_rp = np.trace(g, axis1=1, axis2=2).real
    tr_rp2 = np.sum(np.abs(g) ** 2, axis=(1, 2))
    tr_rp3 = np.trace(g @ g @ g, axis1=1, axis2=2).real
    tr_rc_rp = np.trace(w, axis1=1, axis2=2).real - tr_rp2
    tr_rc_rp2 = np.trace(w @ g, axis1=1, axis2=2).real - tr_rp3
    m_rp_m = np.sum(np.abs(bm) ** 2, axis=1)
    m_rc_m = float(np.vdot(h_pred, r_pred @ h_pred).real) - m_rp_m
    gbm = np.einsum("kij,kj->ki", g, bm)
    m_rc_rp_m = (np.sum(bpm.conj() * bm, axis=1) - np.sum(bm.conj() * gbm, axis=1)).real
    norm_m = float(np.vdot(h_pred, h_pred).real)

    e1 = m_rc_m + tr_rc_rp
    e2 = norm_m + tr_rp
    var2 = c_mean * m_rp_m + c_tr * tr_rp2
    cov = c_mean * m_rc_rp_m + c_tr * tr_rc_rp2
    degenerate = e2 <= DEGENERATE_TOL
    safe_e2 = np.where(degenerate, 1.0, e2)
    q = (e1 / safe_e2) - cov / safe_e2 ** 2 + e1 * var2 / safe_e2 ** 3
    q = np.where(degenerate, 0.0, q)
    value = np.where(degenerate, tr_rp, tr_rp + norm_m + q)
    return value, q, degenerate


def snr_objective(p: np.ndarray, kalman: KalmanState,
                  convention: MomentConvention = MomentConvention.REAL) -> SnrScore:
    """Approximate expected data-phase SNR if ``p`` is used for the next pilots.

    Falls back to ``tr(R_p)`` with ``degenerate=True`` when the estimate carries
    no energy.
    """
    value, q, degenerate = snr_scores(kalman.r_pred, kalman.h_pred, np.asarray(p)[None],
                                      convention)
    return SnrScore(float(value[0]), float(q[0]), bool(degenerate[0]))


def select_max_snr(codebook: TrainingCodebook, kalman: KalmanState,
                   order: np.ndarray | None = None,
                   convention: MomentConvention = MomentConvention.REAL) -> StrategyDecision:
    stack = codebook.stacked() if order is None else codebook.stacked()[order]
    value, _, _ = snr_scores(kalman.r_pred, kalman.h_pred, stack, convention)
    k = argmax_lowest(value)
    if order is not None:
        k = int(order[k])
    return StrategyDecision(codebook[k], codebook.bits, k)


def select_full_feedback(kalman: KalmanState, t_len: int, rho: float) -> StrategyDecision:
    return StrategyDecision(x_opt_full_feedback(kalman.r_pred, t_len, rho), UNBOUNDED_FEEDBACK)


def beamformer(h_hat) -> tuple[np.ndarray, bool]:
    """Unit-norm matched beamformer ``h_hat / ||h_hat||``.

    Returns ``(w, fallback)``; an all-zero estimate yields ``e_1`` with
    ``fallback=True``.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    norm = np.linalg.norm(h_hat)
    if norm < ZERO_NORM_TOL:
        log.debug("zero channel estimate; falling back to e_1")
        w = np.zeros_like(h_hat)
        w[0] = 1.0
        return w, True
    return h_hat / norm, False


def realized_snr(h, w) -> float:
    """``|h^H w|^2`` for a unit-norm beamformer."""
    return float(abs(np.vdot(h, w)) ** 2)
