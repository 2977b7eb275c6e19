"""Spatially correlated Gauss-Markov block-fading MISO channel."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError
from .numerics import bessel_j0, psd_sqrt
from .rng import complex_normal

SPEED_OF_LIGHT = 3e8


def exponential_correlation(n_tx: int, a: float) -> np.ndarray:
    """Exponential correlation model, entry ``(j, k)`` equal to ``a**|j-k|``."""
    if not 0.0 <= a < 1.0:
        raise DomainError(f"correlation parameter must lie in [0, 1), got {a}")
    if n_tx < 1:
        raise DomainError(f"n_tx must be positive, got {n_tx}")
    idx = np.arange(n_tx)
    lag = np.abs(idx[:, None] - idx[None, :])
    # 0**0 == 1 keeps the unit diagonal when a == 0
    return np.power(float(a), lag).astype(complex)


def jakes_eta(v_kmh: float, f_c_hz: float, tau_s: float) -> float:
    """Temporal correlation ``J0(2 pi f_D tau)`` with Doppler ``f_D = v f_c / c``."""
    if min(v_kmh, f_c_hz, tau_s) < 0:
        raise DomainError("speed, carrier frequency and interval must be non-negative")
    doppler = (v_kmh / 3.6) * f_c_hz / SPEED_OF_LIGHT
    return bessel_j0(2.0 * math.pi * doppler * tau_s)


@dataclass(frozen=True)
class ChannelConfig:
    n_tx: int
    a: float
    eta: float
    seed: int = 0

    def __post_init__(self):
        if self.n_tx < 1:
            raise DomainError(f"n_tx must be positive, got {self.n_tx}")
        if not 0.0 <= self.a < 1.0:
            raise DomainError(f"a must lie in [0, 1), got {self.a}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")

    @cached_property
    def r(self) -> np.ndarray:
        return exponential_correlation(self.n_tx, self.a)

    @cached_property
    def r_sqrt(self) -> np.ndarray:
        return psd_sqrt(self.r)


@dataclass(frozen=True)
class ChannelState:
    block_index: int
    h: np.ndarray = field(repr=False)
    r_sqrt: np.ndarray = field(repr=False)


def init_block(cfg: ChannelConfig, rng: np.random.Generator) -> ChannelState:
    """Draw ``h_0 ~ CN(0, R)``."""
    g = complex_normal(rng, cfg.n_tx)
    return ChannelState(0, cfg.r_sqrt @ g, cfg.r_sqrt)


def evolve_block(state: ChannelState, cfg: ChannelConfig,
                 rng: np.random.Generator) -> ChannelState:
    """One Gauss-Markov step ``h <- eta h + sqrt(1 - eta^2) R^(1/2) g``."""
    if cfg.eta == 1.0:
        # skip the draw so eta == 1 leaves h bit-identical
        return ChannelState(state.block_index + 1, state.h, state.r_sqrt)
    g = complex_normal(rng, cfg.n_tx)
    h = cfg.eta * state.h + math.sqrt(1.0 - cfg.eta ** 2) * (state.r_sqrt @ g)
    return ChannelState(state.block_index + 1, h, state.r_sqrt)
