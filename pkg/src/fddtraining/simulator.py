"""Monte Carlo engine: iterations of consecutive fading blocks.

Each iteration draws ``h_0``, then for every block selects pilots, observes,
updates the estimator, beamforms on the corrected estimate and records the
realized SNR ``|h^H w|^2`` and the squared error. Iterations are independent
work units; all randomness comes from :func:`fddtraining.rng.substream`, so
output is identical for any worker count.
"""
from __future__ import annotations

import dataclasses
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .channel import ChannelConfig, evolve_block, init_block, jakes_eta
from .codebook import TrainingCodebook, design_gsp, identity_codebook, load_codebook
from .errors import DomainError
from .estimation import (KalmanState, TrainingObservation, kalman_correct, kalman_predict,
                         x_opt_full_feedback, x_ss_opt)
from .rng import Purpose, complex_normal, substream
from .strategies import (MomentConvention, StrategyKind, argmax_lowest, beamformer,
                         gain_traces, realized_snr, snr_scores)

WORKERS_ENV = "FDDTRAINING_WORKERS"
SWEEP_AXES = ("n_tx", "rho", "a", "t_len", "bits", "strategy", "eta")


@dataclass(frozen=True)
class SimConfig:
    n_tx: int = 16
    t_len: int = 2
    rho: float = 1.0
    a: float = 0.9
    eta: float | None = None
    v_kmh: float = 3.0
    f_c_hz: float = 2.5e9
    tau_s: float = 0.005
    bits: int = 6
    blocks: int = 10
    iterations: int = 10000
    strategy: StrategyKind = StrategyKind.CL_MEM_SNR
    codebook_path: str | None = None
    codebook_seed: int = 0
    codebook_budget: int = 200
    codebook_restarts: int = 4
    master_seed: int = 0
    shuffle_codebook: bool = True
    moment_convention: MomentConvention = MomentConvention.REAL

    def __post_init__(self):
        object.__setattr__(self, "strategy", StrategyKind(self.strategy))
        object.__setattr__(self, "moment_convention", MomentConvention(self.moment_convention))
        if self.n_tx < 1 or not 1 <= self.t_len <= self.n_tx:
            raise DomainError(f"need 1 <= t_len <= n_tx, got t_len={self.t_len}, n_tx={self.n_tx}")
        if self.blocks < 1 or self.iterations < 1:
            raise DomainError("blocks and iterations must be positive")
        if self.rho < 0:
            raise DomainError(f"rho must be non-negative, got {self.rho}")
        if self.bits < 0:
            raise DomainError(f"bits must be non-negative, got {self.bits}")
        ChannelConfig(self.n_tx, self.a, self.eta_value)

    @property
    def eta_value(self) -> float:
        if self.eta is not None:
            return float(self.eta)
        return jakes_eta(self.v_kmh, self.f_c_hz, self.tau_s)

    @property
    def rho_db(self) -> float:
        return 10.0 * math.log10(self.rho) if self.rho > 0 else -math.inf

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["strategy"] = self.strategy.value
        d["moment_convention"] = self.moment_convention.value
        d["eta_value"] = self.eta_value
        return d


@dataclass(frozen=True)
class BlockMetrics:
    block_index: int
    mean_gamma: float
    gamma_stderr: float
    mean_mse: float
    mse_stderr: float
    analytic_mse: float
    samples: int
    fallbacks: int = 0

    @property
    def gamma_db(self) -> float:
        return 10.0 * math.log10(self.mean_gamma)

    @property
    def gamma_stderr_db(self) -> float:
        """Standard error of ``gamma_db`` by the delta method."""
        return 10.0 / math.log(10.0) * self.gamma_stderr / self.mean_gamma


@dataclass(frozen=True)
class Samples:
    """Per-iteration, per-block raw results, each of shape ``(iterations, blocks)``."""

    gamma: np.ndarray = field(repr=False)
    sq_error: np.ndarray = field(repr=False)
    analytic_mse: np.ndarray = field(repr=False)
    fallbacks: np.ndarray = field(repr=False)


@lru_cache(maxsize=32)
def _designed_codebook(n_tx, t_len, bits, budget, restarts, seed) -> TrainingCodebook:
    return design_gsp(n_tx, t_len, bits, 1.0, budget=budget, seed=seed, restarts=restarts)


def resolve_codebook(cfg: SimConfig) -> TrainingCodebook | None:
    """Codebook for ``cfg`` at power ``cfg.rho``, or ``None`` if the strategy needs none."""
    if not cfg.strategy.uses_codebook:
        return None
    if cfg.codebook_path:
        cb = load_codebook(cfg.codebook_path)
        if (cb.n_tx, cb.t_len, cb.bits) != (cfg.n_tx, cfg.t_len, cfg.bits):
            raise DomainError(
                f"codebook shape (n_tx={cb.n_tx}, t_len={cb.t_len}, bits={cb.bits}) does not "
                f"match config (n_tx={cfg.n_tx}, t_len={cfg.t_len}, bits={cfg.bits})")
    elif cfg.t_len == cfg.n_tx:
        # every full-length unitary spans the whole space; one entry suffices
        cb = identity_codebook(cfg.n_tx)
    else:
        cb = _designed_codebook(cfg.n_tx, cfg.t_len, cfg.bits, cfg.codebook_budget,
                                cfg.codebook_restarts, cfg.codebook_seed)
    return cb.with_rho(cfg.rho) if cfg.rho > 0 else cb


@dataclass(frozen=True)
class _Context:
    cfg: SimConfig
    chan: ChannelConfig
    stack: np.ndarray | None
    x_ss: np.ndarray | None


def _make_context(cfg: SimConfig, codebook: TrainingCodebook | None) -> _Context:
    chan = ChannelConfig(cfg.n_tx, cfg.a, cfg.eta_value, cfg.master_seed)
    if cfg.strategy.uses_codebook and codebook is None:
        raise DomainError(f"strategy {cfg.strategy.value} needs a codebook")
    stack = None
    if codebook is not None:
        if (codebook.n_tx, codebook.t_len) != (cfg.n_tx, cfg.t_len):
            raise DomainError("codebook shape does not match config")
        stack = codebook.stacked()
        if cfg.rho == 0:
            stack = np.zeros_like(stack)
    x_ss = x_ss_opt(chan.r, cfg.t_len, cfg.rho) if cfg.strategy is StrategyKind.CL_SS_FULL else None
    chan.r_sqrt  # populate the cache before the context is shipped to workers
    return _Context(cfg, chan, stack, x_ss)


def _pick_training(ctx: _Context, kalman: KalmanState, block: int, order) -> np.ndarray:
    kind = ctx.cfg.strategy
    if kind in (StrategyKind.OL_SS, StrategyKind.OL_MEM):
        k = block % len(order)
        return ctx.stack[order[k]]
    if kind is StrategyKind.CL_MEM_MSE:
        stack = ctx.stack[order]
        return stack[argmax_lowest(gain_traces(kalman.r_pred, stack))]
    if kind is StrategyKind.CL_MEM_SNR:
        stack = ctx.stack[order]
        value, _, _ = snr_scores(kalman.r_pred, kalman.h_pred, stack, ctx.cfg.moment_convention)
        return stack[argmax_lowest(value)]
    if kind is StrategyKind.CL_SS_FULL:
        return ctx.x_ss
    return x_opt_full_feedback(kalman.r_pred, ctx.cfg.t_len, ctx.cfg.rho)


def _run_iteration(ctx: _Context, iteration: int) -> tuple[np.ndarray, ...]:
    cfg = ctx.cfg
    seed = cfg.master_seed
    chan = ctx.chan
    n_blocks = cfg.blocks
    gamma = np.empty(n_blocks)
    err = np.empty(n_blocks)
    analytic = np.empty(n_blocks)
    fallbacks = np.zeros(n_blocks, dtype=np.int64)

    order = None
    if ctx.stack is not None:
        k = ctx.stack.shape[0]
        order = np.arange(k)
        if cfg.shuffle_codebook:
            order = substream(seed, iteration, 0, Purpose.SHUFFLE).permutation(k)

    state = init_block(chan, substream(seed, iteration, 0, Purpose.CHANNEL))
    prior = KalmanState.initial(chan.r)
    kalman = prior
    for i in range(n_blocks):
        if i > 0:
            state = evolve_block(state, chan, substream(seed, iteration, i, Purpose.CHANNEL))
            kalman = kalman_predict(kalman, chan.eta, chan.r) if cfg.strategy.uses_memory else prior
        x = _pick_training(ctx, kalman, i, order)
        noise = complex_normal(substream(seed, iteration, i, Purpose.NOISE), cfg.t_len)
        y = x.conj().T @ state.h + noise
        kalman = kalman_correct(kalman, TrainingObservation(x, y))
        w, fell_back = beamformer(kalman.h_corr)
        gamma[i] = realized_snr(state.h, w)
        diff = state.h - kalman.h_corr
        err[i] = float(np.vdot(diff, diff).real) / cfg.n_tx
        analytic[i] = kalman.mse()
        fallbacks[i] = fell_back
    return gamma, err, analytic, fallbacks


_WORKER_CTX: _Context | None = None


def _init_worker(ctx: _Context) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _run_chunk(bounds: tuple[int, int]) -> list[tuple[np.ndarray, ...]]:
    return [_run_iteration(_WORKER_CTX, it) for it in range(*bounds)]


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def simulate(cfg: SimConfig, codebook: TrainingCodebook | None = None,
             workers: int | None = None) -> Samples:
    """Raw per-iteration results for ``cfg``.

    ``codebook`` defaults to :func:`resolve_codebook`. ``workers`` defaults to
    the ``FDDTRAINING_WORKERS`` environment variable, else 1.
    """
    if codebook is None:
        codebook = resolve_codebook(cfg)
    ctx = _make_context(cfg, codebook)
    n_workers = worker_count(workers)
    if n_workers == 1:
        results = [_run_iteration(ctx, it) for it in range(cfg.iterations)]
    else:
        chunk = max(1, math.ceil(cfg.iterations / (4 * n_workers)))
        bounds = [(s, min(s + chunk, cfg.iterations)) for s in range(0, cfg.iterations, chunk)]
        with ProcessPoolExecutor(n_workers, initializer=_init_worker, initargs=(ctx,)) as pool:
            results = [r for part in pool.map(_run_chunk, bounds) for r in part]
    gamma, err, analytic, fallbacks = (np.stack(col) for col in zip(*results))
    return Samples(gamma, err, analytic, fallbacks)


def _stderr(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    if n < 2:
        return np.zeros(x.shape[1:])
    return x.std(axis=0, ddof=1) / math.sqrt(n)


def aggregate(samples: Samples) -> list[BlockMetrics]:
    """Per-block means in the linear domain with standard errors."""
    n = samples.gamma.shape[0]
    g_mean, g_se = samples.gamma.mean(axis=0), _stderr(samples.gamma)
    e_mean, e_se = samples.sq_error.mean(axis=0), _stderr(samples.sq_error)
    a_mean = samples.analytic_mse.mean(axis=0)
    fb = samples.fallbacks.sum(axis=0)
    return [BlockMetrics(i, float(g_mean[i]), float(g_se[i]), float(e_mean[i]), float(e_se[i]),
                         float(a_mean[i]), n, int(fb[i]))
            for i in range(samples.gamma.shape[1])]


def run(cfg: SimConfig, codebook: TrainingCodebook | None = None,
        workers: int | None = None) -> list[BlockMetrics]:
    return aggregate(simulate(cfg, codebook, workers))


CSV_COLUMNS = ("strategy", "block", "n_tx", "t_len", "rho_db", "a", "eta", "bits",
               "gamma_db", "gamma_stderr", "mse", "mse_stderr", "samples")


def metrics_rows(cfg: SimConfig, metrics: list[BlockMetrics], label: str | None = None) -> list[dict]:
    """Long-format rows, one per block. ``gamma_stderr`` is in dB."""
    return [{
        "strategy": label or cfg.strategy.value,
        "block": m.block_index,
        "n_tx": cfg.n_tx,
        "t_len": cfg.t_len,
        "rho_db": cfg.rho_db,
        "a": cfg.a,
        "eta": cfg.eta_value,
        "bits": cfg.bits,
        "gamma_db": m.gamma_db,
        "gamma_stderr": m.gamma_stderr_db,
        "mse": m.mean_mse,
        "mse_stderr": m.mse_stderr,
        "samples": m.samples,
    } for m in metrics]


def run_sweep(base: SimConfig, axis: str, values, workers: int | None = None) -> list[dict]:
    """One :func:`run` per value of ``axis``; returns the concatenated long-format rows."""
    if axis not in SWEEP_AXES:
        raise DomainError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    rows: list[dict] = []
    for value in values:
        cfg = dataclasses.replace(base, **{axis: value})
        rows.extend(metrics_rows(cfg, run(cfg, workers=workers)))
    return rows
