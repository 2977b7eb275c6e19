"""Shared training codebooks designed by Grassmannian subspace packing.

Entries are ``N_t x T`` matrices with ``X^H X = rho I``. Distances are taken
between the column spaces, i.e. on ``X / sqrt(rho)``, so they do not depend
on the training power.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CodebookFormatError, DimensionError, DomainError, UnsupportedVersionError
from .numerics import random_isometry
from .rng import Purpose, substream

FORMAT_NAME = "fddtraining-codebook"
FORMAT_VERSION = 1
UNITARY_TOL = 1e-9


@dataclass(frozen=True)
class TrainingCodebook:
    n_tx: int
    t_len: int
    bits: int
    rho: float
    entries: tuple = field(repr=False)
    min_chordal: float
    seed: int | None = None

    def __post_init__(self):
        validate(self)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, k: int) -> np.ndarray:
        return self.entries[k]

    def stacked(self) -> np.ndarray:
        """Entries as one ``(2**bits, N_t, T)`` array."""
        return np.stack(self.entries)

    def with_rho(self, rho: float) -> "TrainingCodebook":
        scale = math.sqrt(rho / self.rho) if self.rho > 0 else 0.0
        return TrainingCodebook(self.n_tx, self.t_len, self.bits, rho,
                                tuple(e * scale for e in self.entries),
                                self.min_chordal, self.seed)


def validate(cb: TrainingCodebook, tol: float = UNITARY_TOL) -> None:
    """Raise :class:`CodebookFormatError` unless every invariant holds."""
    if cb.bits < 0 or len(cb.entries) != 2 ** cb.bits:
        raise CodebookFormatError(f"expected {2 ** cb.bits} entries, found {len(cb.entries)}")
    if not 1 <= cb.t_len <= cb.n_tx:
        raise CodebookFormatError(f"invalid shape N_t={cb.n_tx}, T={cb.t_len}")
    if cb.rho <= 0:
        raise CodebookFormatError(f"rho must be positive, got {cb.rho}")
    eye = np.eye(cb.t_len)
    for k, x in enumerate(cb.entries):
        if x.shape != (cb.n_tx, cb.t_len):
            raise CodebookFormatError(f"entry {k} has shape {x.shape}")
        err = np.linalg.norm(x.conj().T @ x - cb.rho * eye)
        if not err <= tol * cb.rho * cb.t_len:
            raise CodebookFormatError(f"entry {k} is not unitary (deviation {err:.3e})")
    recomputed = min_chordal_distance(cb.entries, cb.rho) if len(cb.entries) > 1 else math.inf
    if not (recomputed == cb.min_chordal or abs(recomputed - cb.min_chordal) <= 1e-9):
        raise CodebookFormatError(
            f"stored min_chordal {cb.min_chordal} differs from recomputed {recomputed}")


def chordal_distance(x, y, rho: float | None = None) -> float:
    """``||P_x - P_y||_F / sqrt(2)`` between the projectors onto the column spaces.

    ``rho`` defaults to the average squared column norm of ``x``.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    if rho is None:
        rho = float(np.vdot(x, x).real) / x.shape[1]
    if rho <= 0:
        return 0.0
    overlap = np.linalg.norm(x.conj().T @ y) ** 2 / rho ** 2
    return math.sqrt(max(x.shape[1] - overlap, 0.0))


def _pairwise_overlaps(stack: np.ndarray) -> np.ndarray:
    """``||X_m^H X_n||_F^2`` for unit-power entries, shape ``(K, K)``."""
    k, n, t = stack.shape
    flat = stack.transpose(1, 0, 2).reshape(n, k * t)
    gram = np.abs(flat.conj().T @ flat) ** 2
    return gram.reshape(k, t, k, t).sum(axis=(1, 3))


def _min_distance_unit(stack: np.ndarray) -> float:
    t = stack.shape[2]
    ov = _pairwise_overlaps(stack)
    np.fill_diagonal(ov, -np.inf)
    return math.sqrt(max(t - float(ov.max()), 0.0))


def min_chordal_distance(entries, rho: float | None = None) -> float:
    """Smallest chordal distance over all unordered pairs of entries."""
    stack = np.stack([np.asarray(e, dtype=complex) for e in entries]) if len(entries) else None
    if stack is None or stack.shape[0] < 2:
        raise DomainError("need at least two entries")
    if rho is None:
        rho = float(np.vdot(stack[0], stack[0]).real) / stack.shape[2]
    return _min_distance_unit(stack / math.sqrt(rho))


def random_codebook_stack(n_tx: int, t_len: int, bits: int, seed: int, restart: int = 0) -> np.ndarray:
    """``2**bits`` independent Haar-random unit-power entries, shape ``(K, N_t, T)``."""
    rng = substream(seed, restart, 0, Purpose.CODEBOOK)
    return np.stack([random_isometry(rng, n_tx, t_len) for _ in range(2 ** bits)])


def _retract(stack: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(stack)
    d = np.diagonal(r, axis1=1, axis2=2)
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * phase[:, None, :]


def _refine(stack: np.ndarray, iterations: int, power: float = 8.0, step: float = 0.1) -> np.ndarray:
    """Repulsion descent on the Grassmannian, keeping the best packing seen.

    Minimizes ``sum_{m<n} (overlap_mn / T)^power``; a large power focuses the
    push on the closest pairs. The step shrinks whenever the potential rises.
    """
    k, n, t = stack.shape
    if k < 2 or t == n:
        return stack
    best, best_d = stack, _min_distance_unit(stack)

    def potential(s):
        ov = _pairwise_overlaps(s) / t
        np.fill_diagonal(ov, 0.0)
        return float(np.sum(ov ** power)) / 2.0, ov

    current = stack
    energy, ov = potential(current)
    for _ in range(iterations):
        weights = power * ov ** (power - 1.0) / t
        # gradient w.r.t. X_m is 2 (sum_n w_mn X_n X_n^H) X_m
        proj = current @ current.conj().transpose(0, 2, 1)
        pull = (weights @ proj.reshape(k, n * n)).reshape(k, n, n)
        grad = 2.0 * pull @ current
        # project onto the tangent space of the Grassmannian
        grad = grad - current @ (current.conj().transpose(0, 2, 1) @ grad)
        scale = np.linalg.norm(grad, axis=(1, 2)).max()
        if scale == 0.0:
            break
        trial = _retract(current - (step / scale) * grad)
        trial_energy, trial_ov = potential(trial)
        if trial_energy < energy:
            current, energy, ov = trial, trial_energy, trial_ov
            step = min(step * 1.2, 0.5)
            d = _min_distance_unit(current)
            if d > best_d:
                best, best_d = current, d
        else:
            step *= 0.5
            if step < 1e-9:
                break
    return best


def design_gsp(n_tx: int, t_len: int, bits: int, rho: float = 1.0, budget: int = 200,
               seed: int = 0, restarts: int = 8) -> TrainingCodebook:
    """Design a training codebook by Grassmannian subspace packing.

    ``restarts`` random codebooks are drawn from per-restart substreams of
    ``seed``; each is refined for ``budget`` descent steps and the packing with
    the largest minimum chordal distance wins (ties go to the lower restart
    index). Restart 0 is the plain random codebook for ``seed``, so the result
    is never worse than it.
    """
    if bits < 0:
        raise DomainError(f"bits must be non-negative, got {bits}")
    if not 1 <= t_len <= n_tx:
        raise DomainError(f"need 1 <= t_len <= n_tx, got t_len={t_len}, n_tx={n_tx}")
    if rho <= 0:
        raise DomainError(f"rho must be positive, got {rho}")
    if restarts < 1 or budget < 0:
        raise DomainError("restarts must be positive and budget non-negative")
    if bits == 0:
        stack = random_codebook_stack(n_tx, t_len, 0, seed, 0)
        return TrainingCodebook(n_tx, t_len, 0, rho, (math.sqrt(rho) * stack[0],), math.inf, seed)

    best_stack, best_d = None, -math.inf
    for restart in range(restarts):
        stack = random_codebook_stack(n_tx, t_len, bits, seed, restart)
        for candidate in (stack, _refine(stack, budget)):
            d = _min_distance_unit(candidate)
            if d > best_d:
                best_stack, best_d = candidate, d
    entries = tuple(math.sqrt(rho) * e for e in best_stack)
    return TrainingCodebook(n_tx, t_len, bits, rho, entries,
                            min_chordal_distance(entries, rho), seed)


def identity_codebook(n_tx: int, rho: float = 1.0) -> TrainingCodebook:
    """Single full-length entry ``sqrt(rho) I``; used for the T = N_t baseline."""
    return TrainingCodebook(n_tx, n_tx, 0, rho, (math.sqrt(rho) * np.eye(n_tx, dtype=complex),),
                            math.inf, None)


def _encode(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def to_dict(cb: TrainingCodebook) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "n_tx": cb.n_tx,
        "t_len": cb.t_len,
        "bits": cb.bits,
        "rho": cb.rho,
        "seed": cb.seed,
        "min_chordal": None if math.isinf(cb.min_chordal) else cb.min_chordal,
        "entries": [_encode(e) for e in cb.entries],
    }


def from_dict(data: dict) -> TrainingCodebook:
    if not isinstance(data, dict) or data.get("format") != FORMAT_NAME:
        raise CodebookFormatError("not a codebook file")
    if data.get("version") != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"codebook format version {data.get('version')!r} is not supported "
            f"(expected {FORMAT_VERSION})")
    try:
        entries = tuple(np.array([[complex(re, im) for re, im in row] for row in e])
                        for e in data["entries"])
        min_chordal = data["min_chordal"]
        return TrainingCodebook(
            int(data["n_tx"]), int(data["t_len"]), int(data["bits"]), float(data["rho"]),
            entries, math.inf if min_chordal is None else float(min_chordal), data.get("seed"))
    except CodebookFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CodebookFormatError(f"malformed codebook: {exc}") from exc


def save_codebook(cb: TrainingCodebook, path) -> None:
    text = json.dumps(to_dict(cb), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_codebook(path) -> TrainingCodebook:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CodebookFormatError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(data)
