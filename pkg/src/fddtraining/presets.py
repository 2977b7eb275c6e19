"""Experiment presets, named fig1 ... fig8 after the experiments they regenerate.

A preset is a list of simulation configs plus, for the single-shot ceiling
experiment, analytic bound rows. Grids left open by the experiment definitions
(the ``a`` values of the ceiling and comparison figures) are reconstructions:
``{0, 0.5, 0.9}`` for the ceiling figure and ``{0.5, 0.9}`` elsewhere.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .channel import exponential_correlation
from .errors import DomainError
from .estimation import mse_closed_form_ss, snr_ceiling_bound_exp, snr_upper_bound_ss
from .simulator import SimConfig, metrics_rows, run
from .strategies import StrategyKind

DEFAULT_BITS = 6
FIG1_A = (0.0, 0.5, 0.9)
FIG_A = (0.5, 0.9)
FIG1_NTX = (4, 8, 16, 32, 64)
FIG7_NTX = (8, 16, 32, 64)
COMPARED = (StrategyKind.OL_SS, StrategyKind.OL_MEM, StrategyKind.CL_MEM_MSE,
            StrategyKind.CL_MEM_SNR)

# overridable fields when resolving a preset
OVERRIDES = ("iterations", "blocks", "master_seed", "codebook_seed", "codebook_budget",
             "codebook_restarts", "moment_convention")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    configs: tuple[SimConfig, ...]
    bounds: bool = False

    def with_overrides(self, **kw) -> "ExperimentPreset":
        unknown = set(kw) - set(OVERRIDES)
        if unknown:
            raise DomainError(f"cannot override {sorted(unknown)} on a preset")
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(
            self, configs=tuple(dataclasses.replace(c, **kw) for c in self.configs))


def _cfg(n_tx, t_len, rho_db, a, strategy, bits=DEFAULT_BITS, **kw) -> SimConfig:
    return SimConfig(n_tx=n_tx, t_len=t_len, rho=db_to_linear(rho_db), a=a, bits=bits,
                     strategy=strategy, **kw)


def _fig1() -> ExperimentPreset:
    configs = tuple(_cfg(n, 4, 20.0, a, s)
                    for a in FIG1_A for s in (StrategyKind.OL_SS, StrategyKind.CL_SS_FULL)
                    for n in FIG1_NTX)
    return ExperimentPreset("fig1", "single-shot ceiling vs N_t, rho=20 dB, T=4, with bounds",
                            configs, bounds=True)


def _fig3() -> ExperimentPreset:
    configs = tuple(_cfg(n, 2, 0.0, 0.9, StrategyKind.CL_MEM_SNR, bits=b)
                    for n in (16, 64) for b in (2, 4, 6, 8))
    return ExperimentPreset("fig3", "SNR-based closed loop vs block, rho=0 dB, T=2, a=0.9, "
                            "B in {2,4,6,8}, N_t in {16,64}", configs)


def _comparison(name, n_tx, rho_db, t_len, what="gamma") -> ExperimentPreset:
    configs = [_cfg(n_tx, t_len, rho_db, a, s) for a in FIG_A for s in COMPARED]
    configs += [_cfg(n_tx, n_tx, rho_db, a, StrategyKind.OL_SS) for a in FIG_A]
    return ExperimentPreset(name, f"{what} vs block, N_t={n_tx}, rho={rho_db:g} dB, T={t_len}",
                            tuple(configs))


def _fig7(name, rho_db, t_len) -> ExperimentPreset:
    kinds = COMPARED + (StrategyKind.CL_SS_FULL,)
    configs = tuple(_cfg(n, t_len, rho_db, a, s) for a in FIG_A for s in kinds for n in FIG7_NTX)
    return ExperimentPreset(name, f"gamma vs N_t, rho={rho_db:g} dB, T={t_len}", configs)


def _fig8() -> ExperimentPreset:
    configs = tuple(_cfg(64, 2, rho_db, 0.9, StrategyKind.CL_MEM_SNR, v_kmh=v)
                    for rho_db in (0.0, 20.0) for v in (3.0, 10.0))
    return ExperimentPreset("fig8", "SNR-based closed loop vs block, N_t=64, T=2, a=0.9, "
                            "rho in {0,20} dB, v in {3,10} km/h", configs)


_BUILDERS = {
    "fig1": _fig1,
    "fig3": _fig3,
    "fig4a": lambda: _comparison("fig4a", 16, 0.0, 1),
    "fig4b": lambda: _comparison("fig4b", 16, 0.0, 2),
    "fig4c": lambda: _comparison("fig4c", 16, 20.0, 1),
    "fig4d": lambda: _comparison("fig4d", 16, 20.0, 2),
    "fig5a": lambda: _comparison("fig5a", 64, 0.0, 2),
    "fig5b": lambda: _comparison("fig5b", 64, 0.0, 4),
    "fig5c": lambda: _comparison("fig5c", 64, 20.0, 2),
    "fig5d": lambda: _comparison("fig5d", 64, 20.0, 4),
    "fig6a": lambda: _comparison("fig6a", 16, 0.0, 2, what="mse"),
    "fig6b": lambda: _comparison("fig6b", 64, 20.0, 4, what="mse"),
    "fig7a": lambda: _fig7("fig7a", 0.0, 2),
    "fig7b": lambda: _fig7("fig7b", 20.0, 4),
    "fig8": _fig8,
}

PRESET_NAMES = tuple(_BUILDERS)


def get_preset(name: str) -> ExperimentPreset:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}") from None


def bound_rows(cfg: SimConfig) -> list[dict]:
    """Analytic single-shot bound rows (``samples = 0``) matching the CSV schema."""
    r = exponential_correlation(cfg.n_tx, cfg.a)
    single_shot = snr_upper_bound_ss(r, cfg.t_len, cfg.rho)
    ceiling = snr_ceiling_bound_exp(cfg.t_len, cfg.a)
    mse = mse_closed_form_ss(r, cfg.t_len, cfg.rho)
    common = {"block": 0, "n_tx": cfg.n_tx, "t_len": cfg.t_len, "rho_db": cfg.rho_db,
              "a": cfg.a, "eta": cfg.eta_value, "bits": cfg.bits, "gamma_stderr": 0.0,
              "mse_stderr": 0.0, "samples": 0}
    return [
        {"strategy": "bound-single-shot", **common, "gamma_db": 10 * math.log10(single_shot),
         "mse": mse},
        {"strategy": "bound-ceiling", **common, "gamma_db": 10 * math.log10(ceiling), "mse": mse},
    ]


def run_preset(preset: ExperimentPreset, workers: int | None = None) -> list[dict]:
    """Simulate every config of ``preset`` and return the long-format rows."""
    rows: list[dict] = []
    for cfg in preset.configs:
        rows.extend(metrics_rows(cfg, run(cfg, workers=workers)))
    if preset.bounds:
        seen = set()
        for cfg in preset.configs:
            key = (cfg.n_tx, cfg.t_len, cfg.a, cfg.rho)
            if key not in seen:
                seen.add(key)
                rows.extend(bound_rows(cfg))
    return rows
