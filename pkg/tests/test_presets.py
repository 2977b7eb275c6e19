import math

import pytest

from fddtraining.errors import DomainError
from fddtraining.presets import PRESET_NAMES, bound_rows, get_preset, run_preset
from fddtraining.simulator import CSV_COLUMNS

# (n_tx, rho_db, t_len) per comparison panel of the reference experiments
PANELS = {
    "fig4a": (16, 0, 1), "fig4b": (16, 0, 2), "fig4c": (16, 20, 1), "fig4d": (16, 20, 2),
    "fig5a": (64, 0, 2), "fig5b": (64, 0, 4), "fig5c": (64, 20, 2), "fig5d": (64, 20, 4),
    "fig6a": (16, 0, 2), "fig6b": (64, 20, 4),
}
COMPARED = {"ol-ss", "ol-mem", "cl-mem-mse", "cl-mem-snr"}


def summary(preset):
    return {(c.n_tx, round(c.rho_db, 9), c.t_len, c.a, c.bits, c.strategy.value,
             round(c.eta_value, 4)) for c in preset.configs}


def test_names():
    assert set(PRESET_NAMES) == {"fig1", "fig3", "fig7a", "fig7b", "fig8"} | set(PANELS)


def test_unknown():
    with pytest.raises(DomainError):
        get_preset("fig2")


def test_all_resolve_to_default_protocol():
    for name in PRESET_NAMES:
        for c in get_preset(name).configs:
            assert c.iterations == 10000 and c.blocks == 10
            assert c.shuffle_codebook


def test_fig1():
    p = get_preset("fig1")
    assert p.bounds
    assert {(c.rho_db, c.t_len) for c in p.configs} == {(20.0, 4)}
    assert {c.a for c in p.configs} == {0.0, 0.5, 0.9}
    assert {c.strategy.value for c in p.configs} == {"ol-ss", "cl-ss-full"}
    assert {c.n_tx for c in p.configs} == {4, 8, 16, 32, 64}


def test_fig3():
    got = summary(get_preset("fig3"))
    assert got == {(n, 0.0, 2, 0.9, b, "cl-mem-snr", 0.9881) for n in (16, 64) for b in (2, 4, 6, 8)}


@pytest.mark.parametrize("name", sorted(PANELS))
def test_comparison_panels(name):
    n, rho_db, t = PANELS[name]
    got = summary(get_preset(name))
    expected = {(n, float(rho_db), t, a, 6, s, 0.9881) for a in (0.5, 0.9) for s in COMPARED}
    expected |= {(n, float(rho_db), n, a, 6, "ol-ss", 0.9881) for a in (0.5, 0.9)}
    assert got == expected


@pytest.mark.parametrize("name,rho_db,t", [("fig7a", 0.0, 2), ("fig7b", 20.0, 4)])
def test_antenna_sweeps(name, rho_db, t):
    got = summary(get_preset(name))
    kinds = COMPARED | {"cl-ss-full"}
    assert got == {(n, rho_db, t, a, 6, s, 0.9881)
                   for n in (8, 16, 32, 64) for a in (0.5, 0.9) for s in kinds}


def test_fig8():
    got = summary(get_preset("fig8"))
    assert got == {(64, r, 2, 0.9, 6, "cl-mem-snr", e)
                   for r in (0.0, 20.0) for e in (0.9881, 0.8721)}


def test_overrides():
    p = get_preset("fig8").with_overrides(iterations=7, master_seed=3, blocks=None)
    assert all(c.iterations == 7 and c.master_seed == 3 and c.blocks == 10 for c in p.configs)
    with pytest.raises(DomainError):
        get_preset("fig8").with_overrides(n_tx=4)


def test_bound_rows():
    cfg = get_preset("fig1").configs[0]
    rows = bound_rows(cfg)
    assert [r["strategy"] for r in rows] == ["bound-single-shot", "bound-ceiling"]
    assert all(set(r) == set(CSV_COLUMNS) and r["samples"] == 0 for r in rows)
    # i.i.d. channel at T=4: ceiling is T + 1
    iid = [c for c in get_preset("fig1").configs if c.a == 0.0][0]
    assert abs(bound_rows(iid)[1]["gamma_db"] - 10 * math.log10(5)) < 1e-12


def test_run_preset_small():
    p = get_preset("fig1").with_overrides(iterations=5, blocks=1, codebook_budget=2,
                                          codebook_restarts=1)
    p = type(p)(p.name, p.description, tuple(c for c in p.configs if c.n_tx <= 8), p.bounds)
    rows = run_preset(p, workers=1)
    sims = [r for r in rows if r["samples"]]
    bounds = [r for r in rows if not r["samples"]]
    assert len(sims) == len(p.configs)
    assert len(bounds) == 2 * 3 * 2
