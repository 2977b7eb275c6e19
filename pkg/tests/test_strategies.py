import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fddtraining.channel import exponential_correlation
from fddtraining.codebook import TrainingCodebook, min_chordal_distance, random_codebook_stack
from fddtraining.estimation import (KalmanState, TrainingObservation, kalman_correct,
                                    kalman_predict, posterior_gain_matrix, x_opt_full_feedback)
from fddtraining.numerics import psd_sqrt
from fddtraining.rng import complex_normal
from fddtraining.strategies import (UNBOUNDED_FEEDBACK, MomentConvention, StrategyKind,
                                    beamformer, gain_traces, realized_snr, select_full_feedback,
                                    select_max_snr, select_min_mse, select_round_robin,
                                    snr_objective, snr_scores)

from conftest import random_unitary_training

ETA = 0.9881


def make_codebook(entries, rho):
    entries = tuple(np.asarray(e, dtype=complex) for e in entries)
    bits = int(np.log2(len(entries)))
    d = min_chordal_distance(entries, rho) if len(entries) > 1 else np.inf
    return TrainingCodebook(entries[0].shape[0], entries[0].shape[1], bits, rho, entries, d)


def random_codebook(n, t, bits, rho, seed=0):
    return make_codebook(np.sqrt(rho) * random_codebook_stack(n, t, bits, seed), rho)


def random_state(rng, r, rho, t=2, steps=1):
    """Kalman state after ``steps`` random trainings on a drawn channel, then one prediction."""
    n = r.shape[0]
    h = psd_sqrt(r) @ complex_normal(rng, n)
    s = KalmanState.initial(r)
    for i in range(steps):
        if i:
            s = kalman_predict(s, ETA, r)
        x = random_unitary_training(rng, n, t, rho)
        s = kalman_correct(s, TrainingObservation(x, x.conj().T @ h + complex_normal(rng, t)))
    return kalman_predict(s, ETA, r)


def mc_ratio(kalman, p, rng, draws=1_000_000, chunk=250_000):
    """Monte Carlo ``E[g^H R_c g / ||g||^2]`` with ``g ~ CN(h_pred, R_p)``."""
    r_p = posterior_gain_matrix(kalman.r_pred, p)
    r_c = kalman.r_pred - r_p
    root = psd_sqrt(r_p)
    total = 0.0
    for _ in range(draws // chunk):
        g = kalman.h_pred + complex_normal(rng, (chunk, len(kalman.h_pred))) @ root.T
        num = np.einsum("ki,ij,kj->k", g.conj(), r_c, g).real
        total += np.sum(num / np.sum(np.abs(g) ** 2, axis=1))
    return total / draws


class TestKinds:
    def test_feedback_bits(self):
        assert StrategyKind.OL_SS.feedback_bits(6) == 0
        assert StrategyKind.OL_MEM.feedback_bits(6) == 0
        assert StrategyKind.CL_MEM_MSE.feedback_bits(6) == 6
        assert StrategyKind.CL_MEM_SNR.feedback_bits(4) == 4
        assert StrategyKind.CL_SS_FULL.feedback_bits(6) == UNBOUNDED_FEEDBACK
        assert StrategyKind.CL_MEM_FULL.feedback_bits(6) == UNBOUNDED_FEEDBACK

    def test_memory_flags(self):
        assert not StrategyKind.OL_SS.uses_memory and not StrategyKind.CL_SS_FULL.uses_memory
        assert all(StrategyKind(k).uses_memory for k in ("ol-mem", "cl-mem-mse", "cl-mem-snr",
                                                         "cl-mem-full"))


class TestRoundRobin:
    @pytest.fixture
    def cb(self):
        return random_codebook(4, 1, 2, 1.0)

    def test_indices(self, cb):
        assert select_round_robin(cb, 0).codebook_index == 0
        assert select_round_robin(cb, 4).codebook_index == 0
        assert select_round_robin(cb, 3).codebook_index == 3

    def test_period(self, cb):
        seq = [select_round_robin(cb, i).codebook_index for i in range(12)]
        assert seq == [0, 1, 2, 3] * 3
        assert all(select_round_robin(cb, i).feedback_bits == 0 for i in range(4))

    def test_permuted_order(self, cb):
        order = np.array([2, 0, 3, 1])
        d = select_round_robin(cb, 5, order)
        assert d.codebook_index == 0
        np.testing.assert_array_equal(d.x, cb[0])


class TestMinMse:
    def test_picks_full_feedback_subspace(self, rng):
        r = exponential_correlation(8, 0.9)
        state = random_state(rng, r, 1.0)
        best = x_opt_full_feedback(state.r_pred, 2, 1.0)
        entries = [random_unitary_training(rng, 8, 2, 1.0) for _ in range(7)]
        entries.insert(5, best)
        d = select_min_mse(make_codebook(entries, 1.0), state)
        assert d.codebook_index == 5
        assert d.feedback_bits == 3

    def test_isotropic_tie(self):
        cb = random_codebook(6, 2, 3, 2.0)
        traces = gain_traces(np.eye(6), cb.stacked())
        assert np.ptp(traces) < 1e-10
        assert select_min_mse(cb, KalmanState.initial(np.eye(6))).codebook_index == 0

    def test_exhaustive_argmax(self, rng):
        r = exponential_correlation(8, 0.7)
        cb = random_codebook(8, 2, 4, 3.0, seed=9)
        for _ in range(20):
            state = random_state(rng, r, 3.0, steps=int(rng.integers(1, 4)))
            traces = [np.trace(posterior_gain_matrix(state.r_pred, x)).real for x in cb.entries]
            k = select_min_mse(cb, state).codebook_index
            assert traces[k] >= max(traces) - 1e-10
            order = rng.permutation(len(cb))
            k2 = select_min_mse(cb, state, order).codebook_index
            assert abs(traces[k2] - traces[k]) < 1e-10

    def test_dominates_round_robin(self, rng):
        r = exponential_correlation(8, 0.9)
        cb = random_codebook(8, 2, 3, 1.0, seed=2)
        for i in range(30):
            state = random_state(rng, r, 1.0)
            traces = []
            for d in (select_min_mse(cb, state), select_round_robin(cb, i)):
                s = kalman_correct(state, TrainingObservation(d.x, np.zeros(2)))
                traces.append(np.trace(s.r_corr).real)
            assert traces[0] <= traces[1] + 1e-10


class TestSnrObjective:
    def test_ratio_against_monte_carlo(self, rng):
        r = exponential_correlation(4, 0.9)
        for _ in range(3):
            state = random_state(rng, r, 1.0, t=1)
            p = random_unitary_training(rng, 4, 2, 1.0)
            mc = mc_ratio(state, p, rng)
            q = snr_objective(p, state, MomentConvention.COMPLEX).q
            assert abs(q - mc) <= 0.1 * mc

    @pytest.mark.parametrize("convention", list(MomentConvention))
    def test_rayleigh_range(self, rng, convention):
        for _ in range(100):
            n = int(rng.integers(2, 9))
            r = exponential_correlation(n, rng.uniform(0, 0.95))
            rho = 10 ** rng.uniform(-1, 2)
            state = random_state(rng, r, rho, t=1, steps=int(rng.integers(1, 4)))
            p = random_unitary_training(rng, n, int(rng.integers(1, n + 1)), rho)
            r_c = state.r_pred - posterior_gain_matrix(state.r_pred, p)
            lam = np.linalg.eigvalsh(r_c)
            q = snr_objective(p, state, convention).q
            assert lam[0] - 1e-9 <= q <= lam[-1] + 1e-9

    def test_objective_terms(self, rng):
        r = exponential_correlation(6, 0.8)
        state = random_state(rng, r, 2.0)
        p = random_unitary_training(rng, 6, 2, 2.0)
        score = snr_objective(p, state)
        expected = (np.trace(posterior_gain_matrix(state.r_pred, p)).real
                    + np.linalg.norm(state.h_pred) ** 2 + score.q)
        assert abs(score.value - expected) < 1e-10
        assert not score.degenerate

    def test_batch_matches_single(self, rng):
        r = exponential_correlation(6, 0.8)
        state = random_state(rng, r, 2.0)
        cb = random_codebook(6, 2, 3, 2.0)
        value, q, _ = snr_scores(state.r_pred, state.h_pred, cb.stacked())
        for k, x in enumerate(cb.entries):
            assert abs(snr_objective(x, state).value - value[k]) < 1e-10

    def test_degenerate(self):
        state = KalmanState.initial(np.eye(3))
        score = snr_objective(np.zeros((3, 1)), state)
        assert score.degenerate and score.value == 0.0 and score.q == 0.0

    def test_isotropic_no_mean(self):
        cb = random_codebook(6, 2, 3, 2.0)
        state = KalmanState.initial(np.eye(6))
        value, _, _ = snr_scores(state.r_pred, state.h_pred, cb.stacked())
        assert np.ptp(value) < 1e-10
        assert select_max_snr(cb, state).codebook_index == select_min_mse(cb, state).codebook_index


class TestMaxSnr:
    def test_single_entry(self, rng):
        x = random_unitary_training(rng, 5, 2, 1.0)
        cb = make_codebook([x], 1.0)
        state = random_state(rng, exponential_correlation(5, 0.5), 1.0)
        assert select_max_snr(cb, state).codebook_index == 0

    def test_exhaustive_argmax(self, rng):
        r = exponential_correlation(8, 0.9)
        cb = random_codebook(8, 2, 4, 1.0, seed=5)
        for _ in range(20):
            state = random_state(rng, r, 1.0)
            values = [snr_objective(x, state).value for x in cb.entries]
            d = select_max_snr(cb, state)
            assert values[d.codebook_index] >= max(values) - 1e-10
            assert d.feedback_bits == 4

    def test_agrees_with_mse_at_high_snr(self, rng):
        rho, r = 100.0, exponential_correlation(16, 0.3)
        cb = random_codebook(16, 2, 6, rho, seed=3)
        agree = 0
        for _ in range(1000):
            state = random_state(rng, r, rho, steps=int(rng.integers(1, 4)))
            agree += select_max_snr(cb, state).codebook_index == select_min_mse(cb, state).codebook_index
        assert agree >= 900

    def test_high_snr_mse_loss_is_small(self, rng):
        rho, r = 100.0, exponential_correlation(16, 0.3)
        cb = random_codebook(16, 2, 6, rho, seed=3)
        stack = cb.stacked()
        for _ in range(300):
            state = random_state(rng, r, rho, steps=int(rng.integers(1, 4)))
            traces = gain_traces(state.r_pred, stack)
            k = select_max_snr(cb, state).codebook_index
            assert traces[k] >= 0.9 * traces.max()


class TestFullFeedback:
    def test_wraps_estimator(self, rng):
        r = exponential_correlation(8, 0.9)
        state = random_state(rng, r, 1.0)
        d = select_full_feedback(state, 2, 1.0)
        np.testing.assert_array_equal(d.x, x_opt_full_feedback(state.r_pred, 2, 1.0))
        assert d.feedback_bits == UNBOUNDED_FEEDBACK and d.codebook_index is None


class TestBeamforming:
    def test_basis_vector(self):
        w, fallback = beamformer(3 * np.eye(4)[1])
        np.testing.assert_allclose(w, np.eye(4)[1])
        assert not fallback

    def test_zero_estimate(self):
        w, fallback = beamformer(np.zeros(3))
        np.testing.assert_array_equal(w, np.eye(3)[0])
        assert fallback

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 16), c=st.floats(1e-3, 1e3))
    def test_unit_norm_and_scale_invariance(self, seed, n, c):
        rng = np.random.default_rng(seed)
        h = complex_normal(rng, n)
        w, _ = beamformer(h)
        assert abs(np.linalg.norm(w) - 1) < 1e-12
        np.testing.assert_allclose(beamformer(c * h)[0], w, atol=1e-12)
        g = complex_normal(rng, n)
        assert realized_snr(g, w) <= np.linalg.norm(g) ** 2 * (1 + 1e-12)

    def test_realized_snr(self, rng):
        h = complex_normal(rng, 6)
        assert abs(realized_snr(h, beamformer(h)[0]) - np.linalg.norm(h) ** 2) < 1e-12
        w = np.array([1, -1, 0, 0], dtype=complex) / np.sqrt(2)
        assert realized_snr(np.array([1, 1, 0, 0], dtype=complex), w) == 0.0

    def test_conditional_snr_identity(self, rng):
        n, draws = 6, 1_000_000
        r = exponential_correlation(n, 0.8)
        state = kalman_correct(KalmanState.initial(r),
                               TrainingObservation(random_unitary_training(rng, n, 2, 1.0),
                                                   complex_normal(rng, 2)))
        m, r_c = state.h_corr, state.r_corr
        w, _ = beamformer(m)
        analytic = np.linalg.norm(m) ** 2 + np.vdot(m, r_c @ m).real / np.linalg.norm(m) ** 2
        h = m + complex_normal(rng, (draws, n)) @ psd_sqrt(r_c).T
        mc = np.mean(np.abs(h.conj() @ w) ** 2)
        assert abs(mc - analytic) <= 0.02 * analytic
