"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the test names map one to one onto the criteria. The end-to-end
criteria share one session-scoped 20-user synthetic dataset and its two
protocol runs (pressure on and off).
"""

import itertools
import time

import numpy as np
import pytest
from scipy.special import logsumexp

from sigverify.evaluation import (
    GENUINE,
    RANDOM,
    SKILLED,
    ProtocolConfig,
    build_trials,
    enumerate_combinations,
    report,
    run_protocol,
    scores_csv_text,
)
from sigverify.hmm import TrainConfig, fit_model, forward_loglik, score, viterbi_loglik
from sigverify.io import parse_svc, scan_dataset
from sigverify.metrics import compute_eer
from sigverify.signal import PipelineConfig, pipeline, resample_uniform
from sigverify.synth import GenerationConfig, generate_dataset, generate_user, sample_genuine, user_seed
from tests.conftest import Stopwatch, make_trace_signature
from tests.test_hmm import oracle_path_logliks, random_toy_model
from tests.test_metrics import brute_force_eer
from tests.test_signal import make_signature, rigid_motion

PASS = "ACCEPTANCE {num}: {name} ... PASS"


def announce(num, name):
    print(PASS.format(num=num, name=name))


@pytest.fixture(scope="session")
def dataset20(tmp_path_factory):
    """The seeded default 20-user synthetic dataset."""
    root = tmp_path_factory.mktemp("accept-20u")
    with Stopwatch() as timer:
        index = generate_dataset(GenerationConfig(), root)
    assert index.warnings == ()
    return index, timer.elapsed


@pytest.fixture(scope="session")
def protocol_runs(dataset20):
    """Both pressure settings of the full protocol, with wall-clock time."""
    index, gen_elapsed = dataset20
    runs = {}
    with Stopwatch() as timer:
        for use_pressure in (True, False):
            config = ProtocolConfig(use_pressure=use_pressure)
            runs[use_pressure] = run_protocol(index, config)
    return runs, gen_elapsed + timer.elapsed


class TestCriterion1ProtocolCombinatorics:
    def test_c01_trial_counts_on_53_user_dataset(self, tmp_path):
        index = generate_dataset(GenerationConfig(n_users=53, seed=0), tmp_path)
        assert index.n_genuine == 795
        assert index.n_forgeries == 795
        with Stopwatch() as timer:
            trials = build_trials(index)
        assert trials.count(GENUINE) == 12 * 5 * 53 == 3180
        assert trials.count(SKILLED) == 12 * 15 * 53 == 9540
        assert trials.count(RANDOM) == 12 * 15 * 52 * 53 == 496080
        assert timer.elapsed < 5.0
        announce(1, f"protocol combinatorics 3180/9540/496080 in {timer.elapsed:.2f}s")


class TestCriterion2EnrollmentCombinatorics:
    def test_c02_twelve_windows_per_user(self, tmp_path):
        index = generate_dataset(GenerationConfig(n_users=2, seed=0), tmp_path)
        for user in index.users:
            combos = enumerate_combinations(user)
            assert len(combos) == 12
            got = {(c.session1_indices, c.session2_indices) for c in combos}
            expected = {
                ((t, t + 1, t + 2), (p, p + 1))
                for t in (1, 2, 3)
                for p in (1, 2, 3, 4)
            }
            assert got == expected
        announce(2, "12 enrollment combinations = 3 triples x 4 pairs")


class TestCriterion3HmmOracle:
    def test_c03_forward_viterbi_match_path_enumeration(self):
        rng = np.random.default_rng(2024)
        checked = 0
        with Stopwatch() as timer:
            while checked < 100:
                n_states = int(rng.integers(1, 4))
                n_mixtures = int(rng.integers(1, 3))
                dim = int(rng.integers(1, 3))
                t_len = int(rng.integers(max(2, n_states), 9))
                model = random_toy_model(rng, n_states, n_mixtures, dim)
                seq = rng.normal(0.0, 1.5, size=(t_len, dim))

                path_logliks = oracle_path_logliks(model, seq)
                expected_fwd = logsumexp(path_logliks)
                expected_vit = path_logliks.max()
                got_fwd = forward_loglik(model, seq)
                got_vit, _ = viterbi_loglik(model, seq)
                assert abs(got_fwd - expected_fwd) <= 1e-9 * max(1.0, abs(expected_fwd))
                assert abs(got_vit - expected_vit) <= 1e-9 * max(1.0, abs(expected_vit))
                checked += 1
        assert timer.elapsed < 10.0
        announce(3, f"forward/Viterbi match exhaustive enumeration on {checked} cases "
                    f"in {timer.elapsed:.2f}s")


class TestCriterion4EmMonotonicity:
    def test_c04_loglik_trace_non_decreasing(self):
        cfg = TrainConfig(max_iterations=20, loglik_relative_tolerance=0.0)

        rng = np.random.default_rng(11)
        toy_seqs = [
            np.concatenate(
                [rng.normal(-1.5, 0.8, size=(40, 2)), rng.normal(2.0, 0.6, size=(40, 2))]
            )
            for _ in range(3)
        ]
        _, toy_trace = fit_model(toy_seqs, n_states=2, n_mixtures=2, config=cfg)
        assert len(toy_trace) == 20
        assert np.all(np.diff(toy_trace) >= -1e-6)

        config = GenerationConfig()
        template = generate_user(user_seed(0, 0))
        sig_seqs = [pipeline(sample_genuine(template, 1, i, config)) for i in (1, 2, 3)]
        sig_seqs += [pipeline(sample_genuine(template, 2, i, config)) for i in (1, 2)]
        _, sig_trace = fit_model(sig_seqs, config=cfg)
        assert len(sig_trace) == 20
        assert np.all(np.diff(sig_trace) >= -1e-6)
        announce(4, "EM log-likelihood trace non-decreasing over 20 iterations "
                    "(toy and signature data)")


class TestCriterion5WhiteningContract:
    def test_c05_every_channel_standardized(self, dataset20):
        index, _ = dataset20
        files = [f for u in index.users for f in u.session(1).genuine]
        assert len(files) == 100
        for f in files:
            fs = pipeline(parse_svc(f.read_bytes()))
            means = fs.channels.mean(axis=0)
            stds = fs.channels.std(axis=0)
            assert np.all(np.abs(means) < 1e-9)
            assert np.all(np.abs(stds - 1.0) < 1e-9)
        announce(5, f"whitening contract holds on {len(files)} synthetic signatures")


class TestCriterion6RigidMotionInvariance:
    def test_c06_scores_invariant_to_translation_rotation(self):
        config = GenerationConfig()
        enroll_template = generate_user(user_seed(0, 0))
        enroll = [pipeline(sample_genuine(enroll_template, 1, i, config)) for i in (1, 2, 3)]
        enroll += [pipeline(sample_genuine(enroll_template, 2, i, config)) for i in (1, 2)]
        model, _ = fit_model(enroll, config=TrainConfig(max_iterations=6))

        rng = np.random.default_rng(606)
        worst = 0.0
        for u in range(20):
            sig = sample_genuine(generate_user(user_seed(1, u)), 1, 1, config)
            reference = score(model, pipeline(sig))
            for _ in range(10):
                moved = rigid_motion(
                    sig,
                    dx=float(rng.uniform(-2000, 2000)),
                    dy=float(rng.uniform(-2000, 2000)),
                    phi=float(rng.uniform(-np.pi, np.pi)),
                )
                delta = abs(score(model, pipeline(moved)) - reference)
                worst = max(worst, delta)
        assert worst < 1e-6
        announce(6, f"rigid-motion invariance: max end-to-end score delta {worst:.2e}")


class TestCriterion7ResamplerExactness:
    def test_c07_exact_on_piecewise_linear_and_spot_check(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            ts = np.cumsum(rng.uniform(2.0, 14.0, size=60))
            slope_x, off_x = rng.uniform(-5, 5), rng.uniform(-100, 100)
            slope_y, off_y = rng.uniform(-5, 5), rng.uniform(-100, 100)
            sig = make_signature(slope_x * ts + off_x, slope_y * ts + off_y, ts)
            uniform = resample_uniform(sig, rate=100.0)
            grid = ts[0] + 10.0 * np.arange(uniform.n_samples)
            np.testing.assert_allclose(uniform.x, slope_x * grid + off_x, rtol=1e-12, atol=1e-9)
            np.testing.assert_allclose(uniform.y, slope_y * grid + off_y, rtol=1e-12, atol=1e-9)
            assert uniform.period == 1.0 / 100.0
            assert grid[-1] <= ts[-1] + 1e-6

        trace = make_trace_signature()
        uniform = resample_uniform(trace, rate=100.0)
        by_hand = 2256 + (2269 - 2256) * (10.0 - 2.7682) / (14.3258 - 2.7682)
        assert abs(uniform.x[1] - by_hand) < 1e-9
        assert abs(uniform.x[1] - 2264.134) < 1e-3
        announce(7, "resampler exact on piecewise-linear input; 10 ms grid; "
                    f"tablet-trace spot check x(10ms)={uniform.x[1]:.3f}")


class TestCriterion8EerOracle:
    def test_c08_exact_match_with_brute_force(self):
        rng = np.random.default_rng(88)
        for _ in range(100):
            n_g = int(rng.integers(2, 50))
            n_i = int(rng.integers(2, 50))
            genuine = rng.normal(rng.uniform(-1, 3), 1.0, size=n_g).tolist()
            impostor = rng.normal(0.0, 1.0, size=n_i).tolist()
            expected_eer, expected_th = brute_force_eer(genuine, impostor)
            result = compute_eer(genuine, impostor)
            assert result.eer == expected_eer
            assert result.threshold == expected_th
        assert compute_eer([3.0, 4.0, 5.0], [0.0, 1.0, 2.0]).eer == 0.0
        same = [0.3, 0.6, 0.9]
        assert compute_eer(same, same).eer == 0.5
        announce(8, "EER sweep equals O(n^2) brute force on 100 random score sets")


class TestCriterion9EndToEndSeparability:
    def test_c09_error_rates_on_default_dataset(self, protocol_runs):
        runs, elapsed = protocol_runs
        for use_pressure, score_set in runs.items():
            assert score_set.failures == []
            genuine = score_set.scores(GENUINE)
            skilled = score_set.scores(SKILLED)
            random_scores = score_set.scores(RANDOM)
            assert len(genuine) == 12 * 5 * 20
            assert len(skilled) == 12 * 15 * 20
            assert len(random_scores) == 12 * 15 * 19 * 20
            eer_random = compute_eer(genuine, random_scores).eer
            eer_skilled = compute_eer(genuine, skilled).eer
            assert eer_random <= 0.05, f"pressure={use_pressure}: EER(random)={eer_random}"
            assert eer_skilled >= eer_random
        assert elapsed < 600.0
        announce(9, f"20-user separability, both pressure settings, in {elapsed:.0f}s")

    def test_c09b_per_user_score_ordering(self, protocol_runs):
        # Generator contract: mean genuine > mean skilled > mean random for
        # at least 80% of users.
        runs, _ = protocol_runs
        score_set = runs[True]
        users = sorted({r.user_id for r in score_set.rows})
        ordered = 0
        for uid in users:
            means = {
                label: np.mean([r.score for r in score_set.rows
                                if r.user_id == uid and r.label == label])
                for label in (GENUINE, SKILLED, RANDOM)
            }
            if means[GENUINE] > means[SKILLED] > means[RANDOM]:
                ordered += 1
        assert ordered >= 0.8 * len(users)
        announce(9, f"score ordering holds for {ordered}/{len(users)} users")


class TestCriterion10Determinism:
    def test_c10_identical_seeds_identical_csv(self, tmp_path):
        index = generate_dataset(GenerationConfig(n_users=5, seed=10), tmp_path / "data")
        config = ProtocolConfig(seed=3, train=TrainConfig(max_iterations=5, seed=0))
        first = run_protocol(index, config)
        second = run_protocol(index, config)
        report(first, tmp_path / "a")
        report(second, tmp_path / "b")
        bytes_a = (tmp_path / "a" / "scores.csv").read_bytes()
        bytes_b = (tmp_path / "b" / "scores.csv").read_bytes()
        assert bytes_a == bytes_b
        assert scores_csv_text(first) == scores_csv_text(second)
        announce(10, "two protocol runs with identical seeds are byte-identical")
