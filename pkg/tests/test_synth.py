import numpy as np
import pytest

from sigverify.hmm import TrainConfig, fit_model, score
from sigverify.io import parse_svc, scan_dataset, summarize, write_svc
from sigverify.signal import pipeline
from sigverify.synth import (
    GenerationConfig,
    forgers_of,
    generate_dataset,
    generate_user,
    sample_forgery,
    sample_genuine,
    user_seed,
)

ZERO_JITTER = GenerationConfig(
    spatial_jitter=0.0,
    temporal_jitter=0.0,
    pressure_jitter=0.0,
    forgery_degradation=0.0,
    period_jitter_ms=0.0,
)


class TestGenerateUser:
    def test_deterministic(self):
        a = generate_user(123)
        b = generate_user(123)
        assert np.array_equal(a.anchors, b.anchors)
        assert a.base_duration == b.base_duration
        assert a.velocity_strength == b.velocity_strength
        assert a.pressure_level == b.pressure_level

    def test_hundred_seeds_all_distinct(self):
        templates = [generate_user(s) for s in range(100)]
        for i in range(len(templates)):
            for j in range(i + 1, len(templates)):
                ti, tj = templates[i], templates[j]
                same_shape = ti.anchors.shape == tj.anchors.shape
                assert not (same_shape and np.array_equal(ti.anchors, tj.anchors))

    def test_template_invariants(self):
        for s in range(20):
            t = generate_user(s)
            assert len(t.anchors) >= 4
            assert 1.0 <= t.base_duration <= 10.0

    def test_pressure_concentrates_in_narrow_band(self):
        # At least 90% of rendered pressure values fall inside a 60-level window.
        config = GenerationConfig()
        for s in range(5):
            sig = sample_genuine(generate_user(s), 1, 1, config)
            stats = summarize(sig)
            assert stats["pressure_band_90"] <= 60


class TestSampleGenuine:
    def test_deterministic(self):
        config = GenerationConfig()
        t = generate_user(7)
        assert sample_genuine(t, 1, 1, config) == sample_genuine(t, 1, 1, config)

    def test_sessions_and_indices_differ(self):
        config = GenerationConfig()
        t = generate_user(7)
        a = sample_genuine(t, 1, 1, config)
        b = sample_genuine(t, 1, 2, config)
        c = sample_genuine(t, 2, 1, config)
        assert a != b and a != c

    def test_mean_sampling_period_in_band(self):
        config = GenerationConfig()
        for s in range(8):
            sig = sample_genuine(generate_user(s), 1, 1, config)
            stats = summarize(sig)
            assert 6.5 <= stats["mean_period_ms"] <= 8.5

    def test_zero_jitter_renders_are_identical(self):
        t = generate_user(3)
        a = sample_genuine(t, 1, 1, ZERO_JITTER)
        b = sample_genuine(t, 3, 5, ZERO_JITTER)
        assert a == b

    def test_round_trips_through_file_format(self):
        config = GenerationConfig()
        sig = sample_genuine(generate_user(11), 2, 3, config)
        assert parse_svc(write_svc(sig)) == sig

    def test_survives_pipeline(self):
        config = GenerationConfig()
        fs = pipeline(sample_genuine(generate_user(5), 1, 1, config))
        assert fs.dim == 14
        assert np.isfinite(fs.channels).all()


class TestSampleForgery:
    def test_deterministic(self):
        config = GenerationConfig()
        t = generate_user(9)
        assert sample_forgery(t, 42, config) == sample_forgery(t, 42, config)

    def test_zero_degradation_reduces_to_genuine(self):
        t = generate_user(4)
        forgery = sample_forgery(t, 5, ZERO_JITTER)
        genuine = sample_genuine(t, 1, 1, ZERO_JITTER)
        assert forgery == genuine

    def test_differs_from_genuine_with_degradation(self):
        config = GenerationConfig()
        t = generate_user(4)
        assert sample_forgery(t, 5, config) != sample_genuine(t, 1, 1, config)


class TestGenerateDataset:
    def test_conformant_four_user_dataset(self, tmp_path):
        config = GenerationConfig(n_users=4, seed=1)
        index = generate_dataset(config, tmp_path)
        assert len(index.users) == 4
        assert index.warnings == ()
        assert index.n_genuine == 60
        assert index.n_forgeries == 60

    def test_forger_rotation_distinct(self):
        for u in range(4):
            assert len(set(forgers_of(u, 4))) == 3
            assert u not in forgers_of(u, 4)

    def test_regeneration_is_file_identical(self, tmp_path):
        config = GenerationConfig(n_users=2, seed=5)
        generate_dataset(config, tmp_path / "a")
        generate_dataset(config, tmp_path / "b")
        files_a = sorted((tmp_path / "a").rglob("*.svc"))
        files_b = sorted((tmp_path / "b").rglob("*.svc"))
        assert [f.relative_to(tmp_path / "a") for f in files_a] == [
            f.relative_to(tmp_path / "b") for f in files_b
        ]
        for fa, fb in zip(files_a, files_b):
            assert fa.read_bytes() == fb.read_bytes()

    def test_every_file_parses_and_processes(self, tmp_path):
        config = GenerationConfig(n_users=2, seed=9)
        generate_dataset(config, tmp_path)
        for f in sorted(tmp_path.rglob("*.svc")):
            fs = pipeline(parse_svc(f.read_bytes()))
            assert np.isfinite(fs.channels).all()

    def test_user_seed_stability(self):
        assert user_seed(0, 3) == user_seed(0, 3)
        assert user_seed(0, 3) != user_seed(0, 4)
        assert user_seed(1, 3) != user_seed(0, 3)


@pytest.fixture(scope="module")
def ten_user_scores():
    """One model per user (trained on sessions 1-2 renders), scored against
    own session-3 genuines, own forgeries, and other users' genuines."""
    config = GenerationConfig(n_users=10, seed=0)
    templates = [generate_user(user_seed(config.seed, u)) for u in range(10)]
    train_cfg = TrainConfig(max_iterations=8, seed=0)

    genuine_means, skilled_means, random_means = [], [], []
    test_feats = {
        u: [pipeline(sample_genuine(t, 3, i, config)) for i in range(1, 6)]
        for u, t in enumerate(templates)
    }
    for u, template in enumerate(templates):
        enroll = [pipeline(sample_genuine(template, 1, i, config)) for i in (1, 2, 3)]
        enroll += [pipeline(sample_genuine(template, 2, i, config)) for i in (1, 2)]
        model, _ = fit_model(enroll, config=train_cfg)

        genuine = [score(model, f) for f in test_feats[u]]
        skilled = [
            score(model, pipeline(sample_forgery(template, (user_seed(config.seed, v), r), config)))
            for v in forgers_of(u, 10)
            for r in (1, 2)
        ]
        random_scores = [
            score(model, f)
            for v in range(10)
            if v != u
            for f in test_feats[v][:2]
        ]
        genuine_means.append(np.mean(genuine))
        skilled_means.append(np.mean(skilled))
        random_means.append(np.mean(random_scores))
    return np.array(genuine_means), np.array(skilled_means), np.array(random_means)


class TestSeparability:
    def test_genuine_beats_cross_user_on_average(self, ten_user_scores):
        genuine, _, random_scores = ten_user_scores
        assert genuine.mean() > random_scores.mean()

    def test_score_ordering_for_most_users(self, ten_user_scores):
        genuine, skilled, random_scores = ten_user_scores
        ordered = (genuine > skilled) & (skilled > random_scores)
        assert ordered.mean() >= 0.8

    def test_forgeries_score_between_genuine_and_random(self, ten_user_scores):
        genuine, skilled, random_scores = ten_user_scores
        assert genuine.mean() > skilled.mean() > random_scores.mean()
