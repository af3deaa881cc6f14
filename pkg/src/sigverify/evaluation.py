"""Enrollment/trial protocol and EER/DET reporting over a dataset.

Per user, twelve enrollment models are trained: every window of 3
consecutive genuine signatures from session 1 crossed with every window of
2 consecutive from session 2 (3 x 4 combinations). The five session-3
signatures are the genuine test set. Impostor trials come in two flavours:

- skilled: the user's own 15 forgery files against each of their models;
- random (casual): every *other* user's 15 forgery files against each model.

For U conformant users this yields exactly 12*5*U genuine, 12*15*U skilled
and 12*15*(U-1)*U random trials. Scoring runs are sequential and fully
seeded, so two runs with the same configuration produce identical output
files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io as std_io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import metrics
from .hmm import TrainConfig, fit_model, score
from .io import DatasetIndex, UserFiles, parse_svc
from .signal import PipelineConfig, pipeline

GENUINE = "genuine"
SKILLED = "skilled"
RANDOM = "random"


class ProtocolError(Exception):
    """Base class for protocol errors."""


class InsufficientEnrollmentError(ProtocolError):
    """A user lacks the 5 + 5 enrollment signatures in sessions 1 and 2."""


class NonConformantDatasetError(ProtocolError):
    """Dataset cannot support the trial counts the protocol requires."""


@dataclass(frozen=True)
class EnrollmentCombination:
    """One of the 12 enrollment windows: indices are 1-based positions
    within the first five signatures of each session."""

    user_id: str
    session1_indices: tuple[int, int, int]
    session2_indices: tuple[int, int]

    @property
    def label(self) -> str:
        a, b = self.session1_indices[0], self.session1_indices[-1]
        c, d = self.session2_indices[0], self.session2_indices[-1]
        return f"s1:{a}-{b}+s2:{c}-{d}"


@dataclass(frozen=True, slots=True)
class Trial:
    user_id: str
    combination: EnrollmentCombination
    test_file: str
    label: str


@dataclass
class TrialSet:
    trials: list[Trial]

    def count(self, label: str) -> int:
        return sum(1 for t in self.trials if t.label == label)

    @property
    def counts(self) -> dict[str, int]:
        return {lab: self.count(lab) for lab in (GENUINE, SKILLED, RANDOM)}


@dataclass(frozen=True, slots=True)
class ScoreRow:
    user_id: str
    combination: str
    test_file: str
    label: str
    score: float


@dataclass
class ScoreSet:
    rows: list[ScoreRow]
    use_pressure: bool
    config_hash: str
    dataset_hash: str
    failures: list[str] = field(default_factory=list)

    def scores(self, label: str) -> np.ndarray:
        return np.array([r.score for r in self.rows if r.label == label])


@dataclass(frozen=True)
class ProtocolConfig:
    rate: float = 100.0
    use_pressure: bool = True
    n_states: int = 2
    n_mixtures: int = 32
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(rate=self.rate, use_pressure=self.use_pressure)


def enumerate_combinations(user: UserFiles) -> list[EnrollmentCombination]:
    """The 12 enrollment windows for one user, triple index major."""
    for session_id in (1, 2):
        session = user.session(session_id)
        if session is None or len(session.genuine) < 5:
            raise InsufficientEnrollmentError(
                f"{user.user_id}: session {session_id} needs at least 5 genuine signatures"
            )
    return [
        EnrollmentCombination(
            user_id=user.user_id,
            session1_indices=(t, t + 1, t + 2),
            session2_indices=(p, p + 1),
        )
        for t in (1, 2, 3)
        for p in (1, 2, 3, 4)
    ]


def _check_conformant(index: DatasetIndex) -> None:
    problems = []
    for user in index.users:
        for sid in (1, 2, 3):
            session = user.session(sid)
            if session is None or len(session.genuine) < 5:
                problems.append(f"{user.user_id}: session {sid} has fewer than 5 genuine files")
        if len(user.forgeries) < 15:
            problems.append(f"{user.user_id}: fewer than 15 forgery files")
    if not index.users:
        problems.append("dataset has no users")
    if problems:
        raise NonConformantDatasetError("; ".join(problems))


def _relative(path: Path, root: Path) -> str:
    try:
        return path.relative_to(root).as_posix()
    except ValueError:
        return path.as_posix()


def build_trials(index: DatasetIndex) -> TrialSet:
    """Enumerate every genuine, skilled and random trial, in deterministic
    order (users sorted, genuine block first, then skilled, then random).

    When a user has more than the expected files, the first five session-3
    signatures and the first fifteen forgeries (sorted by name) are used, so
    trial counts follow the closed-form formulas exactly.
    """
    _check_conformant(index)
    users = sorted(index.users, key=lambda u: u.user_id)
    combos = {u.user_id: enumerate_combinations(u) for u in users}
    test_files = {
        u.user_id: [_relative(p, index.root) for p in u.session(3).genuine[:5]]
        for u in users
    }
    forgery_files = {
        u.user_id: [_relative(p, index.root) for p in u.forgeries[:15]]
        for u in users
    }

    trials: list[Trial] = []
    for u in users:
        for combo in combos[u.user_id]:
            for f in test_files[u.user_id]:
                trials.append(Trial(u.user_id, combo, f, GENUINE))
    for u in users:
        for combo in combos[u.user_id]:
            for f in forgery_files[u.user_id]:
                trials.append(Trial(u.user_id, combo, f, SKILLED))
    for u in users:
        for combo in combos[u.user_id]:
            for other in users:
                if other.user_id == u.user_id:
                    continue
                for f in forgery_files[other.user_id]:
                    trials.append(Trial(u.user_id, combo, f, RANDOM))
    return TrialSet(trials)


def _config_hash(config: ProtocolConfig) -> str:
    payload = {
        "rate": config.rate,
        "use_pressure": config.use_pressure,
        "n_states": config.n_states,
        "n_mixtures": config.n_mixtures,
        "seed": config.seed,
        "train": {
            "max_iterations": config.train.max_iterations,
            "loglik_relative_tolerance": config.train.loglik_relative_tolerance,
            "variance_floor_factor": config.train.variance_floor_factor,
            "variance_floor_min": config.train.variance_floor_min,
            "kmeans_iterations": config.train.kmeans_iterations,
        },
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def dataset_hash(index: DatasetIndex) -> str:
    """Digest of every indexed file's relative path and contents."""
    h = hashlib.sha256()
    paths: list[Path] = []
    for u in index.users:
        for s in u.sessions:
            paths.extend(s.genuine)
        paths.extend(u.forgeries)
    for p in sorted(paths):
        h.update(_relative(p, index.root).encode())
        h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()[:16]


def run_protocol(index: DatasetIndex, config: ProtocolConfig | None = None) -> ScoreSet:
    """Train all 12 models per user and score every trial.

    Features are extracted once per file. A failing trial is recorded in
    ``failures`` and skipped; the run continues. Deterministic given the
    configuration seed.
    """
    cfg = config or ProtocolConfig()
    trial_set = build_trials(index)
    users = sorted(index.users, key=lambda u: u.user_id)
    pipe_cfg = cfg.pipeline_config()

    feature_cache: dict[str, object] = {}

    def features(rel: str):
        if rel not in feature_cache:
            raw = parse_svc((index.root / rel).read_bytes())
            feature_cache[rel] = pipeline(raw, pipe_cfg)
        return feature_cache[rel]

    models = {}
    for u_idx, user in enumerate(users):
        s1 = [_relative(p, index.root) for p in user.session(1).genuine[:5]]
        s2 = [_relative(p, index.root) for p in user.session(2).genuine[:5]]
        for c_idx, combo in enumerate(enumerate_combinations(user)):
            enroll = [features(s1[i - 1]) for i in combo.session1_indices]
            enroll += [features(s2[i - 1]) for i in combo.session2_indices]
            seed = int(
                np.random.SeedSequence([cfg.seed, u_idx, c_idx]).generate_state(1)[0]
            )
            train_cfg = TrainConfig(
                max_iterations=cfg.train.max_iterations,
                loglik_relative_tolerance=cfg.train.loglik_relative_tolerance,
                variance_floor_factor=cfg.train.variance_floor_factor,
                variance_floor_min=cfg.train.variance_floor_min,
                seed=seed,
                kmeans_iterations=cfg.train.kmeans_iterations,
            )
            model, _ = fit_model(
                enroll, n_states=cfg.n_states, n_mixtures=cfg.n_mixtures, config=train_cfg
            )
            models[(user.user_id, combo)] = model

    rows: list[ScoreRow] = []
    failures: list[str] = []
    for trial in trial_set.trials:
        try:
            value = score(models[(trial.user_id, trial.combination)], features(trial.test_file))
            rows.append(
                ScoreRow(trial.user_id, trial.combination.label, trial.test_file, trial.label, value)
            )
        except Exception as exc:  # per-trial isolation: record and continue
            failures.append(f"{trial.user_id} {trial.combination.label} {trial.test_file}: {exc}")

    return ScoreSet(
        rows=rows,
        use_pressure=cfg.use_pressure,
        config_hash=_config_hash(cfg),
        dataset_hash=dataset_hash(index),
        failures=failures,
    )


def scores_csv_text(score_set: ScoreSet) -> str:
    out = std_io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["user", "combination", "test_file", "label", "t"])
    for r in score_set.rows:
        writer.writerow([r.user_id, r.combination, r.test_file, r.label, repr(r.score)])
    return out.getvalue()


def _det_csv_text(genuine: np.ndarray, impostor: np.ndarray) -> str:
    thresholds, far, frr = metrics.sweep_rates(genuine, impostor)
    points = metrics.det_points(genuine, impostor)
    out = std_io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["threshold", "far", "frr", "probit_far", "probit_frr"])
    for th, fa, fr, (pf, pr) in zip(thresholds, far, frr, points):
        writer.writerow([repr(th), repr(fa), repr(fr), repr(float(pf)), repr(float(pr))])
    return out.getvalue()


def report(score_sets: ScoreSet | Sequence[ScoreSet], out_dir: str | Path) -> dict[str, Path]:
    """Write scores, EER summary and DET-point CSVs for one or two runs
    (with and without pressure). Re-running on the same ScoreSet values is
    byte-identical."""
    sets: Iterable[ScoreSet] = (
        [score_sets] if isinstance(score_sets, ScoreSet) else list(score_sets)
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    eer_lines = []
    for score_set in sets:
        suffix = "" if score_set.use_pressure else "_no_pressure"
        pressure_tag = "on" if score_set.use_pressure else "off"
        scores_path = out_dir / f"scores{suffix}.csv"
        scores_path.write_text(scores_csv_text(score_set))
        written[f"scores{suffix}"] = scores_path

        genuine = score_set.scores(GENUINE)
        for label in (SKILLED, RANDOM):
            impostor = score_set.scores(label)
            result = metrics.compute_eer(genuine, impostor)
            eer_lines.append(
                f"EER({label}, pressure={pressure_tag}) = {result.eer * 100:.4f}%"
                f" @ threshold {result.threshold!r}"
            )
            det_path = out_dir / f"det_{label}{suffix}.csv"
            det_path.write_text(_det_csv_text(genuine, impostor))
            written[f"det_{label}{suffix}"] = det_path
        eer_lines.append(
            f"provenance: config={score_set.config_hash} dataset={score_set.dataset_hash}"
            f" trials={len(score_set.rows)} failures={len(score_set.failures)}"
        )
    eer_path = out_dir / "eer.txt"
    eer_path.write_text("\n".join(eer_lines) + "\n")
    written["eer"] = eer_path
    return written
