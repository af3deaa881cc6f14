"""Seeded synthetic signature data.

Each user is a template: spline control points (the signature's shape), a
base duration, a smooth velocity profile (how the pen speeds up and slows
down along the path), and a pressure profile. Rendering a sample draws the
template with seeded jitter; a skilled forgery renders the *target's*
template with a forger-seeded, deliberately larger distortion of timing and
pressure, so it gets the shape roughly right but the dynamics wrong.

Everything is a pure function of seeds: regenerating a dataset from the
same master seed is file-identical. Realism anchors are modest: sample
timing oscillates around a 7.6 ms mean period, pressure values concentrate
inside a band of roughly 60 levels, and trajectories are cubic splines, so
their frequency content stays in the low tens of hertz like real pen
movement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from .io import DatasetIndex, RawSample, RawSignature, scan_dataset, write_svc

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GenerationConfig:
    n_users: int = 20
    seed: int = 0
    # Intra-user jitter scales: anchor position (tablet units), duration and
    # velocity profile (relative), pressure level (pressure units).
    spatial_jitter: float = 6.0
    temporal_jitter: float = 0.05
    pressure_jitter: float = 4.0
    # Extra distortion applied to forgeries on top of intra-user jitter.
    forgery_degradation: float = 1.0
    # Raw sampling clock model.
    mean_period_ms: float = 7.6
    period_jitter_ms: float = 2.2

    def __post_init__(self) -> None:
        if self.n_users < 2:
            raise ValueError("need at least 2 users")
        for name in ("spatial_jitter", "temporal_jitter", "pressure_jitter",
                     "forgery_degradation", "period_jitter_ms"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.mean_period_ms <= 0:
            raise ValueError("mean_period_ms must be positive")


@dataclass(frozen=True)
class UserTemplate:
    seed: int
    anchors: np.ndarray
    base_duration: float
    pressure_level: float
    pressure_amplitude: float
    pressure_phase: float
    velocity_strength: float
    velocity_phase: float
    velocity_cycles: int

    def __post_init__(self) -> None:
        if len(self.anchors) < 4:
            raise ValueError("a template needs at least 4 control points")
        if not 1.0 <= self.base_duration <= 10.0:
            raise ValueError("base duration must lie in [1, 10] seconds")


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(e) & (2**63 - 1) for e in entropy]))


def user_seed(master_seed: int, user_index: int) -> int:
    """Stable per-user seed derived from the dataset master seed."""
    ss = np.random.SeedSequence([int(master_seed) & (2**63 - 1), int(user_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generate_user(seed: int) -> UserTemplate:
    """Deterministic template from a seed; distinct seeds give distinct
    shapes with probability one."""
    rng = _rng(seed, 0)
    n_anchors = int(rng.integers(8, 14))
    start = np.array([2300.0, 4000.0]) + rng.normal(0.0, 120.0, 2)
    steps = rng.normal(0.0, 1.0, (n_anchors - 1, 2)) * np.array([270.0, 170.0])
    anchors = np.vstack([start, start + np.cumsum(steps, axis=0)])
    return UserTemplate(
        seed=int(seed),
        anchors=anchors,
        base_duration=float(rng.uniform(1.6, 3.2)),
        pressure_level=float(rng.uniform(105.0, 175.0)),
        pressure_amplitude=float(rng.uniform(8.0, 20.0)),
        pressure_phase=float(rng.uniform(0.0, TWO_PI)),
        velocity_strength=float(rng.uniform(0.3, 0.6)),
        velocity_phase=float(rng.uniform(0.0, TWO_PI)),
        velocity_cycles=int(rng.integers(2, 4)),
    )


def _chord_parameter(anchors: np.ndarray) -> np.ndarray:
    lengths = np.maximum(np.linalg.norm(np.diff(anchors, axis=0), axis=1), 1e-6)
    s = np.concatenate([[0.0], np.cumsum(lengths)])
    return s / s[-1]


def _render(
    template: UserTemplate,
    rng: np.random.Generator,
    config: GenerationConfig,
    spatial: float,
    temporal: float,
    pressure_sigma: float,
    dynamics_warp: float = 0.0,
    shape_sigma: float = 0.0,
) -> RawSignature:
    """Draw the template once.

    Every perturbation is a unit normal draw multiplied by its scale, so
    zero scales reproduce the noise-free template bit for bit regardless of
    how the generator state advances.
    """
    anchors = (
        template.anchors
        + spatial * rng.normal(0.0, 1.0, template.anchors.shape)
        + shape_sigma * rng.normal(0.0, 1.0, template.anchors.shape)
    )
    duration = float(np.clip(
        template.base_duration
        * (1.0 + 0.5 * temporal * rng.normal() + 0.2 * dynamics_warp * rng.normal()),
        1.0, 10.0,
    ))
    strength = float(np.clip(
        template.velocity_strength
        + 0.3 * temporal * rng.normal()
        + 0.5 * dynamics_warp * rng.normal(),
        0.0, 0.9,
    ))
    phase = (
        template.velocity_phase
        + 2.0 * temporal * rng.normal()
        + 0.9 * dynamics_warp * rng.normal()
    )
    level = template.pressure_level + pressure_sigma * rng.normal()

    # Non-uniform sampling clock: oscillating period plus small noise.
    n = max(int(round(duration * 1000.0 / config.mean_period_ms)) + 1, 24)
    clock_phase = rng.uniform(0.0, TWO_PI)
    deltas = (
        config.mean_period_ms
        + config.period_jitter_ms * np.sin(TWO_PI * np.arange(n - 1) / 17.0 + clock_phase)
        + 0.15 * config.period_jitter_ms * rng.normal(0.0, 1.0, n - 1)
    )
    deltas = np.maximum(deltas, 1.0)  # keeps integer-ms timestamps strictly increasing
    t_ms = np.floor(np.concatenate([[0.0], np.cumsum(deltas)]) + 0.5).astype(int)

    tau = t_ms / t_ms[-1]
    cycles = template.velocity_cycles
    # Monotone time warp with fixed endpoints; strength < 1 keeps it monotone.
    u = tau + strength / (TWO_PI * cycles) * (
        np.sin(TWO_PI * cycles * tau + phase) - np.sin(phase)
    )
    spline = CubicSpline(_chord_parameter(anchors), anchors, axis=0)
    xy = spline(u)

    pressure = (
        level
        + template.pressure_amplitude * np.sin(TWO_PI * 2.0 * tau + template.pressure_phase)
        + 0.4 * pressure_sigma * rng.normal(0.0, 1.0, n)
    )
    p_int = np.clip(np.floor(pressure + 0.5), 0, 255).astype(int)
    x_int = np.floor(xy[:, 0] + 0.5).astype(int)
    y_int = np.floor(xy[:, 1] + 0.5).astype(int)

    # No source tag: the file format does not carry one, and leaving the
    # default keeps parse(write(sig)) == sig field-exact on rendered data.
    return RawSignature(
        tuple(
            RawSample(int(x), int(y), float(t), 1, pressure=int(p))
            for x, y, t, p in zip(x_int, y_int, t_ms, p_int)
        )
    )


def sample_genuine(
    template: UserTemplate, session: int, index: int, config: GenerationConfig
) -> RawSignature:
    """Render one genuine signature; the session index perturbs the jitter
    seed, giving inter-session variability."""
    rng = _rng(template.seed, 1, session, index)
    return _render(
        template, rng, config,
        spatial=config.spatial_jitter,
        temporal=config.temporal_jitter,
        pressure_sigma=config.pressure_jitter,
    )


def sample_forgery(
    target: UserTemplate, forger_seed, config: GenerationConfig
) -> RawSignature:
    """Render a skilled imitation of the target.

    The forger reproduces the shape closely (small extra anchor error) but
    distorts the dynamics: velocity profile, duration, and pressure habits
    scale with ``forgery_degradation``. Degradation zero reduces to a
    genuine rendering of the target.
    """
    entropy = (forger_seed,) if isinstance(forger_seed, int) else tuple(forger_seed)
    rng = _rng(target.seed, 2, *entropy)
    deg = config.forgery_degradation
    return _render(
        target, rng, config,
        spatial=config.spatial_jitter,
        temporal=config.temporal_jitter,
        pressure_sigma=config.pressure_jitter * (1.0 + deg),
        dynamics_warp=deg,
        shape_sigma=15.0 * deg,
    )


def forgers_of(user_index: int, n_users: int) -> list[int]:
    """The three users who forge this user's signature (the next three in a
    rotation, wrapping around)."""
    out = []
    for offset in (1, 2, 3):
        f = (user_index + offset) % n_users
        if f == user_index:
            f = (user_index + 1) % n_users
        out.append(f)
    return out


def generate_dataset(config: GenerationConfig, root: str | Path) -> DatasetIndex:
    """Write a conformant on-disk dataset and return its scan index.

    Layout per user: 3 sessions of 5 genuine signatures, plus 15 skilled
    forgeries produced in blocks of 5 by the next three users in the
    rotation. Regeneration from the same config is file-identical.
    """
    root = Path(root)
    templates = [generate_user(user_seed(config.seed, u)) for u in range(config.n_users)]
    for u, template in enumerate(templates):
        udir = root / f"user{u + 1:03d}"
        for session in (1, 2, 3):
            sdir = udir / f"session{session}"
            sdir.mkdir(parents=True, exist_ok=True)
            for index in range(1, 6):
                sig = sample_genuine(template, session, index, config)
                (sdir / f"g{index}.svc").write_text(write_svc(sig))
        fdir = udir / "forgeries"
        fdir.mkdir(parents=True, exist_ok=True)
        j = 1
        for forger_index in forgers_of(u, config.n_users):
            forger = templates[forger_index]
            for repetition in range(1, 6):
                sig = sample_forgery(template, (forger.seed, repetition), config)
                (fdir / f"f{j:02d}.svc").write_text(write_svc(sig))
                j += 1
    return scan_dataset(root)
