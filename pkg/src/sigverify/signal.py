"""Pen-trajectory preprocessing and dynamic feature extraction.

The pipeline turns a raw, non-uniformly sampled signature into a whitened
feature matrix:

1. resample x, y, pressure onto a fixed-rate grid by linear interpolation
   (button by nearest-previous sample),
2. subtract the trajectory's center of mass and rotate so the average path
   tangent angle becomes zero,
3. derive per-sample dynamic functions: tangent angle, speed, log curvature
   radius, acceleration magnitude, plus first derivatives of every channel,
4. whiten each channel to zero mean and unit standard deviation.

Rigid motion of the input (translation plus rotation) cancels in steps 2-4,
so downstream scores are invariant to where and at what angle a signature
was written.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import RawSignature


class SignalError(Exception):
    """Base class for preprocessing errors."""


class DegenerateDurationError(SignalError):
    """Input spans less than one resampling period."""


class DegenerateTrajectoryError(SignalError):
    """All points coincide; the tangent direction is undefined."""


class TooShortError(SignalError):
    """Fewer samples than the derivative stencil needs."""


CHANNELS_WITH_PRESSURE = (
    "x", "y", "p", "theta", "v", "rho", "a",
    "dx", "dy", "dp", "dtheta", "dv", "drho", "da",
)
CHANNELS_WITHOUT_PRESSURE = (
    "x", "y", "theta", "v", "rho", "a",
    "dx", "dy", "dtheta", "dv", "drho", "da",
)


def channel_names(use_pressure: bool) -> tuple[str, ...]:
    return CHANNELS_WITH_PRESSURE if use_pressure else CHANNELS_WITHOUT_PRESSURE


@dataclass(frozen=True)
class PipelineConfig:
    rate: float = 100.0
    use_pressure: bool = True
    # Curvature radius is clamped to this band (tablet units) before the log.
    radius_min: float = 1e-6
    radius_max: float = 1e6
    # Channels whose standard deviation falls below this whiten to all zeros.
    std_floor: float = 1e-12


@dataclass(frozen=True)
class UniformSignature:
    """Signature channels on a fixed-period grid (period in seconds)."""

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    button: np.ndarray
    period: float

    def __post_init__(self) -> None:
        n = len(self.x)
        if n < 2 or any(len(c) != n for c in (self.y, self.p, self.button)):
            raise ValueError("channels must have equal length >= 2")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def n_samples(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class FeatureSequence:
    """n_samples x n_channels feature matrix with named columns."""

    channels: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.channels.ndim != 2 or self.channels.shape[1] != len(self.names):
            raise ValueError("channel matrix does not match channel names")

    @property
    def n_samples(self) -> int:
        return self.channels.shape[0]

    @property
    def dim(self) -> int:
        return self.channels.shape[1]


def resample_uniform(sig: RawSignature, rate: float = 100.0) -> UniformSignature:
    """Resample onto a fixed grid starting at the first input timestamp.

    x, y and pressure are linearly interpolated between bracketing input
    samples; button is a step signal and takes the nearest previous value.
    The grid never extends past the last input timestamp.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    t = np.array([s.t for s in sig.samples], dtype=float)
    step_ms = 1000.0 / rate
    span = t[-1] - t[0]
    n = int(np.floor(span / step_ms + 1e-9)) + 1
    if n < 2:
        raise DegenerateDurationError(
            f"duration {span} ms is shorter than one {step_ms} ms period"
        )
    grid = t[0] + step_ms * np.arange(n)

    xs = np.array([s.x for s in sig.samples], dtype=float)
    ys = np.array([s.y for s in sig.samples], dtype=float)
    ps = np.array([s.pressure for s in sig.samples], dtype=float)
    buttons = np.array([s.button for s in sig.samples], dtype=int)

    previous = np.searchsorted(t, grid, side="right") - 1
    return UniformSignature(
        x=np.interp(grid, t, xs),
        y=np.interp(grid, t, ys),
        p=np.interp(grid, t, ps),
        button=buttons[np.clip(previous, 0, len(t) - 1)],
        period=1.0 / rate,
    )


def _derivative(values: np.ndarray, dt: float) -> np.ndarray:
    # Central differences, one-sided at the endpoints.
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * dt)
    out[0] = (v[1] - v[0]) / dt
    out[-1] = (v[-1] - v[-2]) / dt
    return out


def average_tangent_angle(x: np.ndarray, y: np.ndarray, period: float) -> float:
    """Circular mean of the path tangent angle over moving samples.

    The circular mean (atan2 of summed sines and cosines) avoids the 2-pi
    wrap artifacts of an arithmetic mean. Samples with zero speed carry no
    direction and are excluded; the exclusion set is rotation-invariant, so
    re-running after rotation alignment yields exactly zero.
    """
    dx = _derivative(x, period)
    dy = _derivative(y, period)
    speed = np.hypot(dx, dy)
    moving = speed > 0
    if not moving.any():
        raise DegenerateTrajectoryError("all points coincide, tangent angle undefined")
    angles = np.arctan2(dy[moving], dx[moving])
    return float(np.arctan2(np.sin(angles).sum(), np.cos(angles).sum()))


def center_and_rotate(sig: UniformSignature) -> UniformSignature:
    """Subtract the center of mass, then rotate the trajectory so the
    average path tangent angle is zero. Pressure and button pass through."""
    if sig.n_samples < 3:
        raise TooShortError("need at least 3 samples to estimate the tangent angle")
    xc = sig.x - sig.x.mean()
    yc = sig.y - sig.y.mean()
    angle = average_tangent_angle(xc, yc, sig.period)
    c, s = np.cos(angle), np.sin(angle)
    return UniformSignature(
        x=c * xc + s * yc,
        y=-s * xc + c * yc,
        p=sig.p.copy(),
        button=sig.button.copy(),
        period=sig.period,
    )


def extract_functions(
    sig: UniformSignature,
    use_pressure: bool = True,
    radius_min: float = 1e-6,
    radius_max: float = 1e6,
) -> FeatureSequence:
    """Derive the dynamic function set from a centered, rotated signature.

    Per sample: tangent angle theta = atan2(dy, dx), speed v, log curvature
    radius rho = ln(v / |dtheta|) clamped to [ln(radius_min), ln(radius_max)],
    and acceleration magnitude a = sqrt(dv^2 + (v*dtheta)^2). The returned
    matrix holds x, y, (p,) theta, v, rho, a followed by the first derivative
    of each in the same order. Theta's derivative is taken on the unwrapped
    angle so direction wraps do not spike it.
    """
    if sig.n_samples < 3:
        raise TooShortError("need at least 3 samples for central differences")
    dt = sig.period
    dx = _derivative(sig.x, dt)
    dy = _derivative(sig.y, dt)
    theta = np.arctan2(dy, dx)
    v = np.hypot(dx, dy)
    dtheta = _derivative(np.unwrap(theta), dt)
    dv = _derivative(v, dt)
    with np.errstate(divide="ignore", invalid="ignore"):
        radius = v / np.abs(dtheta)
    # 0/0 means a stationary sample: curvature is undefined, treat as straight.
    radius = np.where(np.isnan(radius), radius_max, radius)
    rho = np.log(np.clip(radius, radius_min, radius_max))
    accel = np.hypot(dv, v * dtheta)

    base = [sig.x, sig.y, sig.p, theta, v, rho, accel]
    derived = [dx, dy, _derivative(sig.p, dt), dtheta, dv,
               _derivative(rho, dt), _derivative(accel, dt)]
    if not use_pressure:
        del base[2], derived[2]
    return FeatureSequence(
        channels=np.column_stack(base + derived),
        names=channel_names(use_pressure),
    )


def whiten(fs: FeatureSequence, std_floor: float = 1e-12) -> FeatureSequence:
    """Normalize each channel to zero mean and unit (population) standard
    deviation. Constant channels carry no information and map to zeros."""
    mean = fs.channels.mean(axis=0)
    std = fs.channels.std(axis=0)
    degenerate = std <= std_floor
    safe = np.where(degenerate, 1.0, std)
    out = (fs.channels - mean) / safe
    out[:, degenerate] = 0.0
    return FeatureSequence(channels=out, names=fs.names)


def pipeline(sig: RawSignature, config: PipelineConfig | None = None) -> FeatureSequence:
    """Full preprocessing chain: resample, center and rotate, extract
    dynamic functions, whiten."""
    cfg = config or PipelineConfig()
    uniform = resample_uniform(sig, rate=cfg.rate)
    aligned = center_and_rotate(uniform)
    features = extract_functions(
        aligned,
        use_pressure=cfg.use_pressure,
        radius_min=cfg.radius_min,
        radius_max=cfg.radius_max,
    )
    return whiten(features, std_floor=cfg.std_floor)
