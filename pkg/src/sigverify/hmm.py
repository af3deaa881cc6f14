"""Left-to-right hidden Markov models with diagonal Gaussian mixture emissions.

Models always start in state 0 and may only self-loop or advance one state
("no skips"). Training is multi-sequence Baum-Welch; the matching score for
a test sequence is the Viterbi log-likelihood divided by the number of
samples, so longer signatures are not penalized.

All probability arithmetic runs in the log domain. Emission log-densities
are evaluated in matmul form (quadratic expanded around precomputed
per-component constants), which is what keeps scoring hundreds of thousands
of trials tractable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .signal import FeatureSequence

LOG_2PI = math.log(2.0 * math.pi)
MODEL_FORMAT = "sigverify-hmm"
MODEL_VERSION = 1


class HmmError(Exception):
    """Base class for model errors."""


class DimensionMismatchError(HmmError):
    """Sequence dimension does not match the model."""


class EmptyEnrollmentError(HmmError):
    """No enrollment sequences supplied."""


class NumericalFailureError(HmmError):
    """Non-finite likelihood; degenerate data or flooring misconfiguration."""


class VersionMismatchError(HmmError):
    """Serialized model has an unsupported version."""


class SchemaViolationError(HmmError):
    """Serialized model is truncated or structurally invalid."""


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 20
    loglik_relative_tolerance: float = 1e-5
    variance_floor_factor: float = 1e-2
    # Absolute lower bound so constant data dimensions still get a positive floor.
    variance_floor_min: float = 1e-8
    seed: int = 0
    kmeans_iterations: int = 10

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.loglik_relative_tolerance < 0:
            raise ValueError("loglik_relative_tolerance must be >= 0")


@dataclass
class SignatureModel:
    """Trained left-to-right GMM-HMM.

    Transitions and the initial distribution are kept in the log domain
    (forbidden entries are -inf); mixture weights, means and diagonal
    variances in the linear domain. ``metadata`` records training facts:
    iterations run, final log-likelihood, the variance floor used, and the
    requested vs effective mixture count.
    """

    n_states: int
    n_mixtures: int
    dim: int
    log_transitions: np.ndarray
    log_start: np.ndarray
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        """Check every structural invariant; raises ValueError on violation."""
        s, k, d = self.n_states, self.n_mixtures, self.dim
        if self.log_transitions.shape != (s, s):
            raise ValueError("transition matrix shape mismatch")
        if self.log_start.shape != (s,):
            raise ValueError("start distribution shape mismatch")
        if self.weights.shape != (s, k) or self.means.shape != (s, k, d):
            raise ValueError("mixture parameter shape mismatch")
        if self.variances.shape != (s, k, d):
            raise ValueError("variance shape mismatch")
        start = np.exp(self.log_start)
        if abs(start[0] - 1.0) > 1e-12 or np.any(start[1:] > 1e-12):
            raise ValueError("model must start in state 0 with probability 1")
        trans = np.exp(self.log_transitions)
        for i in range(s):
            for j in range(s):
                if j not in (i, i + 1) and trans[i, j] != 0.0:
                    raise ValueError(f"forbidden transition {i}->{j} has mass")
            if abs(trans[i].sum() - 1.0) > 1e-12:
                raise ValueError(f"transition row {i} does not sum to 1")
        if np.any(np.abs(self.weights.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("mixture weights do not sum to 1")
        if np.any(self.weights < 0):
            raise ValueError("negative mixture weight")
        floor = np.asarray(self.metadata.get("variance_floor", 0.0))
        if np.any(self.variances <= 0) or np.any(self.variances < floor * (1 - 1e-12)):
            raise ValueError("variance below floor")
        if not np.isfinite(self.means).all():
            raise ValueError("non-finite mean")


def _check_dim(model: SignatureModel, seq: np.ndarray) -> np.ndarray:
    arr = np.asarray(seq, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"sequence dimension {arr.shape} does not match model dim {model.dim}"
        )
    return arr


def _as_array(seq) -> np.ndarray:
    if isinstance(seq, FeatureSequence):
        return seq.channels
    return np.asarray(seq, dtype=float)


def _emission_tables(model: SignatureModel):
    """Precompute matmul-form coefficients of the component log densities."""
    prec = 1.0 / model.variances  # (S,K,D)
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)  # -inf for dead components
    const = log_w - 0.5 * (
        model.dim * LOG_2PI
        + np.log(model.variances).sum(axis=2)
        + (model.means**2 * prec).sum(axis=2)
    )
    return prec, model.means * prec, const


def _component_loglik(seq: np.ndarray, tables) -> np.ndarray:
    """(T, S, K) log of weight times Gaussian density per frame/state/component."""
    prec, lin, const = tables
    s, k, d = prec.shape
    quad = (seq * seq) @ prec.reshape(s * k, d).T
    cross = seq @ lin.reshape(s * k, d).T
    comp = const.reshape(1, s * k) + cross - 0.5 * quad
    return comp.reshape(len(seq), s, k)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    mx = a.max(axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = safe + np.log(np.exp(a - safe).sum(axis=axis, keepdims=True))
    out = np.where(np.isfinite(mx), out, -np.inf)
    return np.squeeze(out, axis=axis)


def _state_loglik(seq: np.ndarray, tables) -> np.ndarray:
    return _logsumexp(_component_loglik(seq, tables), axis=2)


def _ladd(x: float, y: float) -> float:
    if x == -math.inf:
        return y
    if y == -math.inf:
        return x
    if x < y:
        x, y = y, x
    return x + math.log1p(math.exp(y - x))


def _forward(log_start, log_trans, log_b) -> tuple[np.ndarray, float]:
    """Log-domain forward lattice, exploiting the left-to-right band:
    state 0 only feeds itself (a plain cumulative sum) and each later state
    feeds only from itself and its predecessor (one scalar scan each)."""
    t_len, n_states = log_b.shape
    alpha = np.empty_like(log_b)
    a00 = log_trans[0, 0]
    if a00 == -math.inf:
        alpha[0, 0] = log_start[0] + log_b[0, 0]
        alpha[1:, 0] = -math.inf
    else:
        alpha[:, 0] = log_start[0] + np.cumsum(log_b[:, 0]) + a00 * np.arange(t_len)
    for j in range(1, n_states):
        a_in = log_trans[j - 1, j]
        a_self = log_trans[j, j]
        prev_col = alpha[:, j - 1]
        bj = log_b[:, j]
        col = np.empty(t_len)
        c = log_start[j] + bj[0]
        col[0] = c
        for t in range(1, t_len):
            c = _ladd(prev_col[t - 1] + a_in, c + a_self) + bj[t]
            col[t] = c
        alpha[:, j] = col
    loglik = alpha[-1, 0]
    for j in range(1, n_states):
        loglik = _ladd(loglik, alpha[-1, j])
    return alpha, float(loglik)


def _backward(log_trans, log_b) -> np.ndarray:
    """Log-domain backward lattice for the same band structure: the last
    state only feeds itself (reverse cumulative sum), every earlier state
    sees itself and its successor."""
    t_len, n_states = log_b.shape
    beta = np.empty_like(log_b)
    last = n_states - 1
    a_last = log_trans[last, last]
    if a_last == -math.inf:
        beta[:, last] = -math.inf
        beta[-1, last] = 0.0
    else:
        contrib = a_last + log_b[:, last]
        tail = np.concatenate([np.cumsum(contrib[::-1])[::-1][1:], [0.0]])
        beta[:, last] = tail
    for j in range(last - 1, -1, -1):
        a_self = log_trans[j, j]
        a_out = log_trans[j, j + 1]
        next_col = beta[:, j + 1]
        bj = log_b[:, j]
        bn = log_b[:, j + 1]
        col = np.empty(t_len)
        c = 0.0
        col[-1] = c
        for t in range(t_len - 2, -1, -1):
            c = _ladd(a_self + bj[t + 1] + c, a_out + bn[t + 1] + next_col[t + 1])
            col[t] = c
        beta[:, j] = col
    return beta


def forward_loglik(model: SignatureModel, seq) -> float:
    """log p(sequence | model) by the scaled forward recursion."""
    arr = _check_dim(model, _as_array(seq))
    log_b = _state_loglik(arr, _emission_tables(model))
    _, loglik = _forward(model.log_start, model.log_transitions, log_b)
    return loglik


def viterbi_loglik(model: SignatureModel, seq) -> tuple[float, np.ndarray]:
    """Log-likelihood of the single best state path, plus that path.

    Ties break toward the lower state index. The returned path starts in
    state 0 and never steps back or skips (left-to-right topology).
    """
    arr = _check_dim(model, _as_array(seq))
    log_b = _state_loglik(arr, _emission_tables(model))
    t_len, n_states = log_b.shape
    # Scalar DP: scoring dominates protocol runtime and tiny-state models
    # are faster in plain Python than through numpy dispatch.
    trans = model.log_transitions.tolist()
    rows = log_b.tolist()
    delta = [model.log_start[s] + rows[0][s] for s in range(n_states)]
    back = np.zeros((t_len, n_states), dtype=np.int64)
    for t in range(1, t_len):
        row = rows[t]
        prev = delta
        delta = []
        bt = back[t]
        for j in range(n_states):
            best = -math.inf
            arg = 0
            for i in range(n_states):
                c = prev[i] + trans[i][j]
                if c > best:
                    best = c
                    arg = i
            delta.append(best + row[j])
            bt[j] = arg
    last = 0
    best = delta[0]
    for s in range(1, n_states):
        if delta[s] > best:
            best = delta[s]
            last = s
    path = np.empty(t_len, dtype=np.int64)
    path[-1] = last
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return float(best), path


def score(model: SignatureModel, seq) -> float:
    """Similarity of a test sequence to the model: Viterbi log-likelihood
    per sample. Higher means more similar."""
    arr = _check_dim(model, _as_array(seq))
    if len(arr) == 0:
        raise DimensionMismatchError("empty sequence")
    loglik, _ = viterbi_loglik(model, arr)
    return loglik / len(arr)


def _kmeans(data: np.ndarray, k: int, rng: np.random.Generator, iterations: int):
    """Deterministic k-means with distance-weighted seeding.

    Empty clusters keep their seed center; callers give them zero weight.
    """
    n = len(data)
    centers = np.empty((k, data.shape[1]))
    centers[0] = data[int(rng.integers(n))]
    d2 = ((data - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[j] = data[idx]
        d2 = np.minimum(d2, ((data - centers[j]) ** 2).sum(axis=1))
    labels = np.zeros(n, dtype=int)
    for _ in range(iterations):
        dists = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = dists.argmin(axis=1)
        for j in range(k):
            members = data[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    dists = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = dists.argmin(axis=1)
    return centers, labels


def effective_mixtures(total_frames: int, n_states: int, n_mixtures: int) -> int:
    """Halve the mixture count until there are at least 4 frames per
    state-component, stopping at 1."""
    k = n_mixtures
    while k > 1 and total_frames < 4 * n_states * k:
        k //= 2
    return k


def init_model(
    seqs: Sequence,
    n_states: int = 2,
    n_mixtures: int = 32,
    config: TrainConfig | None = None,
) -> SignatureModel:
    """Initialize a left-to-right model from enrollment sequences.

    Frames of each sequence are split into ``n_states`` contiguous equal
    blocks (uniform segmentation); a seeded k-means over each state's pooled
    block seeds its mixtures. Transitions start at self 0.5 / next 0.5 with
    the last state absorbing.
    """
    cfg = config or TrainConfig()
    arrays = [_as_array(s) for s in seqs]
    if not arrays:
        raise EmptyEnrollmentError("no enrollment sequences")
    dim = arrays[0].shape[1]
    for a in arrays:
        if a.ndim != 2 or a.shape[1] != dim:
            raise DimensionMismatchError("enrollment sequences must share one dimension")

    total = sum(len(a) for a in arrays)
    k = effective_mixtures(total, n_states, n_mixtures)

    pooled = np.vstack(arrays)
    global_var = pooled.var(axis=0)
    floor = np.maximum(cfg.variance_floor_factor * global_var, cfg.variance_floor_min)

    rng = np.random.default_rng(cfg.seed)
    weights = np.empty((n_states, k))
    means = np.empty((n_states, k, dim))
    variances = np.empty((n_states, k, dim))
    for s in range(n_states):
        blocks = []
        for a in arrays:
            bounds = (np.arange(n_states + 1) * len(a)) // n_states
            blocks.append(a[bounds[s]:bounds[s + 1]])
        frames = np.vstack([b for b in blocks if len(b)])
        if not len(frames):
            frames = pooled
        centers, labels = _kmeans(frames, k, rng, cfg.kmeans_iterations)
        counts = np.bincount(labels, minlength=k)
        weights[s] = counts / counts.sum()
        means[s] = centers
        for j in range(k):
            members = frames[labels == j]
            var = members.var(axis=0) if len(members) > 1 else global_var
            variances[s, j] = np.maximum(var, floor)

    with np.errstate(divide="ignore"):
        trans = np.zeros((n_states, n_states))
        for i in range(n_states):
            if i + 1 < n_states:
                trans[i, i] = 0.5
                trans[i, i + 1] = 0.5
            else:
                trans[i, i] = 1.0
        log_trans = np.log(trans)
        log_start = np.log(np.eye(n_states)[0])

    return SignatureModel(
        n_states=n_states,
        n_mixtures=k,
        dim=dim,
        log_transitions=log_trans,
        log_start=log_start,
        weights=weights,
        means=means,
        variances=variances,
        metadata={
            "iterations": 0,
            "final_loglik": None,
            "variance_floor": floor.tolist(),
            "n_mixtures_requested": n_mixtures,
            "n_mixtures_effective": k,
            "seed": cfg.seed,
        },
    )


def baum_welch(
    model: SignatureModel,
    seqs: Sequence,
    config: TrainConfig | None = None,
) -> tuple[SignatureModel, list[float]]:
    """Multi-sequence EM re-estimation.

    Returns the re-estimated model and the per-iteration total
    log-likelihood trace (each entry evaluates the model entering that
    iteration, so the trace is non-decreasing). Stops at ``max_iterations``
    or when the relative gain drops below the configured tolerance.
    Structural zeros of the topology are preserved and variances re-floored
    every iteration.
    """
    cfg = config or TrainConfig()
    arrays = [_check_dim(model, _as_array(s)) for s in seqs]
    if not arrays:
        raise EmptyEnrollmentError("no training sequences")

    floor = np.asarray(model.metadata.get("variance_floor", ()), dtype=float)
    if floor.size != model.dim:
        pooled = np.vstack(arrays)
        floor = np.maximum(
            cfg.variance_floor_factor * pooled.var(axis=0), cfg.variance_floor_min
        )

    s_n, k_n, d_n = model.n_states, model.n_mixtures, model.dim
    log_trans = model.log_transitions.copy()
    weights = model.weights.copy()
    means = model.means.copy()
    variances = model.variances.copy()
    log_start = model.log_start.copy()

    trace: list[float] = []
    iterations = 0
    for _ in range(cfg.max_iterations):
        prec = 1.0 / variances
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        const = log_w - 0.5 * (
            d_n * LOG_2PI + np.log(variances).sum(axis=2) + (means**2 * prec).sum(axis=2)
        )
        tables = (prec, means * prec, const)

        trans_acc = np.zeros((s_n, s_n))
        resp_sum = np.zeros((s_n, k_n))
        obs_sum = np.zeros((s_n, k_n, d_n))
        obs2_sum = np.zeros((s_n, k_n, d_n))
        total_ll = 0.0

        for arr in arrays:
            comp = _component_loglik(arr, tables)
            log_b = _logsumexp(comp, axis=2)
            alpha, ll = _forward(log_start, log_trans, log_b)
            if not math.isfinite(ll):
                raise NumericalFailureError(f"non-finite sequence log-likelihood {ll}")
            beta = _backward(log_trans, log_b)
            log_gamma = alpha + beta - ll
            gamma = np.exp(log_gamma)

            m = alpha[:-1, :, None] + log_trans[None, :, :] \
                + (log_b[1:] + beta[1:])[:, None, :] - ll
            trans_acc += np.exp(m).sum(axis=0)

            with np.errstate(invalid="ignore"):
                log_resp = log_gamma[:, :, None] + comp - log_b[:, :, None]
            resp = np.exp(np.where(np.isnan(log_resp), -np.inf, log_resp))
            resp_sum += resp.sum(axis=0)
            obs_sum += np.einsum("tsk,td->skd", resp, arr)
            obs2_sum += np.einsum("tsk,td->skd", resp, arr * arr)
            total_ll += ll

        trace.append(total_ll)
        # Zero tolerance disables early stopping: run exactly max_iterations.
        if (
            len(trace) > 1
            and cfg.loglik_relative_tolerance > 0
            and trace[-1] - trace[-2] < cfg.loglik_relative_tolerance * abs(trace[-2])
        ):
            break

        # M-step. Rows and components with no responsibility mass keep their
        # previous parameters instead of dividing by zero.
        for i in range(s_n):
            row_mass = trans_acc[i].sum()
            if row_mass > 0:
                with np.errstate(divide="ignore"):
                    log_trans[i] = np.log(trans_acc[i] / row_mass)
        for s in range(s_n):
            state_mass = resp_sum[s].sum()
            if state_mass <= 0:
                continue
            weights[s] = resp_sum[s] / state_mass
            for j in range(k_n):
                mass = resp_sum[s, j]
                if mass <= 1e-12:
                    continue
                mu = obs_sum[s, j] / mass
                var = obs2_sum[s, j] / mass - mu * mu
                means[s, j] = mu
                variances[s, j] = np.maximum(var, floor)
        iterations += 1

    metadata = dict(model.metadata)
    metadata["variance_floor"] = floor.tolist()
    metadata["iterations"] = metadata.get("iterations", 0) + iterations
    metadata["final_loglik"] = trace[-1]
    trained = SignatureModel(
        n_states=s_n,
        n_mixtures=k_n,
        dim=d_n,
        log_transitions=log_trans,
        log_start=log_start,
        weights=weights,
        means=means,
        variances=variances,
        metadata=metadata,
    )
    return trained, trace


def fit_model(
    seqs: Sequence,
    n_states: int = 2,
    n_mixtures: int = 32,
    config: TrainConfig | None = None,
) -> tuple[SignatureModel, list[float]]:
    """Initialize and train in one step."""
    model = init_model(seqs, n_states=n_states, n_mixtures=n_mixtures, config=config)
    return baum_welch(model, seqs, config=config)


def _encode_log(values: np.ndarray):
    return [[None if x == -math.inf else float(x) for x in row] for row in values]


def serialize_model(model: SignatureModel) -> str:
    """Lossless, versioned text serialization.

    The document is JSON; log-domain numbers use null for log(0) so the
    output stays strictly valid JSON, and floats rely on shortest
    round-trip decimal notation (at most 17 significant digits).
    """
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_states": model.n_states,
        "n_mixtures": model.n_mixtures,
        "dim": model.dim,
        "log_start": _encode_log(model.log_start[None, :])[0],
        "log_transitions": _encode_log(model.log_transitions),
        "states": [
            {
                "weights": model.weights[s].tolist(),
                "means": model.means[s].tolist(),
                "variances": model.variances[s].tolist(),
            }
            for s in range(model.n_states)
        ],
        "metadata": model.metadata,
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def _decode_log(values, shape) -> np.ndarray:
    arr = np.array(
        [[-math.inf if x is None else float(x) for x in row] for row in values],
        dtype=float,
    )
    if arr.shape != shape:
        raise SchemaViolationError(f"expected shape {shape}, got {arr.shape}")
    return arr


def deserialize_model(data: bytes | str) -> SignatureModel:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError(f"not a valid model document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise SchemaViolationError("unrecognized document format")
    if doc.get("version") != MODEL_VERSION:
        raise VersionMismatchError(f"unsupported model version {doc.get('version')!r}")
    try:
        s, k, d = int(doc["n_states"]), int(doc["n_mixtures"]), int(doc["dim"])
        log_start = _decode_log([doc["log_start"]], (1, s))[0]
        log_trans = _decode_log(doc["log_transitions"], (s, s))
        states = doc["states"]
        if len(states) != s:
            raise SchemaViolationError("state list length mismatch")
        weights = np.array([st["weights"] for st in states], dtype=float)
        means = np.array([st["means"] for st in states], dtype=float)
        variances = np.array([st["variances"] for st in states], dtype=float)
        metadata = doc.get("metadata", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolationError(f"malformed model document: {exc}") from exc
    if weights.shape != (s, k) or means.shape != (s, k, d) or variances.shape != (s, k, d):
        raise SchemaViolationError("mixture parameter shape mismatch")
    model = SignatureModel(
        n_states=s,
        n_mixtures=k,
        dim=d,
        log_transitions=log_trans,
        log_start=log_start,
        weights=weights,
        means=means,
        variances=variances,
        metadata=metadata,
    )
    try:
        model.validate()
    except ValueError as exc:
        raise SchemaViolationError(f"model violates invariants: {exc}") from exc
    return model
