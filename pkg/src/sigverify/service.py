"""HTTP verification service: enroll a user from 5 signatures (3 in session
1, 2 in session 2), then verify live submissions against their model.

Persistence is one directory per user holding the raw enrollment files, the
serialized model, a small metadata file and an append-only decision log, so
the store is transparent and diff-able. Models are immutable once trained:
restarting the service reproduces scores exactly.

The default accept threshold is the random-forgery equal-error operating
point of a bundled seeded synthetic calibration run (see
``compute_default_threshold``); deployments and individual users can
override it.
"""

from __future__ import annotations

import json
import re
import tempfile
import threading
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .evaluation import GENUINE, RANDOM, ProtocolConfig, run_protocol
from .hmm import TrainConfig, deserialize_model, fit_model, score, serialize_model
from .io import SvcError, parse_svc
from .metrics import compute_eer
from .signal import PipelineConfig, SignalError, pipeline
from .synth import GenerationConfig, generate_dataset

SESSION_QUOTAS = {1: 3, 2: 2}

# Operating point frozen from compute_default_threshold(); regenerate with
# the same arguments to reproduce it (the run is fully seeded).
CALIBRATION_USERS = 6
CALIBRATION_SEED = 101
DEFAULT_THRESHOLD = -12.298890871046108


class ServiceError(Exception):
    """Base class for store/service errors."""


class InvalidUserIdError(ServiceError):
    pass


class UnknownUserError(ServiceError):
    pass


class NotTrainedError(ServiceError):
    pass


class QuotaExceededError(ServiceError):
    pass


class AlreadyTrainedError(ServiceError):
    pass


_USER_ID = re.compile(r"^[A-Za-z0-9_-]{1,64}$")


def compute_default_threshold(
    n_users: int = CALIBRATION_USERS, seed: int = CALIBRATION_SEED
) -> float:
    """Random-forgery EER threshold of a seeded synthetic calibration run.

    Deterministic: the same arguments always yield the same value (this is
    how DEFAULT_THRESHOLD was produced).
    """
    with tempfile.TemporaryDirectory() as tmp:
        index = generate_dataset(GenerationConfig(n_users=n_users, seed=seed), tmp)
        score_set = run_protocol(index, ProtocolConfig())
    result = compute_eer(score_set.scores(GENUINE), score_set.scores(RANDOM))
    return result.threshold


@dataclass
class UserStatus:
    user_id: str
    state: str
    counts: dict
    trained: bool
    model: dict | None

    def as_dict(self) -> dict:
        out = {
            "user_id": self.user_id,
            "state": self.state,
            "counts": self.counts,
            "trained": self.trained,
        }
        if self.model is not None:
            out["model"] = self.model
        return out


class UserStore:
    """Filesystem-backed enrollment state and models.

    Per-user operations are serialized by a per-user lock; operations on
    different users are fully independent. Model parameters never leave the
    store through status responses.
    """

    def __init__(
        self,
        root: str | Path,
        default_threshold: float = DEFAULT_THRESHOLD,
        use_pressure: bool = True,
        n_states: int = 2,
        n_mixtures: int = 32,
        train_config: TrainConfig | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.default_threshold = default_threshold
        self.pipeline_config = PipelineConfig(use_pressure=use_pressure)
        self.n_states = n_states
        self.n_mixtures = n_mixtures
        self.train_config = train_config or TrainConfig()
        self._models: dict[str, object] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock(self, user_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(user_id, threading.Lock())

    def _udir(self, user_id: str) -> Path:
        if not _USER_ID.match(user_id):
            raise InvalidUserIdError(
                "user id must be 1-64 characters of letters, digits, '-' or '_'"
            )
        return self.root / user_id

    @staticmethod
    def _enroll_files(udir: Path, session: int) -> list[Path]:
        return sorted(udir.glob(f"s{session}_*.svc"))

    def _meta_path(self, udir: Path) -> Path:
        return udir / "meta.json"

    def _read_meta(self, udir: Path) -> dict:
        path = self._meta_path(udir)
        if path.exists():
            return json.loads(path.read_text())
        return {}

    def _write_meta(self, udir: Path, meta: dict) -> None:
        meta["updated"] = time.time()
        tmp = udir / "meta.json.tmp"
        tmp.write_text(json.dumps(meta, indent=1) + "\n")
        tmp.replace(self._meta_path(udir))

    def status(self, user_id: str) -> UserStatus:
        udir = self._udir(user_id)
        if not udir.is_dir():
            raise UnknownUserError(f"unknown user {user_id!r}")
        meta = self._read_meta(udir)
        trained = (udir / "model.json").exists()
        counts = {
            f"session{s}": {"have": len(self._enroll_files(udir, s)), "quota": q}
            for s, q in SESSION_QUOTAS.items()
        }
        model_info = None
        if trained:
            training = meta.get("training", {})
            model_info = {
                "dim": training.get("dim"),
                "n_states": training.get("n_states"),
                "n_mixtures": training.get("n_mixtures"),
                "iterations": training.get("iterations"),
            }
        return UserStatus(
            user_id=user_id,
            state="trained" if trained else "collecting",
            counts=counts,
            trained=trained,
            model=model_info,
        )

    def _train(self, udir: Path, user_id: str, meta: dict) -> None:
        files = self._enroll_files(udir, 1) + self._enroll_files(udir, 2)
        sequences = [pipeline(parse_svc(f.read_bytes()), self.pipeline_config) for f in files]
        seed = zlib.crc32(user_id.encode())
        cfg = self.train_config
        train_cfg = TrainConfig(
            max_iterations=cfg.max_iterations,
            loglik_relative_tolerance=cfg.loglik_relative_tolerance,
            variance_floor_factor=cfg.variance_floor_factor,
            variance_floor_min=cfg.variance_floor_min,
            seed=seed,
            kmeans_iterations=cfg.kmeans_iterations,
        )
        model, _ = fit_model(
            sequences, n_states=self.n_states, n_mixtures=self.n_mixtures, config=train_cfg
        )
        tmp = udir / "model.json.tmp"
        tmp.write_text(serialize_model(model))
        tmp.replace(udir / "model.json")
        self._models[user_id] = model
        meta["state"] = "trained"
        meta["training"] = {
            "dim": model.dim,
            "n_states": model.n_states,
            "n_mixtures": model.n_mixtures,
            "iterations": model.metadata.get("iterations"),
            "final_loglik": model.metadata.get("final_loglik"),
        }

    def enroll(self, user_id: str, session: int, svc_text: str) -> UserStatus:
        if session not in SESSION_QUOTAS:
            raise QuotaExceededError(f"session must be one of {sorted(SESSION_QUOTAS)}")
        udir = self._udir(user_id)
        with self._lock(user_id):
            udir.mkdir(parents=True, exist_ok=True)
            meta = self._read_meta(udir)
            meta.setdefault("user_id", user_id)
            meta.setdefault("created", time.time())
            if (udir / "model.json").exists():
                raise AlreadyTrainedError(f"user {user_id!r} is already trained; reset first")
            have = len(self._enroll_files(udir, session))
            if have >= SESSION_QUOTAS[session]:
                raise QuotaExceededError(
                    f"session {session} already has {have} of {SESSION_QUOTAS[session]} signatures"
                )
            # Parse and run the pipeline now so unusable payloads are
            # rejected before they are stored.
            pipeline(parse_svc(svc_text), self.pipeline_config)
            (udir / f"s{session}_{have + 1}.svc").write_text(
                svc_text if svc_text.endswith("\n") else svc_text + "\n"
            )
            complete = all(
                len(self._enroll_files(udir, s)) >= q for s, q in SESSION_QUOTAS.items()
            )
            if complete:
                self._train(udir, user_id, meta)
            else:
                meta["state"] = "collecting"
            self._write_meta(udir, meta)
        return self.status(user_id)

    def _load_model(self, user_id: str, udir: Path):
        model = self._models.get(user_id)
        if model is None:
            model_path = udir / "model.json"
            if not model_path.exists():
                raise NotTrainedError(f"user {user_id!r} has no trained model yet")
            model = deserialize_model(model_path.read_text())
            self._models[user_id] = model
        return model

    def threshold_for(self, user_id: str) -> float:
        udir = self._udir(user_id)
        meta = self._read_meta(udir) if udir.is_dir() else {}
        override = meta.get("threshold")
        return float(override) if override is not None else self.default_threshold

    def set_threshold(self, user_id: str, threshold: float | None) -> None:
        udir = self._udir(user_id)
        if not udir.is_dir():
            raise UnknownUserError(f"unknown user {user_id!r}")
        with self._lock(user_id):
            meta = self._read_meta(udir)
            meta["threshold"] = threshold
            self._write_meta(udir, meta)

    def verify(self, user_id: str, svc_text: str) -> dict:
        udir = self._udir(user_id)
        if not udir.is_dir():
            raise UnknownUserError(f"unknown user {user_id!r}")
        with self._lock(user_id):
            model = self._load_model(user_id, udir)
            cfg = self.pipeline_config
            if model.dim != (14 if cfg.use_pressure else 12):
                cfg = PipelineConfig(rate=cfg.rate, use_pressure=model.dim == 14)
            features = pipeline(parse_svc(svc_text), cfg)
            value = score(model, features)
            threshold = self.threshold_for(user_id)
            decision = "accept" if value >= threshold else "reject"
            record = {
                "ts": time.time(),
                "score": value,
                "threshold": threshold,
                "decision": decision,
            }
            with (udir / "decisions.log").open("a") as fh:
                fh.write(json.dumps(record) + "\n")
        return {"score": value, "threshold": threshold, "decision": decision}

    def reset(self, user_id: str) -> None:
        udir = self._udir(user_id)
        with self._lock(user_id):
            self._models.pop(user_id, None)
            if udir.is_dir():
                for f in sorted(udir.iterdir()):
                    f.unlink()
                udir.rmdir()


class EnrollRequest(BaseModel):
    session: int
    svc: str


class VerifyRequest(BaseModel):
    svc: str


class ThresholdRequest(BaseModel):
    threshold: float | None


_ERROR_STATUS = {
    InvalidUserIdError: (400, "InvalidUserId"),
    UnknownUserError: (404, "UnknownUser"),
    NotTrainedError: (409, "NotTrained"),
    QuotaExceededError: (409, "QuotaExceeded"),
    AlreadyTrainedError: (409, "AlreadyTrained"),
}


def create_app(
    store_path: str | Path,
    threshold: float | None = None,
    use_pressure: bool = True,
    static_dir: str | Path | None = None,
    train_config: TrainConfig | None = None,
) -> FastAPI:
    """Build the service application around a UserStore."""
    store = UserStore(
        store_path,
        default_threshold=DEFAULT_THRESHOLD if threshold is None else threshold,
        use_pressure=use_pressure,
        train_config=train_config,
    )
    app = FastAPI(title="sigverify", version="0.1.0")
    app.state.store = store

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        status, code = 500, "ServiceError"
        for cls, (st, name) in _ERROR_STATUS.items():
            if isinstance(exc, cls):
                status, code = st, name
                break
        return JSONResponse(status_code=status, content={"error": code, "detail": str(exc)})

    @app.exception_handler(SvcError)
    async def parse_error(request: Request, exc: SvcError):
        return JSONResponse(status_code=400, content={"error": "ParseError", "detail": str(exc)})

    @app.exception_handler(SignalError)
    async def signal_error(request: Request, exc: SignalError):
        return JSONResponse(
            status_code=400, content={"error": "UnprocessableSignature", "detail": str(exc)}
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "default_threshold": store.default_threshold}

    @app.get("/users/{user_id}")
    def user_status(user_id: str):
        return store.status(user_id).as_dict()

    @app.post("/users/{user_id}/enroll")
    def enroll(user_id: str, body: EnrollRequest):
        status = store.enroll(user_id, body.session, body.svc)
        return {"state": status.state, "counts": status.counts}

    @app.post("/users/{user_id}/verify")
    def verify(user_id: str, body: VerifyRequest):
        return store.verify(user_id, body.svc)

    @app.put("/users/{user_id}/threshold")
    def set_threshold(user_id: str, body: ThresholdRequest):
        store.set_threshold(user_id, body.threshold)
        return {"threshold": store.threshold_for(user_id)}

    @app.delete("/users/{user_id}", status_code=204)
    def reset(user_id: str):
        store.reset(user_id)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
