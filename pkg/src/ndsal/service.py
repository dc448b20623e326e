"""Human-in-the-loop annotation service.

Serves the current queried batch over HTTP/JSON, accepts labels (or skips)
as they arrive, advances the selection cycle when a batch completes, and
persists every session as a config snapshot plus an append-only event log.
Replaying the log reconstructs the exact pool state, so a restart never
loses or duplicates a submitted label.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .acquisition import MixingState, STRATEGIES
from .classifier import TrainConfig, predict_proba, train
from .harness import derive_seed, f1_scores, select_once
from .iostore import UNLABELED, read_embeddings, read_labels
from .numerics import FeatureMatrix


@dataclass(frozen=True)
class SessionConfig:
    """Annotation-session settings; paths are resolved at load time."""

    embeddings: str
    labels: str
    strategy: str = "nds"
    draw_size: int = 20
    budget: int = 500
    k: int = 2
    seed: int = 0
    epochs: int = 10
    learning_rate: float = 1e-2
    batch_size: int = 64
    hidden: int = 64
    dropout_rate: float = 0.2
    mc_passes: int = 10
    alpha_decay: float = 0.02
    alpha_mode: str = "additive"
    texts: str | None = None
    test_embeddings: str | None = None
    test_labels: str | None = None
    class_names: tuple | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.draw_size < 1:
            raise ValueError("draw_size must be >= 1")
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        if out["class_names"] is not None:
            out["class_names"] = list(out["class_names"])
        return out


class Session:
    """One annotator's labeling session, event-sourced on disk."""

    def __init__(self, directory: Path, config: SessionConfig):
        self.directory = Path(directory)
        self.session_id = self.directory.name
        self.config = config
        self.lock = threading.Lock()
        self._load_data()
        self.labels: dict = dict(self._initial_labels)
        self.labeled_ids: list = list(self._initial_labeled_order)
        self.pool_ids: list = [s for s in self.ids if s not in self.labels]
        self.cycle = 0
        self.skipped_this_cycle: set = set()
        self.pending: list[dict] | None = None
        self.pending_batch_id: str | None = None
        self.f1_history: list[float] = []
        self.last_diag: dict = {}

    # -- construction ------------------------------------------------------

    @classmethod
    def create(cls, root: Path, config: SessionConfig, session_id: str | None = None) -> "Session":
        session_id = session_id or uuid.uuid4().hex[:12]
        directory = Path(root) / session_id
        if directory.exists():
            raise ValueError(f"session {session_id!r} already exists")
        directory.mkdir(parents=True)
        with open(directory / "config.json", "w", encoding="utf-8") as fh:
            json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        session = cls(directory, config)
        session._append_event({"event": "created"})
        if session.test_features is not None and session.labeled_ids:
            # baseline score of the model trained on just the seed labels,
            # so the history reads: initial point, then one per cycle
            f1 = session._evaluate()
            session.f1_history.append(f1)
            session._append_event({"event": "init_eval", "f1": f1})
        return session

    @classmethod
    def load(cls, root: Path, session_id: str) -> "Session":
        directory = Path(root) / session_id
        snapshot = directory / "config.json"
        if not snapshot.exists():
            raise KeyError(f"unknown session: {session_id}")
        with open(snapshot, "r", encoding="utf-8") as fh:
            config = SessionConfig(**json.load(fh))
        session = cls(directory, config)
        session._replay()
        return session

    def _load_data(self):
        matrix = read_embeddings(self.config.embeddings).astype(np.float64)
        ids, labels = read_labels(self.config.labels, num_classes=self.config.k)
        if len(ids) != matrix.shape[0]:
            raise ValueError(
                f"label count {len(ids)} does not match embedding rows {matrix.shape[0]}"
            )
        self.features = FeatureMatrix(matrix, ids)
        self.ids = ids
        self._initial_labels = {s: int(l) for s, l in zip(ids, labels) if l != UNLABELED}
        self._initial_labeled_order = [s for s in ids if s in self._initial_labels]
        self._by_str = {str(s): s for s in ids}
        self.texts: dict = {}
        if self.config.texts:
            with open(self.config.texts, "r", encoding="utf-8") as fh:
                for line in fh:
                    if "\t" in line:
                        raw_id, text = line.rstrip("\n").split("\t", 1)
                        key = self._by_str.get(raw_id)
                        if key is not None:
                            self.texts[key] = text
        self.test_features = None
        self.test_labels = None
        if self.config.test_embeddings and self.config.test_labels:
            test_matrix = read_embeddings(self.config.test_embeddings).astype(np.float64)
            test_ids, test_y = read_labels(self.config.test_labels, num_classes=self.config.k)
            self.test_features = FeatureMatrix(test_matrix, tuple(f"test:{s}" for s in test_ids))
            self.test_labels = np.asarray(test_y, dtype=np.int64)

    # -- event sourcing ----------------------------------------------------

    @property
    def _log_path(self) -> Path:
        return self.directory / "events.jsonl"

    def _append_event(self, event: dict) -> None:
        event = dict(event)
        event.setdefault("ts", time.time())
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    self._apply(json.loads(line))

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "init_eval":
            self.f1_history.append(event["f1"])
        elif kind == "batch":
            ids = [self._by_str[str(s)] for s in event["ids"]]
            self.pending = [{"id": s, "status": "pending"} for s in ids]
            self.pending_batch_id = event["batch_id"]
        elif kind == "label":
            self._record_label(self._by_str[str(event["id"])], int(event["label"]))
        elif kind == "skip":
            self._record_skip(self._by_str[str(event["id"])])
        elif kind == "cycle_complete":
            if event.get("f1") is not None:
                self.f1_history.append(event["f1"])
            self._advance_cycle()

    # -- state transitions -------------------------------------------------

    def _record_label(self, sample_id, label: int) -> None:
        self.labels[sample_id] = label
        self.labeled_ids.append(sample_id)
        self.pool_ids.remove(sample_id)
        for entry in self.pending or []:
            if entry["id"] == sample_id:
                entry["status"] = "labeled"

    def _record_skip(self, sample_id) -> None:
        self.skipped_this_cycle.add(sample_id)
        for entry in self.pending or []:
            if entry["id"] == sample_id:
                entry["status"] = "skipped"

    def _advance_cycle(self) -> None:
        self.cycle += 1
        self.skipped_this_cycle.clear()
        self.pending = None
        self.pending_batch_id = None

    def _batch_done(self) -> bool:
        return self.pending is not None and all(
            e["status"] != "pending" for e in self.pending
        )

    # -- selection and evaluation ------------------------------------------

    def _alpha(self) -> float:
        return MixingState.for_cycle(
            self.cycle, decay_per_cycle=self.config.alpha_decay, mode=self.config.alpha_mode
        ).alpha

    def _train_config(self) -> TrainConfig:
        c = self.config
        return TrainConfig(
            epochs=c.epochs,
            learning_rate=c.learning_rate,
            batch_size=c.batch_size,
            hidden=c.hidden,
            dropout_rate=c.dropout_rate,
        )

    def _create_batch(self) -> None:
        candidates = [s for s in self.pool_ids if s not in self.skipped_this_cycle]
        if not candidates:
            # everything left was skipped this cycle; let them rejoin
            self.skipped_this_cycle.clear()
            candidates = list(self.pool_ids)
        m = min(self.config.draw_size, self.config.budget - len(self.labeled_ids), len(candidates))
        if m < 1:
            raise ValueError("budget exhausted or pool empty; no batch to create")
        selection_seed = derive_seed(self.config.seed, 0, self.cycle, "strategy")
        selected = select_once(
            self.features,
            {s: self.labels[s] for s in self.labeled_ids},
            candidates,
            self.config.strategy,
            self.config.k,
            m,
            selection_seed,
            train_config=self._train_config(),
            mc_passes=self.config.mc_passes,
            alpha=self._alpha(),
        )
        batch_id = f"b{self.cycle:04d}"
        self._append_event(
            {"event": "batch", "batch_id": batch_id, "cycle": self.cycle, "ids": list(selected)}
        )
        self.pending = [{"id": s, "status": "pending"} for s in selected]
        self.pending_batch_id = batch_id

    def _evaluate(self) -> float | None:
        if self.test_features is None:
            return None
        labeled = list(self.labeled_ids)
        params = train(
            self.features.restrict(labeled),
            [self.labels[s] for s in labeled],
            self.config.k,
            self._train_config().with_seed(derive_seed(self.config.seed, 0, self.cycle, "train")),
        )
        predicted = predict_proba(params, self.test_features).argmax(axis=1)
        return float(f1_scores(predicted, self.test_labels, self.config.k).mean())

    def _display_text(self, sample_id) -> str:
        if sample_id in self.texts:
            return self.texts[sample_id]
        labeled = [s for s in self.labeled_ids]
        if not labeled:
            return f"sample {sample_id}"
        x = self.features.data[self.features.index_of(sample_id)]
        rows = self.features.data[[self.features.index_of(s) for s in labeled]]
        dists = np.linalg.norm(rows - x, axis=1)
        nearest = [str(labeled[i]) for i in np.argsort(dists)[:3]]
        return f"sample {sample_id} (nearest labeled: {', '.join(nearest)})"

    # -- public API ---------------------------------------------------------

    def get_batch(self) -> dict:
        """The pending batch, creating one if none is pending; idempotent."""
        with self.lock:
            if self.pending is None:
                self._create_batch()
            return {
                "batch_id": self.pending_batch_id,
                "cycle": self.cycle,
                "num_classes": self.config.k,
                "class_names": list(self.config.class_names)
                if self.config.class_names
                else [f"class {i}" for i in range(self.config.k)],
                "samples": [
                    {
                        "id": entry["id"],
                        "text": self._display_text(entry["id"]),
                        "status": entry["status"],
                    }
                    for entry in self.pending
                ],
            }

    def submit_labels(self, submitted: dict) -> dict:
        """Record labels / skips for pending samples; partial acceptance.

        Ids outside the pending batch and labels outside 0..K-1 are rejected
        per id; valid entries are still applied. Completing the batch
        evaluates (when a test set exists) and advances the cycle.
        """
        with self.lock:
            if self.pending is None:
                raise ValueError("no pending batch; fetch one first")
            pending_ids = {e["id"] for e in self.pending if e["status"] == "pending"}
            accepted: list = []
            rejected: dict = {}
            for raw_id, value in submitted.items():
                sample_id = self._by_str.get(str(raw_id))
                if sample_id is None or sample_id not in pending_ids:
                    rejected[str(raw_id)] = "not in the pending batch"
                    continue
                if isinstance(value, str) and value.lower() == "skip":
                    self._append_event({"event": "skip", "id": sample_id})
                    self._record_skip(sample_id)
                    accepted.append(str(raw_id))
                    continue
                try:
                    label = int(value)
                except (TypeError, ValueError):
                    rejected[str(raw_id)] = f"invalid label: {value!r}"
                    continue
                if not (0 <= label < self.config.k):
                    rejected[str(raw_id)] = (
                        f"label {label} out of range 0..{self.config.k - 1}"
                    )
                    continue
                self._append_event({"event": "label", "id": sample_id, "label": label})
                self._record_label(sample_id, label)
                accepted.append(str(raw_id))

            batch_complete = self._batch_done()
            if batch_complete:
                f1 = self._evaluate()
                if f1 is not None:
                    self.f1_history.append(f1)
                self._append_event({"event": "cycle_complete", "cycle": self.cycle, "f1": f1})
                self._advance_cycle()
            return {
                "accepted": accepted,
                "rejected": rejected,
                "batch_complete": batch_complete,
                "cycle": self.cycle,
                "labeled": len(self.labeled_ids),
                "next_batch_available": bool(
                    self.pool_ids and len(self.labeled_ids) < self.config.budget
                ),
            }

    def progress(self) -> dict:
        """Read-only snapshot of labeling progress and diagnostics."""
        with self.lock:
            out = {
                "labeled": len(self.labeled_ids),
                "budget": self.config.budget,
                "cycle": self.cycle,
                "pool": len(self.pool_ids),
                "strategy": self.config.strategy,
                "alpha": self._alpha() if self.config.strategy == "ndsplus" else None,
            }
            if self.test_features is not None:
                out["f1_history"] = list(self.f1_history)
            return out

    def pool_state(self) -> dict:
        """Canonical partition snapshot (ids sorted), for tests and tooling."""
        with self.lock:
            return {
                "labeled_ids": sorted(self.labeled_ids, key=str),
                "pool_ids": sorted(self.pool_ids, key=str),
                "labels": {str(k): v for k, v in sorted(self.labels.items(), key=lambda t: str(t[0]))},
                "cycle": self.cycle,
            }


class SessionManager:
    """Loads sessions on demand; one lock-protected Session per id."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, config: SessionConfig, session_id: str | None = None) -> Session:
        with self._lock:
            session = Session.create(self.root, config, session_id)
            self._sessions[session.session_id] = session
            return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                self._sessions[session_id] = Session.load(self.root, session_id)
            return self._sessions[session_id]

    def list_ids(self) -> list[str]:
        on_disk = {p.name for p in self.root.iterdir() if (p / "config.json").exists()}
        return sorted(on_disk)


class _Handler(BaseHTTPRequestHandler):
    manager: SessionManager = None
    ui_dir: Path | None = None

    def log_message(self, fmt, *args):
        pass

    def _json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        if length == 0:
            return {}
        return json.loads(self.rfile.read(length).decode("utf-8"))

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            if not parts and self.ui_dir is not None:
                return self._static("index.html")
            if self.ui_dir is not None and parts and parts[0] != "session":
                return self._static("/".join(parts))
            if parts == ["session"]:
                return self._json(200, {"sessions": self.manager.list_ids()})
            if len(parts) == 3 and parts[0] == "session":
                session = self.manager.get(parts[1])
                if parts[2] == "batch":
                    return self._json(200, session.get_batch())
                if parts[2] == "progress":
                    return self._json(200, session.progress())
                if parts[2] == "state":
                    return self._json(200, session.pool_state())
            return self._json(404, {"error": f"no such route: {self.path}"})
        except KeyError as err:
            return self._json(404, {"error": str(err).strip("'")})
        except ValueError as err:
            return self._json(400, {"error": str(err)})

    def do_POST(self):
        parts = [p for p in self.path.split("?")[0].split("/") if p]
        try:
            body = self._read_body()
            if parts == ["session"]:
                config = SessionConfig(**body.get("config", {}))
                session = self.manager.create(config, body.get("session_id"))
                return self._json(201, {"session_id": session.session_id})
            if len(parts) == 3 and parts[0] == "session" and parts[2] == "labels":
                session = self.manager.get(parts[1])
                return self._json(200, session.submit_labels(body.get("labels", {})))
            return self._json(404, {"error": f"no such route: {self.path}"})
        except KeyError as err:
            return self._json(404, {"error": str(err).strip("'")})
        except (TypeError, ValueError) as err:
            return self._json(400, {"error": str(err)})

    def _static(self, rel: str) -> None:
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return self._json(404, {"error": f"no such file: {rel}"})
        types = {".html": "text/html", ".js": "text/javascript", ".css": "text/css"}
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", types.get(target.suffix, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    session_dir, port: int = 0, host: str = "127.0.0.1", ui_dir=None
) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    handler = type(
        "SessionHandler",
        (_Handler,),
        {
            "manager": SessionManager(Path(session_dir)),
            "ui_dir": Path(ui_dir) if ui_dir else None,
        },
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(session_dir, port: int, host: str = "127.0.0.1", ui_dir=None) -> None:
    server = make_server(session_dir, port, host, ui_dir)
    print(f"annotation service on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    finally:
        server.server_close()
