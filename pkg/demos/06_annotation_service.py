"""The human-in-the-loop annotation service, driven end to end over HTTP.

A session is a config snapshot plus an append-only event log; every batch,
label, and skip is an event, so killing the server mid-batch loses nothing.
Here the "annotator" is a lookup into the generator's ground truth.
"""

import json
import tempfile
import threading
import urllib.request
from pathlib import Path

from ndsal import generate_synthetic, write_embeddings, write_labels
from ndsal.service import Session, make_server

workdir = Path(tempfile.mkdtemp(prefix="ndsal-serve-"))
features, truth = generate_synthetic((80, 80), dim=8, spread=0.8, seed=11)
write_embeddings(workdir / "pool.embf", features.data)
write_labels(
    workdir / "pool.labels.csv",
    features.ids,
    [int(truth[i]) if i < 4 or 80 <= i < 84 else -1 for i in range(160)],
)

server = make_server(workdir / "sessions", port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
base = f"http://127.0.0.1:{server.server_address[1]}"
print("service at", base)


def call(path, payload=None):
    if payload is None:
        req = urllib.request.Request(base + path)
    else:
        req = urllib.request.Request(
            base + path, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"}, method="POST",
        )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


created = call("/session", {
    "config": {
        "embeddings": str(workdir / "pool.embf"),
        "labels": str(workdir / "pool.labels.csv"),
        "strategy": "nds",
        "draw_size": 10,
        "budget": 60,
        "k": 2,
        "seed": 3,
        "epochs": 5,
        "class_names": ["benign", "abusive"],
    }
})
sid = created["session_id"]
print("session", sid)

for cycle in range(2):
    batch = call(f"/session/{sid}/batch")
    print(f"\nbatch {batch['batch_id']}: {len(batch['samples'])} samples, "
          f"e.g. {batch['samples'][0]['text']!r}")
    labels = {str(s["id"]): int(truth[s["id"]]) for s in batch["samples"][:-1]}
    labels[str(batch["samples"][-1]["id"])] = "skip"  # annotators may pass
    outcome = call(f"/session/{sid}/labels", {"labels": labels})
    print(f"submitted {len(outcome['accepted'])} -> cycle {outcome['cycle']}, "
          f"labeled {outcome['labeled']}")

progress = call(f"/session/{sid}/progress")
print("\nprogress:", {k: progress[k] for k in ("labeled", "budget", "cycle", "pool")})

# crash recovery: a brand-new process replays the log to the same state
server.shutdown(); server.server_close()
revived = Session.load(workdir / "sessions", sid)
print("replayed state:", revived.pool_state()["cycle"], "cycles,",
      len(revived.pool_state()["labeled_ids"]), "labeled")
