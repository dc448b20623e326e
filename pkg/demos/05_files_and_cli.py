"""The on-disk formats and the command-line surface.

The embedding container is a checksummed little-endian binary; labels are
plain ``id,label`` text with -1 marking the unlabeled pool. The same flow is
available from the shell as ``ndsal gen`` / ``ndsal select`` /
``ndsal simulate`` / ``ndsal serve``.
"""

import tempfile
from pathlib import Path

import numpy as np

from ndsal import generate_synthetic, read_embeddings, read_labels, write_embeddings, write_labels
from ndsal.cli import main as ndsal_cli
from ndsal.iostore import FormatError

workdir = Path(tempfile.mkdtemp(prefix="ndsal-demo-"))

features, labels = generate_synthetic((60, 140), dim=16, spread=1.0, seed=3)
emb_path = workdir / "pool.embf"
write_embeddings(emb_path, features.data)
print(f"wrote {emb_path.stat().st_size} bytes "
      f"(20-byte header + {4 * 200 * 16} payload + 8-byte checksum)")

back = read_embeddings(emb_path)
assert np.array_equal(back, features.data.astype(np.float32))
print("round-trip exact:", back.shape, back.dtype)

# corruption is caught by field, not by surprise
corrupt = workdir / "corrupt.embf"
corrupt.write_bytes(emb_path.read_bytes()[:100])
try:
    read_embeddings(corrupt)
except FormatError as err:
    print("corrupt file rejected:", err)

# a partially-labeled file: first 30 rows labeled, the rest form the pool
label_path = workdir / "pool.labels.csv"
write_labels(label_path, features.ids, [l if i < 30 else -1 for i, l in enumerate(labels)])
ids, stored = read_labels(label_path, num_classes=2)
print(f"labels: {sum(1 for v in stored if v >= 0)} known, "
      f"{sum(1 for v in stored if v < 0)} pool")

# the CLI runs the same engine; ids print one per line
print("\n$ ndsal select --strategy nds --k 2 --draw 8 --seed 4 ...")
ndsal_cli([
    "select", "--embeddings", str(emb_path), "--labels", str(label_path),
    "--strategy", "nds", "--k", "2", "--draw", "8", "--seed", "4",
])
