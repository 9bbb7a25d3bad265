#!/usr/bin/env python3
"""Generate the bundled synthetic corpora (OLID-schema TSV, fabricated text).

The real tweet data is not redistributable, so the repo ships generated
stand-ins: a 2,000-row task-B corpus at a 95:5 class ratio for the
directional-replication checks, a 300-row task-B mini corpus for golden
tests, and a small 3-class task-C corpus.  Documents are bags of
pseudo-words drawn from class-specific and shared pools with Zipf-like
weights, plus mention/URL noise so the preprocessing path is exercised.

Deterministic: fixed seeds, committed outputs.  Rerunning must reproduce
the committed files byte for byte.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

HEADER = "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c"


def _pool(prefix: str, size: int) -> list[str]:
    return [f"{prefix}{i:03d}" for i in range(size)]


def _zipf_weights(n: int) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** 0.7
    return w / w.sum()


COMMON = _pool("com", 50)
MAJ = _pool("maj", 90)
MIN = _pool("min", 90)
OTH = _pool("oth", 70)
W_COMMON = _zipf_weights(len(COMMON))
W_MAJ = _zipf_weights(len(MAJ))
W_MIN = _zipf_weights(len(MIN))
W_OTH = _zipf_weights(len(OTH))


def _draw_doc(rng: np.random.Generator, mix: list[tuple[list[str], np.ndarray, float]]) -> str:
    length = int(rng.integers(8, 15))
    pools = np.array([m[2] for m in mix])
    pools = pools / pools.sum()
    words = []
    for _ in range(length):
        pool, weights, _ = mix[int(rng.choice(len(mix), p=pools))]
        words.append(pool[int(rng.choice(len(pool), p=weights))])
    # sprinkle twitter noise the preprocessor must strip
    if rng.random() < 0.3:
        words.insert(0, "@user")
    if rng.random() < 0.15:
        words.append("https://t.co/abc123")
    if rng.random() < 0.1:
        words.append("!!!")
    return " ".join(words)


def make_task_b(path: Path, n_major: int, n_minor: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    maj_mix = [(COMMON, W_COMMON, 0.48), (MAJ, W_MAJ, 0.46), (MIN, W_MIN, 0.06)]
    min_mix = [(COMMON, W_COMMON, 0.44), (MIN, W_MIN, 0.44), (MAJ, W_MAJ, 0.12)]
    rows = []
    for i in range(n_major):
        rows.append((f"b{i:05d}", _draw_doc(rng, maj_mix), "TIN"))
    for i in range(n_minor):
        rows.append((f"b{n_major + i:05d}", _draw_doc(rng, min_mix), "UNT"))
    order = rng.permutation(len(rows))
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(HEADER + "\n")
        for j in order:
            row_id, text, label = rows[j]
            fh.write(f"{row_id}\t{text}\tOFF\t{label}\tNULL\n")


def make_task_c(path: Path, counts: tuple[int, int, int], seed: int) -> None:
    rng = np.random.default_rng(seed)
    mixes = {
        "IND": [(COMMON, W_COMMON, 0.50), (MAJ, W_MAJ, 0.42), (OTH, W_OTH, 0.08)],
        "GRP": [(COMMON, W_COMMON, 0.50), (MIN, W_MIN, 0.38), (MAJ, W_MAJ, 0.12)],
        "OTH": [(COMMON, W_COMMON, 0.50), (OTH, W_OTH, 0.34), (MIN, W_MIN, 0.16)],
    }
    rows = []
    for label, n in zip(("IND", "GRP", "OTH"), counts):
        for i in range(n):
            rows.append((f"c{len(rows):05d}", _draw_doc(rng, mixes[label]), label))
    order = rng.permutation(len(rows))
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(HEADER + "\n")
        for j in order:
            row_id, text, label = rows[j]
            fh.write(f"{row_id}\t{text}\tOFF\tTIN\t{label}\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    make_task_b(out / "synthetic_b.tsv", n_major=1900, n_minor=100, seed=20190106)
    make_task_b(out / "mini_b.tsv", n_major=240, n_minor=60, seed=20190212)
    make_task_c(out / "mini_c.tsv", counts=(300, 140, 60), seed=20190320)
    print(f"wrote corpora under {out}/")


if __name__ == "__main__":
    main()
