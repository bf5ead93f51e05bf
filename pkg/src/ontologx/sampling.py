"""Embedding-dissimilarity sampling of evaluation datasets from log files.

The pool is the first ``pool_per_file`` non-blank lines of each input file.
Candidates are walked in a seeded shuffled order and kept when their minimum
cosine distance to everything already kept stays at or above the threshold
(the first candidate is kept vacuously). The first 10 accepted events become
the few-shot split, the next 10 the validation split, and the rest the test
split.

``retain_below_threshold`` flips the comparison so that candidates *below*
the distance threshold are kept instead. That direction defeats the point
of the filter (near-duplicates pass, diverse events are dropped) and exists
only so the behaviour can be compared; the default is the diversity-
preserving direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .embedding import Embedder, HashingEmbedder
from .errors import EmptyInput, PoolExhausted
from .model import LogEvent, events_from_lines

__all__ = ["DatasetSplit", "sample_events", "sample_dataset", "write_split", "read_events"]

FEWSHOT_SIZE = 10
VALIDATION_SIZE = 10


@dataclass(frozen=True)
class DatasetSplit:
    fewshot: tuple[LogEvent, ...]
    validation: tuple[LogEvent, ...]
    test: tuple[LogEvent, ...]

    def all_events(self) -> tuple[LogEvent, ...]:
        return self.fewshot + self.validation + self.test


def sample_events(
    pool: Sequence[LogEvent],
    n: int = 70,
    threshold: float = 0.7,
    seed: int = 0,
    embedder: Optional[Embedder] = None,
    retain_below_threshold: bool = False,
) -> DatasetSplit:
    """Select ``n`` mutually dissimilar events from ``pool`` and split them.

    Raises ``PoolExhausted`` (carrying the achieved count) when the walk
    ends before ``n`` events pass the distance criterion. Identical seeds
    yield identical splits.
    """
    embedder = embedder if embedder is not None else HashingEmbedder()
    candidates: list[LogEvent] = []
    vectors: list[np.ndarray] = []
    for event in pool:
        try:
            vec = embedder.embed(event.raw_text)
        except EmptyInput:
            continue  # token-free lines cannot participate in the distance criterion
        candidates.append(event)
        vectors.append(vec.values)
    if len(candidates) < n:
        raise PoolExhausted(
            f"pool holds {len(candidates)} embeddable events, {n} required",
            achieved=0,
        )

    matrix = np.vstack(vectors)
    order = np.random.default_rng(seed).permutation(len(candidates)).astype(np.int64)

    if retain_below_threshold:
        accepted = _literal_filter(matrix, order, threshold, n)
    else:
        accepted = kernels.diverse_order(matrix, order, threshold, n)

    if len(accepted) < n:
        raise PoolExhausted(
            f"only {len(accepted)} of {n} events satisfy the distance criterion",
            achieved=int(len(accepted)),
        )

    chosen = [candidates[i] for i in accepted]
    return DatasetSplit(
        fewshot=tuple(chosen[:FEWSHOT_SIZE]),
        validation=tuple(chosen[FEWSHOT_SIZE : FEWSHOT_SIZE + VALIDATION_SIZE]),
        test=tuple(chosen[FEWSHOT_SIZE + VALIDATION_SIZE :]),
    )


def _literal_filter(matrix, order, threshold, n_target):
    # comparison-flipped variant; first candidate kept vacuously
    accepted: list[int] = []
    for idx in order:
        if len(accepted) == n_target:
            break
        if not accepted:
            accepted.append(int(idx))
            continue
        distances = 1.0 - matrix[accepted] @ matrix[idx]
        if distances.min() < threshold:
            accepted.append(int(idx))
    return np.asarray(accepted, dtype=np.int64)


def sample_dataset(
    files: Sequence[Union[str, Path]],
    pool_per_file: int = 100,
    n: int = 70,
    threshold: float = 0.7,
    seed: int = 0,
    embedder: Optional[Embedder] = None,
    retain_below_threshold: bool = False,
) -> DatasetSplit:
    """File-reading wrapper around :func:`sample_events`."""
    pool: list[LogEvent] = []
    for path in files:
        path = Path(path)
        with path.open("r", encoding="utf-8", errors="replace") as fh:
            events = events_from_lines(
                fh, source_file=str(path), start_sequence=len(pool)
            )
        pool.extend(events[:pool_per_file])
    return sample_events(
        pool,
        n=n,
        threshold=threshold,
        seed=seed,
        embedder=embedder,
        retain_below_threshold=retain_below_threshold,
    )


def _event_to_dict(event: LogEvent) -> dict:
    return {
        "raw_text": event.raw_text,
        "context": event.context,
        "source_file": event.source_file,
        "sequence_no": event.sequence_no,
    }


def write_split(split: DatasetSplit, out_dir: Union[str, Path]) -> list[Path]:
    """Write fewshot/validation/test JSON-lines files; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, events in (
        ("fewshot", split.fewshot),
        ("validation", split.validation),
        ("test", split.test),
    ):
        path = out_dir / f"{name}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for event in events:
                fh.write(
                    json.dumps(_event_to_dict(event), ensure_ascii=False, separators=(",", ":"))
                    + "\n"
                )
        written.append(path)
    return written


def read_events(path: Union[str, Path]) -> list[LogEvent]:
    events = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            events.append(
                LogEvent(
                    raw_text=raw["raw_text"],
                    context=raw.get("context"),
                    source_file=raw.get("source_file"),
                    sequence_no=raw.get("sequence_no", 0),
                )
            )
    return events
