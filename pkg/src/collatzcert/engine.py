"""Deterministic, checkpointable execution of the open-codeword frontier.

A single coordinator owns the open set, grouped by level; each round it
takes the deepest level's codewords (the greatest-level-first heuristic),
grows their trees - inline or on a process pool - and merges the results in
canonical codeword order, so the outcome is bit-identical for any worker
count.  Splitting a codeword into its three one-digit extensions preserves
the prefix-code property, which is asserted as an exact Kraft identity
after every merge.
"""

from __future__ import annotations

import multiprocessing
import os
import time
from dataclasses import dataclass
from fractions import Fraction

from .certify import (
    PLAIN,
    STRONG,
    Certificate,
    CertificateEntry,
    SearchOutcome,
    Unclosed,
    _parse_entry,
    _parse_header,
)
from .numth import MAX_CODEWORD_LEN, POW3, codeword_display, codeword_from_display
from .tree import GrowthRecord, find_companion, grow_record, path_str

INITIAL_CODEWORDS = tuple(
    (i, j) for i in (1, 2) for j in (0, 1, 2)
)

CHECKPOINT_INTERVAL = 30.0
BATCH_CHUNK = 256


@dataclass(frozen=True)
class WorkItem:
    codeword: tuple[int, ...]
    level: int
    depth_cap: int


@dataclass
class CheckpointState:
    """Resumable snapshot of a search: everything still open, everything closed."""

    alpha: Fraction
    mode: str
    open_codewords: list[tuple[int, ...]]
    closed: list[CertificateEntry]

    def counters(self) -> dict[int, dict[str, int]]:
        """Per-level opened/closed/split counts, derived from the records.

        opened(1) = 6; opened(l+1) = 3 * split(l); split(l) is whatever was
        neither closed nor left open at level l.
        """
        closed_at: dict[int, int] = {}
        open_at: dict[int, int] = {}
        for e in self.closed:
            closed_at[e.level] = closed_at.get(e.level, 0) + 1
        for c in self.open_codewords:
            open_at[len(c) - 1] = open_at.get(len(c) - 1, 0) + 1
        top = max([1, *closed_at, *open_at])
        out: dict[int, dict[str, int]] = {}
        opened = 6
        for lv in range(1, top + 1):
            split = opened - closed_at.get(lv, 0) - open_at.get(lv, 0)
            out[lv] = {
                "opened": opened,
                "closed": closed_at.get(lv, 0),
                "split": split,
            }
            opened = 3 * split
        return out

    def to_text(self) -> str:
        lines = [
            f"checkpoint v1 mode={self.mode} "
            f"alpha={self.alpha.numerator}/{self.alpha.denominator}"
        ]
        for c in sorted(self.open_codewords):
            lines.append(f"open {codeword_display(c)}")
        for e in sorted(self.closed, key=lambda e: e.codeword):
            lines.append(f"closed {e.to_line()}")
        return "\n".join(lines) + "\n"


def parse_checkpoint(text: str) -> CheckpointState:
    lines = text.split("\n")
    if text and not text.endswith("\n"):
        raise ValueError("line %d: missing trailing newline" % len(lines))
    header = None
    open_codewords = []
    closed = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = _parse_header(line, lineno, "checkpoint")
            continue
        kind, _, rest = line.partition(" ")
        if kind == "open":
            open_codewords.append(codeword_from_display(rest.strip()))
        elif kind == "closed":
            closed.append(_parse_entry(rest.strip(), lineno))
        else:
            raise ValueError(f"line {lineno}: unknown record {kind!r}")
    if header is None:
        raise ValueError("line 1: missing checkpoint header")
    mode, alpha = header
    return CheckpointState(alpha=alpha, mode=mode,
                           open_codewords=open_codewords, closed=closed)


def load_checkpoint(path) -> CheckpointState:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_checkpoint(fh.read())


def save_checkpoint(state: CheckpointState, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(state.to_text())
    os.replace(tmp, path)


def stats(obj) -> list[tuple[int, int]]:
    """Per-level population: codewords of level >= l', for each l'.

    Accepts a finished Certificate or a CheckpointState (whose still-open
    codewords count alongside the closed entries).
    """
    if isinstance(obj, Certificate):
        levels = [e.level for e in obj.entries]
    elif isinstance(obj, CheckpointState):
        levels = [e.level for e in obj.closed]
        levels.extend(len(c) - 1 for c in obj.open_codewords)
    else:
        raise TypeError(f"stats wants a Certificate or CheckpointState, not {type(obj)}")
    top = max(levels, default=0)
    return [(lv, sum(1 for x in levels if x >= lv)) for lv in range(1, top + 1)]


def format_stats_csv(rows: list[tuple[int, int]]) -> str:
    return "level,count\n" + "".join(f"{lv},{n}\n" for lv, n in rows)


def _depth_cap(level: int, alpha: Fraction) -> int:
    return (level * alpha.denominator) // alpha.numerator


def _analyze(args) -> GrowthRecord:
    codeword, cap, want, collect, prune = args
    return grow_record(codeword, cap, want, collect_companions=collect,
                       prune=prune)


def _close_decision(
    record: GrowthRecord, cap: int, alpha: Fraction, mode: str
) -> tuple[str, ...] | None:
    """Paths that close this codeword at this ratio, or None to split.

    Plain mode closes on the first full-weight leaf within the cap.  Strong
    mode needs two such leaves, or one leaf plus the canonically least
    lighter path of ones-ratio >= alpha that is not a prefix of it.
    """
    wits = record.witnesses_within(cap)
    if mode == PLAIN:
        if not wits:
            return None
        d, p = wits[0]
        return (path_str(p, d),)
    if len(wits) >= 2:
        return tuple(path_str(p, d) for d, p in wits[:2])
    if len(wits) == 1:
        companion = find_companion(record, cap, alpha, wits[0])
        if companion is not None:
            pair = sorted([wits[0], companion])
            return tuple(path_str(p, d) for d, p in pair)
    return None


class _KraftLedger:
    """Exact running Kraft sum over open + closed + the reserved word (0)."""

    def __init__(self):
        # scale everything by 3^(MAX_CODEWORD_LEN + 1) to stay in integers
        self.scale = POW3[MAX_CODEWORD_LEN + 1]
        self.total = self.scale // 3          # the reserved word (0)

    def add(self, length: int) -> None:
        self.total += self.scale // POW3[length]

    def remove(self, length: int) -> None:
        self.total -= self.scale // POW3[length]

    def assert_exhaustive(self) -> None:
        if self.total != self.scale:
            raise AssertionError(
                f"Kraft invariant broken: sum = {Fraction(self.total, self.scale)}")


def run(
    alpha: Fraction,
    max_weight: int,
    mode: str = PLAIN,
    workers: int = 1,
    checkpoint_path: str | None = None,
    cache: dict | None = None,
    checkpoint_interval: float = CHECKPOINT_INTERVAL,
    max_rounds: int | None = None,
    frontier_budget: int | None = None,
) -> SearchOutcome | None:
    """Run the certificate search to completion.

    Returns a Certificate when every codeword closes, an Unclosed report
    listing the codewords stuck at the weight cap otherwise.  The result is
    a pure function of (alpha, mode, max_weight): worker count and resume
    points cannot change a single byte of it.  ``max_rounds`` stops early
    after that many merge rounds (checkpoint written, None returned); it
    exists for interrupt testing and incremental operation.
    """
    if mode not in (PLAIN, STRONG):
        raise ValueError(f"unknown mode {mode!r}")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 1 <= max_weight <= MAX_CODEWORD_LEN:
        raise ValueError(f"max_weight must be within [1, {MAX_CODEWORD_LEN}]")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    want = 2 if mode == STRONG else 1
    # companion collection above ratio 1/2 is only sound on unpruned trees;
    # the caps are tiny there, so the cost is acceptable
    prune = mode == PLAIN or 2 * alpha.numerator <= alpha.denominator
    open_by_level: dict[int, list[tuple[int, ...]]] = {}
    closed: list[CertificateEntry] = []
    stuck: list[tuple[tuple[int, ...], Fraction | None]] = []
    kraft = _KraftLedger()

    resumed = False
    if checkpoint_path and os.path.exists(checkpoint_path):
        state = load_checkpoint(checkpoint_path)
        if state.alpha != alpha or state.mode != mode:
            raise ValueError(
                f"checkpoint {checkpoint_path} was taken at "
                f"alpha={state.alpha} mode={state.mode}, refusing to resume "
                f"at alpha={alpha} mode={mode}")
        for c in state.open_codewords:
            open_by_level.setdefault(len(c) - 1, []).append(c)
        closed = list(state.closed)
        resumed = True
    if not resumed:
        open_by_level[1] = list(INITIAL_CODEWORDS)

    for lv, words in open_by_level.items():
        for c in words:
            kraft.add(len(c))
    for e in closed:
        kraft.add(len(e.codeword))
    kraft.assert_exhaustive()

    pool = None
    if workers > 1:
        pool = multiprocessing.get_context("fork").Pool(workers)
    last_checkpoint = time.monotonic()
    rounds = 0
    serial_fallback = False
    try:
        while open_by_level:
            if max_rounds is not None and rounds >= max_rounds:
                if checkpoint_path:
                    _write_state(alpha, mode, open_by_level, stuck, closed,
                                 checkpoint_path)
                return None
            level = max(open_by_level)
            cap = _depth_cap(level, alpha)
            batch = [WorkItem(c, level, cap)
                     for c in sorted(open_by_level.pop(level))]
            for start in range(0, len(batch), BATCH_CHUNK):
                chunk = batch[start:start + BATCH_CHUNK]
                records: list[GrowthRecord] = []
                todo = []
                for item in chunk:
                    rec = cache.get(item.codeword) if cache is not None else None
                    if rec is not None and rec.usable_for(cap, want) and (
                        mode == PLAIN or rec.companions is not None
                    ) and rec.pruned == prune:
                        records.append(rec)
                    else:
                        records.append(None)
                        todo.append((item.codeword, item.depth_cap, want,
                                     mode == STRONG, prune))
                if todo:
                    if pool is not None and not serial_fallback and len(todo) > 1:
                        fresh = pool.map(_analyze, todo)
                    else:
                        fresh = [_analyze(t) for t in todo]
                    it = iter(fresh)
                    for i, rec in enumerate(records):
                        if rec is None:
                            records[i] = next(it)
                            if cache is not None:
                                cache[records[i].codeword] = records[i]
                if frontier_budget is not None:
                    peak = max(r.frontier_peak for r in records)
                    serial_fallback = peak * workers > frontier_budget

                for item, rec in zip(chunk, records):
                    c = item.codeword
                    paths = _close_decision(rec, cap, alpha, mode)
                    kraft.remove(len(c))
                    if paths is not None:
                        closed.append(CertificateEntry(codeword=c, paths=paths))
                        kraft.add(len(c))
                    elif level >= max_weight:
                        stuck.append((c, rec.best_ratio()))
                        kraft.add(len(c))
                    else:
                        children = [c + (d,) for d in (0, 1, 2)]
                        open_by_level.setdefault(level + 1, []).extend(children)
                        for child in children:
                            kraft.add(len(child))
                kraft.assert_exhaustive()
                rounds += 1
                now = time.monotonic()
                if checkpoint_path and (
                    now - last_checkpoint >= checkpoint_interval
                    or start + BATCH_CHUNK >= len(batch)
                ):
                    _write_state(alpha, mode, open_by_level, stuck, closed,
                                 checkpoint_path)
                    last_checkpoint = now
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    if stuck:
        return Unclosed(
            alpha=alpha,
            mode=mode,
            max_weight=max_weight,
            open_codewords=sorted(stuck),
        )
    cert = Certificate(alpha=alpha, mode=mode, entries=closed).sorted_canonically()
    if checkpoint_path:
        _write_state(alpha, mode, {}, [], cert.entries, checkpoint_path)
    return cert


def _write_state(alpha, mode, open_by_level, stuck, closed, path) -> None:
    state = CheckpointState(
        alpha=alpha,
        mode=mode,
        open_codewords=[c for words in open_by_level.values() for c in words]
        + [c for c, _ in stuck],
        closed=closed,
    )
    save_checkpoint(state, path)
