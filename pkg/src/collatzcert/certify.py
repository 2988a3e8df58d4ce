"""Ones-ratio lower bound certificates: data model, search, verification,
maximal-ratio sweep, and constructive witness chains.

A certificate is an exhaustive prefix-free set of ternary codewords, each
carrying one (plain) or two (strong) edge-label paths that replay in the
pruned tree of the named residue class with ones-ratio at least alpha.  The
verifier only replays the given paths; it shares no growth code with the
search.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .numth import (
    BRANCHING_MOD9,
    MAX_CODEWORD_LEN,
    POW3,
    check_codeword,
    codeword_display,
    codeword_from_display,
    codeword_value,
    inverse_t,
    t_map,
)
PLAIN = "plain"
STRONG = "strong"

# Farey guard: the sweep's champion must stay a fraction with denominator
# under 100 for the 1/10000 increment to be a sound step size.
SWEEP_INCREMENT = Fraction(1, 10_000)
SWEEP_BASE_ALPHA = Fraction(1, 6)
MAX_SOUND_DEPTH = 100


@dataclass(frozen=True)
class CertificateEntry:
    """One closed codeword with its path or path pair."""

    codeword: tuple[int, ...]
    paths: tuple[str, ...]

    @property
    def level(self) -> int:
        return len(self.codeword) - 1

    @property
    def display(self) -> str:
        return codeword_display(self.codeword)

    def min_ratio(self) -> Fraction:
        return min(Fraction(p.count("1"), len(p)) for p in self.paths)

    def to_line(self) -> str:
        parts = [self.display, str(self.level)]
        for p in self.paths:
            parts.append(str(len(p)))
            parts.append(p)
        return " ".join(parts)


@dataclass
class Certificate:
    alpha: Fraction
    mode: str
    entries: list[CertificateEntry]

    def __post_init__(self):
        if self.mode not in (PLAIN, STRONG):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def size(self) -> int:
        return len(self.entries)

    def max_weight(self) -> int:
        return max(e.level for e in self.entries)

    def max_depth(self) -> int:
        return max(len(p) for e in self.entries for p in e.paths)

    def min_ratio(self) -> Fraction:
        return min(e.min_ratio() for e in self.entries)

    def kraft_sum(self) -> Fraction:
        """Exact sum of 3^-length over entries plus the reserved word (0)."""
        return Fraction(1, 3) + sum(
            Fraction(1, POW3[len(e.codeword)]) for e in self.entries
        )

    def level_counts(self) -> list[tuple[int, int]]:
        """(level, number of entries with level >= that) for each level."""
        top = self.max_weight()
        return [
            (lv, sum(1 for e in self.entries if e.level >= lv))
            for lv in range(1, top + 1)
        ]

    def sorted_canonically(self) -> "Certificate":
        return replace(self, entries=sorted(self.entries, key=lambda e: e.codeword))

    def to_text(self) -> str:
        lines = [f"certificate v1 mode={self.mode} alpha={self.alpha.numerator}/{self.alpha.denominator}"]
        lines.extend(e.to_line() for e in self.entries)
        return "\n".join(lines) + "\n"


@dataclass
class Unclosed:
    """Search failure report: what was still open when the weight cap bit."""

    alpha: Fraction
    mode: str
    max_weight: int
    open_codewords: list[tuple[tuple[int, ...], Fraction | None]]


SearchOutcome = Certificate | Unclosed


@dataclass(frozen=True)
class Violation:
    """One verification failure, located as precisely as possible."""

    entry: str | None          # codeword display, or None for whole-file checks
    path_index: int | None
    position: int | None
    reason: str

    def __str__(self):
        where = []
        if self.entry is not None:
            where.append(f"entry {self.entry}")
        if self.path_index is not None:
            where.append(f"path {self.path_index + 1}")
        if self.position is not None:
            where.append(f"position {self.position}")
        prefix = ", ".join(where)
        return f"{prefix}: {self.reason}" if prefix else self.reason


def replay_path(codeword, path: str) -> Violation | None:
    """Replay an edge-label path from a codeword's residue class.

    Edge 0 is always legal (doubling).  Edge 1 needs the class mod 9 to be
    determined (exponent >= 2) and to lie in {2, 8}; it consumes one level
    of modulus knowledge.  Returns None if the whole path replays.
    """
    c = check_codeword(codeword)
    if c == (0,):
        return Violation(None, None, None, "reserved codeword (0) carries no paths")
    value = codeword_value(c)
    m = len(c)
    for i, ch in enumerate(path):
        if ch == "0":
            value = (2 * value) % POW3[m]
            continue
        if ch != "1":
            return Violation(codeword_display(c), None, i, f"bad edge label {ch!r}")
        if m < 2:
            return Violation(
                codeword_display(c), None, i,
                "1-edge after weight reached the level (class mod 9 undetermined)",
            )
        if value % 9 not in BRANCHING_MOD9:
            return Violation(
                codeword_display(c), None, i,
                f"1-edge at residue {value % 9} mod 9, not in {{2, 8}}",
            )
        value = ((2 * value - 1) // 3) % POW3[m - 1]
        m -= 1
    return None


def _entry_violations(entry: CertificateEntry, alpha: Fraction, mode: str) -> list[Violation]:
    out = []
    disp = entry.display
    want_paths = 2 if mode == STRONG else 1
    if len(entry.paths) != want_paths:
        out.append(Violation(disp, None, None,
                             f"{mode} entry carries {len(entry.paths)} paths, needs {want_paths}"))
    level = entry.level
    for i, p in enumerate(entry.paths):
        if not p:
            out.append(Violation(disp, i, None, "empty path"))
            continue
        v = replay_path(entry.codeword, p)
        if v is not None:
            out.append(Violation(disp, i, v.position, v.reason))
            continue
        w = p.count("1")
        if w > level:
            out.append(Violation(disp, i, None, f"path weight {w} exceeds level {level}"))
        elif w == level and p[-1] != "1":
            out.append(Violation(disp, i, None, "full-weight path must end with a 1-edge"))
        if w * alpha.denominator < alpha.numerator * len(p):
            out.append(Violation(
                disp, i, None,
                f"ones-ratio {w}/{len(p)} below alpha "
                f"{alpha.numerator}/{alpha.denominator}"))
    if mode == STRONG and len(entry.paths) == 2:
        a, b = entry.paths
        if a.startswith(b) or b.startswith(a):
            out.append(Violation(disp, None, None, "the two paths are prefix-related"))
    return out


def verify(cert: Certificate) -> list[Violation]:
    """Full independent check of a certificate; returns every violation found.

    Checks prefix-freeness, Kraft exhaustiveness against the reserved word
    (0), and per entry: path replay, weight bounds, terminal-bit rule, the
    ones-ratio floor, and (strong) mutual non-prefixness.
    """
    out: list[Violation] = []
    if not 0 < cert.alpha < 1:
        out.append(Violation(None, None, None, f"alpha {cert.alpha} out of range (0, 1)"))
    if not cert.entries:
        out.append(Violation(None, None, None, "certificate has no entries"))
        return out

    seen: dict[tuple[int, ...], int] = {}
    for e in cert.entries:
        if e.codeword in seen:
            out.append(Violation(e.display, None, None, "duplicate codeword"))
        seen[e.codeword] = 1
    words = sorted(seen)
    for a, b in zip(words, words[1:]):
        if b[: len(a)] == a:
            out.append(Violation(
                codeword_display(a), None, None,
                f"prefix of fellow codeword {codeword_display(b)}"))

    total = cert.kraft_sum()
    if total != 1:
        out.append(Violation(
            None, None, None,
            f"Kraft sum {total - Fraction(1, 3)} + 1/3 = {total} != 1 (code not exhaustive)"))

    for e in cert.entries:
        out.extend(_entry_violations(e, cert.alpha, cert.mode))
    return out


def parse_certificate(text: str) -> Certificate:
    """Parse the line-oriented certificate format; errors carry line numbers."""
    lines = text.split("\n")
    if text and not text.endswith("\n"):
        raise ValueError("line %d: missing trailing newline" % len(lines))
    header = None
    entries = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = _parse_header(line, lineno, "certificate")
            continue
        entries.append(_parse_entry(line, lineno))
    if header is None:
        raise ValueError("line 1: missing certificate header")
    mode, alpha = header
    return Certificate(alpha=alpha, mode=mode, entries=entries)


def _parse_header(line: str, lineno: int, kind: str) -> tuple[str, Fraction]:
    parts = line.split()
    if len(parts) != 4 or parts[0] != kind or parts[1] != "v1":
        raise ValueError(f"line {lineno}: bad {kind} header {line!r}")
    if not parts[2].startswith("mode=") or not parts[3].startswith("alpha="):
        raise ValueError(f"line {lineno}: bad {kind} header fields {line!r}")
    mode = parts[2][5:]
    if mode not in (PLAIN, STRONG):
        raise ValueError(f"line {lineno}: unknown mode {mode!r}")
    alpha = parse_ratio(parts[3][6:], lineno)
    return mode, alpha


def parse_ratio(text: str, lineno: int | None = None) -> Fraction:
    where = f"line {lineno}: " if lineno else ""
    num, sep, den = text.partition("/")
    if not sep or not num.isdigit() or not den.isdigit() or int(den) == 0:
        raise ValueError(f"{where}expected an exact ratio N/D, got {text!r}")
    return Fraction(int(num), int(den))


def _parse_entry(line: str, lineno: int) -> CertificateEntry:
    parts = line.split()
    if len(parts) not in (4, 6):
        raise ValueError(f"line {lineno}: entry needs 4 or 6 fields, got {len(parts)}")
    try:
        codeword = codeword_from_display(parts[0])
    except ValueError as exc:
        raise ValueError(f"line {lineno}: {exc}") from exc
    if not parts[1].isdigit() or int(parts[1]) != len(codeword) - 1:
        raise ValueError(
            f"line {lineno}: level {parts[1]} does not match codeword length "
            f"{len(codeword)}")
    paths = []
    for length_s, path in zip(parts[2::2], parts[3::2]):
        if not length_s.isdigit() or int(length_s) != len(path):
            raise ValueError(f"line {lineno}: path length {length_s} != {len(path)}")
        if any(ch not in "01" for ch in path):
            raise ValueError(f"line {lineno}: bad path string {path!r}")
        paths.append(path)
    return CertificateEntry(codeword=codeword, paths=tuple(paths))


def load_certificate(path) -> Certificate:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_certificate(fh.read())


def save_certificate(cert: Certificate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cert.to_text())


def search(
    alpha: Fraction,
    max_weight: int,
    mode: str = PLAIN,
    workers: int = 1,
    checkpoint: str | None = None,
    cache: dict | None = None,
) -> SearchOutcome:
    """Greedy exhaustive search for a certificate at the given ratio.

    Starts from the six two-digit codewords, repeatedly tests the deepest
    open codeword's tree, closing it with its path(s) or splitting it into
    its three one-digit extensions, until the code closes or a split would
    exceed max_weight.  Delegates scheduling to the engine.
    """
    from . import engine

    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 1 <= max_weight <= MAX_CODEWORD_LEN:
        raise ValueError(f"max_weight must be in [1, {MAX_CODEWORD_LEN}]")
    return engine.run(alpha, max_weight, mode, workers=workers,
                      checkpoint_path=checkpoint, cache=cache)


@dataclass
class SweepState:
    """Incremental maximal-ratio search, one level at a time.

    Level l starts from the champion ratio of level l-1 and repeatedly tests
    champion + 1/10000: a successful search promotes the champion to the
    certificate's own minimum path ratio (the bound it actually proves), a
    failure ends the level.  Growth results are cached across test values,
    which is sound because a codeword's tree does not depend on alpha.
    """

    mode: str = PLAIN
    workers: int = 1
    base_alpha: Fraction = SWEEP_BASE_ALPHA
    results: dict[int, tuple[Fraction, Certificate]] = field(default_factory=dict)
    cache: dict = field(default_factory=dict)

    def level(self, l: int) -> tuple[Fraction, Certificate]:
        if l < 1:
            raise ValueError("level must be >= 1")
        for ll in range(1, l + 1):
            if ll not in self.results:
                self._run_level(ll)
        return self.results[l]

    def _run_level(self, l: int) -> None:
        if l == 1:
            champion, champ_cert = self.base_alpha, None
        else:
            champion, champ_cert = self.results[l - 1]
        if champ_cert is None:
            outcome = search(champion, l, self.mode, self.workers, cache=self.cache)
            if isinstance(outcome, Unclosed):
                raise ValueError(
                    f"seed ratio {champion} does not close at weight {l}; "
                    f"lower the base ratio")
            champion = outcome.min_ratio()
            champ_cert = replace(outcome, alpha=champion)
        while True:
            test = champion + SWEEP_INCREMENT
            outcome = search(test, l, self.mode, self.workers, cache=self.cache)
            if isinstance(outcome, Unclosed):
                break
            champion = outcome.min_ratio()
            champ_cert = replace(outcome, alpha=champion)
            depth_cap = (l * champion.denominator) // champion.numerator
            if not champion.denominator <= depth_cap < MAX_SOUND_DEPTH:
                raise AssertionError(
                    f"champion {champion} at level {l} escapes the Farey-"
                    f"order guard (depth cap {depth_cap}); increment unsound")
        self.results[l] = (champion, champ_cert)


def max_alpha_at_level(
    l: int,
    seed: Fraction | None = None,
    mode: str = PLAIN,
    workers: int = 1,
    sweep: SweepState | None = None,
) -> tuple[Fraction, Certificate]:
    """Largest ratio certifiable with paths of at most l ones.

    With no explicit seed the sweep chains upward from level 1; passing a
    SweepState reuses earlier levels and the growth cache.
    """
    if sweep is None:
        sweep = SweepState(mode=mode, workers=workers)
        if seed is not None:
            sweep.base_alpha = seed
    return sweep.level(l)


@dataclass(frozen=True)
class WitnessRecord:
    n: int
    k: int
    ratio: Fraction


def _codeword_trie(cert: Certificate) -> dict:
    trie: dict = {}
    for e in cert.entries:
        node = trie
        for d in e.codeword[:-1]:
            node = node.setdefault(d, {})
        node[e.codeword[-1]] = e
    return trie


def _match_entry(trie: dict, n: int) -> CertificateEntry:
    node = trie
    v = n
    while True:
        v, digit = divmod(v, 3)
        nxt = node.get(digit)
        if nxt is None:
            raise ValueError(f"no codeword matches {n} (certificate not exhaustive?)")
        if isinstance(nxt, CertificateEntry):
            return nxt
        node = nxt


def _lift(n: int, path: str) -> int:
    """Walk a certificate path upward over the integers from n."""
    cur = n
    for ch in path:
        if ch == "0":
            cur = 2 * cur
        else:
            if cur % 3 != 2:
                raise AssertionError(f"1-edge lift illegal at {cur} (not 2 mod 3)")
            cur = (2 * cur - 1) // 3
    return cur


def _forward_check(n: int, k: int, target: int) -> str:
    """Iterate k steps, returning the parity string; asserts arrival."""
    bits = []
    v = n
    for _ in range(k):
        bits.append("1" if v % 2 else "0")
        v = t_map(v)
    if v != target:
        raise AssertionError(f"forward check failed: T^{k}({n}) = {v} != {target}")
    return "".join(bits)


def _on_cycle(a: int, probe: int = 10_000) -> bool:
    v = a
    for _ in range(probe):
        v = t_map(v)
        if v == a:
            return True
        if v == 1 and a != 1:
            return False
    return False


def witnesses(
    cert: Certificate,
    anchor: int,
    count: int,
    breadth: int = 1,
) -> list[WitnessRecord]:
    """Chains of preimages of the anchor with ones-ratio >= cert.alpha.

    Each round matches the current integer's low ternary digits against the
    certificate, lifts the matched entry's path over the integers, and
    verifies the new element by forward iteration.  Reported k and ratio are
    cumulative back to the anchor.  Anchor 1 lies on the 1-2 cycle, so the
    construction roots at 41 instead and folds 41's trajectory into the
    totals; other cyclic anchors escape through an off-cycle preimage.
    breadth=2 (strong certificates only) expands both paths per element,
    doubling the population each round.
    """
    if anchor < 1 or anchor % 3 == 0:
        raise ValueError("anchor must be a positive integer not divisible by 3")
    if count < 1:
        raise ValueError("count must be >= 1")
    if breadth not in (1, 2):
        raise ValueError("breadth must be 1 or 2")
    if breadth == 2 and cert.mode != STRONG:
        raise ValueError("breadth 2 needs a strong certificate")

    start = anchor
    suffix_k = 0
    suffix_ones = 0
    if _on_cycle(anchor):
        if anchor == 1:
            start = 41
        else:
            for pre in sorted(inverse_t(anchor)):
                if pre % 3 != 0 and not _on_cycle(pre):
                    start = pre
                    break
            else:
                raise AssertionError(f"no off-cycle escape preimage for {anchor}")
        parity = _forward_check(start, _steps_to(start, anchor), anchor)
        suffix_k = len(parity)
        suffix_ones = parity.count("1")

    trie = _codeword_trie(cert)
    out: list[WitnessRecord] = []
    # queue of (integer, cumulative steps to start, cumulative ones)
    queue: list[tuple[int, int, int]] = [(start, 0, 0)]
    while len(out) < count:
        n, k_acc, ones_acc = queue.pop(0)
        entry = _match_entry(trie, n)
        for path in entry.paths[:breadth]:
            lifted = _lift(n, path)
            parity = _forward_check(lifted, len(path), n)
            if parity != path[::-1]:
                raise AssertionError("forward parity disagrees with reversed path")
            k = k_acc + len(path)
            ones = ones_acc + path.count("1")
            record = WitnessRecord(
                lifted,
                k + suffix_k,
                Fraction(ones + suffix_ones, k + suffix_k),
            )
            out.append(record)
            queue.append((lifted, k, ones))
            if len(out) >= count:
                break
    return out


def _steps_to(n: int, target: int, cap: int = 10_000) -> int:
    v = n
    for k in range(1, cap + 1):
        v = t_map(v)
        if v == target:
            return k
    raise AssertionError(f"{n} did not reach {target} within {cap} steps")
