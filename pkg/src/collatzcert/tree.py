"""Pruned 3x+1 tree growth over residue classes.

A codeword of length l+1 names a residue class mod 3^(l+1) and roots a tree
grown by the pruned inverse map.  Each 1-edge costs one level of modulus
knowledge, so a node known mod 3^m carries implicit path weight l+1-m; a node
reaching weight l (m=1) is frozen as a witness leaf.  Growth is breadth-first
and frontier-only: a node at depth d with weight w is pruned as soon as
w + (cap - d) < l, since no extension of it can reach weight l in time.

Also provides explicitly stored trees over integers and over residues for
structure comparison, and the structure census over all codewords of a
given length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .numth import (
    BRANCHING_MOD9,
    POW3,
    check_codeword,
    codeword_value,
)

MAX_INTEGER_TREE_DEPTH = 40
MAX_STRUCTURE_LEVEL = 8


def path_str(bits: int, length: int) -> str:
    """Render a packed root-to-node edge path, first edge leftmost."""
    return format(bits, f"0{length}b") if length else ""


def path_bits(s: str) -> tuple[int, int]:
    """Parse an edge-label string into (packed bits, length)."""
    if any(ch not in "01" for ch in s):
        raise ValueError(f"bad path string {s!r}")
    return (int(s, 2) if s else 0, len(s))


@dataclass
class GrowthRecord:
    """Everything one growth pass learned about a codeword's tree.

    ``witnesses`` holds the first (up to two) weight-l leaves in canonical
    order (depth, then lexicographic).  ``companions`` maps (depth, weight)
    to the two lexicographically least non-witness paths seen there; it is
    only populated when requested.  Levels 0..complete_to were expanded in
    full, so answers about shallower caps can be read off without regrowth.
    """

    codeword: tuple[int, ...]
    cap: int
    complete_to: int
    exhausted: bool
    witnesses: list[tuple[int, int]]          # (depth, packed path)
    companions: dict[tuple[int, int], list[int]] | None
    best_num: int                             # best weight/depth ratio seen,
    best_den: int                             # as an unreduced integer pair
    nodes_expanded: int
    frontier_peak: int
    pruned: bool = True

    @property
    def level(self) -> int:
        return len(self.codeword) - 1

    def witnesses_within(self, cap: int) -> list[tuple[int, int]]:
        return [w for w in self.witnesses if w[0] <= cap]

    def usable_for(self, cap: int, want: int) -> bool:
        """Can queries at this cap be answered without regrowing?"""
        if cap <= self.complete_to:
            return True
        if self.exhausted and cap <= self.cap:
            return True
        return len(self.witnesses_within(cap)) >= want

    def best_ratio(self) -> Fraction | None:
        if self.best_num == 0:
            return None
        return Fraction(self.best_num, self.best_den)


def grow_record(
    codeword,
    depth_cap: int,
    want_witnesses: int = 1,
    collect_companions: bool = False,
    prune: bool = True,
) -> GrowthRecord:
    """Breadth-first growth of the pruned tree rooted at a codeword.

    Stops at the end of the first depth where ``want_witnesses`` weight-l
    leaves have been frozen, or when the (pruned) frontier empties, or at
    depth_cap.  The frontier is kept in lexicographic path order throughout,
    so witnesses and companion candidates come out canonically ordered.
    """
    c = check_codeword(codeword)
    if len(c) < 2:
        raise ValueError("growth needs a codeword of length >= 2 (level >= 1)")
    if c[0] == 0:
        raise ValueError("cannot grow from the reserved codeword (0)")
    if depth_cap < 1:
        raise ValueError("depth_cap must be >= 1")
    if want_witnesses not in (1, 2):
        raise ValueError("want_witnesses must be 1 or 2")

    level1 = len(c)                      # l + 1; root modulus exponent
    pow3 = POW3
    values = [codeword_value(c)]
    mods = [level1]
    paths = [0]
    witnesses: list[tuple[int, int]] = []
    table: dict[tuple[int, int], list[int]] | None = {} if collect_companions else None
    nodes = 0
    peak = 1
    best_num, best_den = 0, 1
    d = 0
    exhausted = False

    while d < depth_cap and len(witnesses) < want_witnesses:
        d += 1
        slack = depth_cap - d if prune else level1
        nv: list[int] = []
        nm: list[int] = []
        np_: list[int] = []
        min_m = level1 + 1
        wit_level = 0
        for v, m, p in zip(values, mods, paths):
            two_v = v + v
            if m - 1 <= slack:
                nv.append(two_v % pow3[m])
                nm.append(m)
                np_.append(p + p)
                if m < min_m:
                    min_m = m
                if table is not None and m < level1:
                    key = (d, level1 - m)
                    bucket = table.get(key)
                    if bucket is None:
                        table[key] = [p + p]
                    elif len(bucket) < 2:
                        bucket.append(p + p)
            r = v % 9
            if r == 2 or r == 8:
                m1 = m - 1
                child = ((two_v - 1) // 3) % pow3[m1]
                p1 = p + p + 1
                if m1 == 1:
                    wit_level += 1
                    if len(witnesses) < 2:
                        witnesses.append((d, p1))
                elif m1 - 1 <= slack:
                    nv.append(child)
                    nm.append(m1)
                    np_.append(p1)
                    if m1 < min_m:
                        min_m = m1
                    if table is not None:
                        key = (d, level1 - m1)
                        bucket = table.get(key)
                        if bucket is None:
                            table[key] = [p1]
                        elif len(bucket) < 2:
                            bucket.append(p1)
        values, mods, paths = nv, nm, np_
        nodes += len(nv) + wit_level
        if len(nv) > peak:
            peak = len(nv)
        level_w = level1 - 1 if wit_level else (level1 - min_m if nv else -1)
        if level_w > 0 and level_w * best_den > best_num * d:
            best_num, best_den = level_w, d
        if not values:
            exhausted = True
            break

    return GrowthRecord(
        codeword=c,
        cap=depth_cap,
        complete_to=d,
        exhausted=exhausted,
        witnesses=witnesses,
        companions=table,
        best_num=best_num,
        best_den=best_den,
        nodes_expanded=nodes,
        frontier_peak=peak,
        pruned=prune,
    )


def find_companion(
    record: GrowthRecord,
    cap: int,
    alpha: Fraction,
    witness: tuple[int, int],
) -> tuple[int, int] | None:
    """Canonically least path of weight < l with ones-ratio >= alpha.

    Scans the companion table shallowest-depth-first, smallest path second,
    and skips paths that are prefixes of the given witness (the witness leaf
    is frozen, so no recorded path can extend it).  For alpha <= 1/2 every
    qualifying path survives the weight-targeted pruning; beyond that the
    record must come from an unpruned growth.
    """
    if record.companions is None:
        raise ValueError("growth record has no companion table")
    if 2 * alpha.numerator > alpha.denominator and record.pruned:
        raise ValueError(
            "companion search above ratio 1/2 needs an unpruned growth")
    wd, wp = witness
    an, ad = alpha.numerator, alpha.denominator
    best: tuple[int, int] | None = None
    for (d, w), bucket in record.companions.items():
        if d > cap or w * ad < an * d:
            continue
        for p in bucket:
            if d <= wd and (wp >> (wd - d)) == p:
                continue                      # ancestor of the witness
            if best is None or (d, p) < best:
                best = (d, p)
            break
    return best


@dataclass(frozen=True)
class ResidueNode:
    """One grown node: residue class, depth, and the path that reached it."""

    value: int
    exponent: int
    depth: int
    path: str

    @property
    def weight(self) -> int:
        return self.path.count("1")


@dataclass
class TreeReport:
    """Outcome of growing one codeword to criticality."""

    codeword: tuple[int, ...]
    critical_depth: int | None
    witnesses: list[str]
    nodes_expanded: int
    frontier_peak: int

    @property
    def level(self) -> int:
        return len(self.codeword) - 1


def grow_critical(codeword, depth_cap: int, want_witnesses: int = 1) -> TreeReport:
    """Grow until the first weight-l leaf appears (criticality).

    With want_witnesses=2 growth continues past the critical depth until a
    second weight-l leaf is frozen or the pruned frontier dies.  Witnesses
    come back shallowest-first, lexicographically smallest within a depth.
    """
    rec = grow_record(codeword, depth_cap, want_witnesses)
    crit = rec.witnesses[0][0] if rec.witnesses else None
    return TreeReport(
        codeword=rec.codeword,
        critical_depth=crit,
        witnesses=[path_str(p, d) for d, p in rec.witnesses[:want_witnesses]],
        nodes_expanded=rec.nodes_expanded,
        frontier_peak=rec.frontier_peak,
    )


def walk_nodes(codeword, depth_cap: int, stop_at_witnesses: int | None = 1):
    """Yield every grown ResidueNode in canonical (depth, lex) order.

    Mirrors grow_record's traversal, including pruning and witness freezing;
    used by the debug dump and the conservation checks.  stop_at_witnesses
    of None grows to the cap regardless of witnesses.
    """
    c = check_codeword(codeword)
    if c[0] == 0 or len(c) < 2:
        raise ValueError("cannot walk the reserved or level-0 codeword")
    level1 = len(c)
    frontier = [(codeword_value(c), level1, 0)]
    yield ResidueNode(frontier[0][0], level1, 0, "")
    found = 0
    d = 0
    while frontier and d < depth_cap and (stop_at_witnesses is None or found < stop_at_witnesses):
        d += 1
        slack = depth_cap - d
        nxt = []
        for v, m, p in frontier:
            if m - 1 <= slack:
                node = ((2 * v) % POW3[m], m, p + p)
                nxt.append(node)
                yield ResidueNode(node[0], m, d, path_str(p + p, d))
            if v % 9 in BRANCHING_MOD9:
                child = ((2 * v - 1) // 3) % POW3[m - 1]
                p1 = p + p + 1
                if m - 1 == 1:
                    found += 1
                    yield ResidueNode(child, 1, d, path_str(p1, d))
                elif m - 2 <= slack:
                    nxt.append((child, m - 1, p1))
                    yield ResidueNode(child, m - 1, d, path_str(p1, d))
        frontier = nxt


@dataclass
class TreeNode:
    """Explicitly stored tree node; children keyed by edge label."""

    label: int
    children: list[tuple[int, "TreeNode"]] = field(default_factory=list)


@dataclass
class IntegerTree:
    root: TreeNode
    depth: int
    node_count: int
    leaf_count: int
    max_weight: int


def grow_integer_tree(a: int, depth: int) -> IntegerTree:
    """Full pruned tree of integer inverse iterates of a.

    Nodes divisible by 3 are never created; each edge carries the parity of
    its child.  Bounded to depth 40: these trees hold every node explicitly.
    """
    if a < 1:
        raise ValueError("root must be >= 1")
    if a % 3 == 0:
        raise ValueError("root divisible by 3 lies outside the pruned tree")
    if depth > MAX_INTEGER_TREE_DEPTH:
        raise ValueError(f"depth {depth} exceeds the {MAX_INTEGER_TREE_DEPTH} guard")
    root = TreeNode(a)
    frontier = [(root, 0)]
    count = 1
    leaves = 0
    max_w = 0
    for d in range(depth):
        nxt = []
        for node, w in frontier:
            n = node.label
            node.children.append((0, TreeNode(2 * n)))
            if n % 9 in BRANCHING_MOD9:
                node.children.append((1, TreeNode((2 * n - 1) // 3)))
            for bit, child in node.children:
                cw = w + bit
                if cw > max_w:
                    max_w = cw
                nxt.append((child, cw))
            count += len(node.children)
        frontier = nxt
    leaves = len(frontier)
    return IntegerTree(root, depth, count, leaves, max_w)


def grow_residue_tree(codeword, depth: int) -> TreeNode:
    """Explicit residue tree for structure comparison.

    Raises if an expansion would need a node known only mod 3 (the class
    mod 9, hence the branching, would be undetermined).
    """
    c = check_codeword(codeword)
    if c[0] == 0:
        raise ValueError("cannot grow the reserved codeword")
    m0 = len(c)
    root = TreeNode(codeword_value(c))
    frontier = [(root, m0)]
    for _ in range(depth):
        nxt = []
        for node, m in frontier:
            if m < 2:
                raise ValueError("residue too coarse to branch (need exponent >= 2)")
            v = node.label
            node.children.append((0, TreeNode((2 * v) % POW3[m])))
            nxt.append((node.children[-1][1], m))
            if v % 9 in BRANCHING_MOD9:
                node.children.append((1, TreeNode(((2 * v - 1) // 3) % POW3[m - 1])))
                nxt.append((node.children[-1][1], m - 1))
        frontier = nxt
    return root


def structure_signature(root: TreeNode) -> str:
    """Canonical string equal for two trees iff they share structure.

    Structure means rooted, edge-label-preserving isomorphism; labels on the
    nodes themselves are ignored.  Children are serialized 0-edge first.
    """
    parts = []

    def rec(node: TreeNode):
        parts.append("(")
        for bit, child in sorted(node.children, key=lambda bc: bc[0]):
            parts.append(str(bit))
            rec(child)
        parts.append(")")

    rec(root)
    return "".join(parts)


def count_structures(k: int) -> int:
    """Number of distinct depth-k pruned tree structures over all codewords
    of length k+1.  Bounded by 2*3^k, which is asserted."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > MAX_STRUCTURE_LEVEL:
        raise ValueError(
            f"structure census refused for k > {MAX_STRUCTURE_LEVEL}: "
            f"2*3^{k} trees is past the enumeration budget"
        )
    seen = set()
    for value in range(1, POW3[k + 1]):
        if value % 3 == 0:
            continue
        digits = []
        v = value
        for _ in range(k + 1):
            v, r = divmod(v, 3)
            digits.append(r)
        seen.add(structure_signature(grow_residue_tree(tuple(digits), k)))
    assert len(seen) <= 2 * POW3[k]
    return len(seen)


def frontier_count(codeword, depth: int) -> int:
    """Number of depth-``depth`` nodes of the unpruned tree of a codeword."""
    c = check_codeword(codeword)
    frontier = [(codeword_value(c), len(c))]
    for _ in range(depth):
        nxt = []
        for v, m in frontier:
            if m < 2:
                raise ValueError("residue too coarse to branch")
            nxt.append(((2 * v) % POW3[m], m))
            if v % 9 in BRANCHING_MOD9:
                nxt.append((((2 * v - 1) // 3) % POW3[m - 1], m - 1))
        frontier = nxt
    return len(frontier)
