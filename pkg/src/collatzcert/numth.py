"""Exact integer and residue arithmetic for the 3x+1 map.

Forward iteration (trajectories and their statistics), the multivalued
inverse map, the pruned inverse map on residue classes mod 3^m, and
conversions between ternary codewords and the residue classes they name.
All decisions are made in exact arithmetic; the only float anywhere is the
log-scaled stopping ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

# Codeword lengths (and residue exponents) are capped so residue values stay
# bounded by 3^81; the search never needs more at any reachable scale.
MAX_CODEWORD_LEN = 80

POW3 = [3**i for i in range(MAX_CODEWORD_LEN + 2)]

# Residue classes mod 9 whose pruned inverse has a second (odd) preimage.
BRANCHING_MOD9 = (2, 8)

DEFAULT_TRAJECTORY_CAP = 100_000


def t_map(n: int) -> int:
    """One 3x+1 step: n/2 for even n, (3n+1)/2 for odd n."""
    if n < 1:
        raise ValueError("t_map requires n >= 1")
    return n // 2 if n % 2 == 0 else (3 * n + 1) // 2


@dataclass(frozen=True)
class TrajectoryReport:
    """Forward-iteration record for one starting value.

    ``steps`` is the total stopping time (iterations until the value 1 is
    reached) or None if the iteration budget ran out first.  ``parity`` holds
    one bit per recorded step: the parity of the value *before* each step.
    """

    n: int
    steps: int | None
    parity: str
    ones_ratio: Fraction | None
    log_ratio: float | None

    @property
    def converged(self) -> bool:
        return self.steps is not None


def trajectory(n: int, cap: int = DEFAULT_TRAJECTORY_CAP) -> TrajectoryReport:
    """Iterate t_map from n until 1 is reached or ``cap`` steps elapse.

    Running out of budget is a normal outcome (steps=None), not an error.
    n=1 is accepted with zero steps.
    """
    if n < 1:
        raise ValueError("trajectory requires n >= 1")
    if cap < 1:
        raise ValueError("trajectory requires cap >= 1")
    bits = []
    value = n
    while value != 1 and len(bits) < cap:
        bits.append("1" if value % 2 else "0")
        value = t_map(value)
    parity = "".join(bits)
    if value != 1:
        return TrajectoryReport(n, None, parity, None, None)
    steps = len(bits)
    ratio = Fraction(parity.count("1"), steps) if steps else None
    log_ratio = steps / math.log(n) if n > 1 else None
    return TrajectoryReport(n, steps, parity, ratio, log_ratio)


def stopping_profile(limit: int, cap: int = 10_000) -> tuple[list[int], list[int]]:
    """Total stopping times and odd-step counts for all 1 <= n <= limit.

    Memoizes downward: values below the current n are already solved, so each
    n only walks until its orbit drops under n.  Returns (steps, ones) lists
    indexed by n; steps[n] = -1 marks a cap overrun.
    """
    steps = [0] * (limit + 1)
    ones = [0] * (limit + 1)
    for n in range(2, limit + 1):
        v = n
        s = 0
        o = 0
        while v >= n:
            if v % 2:
                v = (3 * v + 1) // 2
                o += 1
            else:
                v //= 2
            s += 1
            if s > cap:
                steps[n] = -1
                break
        else:
            total = s + steps[v]
            steps[n] = -1 if steps[v] == -1 or total > cap else total
            ones[n] = o + ones[v]
    return steps, ones


def inverse_t(n: int) -> set[int]:
    """All preimages of n under t_map: {2n}, plus (2n-1)/3 when n = 2 mod 3."""
    if n < 1:
        raise ValueError("inverse_t requires n >= 1")
    pre = {2 * n}
    if n % 3 == 2:
        pre.add((2 * n - 1) // 3)
    return pre


@dataclass(frozen=True)
class Residue:
    """A residue class value mod 3^exponent."""

    value: int
    exponent: int

    def __post_init__(self):
        if not 1 <= self.exponent <= MAX_CODEWORD_LEN + 1:
            raise ValueError(f"exponent {self.exponent} out of range")
        if not 0 <= self.value < POW3[self.exponent]:
            raise ValueError(f"value {self.value} not reduced mod 3^{self.exponent}")

    def __str__(self):
        return f"{self.value} mod 3^{self.exponent}"


def inverse_t_star_residue(node: Residue) -> list[tuple[int, Residue]]:
    """Pruned inverse step on a residue class, as (edge_label, child) pairs.

    Edge 0 always exists: 2*value mod 3^m.  Edge 1 exists exactly when the
    class mod 9 is 2 or 8; it costs one level of modulus knowledge, so the
    child is known only mod 3^(m-1).  Branching requires m >= 2: with only
    the value mod 3 the class mod 9 is undetermined.
    """
    if node.exponent < 2:
        raise ValueError("residue too coarse to branch (need exponent >= 2)")
    if node.value % 3 == 0:
        raise ValueError("pruned tree excludes classes divisible by 3")
    m = node.exponent
    out = [(0, Residue((2 * node.value) % POW3[m], m))]
    if node.value % 9 in BRANCHING_MOD9:
        child = ((2 * node.value - 1) // 3) % POW3[m - 1]
        out.append((1, Residue(child, m - 1)))
    return out


def check_codeword(digits) -> tuple[int, ...]:
    """Validate a ternary codeword and return it as a tuple.

    The low digit names the class mod 3 and must be 1 or 2; the single
    reserved word (0,) that completes the prefix code is also accepted.
    """
    c = tuple(digits)
    if not c:
        raise ValueError("empty codeword")
    if len(c) > MAX_CODEWORD_LEN:
        raise ValueError(f"codeword longer than {MAX_CODEWORD_LEN} digits")
    if any(d not in (0, 1, 2) for d in c):
        raise ValueError(f"codeword digits must be 0, 1 or 2: {c}")
    if c[0] == 0 and c != (0,):
        raise ValueError("low digit 0 is reserved for the exhaustiveness word (0)")
    return c


def codeword_to_residue(c) -> Residue:
    """The residue class named by a codeword: sum of c_j 3^j mod 3^len."""
    c = check_codeword(c)
    return Residue(sum(d * POW3[j] for j, d in enumerate(c)), len(c))


def codeword_value(c) -> int:
    return sum(d * POW3[j] for j, d in enumerate(c))


def codeword_display(c) -> str:
    """Print digits most-significant-first, preserving leading zeros."""
    c = check_codeword(c)
    return "".join(str(d) for d in reversed(c))


def codeword_from_display(s: str) -> tuple[int, ...]:
    """Parse a most-significant-first digit string back into a codeword."""
    if not s or any(ch not in "012" for ch in s):
        raise ValueError(f"bad ternary display string {s!r}")
    return check_codeword(tuple(int(ch) for ch in reversed(s)))


def codeword_of_int(n: int, length: int) -> tuple[int, ...]:
    """The length-digit ternary expansion of n, low digit first."""
    if n < 0:
        raise ValueError("negative value has no codeword")
    digits = []
    for _ in range(length):
        n, d = divmod(n, 3)
        digits.append(d)
    return tuple(digits)
