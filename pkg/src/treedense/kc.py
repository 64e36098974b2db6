"""Online prefix-free code allocation and pluggable complexity oracles.

The allocator keeps the free part of [0,1) as disjoint dyadic intervals,
identified with the bitstrings naming them. First-fit leftmost allocation
keeps the free interval sizes strictly increasing from left to right, so a
request fails exactly when its weight exceeds the total free weight.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

from .core import PreconditionError, check_bits, sort_strings
from .dyadic import Dyadic


@dataclass(frozen=True)
class KCRequest:
    """Ask for a code of the given length for the target string."""

    target: str
    code_length: int

    def __post_init__(self):
        check_bits(self.target)
        if self.code_length < 0:
            raise PreconditionError("code length must be >= 0")

    @property
    def weight(self) -> Dyadic:
        return Dyadic.pow2(-self.code_length)


class AllocationError(PreconditionError):
    """Raised when a request does not fit; carries the weight deficit."""

    def __init__(self, request: KCRequest, deficit: Dyadic):
        self.request = request
        self.deficit = deficit
        super().__init__(
            f"cannot place code of length {request.code_length}: "
            f"free weight short by {deficit}"
        )


@dataclass(frozen=True)
class KCAllocator:
    """Immutable allocator state; allocate() returns the successor state."""

    free: tuple[str, ...] = ("",)
    assigned: tuple[tuple[str, str], ...] = ()  # (codeword, target)

    @classmethod
    def fresh(cls) -> "KCAllocator":
        return cls()

    @property
    def assignments(self) -> dict[str, str]:
        """Shortest codeword per target."""
        best: dict[str, str] = {}
        for codeword, target in self.assigned:
            if target not in best or len(codeword) < len(best[target]):
                best[target] = codeword
        return best

    def free_weight(self) -> Dyadic:
        total = Dyadic.zero()
        for s in self.free:
            total = total + Dyadic.pow2(-len(s))
        return total

    def assigned_weight(self) -> Dyadic:
        total = Dyadic.zero()
        for codeword, _ in self.assigned:
            total = total + Dyadic.pow2(-len(codeword))
        return total

    def allocate(self, request: KCRequest) -> tuple["KCAllocator", str]:
        """Place the request in the leftmost fitting dyadic slot."""
        length = request.code_length
        for i, slot in enumerate(self.free):
            if len(slot) <= length:
                codeword = slot + "0" * (length - len(slot))
                pieces = [slot + "0" * j + "1" for j in range(length - len(slot))]
                free = sorted(self.free[:i] + self.free[i + 1 :] + tuple(pieces))
                return (
                    replace(
                        self,
                        free=tuple(free),
                        assigned=self.assigned + ((codeword, request.target),),
                    ),
                    codeword,
                )
        raise AllocationError(request, request.weight - self.free_weight())


def allocate_all(
    allocator: KCAllocator, requests: Iterable[KCRequest]
) -> tuple[KCAllocator, list[str]]:
    codewords = []
    for request in requests:
        allocator, codeword = allocator.allocate(request)
        codewords.append(codeword)
    return allocator, codewords


def deficiency_requests(levels: Mapping[int, Iterable[str]]) -> list[KCRequest]:
    """Turn per-level string sets into compression requests.

    Level n may carry at most 2**(-2n) of weight; each member then gets a code
    shorter than itself by n. The per-level bound makes the total emitted
    weight at most 1.
    """
    requests: list[KCRequest] = []
    for n in sorted(levels):
        if not isinstance(n, int) or n < 1:
            raise PreconditionError(f"level indices start at 1, got {n!r}")
        members = sort_strings(set(levels[n]))
        weight = Dyadic.zero()
        for sigma in members:
            check_bits(sigma)
            weight = weight + Dyadic.pow2(-len(sigma))
        if weight > Dyadic.pow2(-2 * n):
            raise PreconditionError(
                f"level {n} carries weight {weight} > {Dyadic.pow2(-2 * n)}"
            )
        requests.extend(KCRequest(sigma, len(sigma) - n) for sigma in members)
    return requests


# ---------------------------------------------------------------------------
# complexity oracles

@dataclass(frozen=True)
class ComplexityOracle:
    """Certified upper bounds on description length; None means no bound known."""

    upper: Callable[[str], int | None]
    provenance: str  # stub | kc-machine | external-compressor


def length_stub() -> ComplexityOracle:
    """Incompressibility stub: every string costs its own length."""
    return ComplexityOracle(upper=len, provenance="stub")


def table_oracle(table: Mapping[str, int], provenance: str = "stub") -> ComplexityOracle:
    frozen = dict(table)
    return ComplexityOracle(upper=frozen.get, provenance=provenance)


def machine_oracle(allocator: KCAllocator) -> ComplexityOracle:
    """Bounds read off the allocator's own code assignments."""
    best = {t: len(c) for t, c in allocator.assignments.items()}
    return ComplexityOracle(upper=best.get, provenance="kc-machine")


def compressor_oracle(level: int = 9) -> ComplexityOracle:
    """General-purpose compressor bound, in bits of compressed output."""

    def upper(s: str) -> int:
        return 8 * len(zlib.compress(s.encode("ascii"), level))

    return ComplexityOracle(upper=upper, provenance="external-compressor")


def incompressible_truncation(
    oracle: ComplexityOracle, c: int, depth: int
):
    """Tree of strings whose every prefix stays within c of full complexity.

    Keeps a string when no prefix has a certified bound below its length minus
    c; an upper-bound oracle can only remove, so this over-approximates the
    true incompressibility tree. Returns None when nothing survives.
    """
    from .core import FiniteTree

    if depth < 0:
        raise PreconditionError("depth must be >= 0")

    def ok(node: str) -> bool:
        bound = oracle.upper(node)
        return bound is None or bound >= len(node) - c

    frontier = [""] if ok("") else []
    for _ in range(depth):
        frontier = [w + b for w in frontier for b in "01" if ok(w + b)]
        if not frontier:
            return None
    if not frontier:
        return None
    return FiniteTree(depth, frozenset(frontier))


def checkpoint_deficiency(
    zprefix: str,
    checkpoints,
    oracle: ComplexityOracle,
    c: int,
) -> bool:
    """True when no checkpoint prefix is certified compressible by margin c."""
    check_bits(zprefix)
    n = 0
    while True:
        try:
            t = checkpoints.value(n)
        except IndexError:
            return True
        if t > len(zprefix):
            return True
        bound = oracle.upper(zprefix[:t])
        if bound is not None and bound <= t - c:
            return False
        n += 1
