"""Splitting a circuit into fragments for the garbage-collecting protocol."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..circuit import BEquiv, Circuit, Claim


@dataclass(frozen=True)
class Fragment:
    """A contiguous gate range ``[lo, hi)`` of the circuit and its bookkeeping."""
    lo: int
    hi: int
    claims: tuple  # claims whose assertion closes this fragment
    boundary: tuple[int, ...]  # gates of the range read by later fragments


def claim_gates(claim: Claim) -> tuple[int, ...]:
    if isinstance(claim, BEquiv):
        return (claim.gate1, claim.gate2)
    return (claim.gate,)


def plan_fragments(circuit: Circuit, claims: Sequence[Claim],
                   marks: Sequence[int] | None = None) -> list[Fragment]:
    """Cut the circuit after every assertion.

    ``marks[i]`` is the circuit length when claim ``i`` was asserted
    (``circuit.marks`` by default). Claims asserted at the same length share
    a fragment. Every claim lands in exactly one fragment.
    """
    marks = list(circuit.marks if marks is None else marks)
    if len(marks) != len(claims):
        raise ValueError(f"{len(claims)} claims but {len(marks)} assertion marks")
    n_gates = len(circuit)
    for m in marks:
        if not 0 <= m <= n_gates:
            raise ValueError(f"assertion mark {m} outside the circuit")
    cuts = sorted(set(marks) | {n_gates})
    ranges = []
    lo = 0
    for cut in cuts:
        ranges.append((lo, cut))
        lo = cut
    index_of_hi = {hi: i for i, (_, hi) in enumerate(ranges)}
    grouped: list[list[Claim]] = [[] for _ in ranges]
    for claim, m in zip(claims, marks):
        for g in claim_gates(claim):
            if not 0 <= g < m:
                raise ValueError(f"claim on g{g} asserted before the gate exists")
        grouped[index_of_hi[m]].append(claim)

    frag_of = [0] * n_gates
    for i, (lo, hi) in enumerate(ranges):
        for g in range(lo, hi):
            frag_of[g] = i
    boundary: list[set[int]] = [set() for _ in ranges]
    for gate in circuit.gates:
        fi = frag_of[gate.id]
        for ch in gate.children:
            if frag_of[ch] < fi:
                boundary[frag_of[ch]].add(ch)
    for fi, group in enumerate(grouped):
        for claim in group:
            for g in claim_gates(claim):
                if frag_of[g] < fi:
                    boundary[frag_of[g]].add(g)

    frags = [Fragment(lo, hi, tuple(grouped[i]), tuple(sorted(boundary[i])))
             for i, (lo, hi) in enumerate(ranges)]
    assert sum(len(f.claims) for f in frags) == len(claims)
    return frags
