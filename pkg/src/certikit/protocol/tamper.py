"""Dishonest provers and trace corruption for soundness experiments.

Each tamper class corrupts exactly one thing:

* ``flip-assert:i`` flips the expected bit of the ``i``-th trace assertion;
* ``poly:i[:j]`` adds one to coefficient ``j`` (default 0) of the ``i``-th polynomial answer;
* ``point:i`` adds one to the ``i``-th point answer;
* ``distinct:i`` replaces the ``i``-th distinguishing assignment with one on
  which both functions agree.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..bdd import BinOp
from ..circuit import AssertCount, AssertEquiv, AssertEval, Trace
from ..field import P
from .messages import AnswerAssignment, AnswerPoint, AnswerPoly, ChallengeDistinct, Message
from .prover import Prover

TAMPER_CLASSES = ("flip-assert", "poly", "point", "distinct")


@dataclass(frozen=True)
class TamperSpec:
    kind: str
    index: int = 0
    coef: int = 0

    def __str__(self) -> str:
        if self.kind == "poly" and self.coef:
            return f"poly:{self.index}:{self.coef}"
        return f"{self.kind}:{self.index}"


def parse_tamper(text: str) -> TamperSpec:
    parts = text.split(":")
    kind = parts[0]
    if kind not in TAMPER_CLASSES or len(parts) > (3 if kind == "poly" else 2):
        raise ValueError(f"unknown tamper {text!r}; use one of {', '.join(TAMPER_CLASSES)}")
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise ValueError(f"tamper indices must be integers in {text!r}") from None
    spec = TamperSpec(kind, *nums)
    if spec.index < 0 or not 0 <= spec.coef <= 2:
        raise ValueError(f"tamper index out of range in {text!r}")
    return spec


def flip_assertion(trace: Trace, index: int) -> Trace:
    """Copy of ``trace`` whose ``index``-th assertion claims the opposite."""
    out = Trace(trace.inputs)
    seen = 0
    for instr in trace.instructions:
        if isinstance(instr, (AssertEquiv, AssertEval, AssertCount)):
            if seen == index:
                if isinstance(instr, AssertCount):
                    instr = replace(instr, k=instr.k + 1)
                else:
                    instr = replace(instr, bit=1 - instr.bit)
            seen += 1
        out.record(instr)
    if index >= seen:
        raise IndexError(f"trace has {seen} assertions, no assertion {index}")
    return out


class TamperingProver:
    """Wraps an honest prover and corrupts one answer.

    ``fired`` tells whether the corrupted answer was actually sent;
    ``applicable`` is False when a ``distinct`` tamper found no assignment on
    which both functions agree (they are complements).
    """

    def __init__(self, prover: Prover, spec: TamperSpec) -> None:
        if spec.kind == "flip-assert":
            raise ValueError("assertion flips corrupt the trace, not the prover")
        self.prover = prover
        self.spec = spec
        self.seen = 0
        self.fired = False
        self.applicable = True

    def handle(self, msg: Message) -> Message | None:
        reply = self.prover.handle(msg)
        spec = self.spec
        if spec.kind == "poly" and isinstance(reply, AnswerPoly):
            if self._hit():
                c = list(reply.coeffs)
                c[spec.coef] = (c[spec.coef] + 1) % P
                reply = AnswerPoly(tuple(c))
        elif spec.kind == "point" and isinstance(reply, AnswerPoint):
            if self._hit():
                reply = AnswerPoint((reply.value + 1) % P)
        elif spec.kind == "distinct" and isinstance(reply, AnswerAssignment):
            if self._hit():
                reply = self._agreeing(msg, reply)
        return reply

    def _hit(self) -> bool:
        hit = self.seen == self.spec.index
        self.seen += 1
        if hit:
            self.fired = True
        return hit

    def _agreeing(self, msg: ChallengeDistinct, honest: AnswerAssignment) -> AnswerAssignment:
        pr = self.prover
        bdd = pr.bdd
        same = bdd.apply(pr._final(msg.gate1), pr._final(msg.gate2), BinOp.XNOR)
        sat = bdd.sat_one(same)
        if sat is None:
            self.applicable = False
            self.fired = False
            return honest
        sigma = [0] * pr.c.n
        for x, b in sat.items():
            sigma[x] = b
        return AnswerAssignment(tuple(sigma))
