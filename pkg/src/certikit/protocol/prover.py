"""The prover: answers challenges about a degree-reduced circuit from BDDs.

The prover replays the circuit through a BDD engine to obtain the final BDD of
every gate, and builds an eBDD for every boolean gate so that each stage of
its degree-reduction chain can be evaluated in time linear in the eBDD.

In fragment mode (the garbage-collecting protocol) gates are built one
fragment at a time. When the verifier moves past a fragment, the prover
discards that fragment's eBDDs and the BDDs of gates no later fragment reads,
then runs the engine's collector.

Answers depend only on the challenged gate and the challenge itself; the
per-challenge memo is dropped after every answer.
"""
from __future__ import annotations

import logging
from typing import Sequence

from ..bdd import BDD, BinOp, RenameOrderError, TRUE
from ..circuit import Circuit, GateKind
from ..ebdd import NO_STAGE, EbddStore, ProtocolFault, poly_coeffs
from .fragments import Fragment
from .messages import (AnswerAssignment, AnswerPoint, AnswerPoly, ChallengeDistinct,
                       ChallengeEval, Message, Verdict)

log = logging.getLogger(__name__)


class Prover:
    """Honest prover for a circuit produced by :func:`certikit.circuit.conv`."""

    def __init__(self, circuit: Circuit, bdd: BDD | None = None,
                 fragments: Sequence[Fragment] | None = None) -> None:
        self.c = circuit
        self.bdd = bdd if bdd is not None else BDD(circuit.n, cache_bits=16)
        self.node: list[int | None] = [None] * len(circuit)
        self.chain: dict[int, int] = {}
        self.store = EbddStore(self.bdd)
        self.fragments = list(fragments) if fragments is not None else None
        self.peak_nodes = 0
        self.faults = 0
        self.answered = 0
        if self.fragments is None:
            self._build(0, len(circuit))
        else:
            self._current = -1
            self._retained: set[int] = set()

    # -- building -------------------------------------------------------

    @property
    def live_nodes(self) -> int:
        return self.bdd.live_count + len(self.store)

    def _note_peak(self) -> None:
        live = self.live_nodes
        if live > self.peak_nodes:
            self.peak_nodes = live

    def _build(self, lo: int, hi: int) -> None:
        bdd, store, node = self.bdd, self.store, self.node
        for g in range(lo, hi):
            gate = self.c.gates[g]
            k = gate.kind
            ch = gate.children
            if k == GateKind.CONST:
                f = gate.bit
            elif k == GateKind.VAR:
                f = bdd.var_node(gate.var)
            elif k == GateKind.NOT:
                w = store.apply_ebdd(node[ch[0]], TRUE, BinOp.NAND)
                self.chain[g] = w
                f = store.final(w)
            elif k == GateKind.BINOP:
                w = store.apply_ebdd(node[ch[0]], node[ch[1]], gate.op)
                self.chain[g] = w
                f = store.final(w)
            elif k == GateKind.PROJ:
                f = bdd.restrict(node[ch[0]], gate.var, gate.bit)
            elif k == GateKind.RENAME:
                a = node[ch[0]]
                try:
                    f = bdd.rename(a, gate.var, gate.target)
                except RenameOrderError:
                    f = bdd.compose(a, gate.var, bdd.var_node(gate.target))
            elif k == GateKind.DEGREE:
                f = node[ch[0]]
            else:
                raise ProtocolFault("the prover cannot rebuild an epsilon gate")
            node[g] = bdd.ref(f)
        self._note_peak()

    def _drop(self, g: int) -> None:
        f = self.node[g]
        if f is not None:
            self.bdd.deref(f)
            self.node[g] = None
        self.chain.pop(g, None)

    def _rewind(self) -> None:
        """Forget every fragment so a new protocol run can start over."""
        self.store.release()
        self.chain.clear()
        for g in range(len(self.node)):
            self._drop(g)
        self._retained.clear()
        self._current = -1
        self.bdd.gc()

    def _advance_to(self, g: int) -> None:
        """Make sure the fragment containing gate ``g`` is built."""
        frags = self.fragments
        if self._current >= 0 and g < frags[self._current].lo:
            self._rewind()
        while True:
            cur = self._current
            if cur >= 0 and g < frags[cur].hi:
                return
            if cur + 1 >= len(frags):
                return
            if cur >= 0:
                self._finish(frags[cur])
            self._current = cur + 1
            fr = frags[self._current]
            self._build(fr.lo, fr.hi)

    def _finish(self, fr: Fragment) -> None:
        self._note_peak()
        self._retained.update(fr.boundary)
        self.store.release()
        self.chain.clear()
        for g in range(fr.lo, fr.hi):
            if g not in self._retained:
                self._drop(g)
        self.bdd.gc()

    # -- answering ------------------------------------------------------

    def _final(self, g: int) -> int:
        if not 0 <= g < len(self.node):
            raise ProtocolFault(f"unknown gate {g}")
        if self.fragments is not None and self.node[g] is None:
            self._advance_to(g)
        f = self.node[g]
        if f is None:
            raise ProtocolFault(f"gate {g} is no longer available")
        return f

    def evaluate(self, g: int, sigma: Sequence[int], free: int | None = None):
        f = self._final(g)
        gate = self.c.gates[g]
        store = self.store
        if gate.kind in (GateKind.BINOP, GateKind.NOT):
            return store.answer_challenge(self.chain[g], sigma, NO_STAGE, free)
        if gate.kind == GateKind.DEGREE and gate.origin >= 0 and gate.origin in self.chain:
            return store.answer_challenge(self.chain[gate.origin], sigma, gate.var, free)
        return store.answer_challenge(f, sigma, NO_STAGE, free)

    def distinguish(self, g1: int, g2: int) -> tuple[int, ...]:
        # resolving the second gate may rewind and collect the first one's node
        self._final(g1)
        self._final(g2)
        return tuple(self.store.challenge_distinct(self._final(g1), self._final(g2), self.c.n))

    def handle(self, msg: Message) -> Message | None:
        self.answered += 1
        try:
            if isinstance(msg, ChallengeEval):
                value = self.evaluate(msg.gate, msg.sigma, msg.free)
                if msg.free is None:
                    return AnswerPoint(value if isinstance(value, int) else value[0])
                return AnswerPoly(poly_coeffs(value))
            if isinstance(msg, ChallengeDistinct):
                return AnswerAssignment(self.distinguish(msg.gate1, msg.gate2))
            if isinstance(msg, Verdict):
                # a verdict ends the run; the next one starts from the inputs
                if self.fragments is not None and self._current >= 0:
                    self._rewind()
                return None
        except ProtocolFault as exc:
            self.faults += 1
            log.warning("prover fault: %s", exc)
            if isinstance(msg, ChallengeDistinct):
                return AnswerAssignment((0,) * self.c.n)
            if isinstance(msg, ChallengeEval) and msg.free is not None:
                return AnswerPoly((0, 0, 0))
            return AnswerPoint(0)
        raise ProtocolFault(f"unexpected message {type(msg).__name__}")
