"""Solve a model-checking instance and certify its trace.

:func:`prepare` runs the checker once and builds the circuit and its claims;
the resulting :class:`Instance` can then be certified any number of times
with different seeds, modes and (for experiments) dishonest provers.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .circuit import AssertEquiv, Circuit, Claim, Trace, conv, remap_claim, to_circuit
from .modelcheck.checker import CheckResult, check
from .modelcheck.parser import Ctl, Model
from .protocol.channel import Channel, LocalChannel
from .protocol.fragments import Fragment, plan_fragments
from .protocol.prover import Prover
from .protocol.tamper import TamperingProver, TamperSpec, flip_assertion
from .protocol.verifier import ProtocolResult, run_protocol, run_protocol_gc


@dataclass
class Instance:
    """A trace turned into a degree-reduced circuit and its claims."""
    trace: Trace
    n: int
    base: Circuit  # one gate per library call
    circuit: Circuit  # with degree-reduction chains
    claims: list[Claim]
    inputs: dict = field(default_factory=dict)
    answer: bool | None = None
    timings: dict[str, float] = field(default_factory=dict)
    _fragments: list[Fragment] | None = None
    _provers: dict[bool, Prover] = field(default_factory=dict)

    @property
    def trace_length(self) -> int:
        return len(self.trace)

    @property
    def fragments(self) -> list[Fragment]:
        if self._fragments is None:
            self._fragments = plan_fragments(self.circuit, self.claims)
        return self._fragments

    def prover(self, gc: bool = False) -> Prover:
        """The honest prover, built on first use and shared afterwards."""
        pr = self._provers.get(gc)
        if pr is None:
            t0 = time.perf_counter()
            pr = Prover(self.circuit, fragments=self.fragments if gc else None)
            self.timings["prover_build" + ("_gc" if gc else "")] = time.perf_counter() - t0
            self._provers[gc] = pr
        return pr


def instance_from_trace(trace: Trace, inputs, n: int, answer: bool | None = None) -> Instance:
    t0 = time.perf_counter()
    base, claims, _ = to_circuit(trace, inputs, n)
    circuit = conv(base)
    claims = [remap_claim(c, circuit.top_of) for c in claims]
    inst = Instance(trace, n, base, circuit, claims, dict(inputs), answer)
    inst.timings["circuit"] = time.perf_counter() - t0
    return inst


def trace_answer(trace: Trace) -> bool | None:
    """The answer a checker trace ends with: its final ``equiv(_, false)`` bit."""
    asserts = trace.assertions()
    if asserts and isinstance(asserts[-1], AssertEquiv) and asserts[-1].b == "false":
        return bool(asserts[-1].bit)
    return None


def prepare(model: Model, formula: Ctl) -> Instance:
    t0 = time.perf_counter()
    res: CheckResult = check(model, formula)
    solve_time = time.perf_counter() - t0
    inst = instance_from_trace(res.trace, res.inputs, res.n, res.answer)
    inst.timings["solve"] = solve_time
    return inst


def with_flipped_assertion(inst: Instance, index: int) -> Instance:
    """The same instance with trace assertion ``index`` flipped.

    Only the claims change, so the result shares the honest prover.
    """
    trace = flip_assertion(inst.trace, index)
    base, claims, _ = to_circuit(trace, inst.inputs, inst.n)
    circuit = conv(base)
    assert len(circuit) == len(inst.circuit)
    out = Instance(trace, inst.n, inst.base, inst.circuit,
                   [remap_claim(c, circuit.top_of) for c in claims], inst.inputs, inst.answer)
    out._provers = inst._provers
    return out


def certify(inst: Instance, seed: int, repetitions: int = 1, gc: bool = False,
            tamper: TamperSpec | None = None, channel: Channel | None = None,
            wire: bool = True) -> tuple[ProtocolResult, LocalChannel | Channel]:
    """Run the protocol on ``inst`` against its honest (or tampered) prover."""
    responder = prover = inst.prover(gc)
    if tamper is not None:
        if tamper.kind == "flip-assert":
            inst = with_flipped_assertion(inst, tamper.index)
        else:
            responder = TamperingProver(prover, tamper)
    if channel is None:
        channel = LocalChannel(responder, wire=wire)
    if gc:
        res = run_protocol_gc(inst.circuit, inst.fragments, channel, seed, repetitions,
                              base_size=len(inst.base))
    else:
        res = run_protocol(inst.circuit, inst.claims, channel, seed, repetitions,
                           base_size=len(inst.base))
    return res, channel
