"""Symbolic CTL model checking that records its own execution trace.

Every BDD library call the checker makes goes through :class:`TracingSolver`,
which performs the call and logs it, so the trace replays the solve exactly.
Fixpoint loops log whether each new iterate differs from the previous one, and
the final answer is logged as an equivalence with ``false``.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..bdd import BDD, FALSE, TRUE, BinOp, RenameOrderError
from ..circuit import (AssertEquiv, ApplyInstr, FConst, FNot, Formula, FVar,
                       RenameInstr, RestrictInstr, Trace)
from .parser import CAtom, CBin, CConst, CNot, Ctl, CTemporal, Model, existential


def label_input(name: str) -> str:
    return f"label.{name}"


def model_inputs(model: Model) -> dict[str, Formula]:
    """The named input formulas a trace of this model may read."""
    inputs = {"init": model.init, "trans": model.trans}
    for name, f in model.labels.items():
        inputs[label_input(name)] = f
    return inputs


def build_formula(bdd: BDD, f: Formula) -> int:
    if isinstance(f, FConst):
        return TRUE if f.value else FALSE
    if isinstance(f, FVar):
        return bdd.var_node(f.index)
    if isinstance(f, FNot):
        return bdd.negate(build_formula(bdd, f.arg))
    return bdd.apply(build_formula(bdd, f.left), build_formula(bdd, f.right), f.op)


class TracingSolver:
    """A BDD engine front-end whose calls are recorded into a :class:`Trace`."""

    def __init__(self, n: int, inputs: dict[str, Formula]) -> None:
        self.bdd = BDD(n)
        self.n = n
        self.inputs = inputs
        self.trace = Trace(inputs)
        self.value: dict[str, int] = {"true": TRUE, "false": FALSE}

    def get(self, name: str) -> int:
        f = self.value.get(name)
        if f is None:
            if name in self.inputs:
                f = build_formula(self.bdd, self.inputs[name])
            elif name.startswith("x") and name[1:].isdigit():
                f = self.bdd.var_node(int(name[1:]))
            else:
                raise KeyError(name)
            self.value[name] = self.bdd.ref(f)
        return f

    def _set(self, name: str, f: int) -> str:
        self.value[name] = self.bdd.ref(f)
        return name

    def apply(self, a: str, b: str, op: BinOp) -> str:
        f = self.bdd.apply(self.get(a), self.get(b), op)
        out = self.trace.record(ApplyInstr(self.trace.fresh(), a, b, BinOp(op)))
        return self._set(out, f)

    def negate(self, a: str) -> str:
        return self.apply(a, "true", BinOp.NAND)

    def restrict(self, a: str, x: int, bit: int) -> str:
        f = self.bdd.restrict(self.get(a), x, bit)
        out = self.trace.record(RestrictInstr(self.trace.fresh(), a, x, bit))
        return self._set(out, f)

    def exists(self, a: str, x: int) -> str:
        return self.apply(self.restrict(a, x, 0), self.restrict(a, x, 1), BinOp.OR)

    def rename(self, a: str, x: int, y: int) -> str:
        src = self.get(a)
        try:
            f = self.bdd.rename(src, x, y)
        except RenameOrderError:
            f = self.bdd.compose(src, x, self.bdd.var_node(y))
        out = self.trace.record(RenameInstr(self.trace.fresh(), a, x, y))
        return self._set(out, f)

    def equiv(self, a: str, b: str) -> int:
        """Decide ``a == b`` and record the decision as an assertion."""
        bit = int(self.get(a) == self.get(b))
        self.trace.record(AssertEquiv(a, b, bit))
        return bit


@dataclass
class CheckResult:
    answer: bool
    trace: Trace
    inputs: dict[str, Formula]
    n: int
    sem: str  # trace name of the satisfying set
    iterations: list[int]  # loop iterations of every fixpoint, in order


class Checker:
    def __init__(self, model: Model) -> None:
        self.model = model
        self.inputs = model_inputs(model)
        self.solver = TracingSolver(model.n, self.inputs)
        self.iterations: list[int] = []

    def pre(self, c: str) -> str:
        """States with a successor in ``c``: rename to next state, conjoin, quantify."""
        s = self.solver
        for i in range(len(self.model.vars)):
            c = s.rename(c, 2 * i, 2 * i + 1)
        c = s.apply("trans", c, BinOp.AND)
        for i in range(len(self.model.vars)):
            c = s.exists(c, 2 * i + 1)
        return c

    def _fixpoint(self, start: str, step) -> str:
        z = start
        rounds = 0
        while True:
            nxt = step(z)
            rounds += 1
            if self.solver.equiv(nxt, z):
                self.iterations.append(rounds)
                return nxt
            z = nxt

    def sem(self, f: Ctl) -> str:
        s = self.solver
        if isinstance(f, CAtom):
            return label_input(f.name)
        if isinstance(f, CConst):
            return "true" if f.value else "false"
        if isinstance(f, CNot):
            return s.negate(self.sem(f.arg))
        if isinstance(f, CBin):
            return s.apply(self.sem(f.left), self.sem(f.right), f.op)
        if isinstance(f, CTemporal):
            if f.op[0] == "A":
                return self.sem(existential(f))
            p = self.sem(f.arg)
            if f.op == "EX":
                return self.pre(p)
            if f.op == "EF":
                return self._fixpoint(p, lambda z: s.apply(z, self.pre(z), BinOp.OR))
            return self._fixpoint(p, lambda z: s.apply(z, self.pre(z), BinOp.AND))
        if f.path == "A":
            return self.sem(existential(f))
        p, q = self.sem(f.left), self.sem(f.right)
        return self._fixpoint(
            q, lambda z: s.apply(q, s.apply(p, self.pre(z), BinOp.AND), BinOp.OR))

    def check(self, f: Ctl) -> CheckResult:
        s = self.solver
        sat = self.sem(f)
        bad = s.apply("init", s.negate(sat), BinOp.AND)
        holds = s.equiv(bad, "false")
        return CheckResult(bool(holds), s.trace, self.inputs, self.model.n, sat,
                           list(self.iterations))


def check(model: Model, f: Ctl) -> CheckResult:
    """Decide whether every initial state satisfies ``f``, recording the trace."""
    return Checker(model).check(f)
