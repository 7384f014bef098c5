"""Generalized boolean circuits, execution traces and claims.

A circuit is an append-only list of gates over variables ``0..n-1``. Besides
constants, variables and boolean operators it has projection gates
``pi[x:=b] g``, renaming gates ``g[y/x]`` (substitute ``y`` for ``x``),
degree-reduction gates ``delta_x g`` and placeholder (epsilon) gates that stand
for an already certified gate.

``Free(g)`` is the set of variables ``g`` may depend on. Projection removes the
projected variable and renaming replaces ``x`` by ``y``; everything else takes
the union over children.

A :class:`Trace` is the solver's log of library calls and assertions;
:func:`to_circuit` turns it into a circuit plus a list of claims and
:func:`conv` inserts degree-reduction chains after every boolean gate.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .bdd import BinOp
from .ebdd import combine
from .field import HALF, P


class CircuitError(Exception):
    pass


class TraceError(CircuitError):
    pass


class OracleRefused(CircuitError):
    """The brute-force oracles refuse inputs that are too large."""


class GateKind(enum.IntEnum):
    CONST = 0
    VAR = 1
    NOT = 2
    BINOP = 3
    PROJ = 4
    RENAME = 5
    DEGREE = 6
    EPSILON = 7


@dataclass(slots=True)
class Gate:
    id: int
    kind: GateKind
    children: tuple[int, ...] = ()
    op: int = -1  # BINOP: operator truth table
    var: int = -1  # VAR, PROJ, DEGREE: the variable; RENAME: the replaced variable
    bit: int = -1  # CONST value, PROJ value
    target: int = -1  # RENAME: the substituted variable
    value: int = 0  # EPSILON: certified evaluation
    origin: int = -1  # DEGREE: base gate of its chain; EPSILON: replaced gate

    def describe(self) -> str:
        k = self.kind
        if k == GateKind.CONST:
            return "TRUE" if self.bit else "FALSE"
        if k == GateKind.VAR:
            return f"x{self.var}"
        if k == GateKind.NOT:
            return f"not g{self.children[0]}"
        if k == GateKind.BINOP:
            return f"g{self.children[0]} {BinOp(self.op).trace_name} g{self.children[1]}"
        if k == GateKind.PROJ:
            return f"pi[x{self.var}:={self.bit}] g{self.children[0]}"
        if k == GateKind.RENAME:
            return f"g{self.children[0]}[x{self.target}/x{self.var}]"
        if k == GateKind.DEGREE:
            return f"delta_x{self.var} g{self.children[0]}"
        return f"eps(g{self.origin}, {self.value})"


# -- input formulas -------------------------------------------------------

@dataclass(frozen=True)
class FConst:
    value: int


@dataclass(frozen=True)
class FVar:
    index: int


@dataclass(frozen=True)
class FNot:
    arg: "Formula"


@dataclass(frozen=True)
class FOp:
    op: BinOp
    left: "Formula"
    right: "Formula"


Formula = Union[FConst, FVar, FNot, FOp]


def formula_vars(f: Formula) -> set[int]:
    if isinstance(f, FVar):
        return {f.index}
    if isinstance(f, FNot):
        return formula_vars(f.arg)
    if isinstance(f, FOp):
        return formula_vars(f.left) | formula_vars(f.right)
    return set()


# -- circuits -------------------------------------------------------------

class Circuit:
    def __init__(self, n: int) -> None:
        self.n = n
        self.gates: list[Gate] = []
        self.free: list[frozenset[int]] = []
        self._vars: dict[int, int] = {}
        self._consts: dict[int, int] = {}
        self.top_of: list[int] | None = None  # set by conv: original id -> chain top
        self.marks: list[int] = []  # circuit length at each assertion, in claim order

    def __len__(self) -> int:
        return len(self.gates)

    def __getitem__(self, g: int) -> Gate:
        return self.gates[g]

    def _add(self, gate: Gate, free: frozenset[int]) -> int:
        for c in gate.children:
            if not 0 <= c < len(self.gates):
                raise CircuitError(f"child g{c} does not precede the new gate")
        self.gates.append(gate)
        self.free.append(free)
        return gate.id

    def _check_var(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise CircuitError(f"variable x{x} outside 0..{self.n - 1}")

    def const(self, b: int) -> int:
        b = int(bool(b))
        g = self._consts.get(b)
        if g is None:
            g = self._add(Gate(len(self.gates), GateKind.CONST, bit=b), frozenset())
            self._consts[b] = g
        return g

    def var(self, x: int) -> int:
        self._check_var(x)
        g = self._vars.get(x)
        if g is None:
            g = self._add(Gate(len(self.gates), GateKind.VAR, var=x), frozenset((x,)))
            self._vars[x] = g
        return g

    def not_(self, a: int) -> int:
        return self._add(Gate(len(self.gates), GateKind.NOT, (a,)), self.free[a])

    def binop(self, op: BinOp | int, a: int, b: int) -> int:
        return self._add(Gate(len(self.gates), GateKind.BINOP, (a, b), op=int(op)),
                         self.free[a] | self.free[b])

    def proj(self, a: int, x: int, b: int) -> int:
        self._check_var(x)
        return self._add(Gate(len(self.gates), GateKind.PROJ, (a,), var=x, bit=int(bool(b))),
                         self.free[a] - {x})

    def rename(self, a: int, x: int, y: int) -> int:
        """Gate for ``a`` with ``y`` substituted for ``x``; needs ``y`` not free in ``a``."""
        self._check_var(x)
        self._check_var(y)
        fa = self.free[a]
        if y in fa and y != x:
            raise CircuitError(f"rename target x{y} is free in g{a}")
        free = (fa - {x}) | {y} if x in fa else fa
        return self._add(Gate(len(self.gates), GateKind.RENAME, (a,), var=x, target=y), free)

    def degree(self, a: int, x: int, origin: int = -1) -> int:
        self._check_var(x)
        return self._add(Gate(len(self.gates), GateKind.DEGREE, (a,), var=x, origin=origin),
                         self.free[a])

    def epsilon(self, free: Iterable[int], value: int, origin: int) -> int:
        return self._add(Gate(len(self.gates), GateKind.EPSILON, value=value, origin=origin),
                         frozenset(free))

    def add_formula(self, f: Formula) -> int:
        if isinstance(f, FConst):
            return self.const(f.value)
        if isinstance(f, FVar):
            return self.var(f.index)
        if isinstance(f, FNot):
            return self.not_(self.add_formula(f.arg))
        if isinstance(f, FOp):
            return self.binop(f.op, self.add_formula(f.left), self.add_formula(f.right))
        raise TypeError(f"not a formula: {f!r}")

    def parents(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.gates]
        for g in self.gates:
            for c in g.children:
                out[c].append(g.id)
        return out

    def reachable(self, roots: Iterable[int]) -> set[int]:
        seen: set[int] = set()
        stack = list(roots)
        while stack:
            g = stack.pop()
            if g in seen:
                continue
            seen.add(g)
            stack.extend(self.gates[g].children)
        return seen

    def dump(self) -> str:
        return "\n".join(f"g{g.id}: {g.describe()}" for g in self.gates) + "\n"


def conv(c: Circuit) -> Circuit:
    """Insert a degree-reduction chain after every boolean gate.

    The chain reduces each free variable of the gate once, innermost first
    on the root-most (lowest) level. Gates that read a boolean gate are
    rewired to the top of its chain; ``top_of`` on the result maps original
    ids to new ids.
    """
    out = Circuit(c.n)
    top: list[int] = []
    for g in c.gates:
        ch = tuple(top[i] for i in g.children)
        k = g.kind
        if k == GateKind.CONST:
            t = out.const(g.bit)
        elif k == GateKind.VAR:
            t = out.var(g.var)
        elif k == GateKind.NOT:
            t = out.not_(ch[0])
        elif k == GateKind.BINOP:
            t = out.binop(g.op, ch[0], ch[1])
        elif k == GateKind.PROJ:
            t = out.proj(ch[0], g.var, g.bit)
        elif k == GateKind.RENAME:
            t = out.rename(ch[0], g.var, g.target)
        elif k == GateKind.DEGREE:
            t = out.degree(ch[0], g.var, g.origin)
        else:
            t = out.epsilon(c.free[g.id], g.value, g.origin)
        if k in (GateKind.NOT, GateKind.BINOP):
            base = t
            for x in sorted(out.free[base]):
                t = out.degree(t, x, origin=base)
        top.append(t)
    assert len(out) <= c.n * len(c) + len(c), "conv size bound violated"
    out.top_of = top
    out.marks = [top[m - 1] + 1 if m else 0 for m in c.marks]
    return out


# -- claims ---------------------------------------------------------------

@dataclass(frozen=True)
class FEval:
    """The polynomial of ``gate`` evaluates to ``k`` at the total field point ``sigma``."""
    gate: int
    sigma: tuple[int, ...]
    k: int


@dataclass(frozen=True)
class BEval:
    """The boolean function of ``gate`` is ``b`` at the 0/1 point ``bits``."""
    gate: int
    bits: tuple[int, ...]
    b: int


@dataclass(frozen=True)
class Count:
    """``gate`` has exactly ``k`` satisfying assignments over all circuit variables."""
    gate: int
    k: int


@dataclass(frozen=True)
class BEquiv:
    """``gate1`` and ``gate2`` are equivalent (``expected = 1``) or not (``0``)."""
    gate1: int
    gate2: int
    expected: int


@dataclass(frozen=True)
class EpsCheck:
    """Certified value of a gate at the global random point, kept by an epsilon gate."""
    gate: int
    sigma: tuple[int, ...]
    k: int


Claim = Union[FEval, BEval, Count, BEquiv, EpsCheck]


def remap_claim(claim: Claim, top: Sequence[int]) -> Claim:
    if isinstance(claim, BEquiv):
        return BEquiv(top[claim.gate1], top[claim.gate2], claim.expected)
    return type(claim)(top[claim.gate], *[getattr(claim, f) for f in claim.__dataclass_fields__
                                          if f != "gate"])


# -- traces ---------------------------------------------------------------

@dataclass(frozen=True)
class ApplyInstr:
    out: str
    a: str
    b: str
    op: BinOp


@dataclass(frozen=True)
class RestrictInstr:
    out: str
    a: str
    var: int
    bit: int


@dataclass(frozen=True)
class RenameInstr:
    out: str
    a: str
    x: int
    y: int


@dataclass(frozen=True)
class AssertEquiv:
    a: str
    b: str
    bit: int


@dataclass(frozen=True)
class AssertEval:
    a: str
    bits: tuple[int, ...]
    bit: int


@dataclass(frozen=True)
class AssertCount:
    a: str
    k: int


Instruction = Union[ApplyInstr, RestrictInstr, RenameInstr, AssertEquiv, AssertEval, AssertCount]
ASSERTIONS = (AssertEquiv, AssertEval, AssertCount)

_VAR_NAME = re.compile(r"x(\d+)$")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.']*$")


def _operands(instr: Instruction) -> tuple[str, ...]:
    if isinstance(instr, (ApplyInstr, AssertEquiv)):
        return (instr.a, instr.b)
    return (instr.a,)


class Trace:
    """Solver log: library calls on named values and assertions about them.

    Predefined names are ``true``, ``false``, ``x<k>`` (the variable ``k``)
    and the input names given at construction.
    """

    def __init__(self, inputs: Iterable[str] = ()) -> None:
        self.inputs = list(inputs)
        self.instructions: list[Instruction] = []
        self._defined: set[str] = set(self.inputs)
        self._fresh = 0

    def __len__(self) -> int:
        return len(self.instructions)

    def is_defined(self, name: str) -> bool:
        return name in self._defined or name in ("true", "false") or bool(_VAR_NAME.match(name))

    def fresh(self) -> str:
        while True:
            name = f"t{self._fresh}"
            self._fresh += 1
            if name not in self._defined:
                return name

    def record(self, instr: Instruction) -> str | None:
        for a in _operands(instr):
            if not self.is_defined(a):
                raise TraceError(f"operand {a!r} used before definition")
        self.instructions.append(instr)
        out = getattr(instr, "out", None)
        if out is not None:
            if not _NAME.match(out) or _VAR_NAME.match(out) or out in ("true", "false"):
                raise TraceError(f"invalid value name {out!r}")
            self._defined.add(out)
        return out

    def apply(self, a: str, b: str, op: BinOp) -> str:
        return self.record(ApplyInstr(self.fresh(), a, b, BinOp(op)))

    def restrict(self, a: str, x: int, bit: int) -> str:
        return self.record(RestrictInstr(self.fresh(), a, x, int(bit)))

    def rename(self, a: str, x: int, y: int) -> str:
        return self.record(RenameInstr(self.fresh(), a, x, y))

    def assertions(self) -> list[Instruction]:
        return [i for i in self.instructions if isinstance(i, ASSERTIONS)]

    def to_text(self) -> str:
        lines = []
        for i in self.instructions:
            if isinstance(i, ApplyInstr):
                lines.append(f"let {i.out} = apply({i.a},{i.b},{i.op.trace_name})")
            elif isinstance(i, RestrictInstr):
                lines.append(f"let {i.out} = restrict({i.a},x{i.var},{i.bit})")
            elif isinstance(i, RenameInstr):
                lines.append(f"let {i.out} = rename({i.a},x{i.x},x{i.y})")
            elif isinstance(i, AssertEquiv):
                lines.append(f"assert_equiv {i.a} {i.b} {i.bit}")
            elif isinstance(i, AssertEval):
                lines.append(f"assert_eval {i.a} {''.join(map(str, i.bits))} {i.bit}")
            else:
                lines.append(f"assert_count {i.a} {i.k}")
        return "\n".join(lines) + ("\n" if lines else "")


_LET = re.compile(r"let\s+(\S+)\s*=\s*(apply|restrict|rename)\(([^)]*)\)$")


def _parse_var(tok: str, lineno: int) -> int:
    m = _VAR_NAME.match(tok)
    if not m:
        raise TraceError(f"line {lineno}: expected a variable x<k>, got {tok!r}")
    return int(m.group(1))


def _parse_bit(tok: str, lineno: int) -> int:
    if tok not in ("0", "1"):
        raise TraceError(f"line {lineno}: expected 0 or 1, got {tok!r}")
    return int(tok)


def parse_trace(text: str, inputs: Iterable[str] = ()) -> Trace:
    trace = Trace(inputs)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            m = _LET.match(line)
            if m:
                out, fn, args = m.group(1), m.group(2), [a.strip() for a in m.group(3).split(",")]
                if len(args) != 3:
                    raise TraceError(f"line {lineno}: {fn} takes three arguments")
                if fn == "apply":
                    trace.record(ApplyInstr(out, args[0], args[1], BinOp.from_trace_name(args[2])))
                elif fn == "restrict":
                    trace.record(RestrictInstr(out, args[0], _parse_var(args[1], lineno),
                                               _parse_bit(args[2], lineno)))
                else:
                    trace.record(RenameInstr(out, args[0], _parse_var(args[1], lineno),
                                             _parse_var(args[2], lineno)))
                continue
            toks = line.split()
            if toks[0] == "assert_equiv" and len(toks) == 4:
                trace.record(AssertEquiv(toks[1], toks[2], _parse_bit(toks[3], lineno)))
            elif toks[0] == "assert_eval" and len(toks) == 4:
                bits = tuple(_parse_bit(ch, lineno) for ch in toks[2])
                trace.record(AssertEval(toks[1], bits, _parse_bit(toks[3], lineno)))
            elif toks[0] == "assert_count" and len(toks) == 3:
                if not toks[2].isdigit():
                    raise TraceError(f"line {lineno}: count must be a decimal integer")
                trace.record(AssertCount(toks[1], int(toks[2])))
            else:
                raise TraceError(f"line {lineno}: cannot parse {line!r}")
        except TraceError as exc:
            if str(exc).startswith("line "):
                raise
            raise TraceError(f"line {lineno}: {exc}") from None
        except ValueError as exc:
            raise TraceError(f"line {lineno}: {exc}") from None
    return trace


def to_circuit(trace: Trace, inputs: Mapping[str, Formula], n: int
               ) -> tuple[Circuit, list[Claim], dict[str, int]]:
    """One gate per library call, one claim per assertion.

    Returns the circuit, the claims and the gate of every named value.
    ``circuit.marks`` records the circuit length at every assertion.
    """
    c = Circuit(n)
    gate_of: dict[str, int] = {}

    def resolve(name: str) -> int:
        g = gate_of.get(name)
        if g is not None:
            return g
        if name in inputs:
            g = c.add_formula(inputs[name])
        elif name in ("true", "false"):
            g = c.const(name == "true")
        elif _VAR_NAME.match(name):
            g = c.var(int(name[1:]))
        else:
            raise TraceError(f"unknown value {name!r}")
        gate_of[name] = g
        return g

    claims: list[Claim] = []
    for instr in trace.instructions:
        if isinstance(instr, ApplyInstr):
            gate_of[instr.out] = c.binop(instr.op, resolve(instr.a), resolve(instr.b))
        elif isinstance(instr, RestrictInstr):
            gate_of[instr.out] = c.proj(resolve(instr.a), instr.var, instr.bit)
        elif isinstance(instr, RenameInstr):
            gate_of[instr.out] = c.rename(resolve(instr.a), instr.x, instr.y)
        elif isinstance(instr, AssertEquiv):
            claims.append(BEquiv(resolve(instr.a), resolve(instr.b), instr.bit))
        elif isinstance(instr, AssertEval):
            if len(instr.bits) != n:
                raise TraceError(f"assert_eval needs {n} bits, got {len(instr.bits)}")
            claims.append(BEval(resolve(instr.a), instr.bits, instr.bit))
        else:
            claims.append(Count(resolve(instr.a), instr.k))
        if isinstance(instr, ASSERTIONS):
            c.marks.append(len(c))
    return c, claims, gate_of


# -- oracles --------------------------------------------------------------

def cube_extension(values: Sequence[int], point: Sequence[int]) -> int:
    """Multilinear extension of a table over ``{0,1}^m`` evaluated at ``point``.

    ``values[i]`` is the value at the boolean point whose coordinate ``j`` is
    bit ``j`` of ``i``.
    """
    vals = [v % P for v in values]
    m = len(point)
    if len(vals) != 1 << m:
        raise ValueError("table size does not match the point dimension")
    for j in range(m - 1, -1, -1):
        s = point[j]
        half = 1 << j
        vals = [(a + s * (b - a)) % P for a, b in zip(vals[:half], vals[half:])]
    return vals[0]


def truth_table(c: Circuit, gate: int, max_vars: int = 16) -> np.ndarray:
    """Boolean function of ``gate`` over all ``2^n`` points (bit ``i`` of the index = ``x_i``)."""
    if c.n > max_vars:
        raise OracleRefused(f"{c.n} variables exceed the enumeration limit {max_vars}")
    idx = np.arange(1 << c.n, dtype=np.int64)
    tables: dict[int, np.ndarray] = {}
    for g in sorted(c.reachable([gate])):
        gt = c.gates[g]
        k = gt.kind
        if k == GateKind.CONST:
            t = np.full(idx.shape, bool(gt.bit))
        elif k == GateKind.VAR:
            t = ((idx >> gt.var) & 1).astype(bool)
        elif k == GateKind.NOT:
            t = ~tables[gt.children[0]]
        elif k == GateKind.BINOP:
            a = tables[gt.children[0]].astype(np.int64)
            b = tables[gt.children[1]].astype(np.int64)
            t = ((gt.op >> ((a << 1) | b)) & 1).astype(bool)
        elif k == GateKind.PROJ:
            sel = (idx & ~(1 << gt.var)) | (gt.bit << gt.var)
            t = tables[gt.children[0]][sel]
        elif k == GateKind.RENAME:
            x, y = gt.var, gt.target
            sel = (idx & ~(1 << x)) | (((idx >> y) & 1) << x)
            t = tables[gt.children[0]][sel]
        elif k == GateKind.DEGREE:
            t = tables[gt.children[0]]
        else:
            raise OracleRefused("epsilon gates have no boolean table")
        tables[g] = t
    return tables[gate]


def eval_multilinear_oracle(c: Circuit, gate: int, sigma: Sequence[int],
                            max_free: int = 14) -> int:
    """Unique multilinear extension of the gate's boolean function at ``sigma``.

    Sums over every boolean point of ``Free(gate)``; refuses more than
    ``max_free`` free variables.
    """
    free = sorted(c.free[gate])
    if len(free) > max_free:
        raise OracleRefused(f"{len(free)} free variables exceed {max_free}")
    table = truth_table(c, gate)
    sel = np.zeros(1 << len(free), dtype=np.int64)
    for j, x in enumerate(free):
        sel |= ((np.arange(1 << len(free)) >> j) & 1) << x
    return cube_extension([int(v) for v in table[sel]], [sigma[x] for x in free])


def degree_reduce_at(poly: Callable[[Sequence[int]], int], x: int, sigma: Sequence[int]) -> int:
    """``(delta_x p)(sigma) = s*p(sigma[x:=1]) + (1-s)*p(sigma[x:=0])`` with ``s = sigma[x]``."""
    s = sigma[x] % P
    pt = list(sigma)
    total = 0
    if s != 0:
        pt[x] = 1
        total += s * poly(pt)
    if s != 1:
        pt[x] = 0
        total += (1 - s) * poly(pt)
    return total % P


class GatePolynomialOracle:
    """Evaluates the arithmetization of gates by structural recursion.

    Boolean gates use the arithmetized operator on their children's values,
    so ``x and x`` evaluates as ``x^2``; degree reduction is applied pointwise.
    Results are memoised on the gate and its free coordinates, across calls.
    """

    def __init__(self, c: Circuit) -> None:
        self.c = c
        self._memo: dict[tuple, int] = {}

    def __call__(self, gate: int, sigma: Sequence[int]) -> int:
        return self._eval(gate, tuple(v % P for v in sigma))

    def _eval(self, g: int, sigma: tuple[int, ...]) -> int:
        c = self.c
        key = (g, tuple(sigma[x] for x in sorted(c.free[g])))
        r = self._memo.get(key)
        if r is not None:
            return r
        gt = c.gates[g]
        k = gt.kind
        if k == GateKind.CONST:
            r = gt.bit
        elif k == GateKind.VAR:
            r = sigma[gt.var]
        elif k == GateKind.NOT:
            r = (1 - self._eval(gt.children[0], sigma)) % P
        elif k == GateKind.BINOP:
            r = combine(gt.op, self._eval(gt.children[0], sigma), self._eval(gt.children[1], sigma))
        elif k == GateKind.PROJ:
            pt = list(sigma)
            pt[gt.var] = gt.bit
            r = self._eval(gt.children[0], tuple(pt))
        elif k == GateKind.RENAME:
            pt = list(sigma)
            pt[gt.var] = sigma[gt.target]
            r = self._eval(gt.children[0], tuple(pt))
        elif k == GateKind.DEGREE:
            child = gt.children[0]
            r = degree_reduce_at(lambda pt: self._eval(child, tuple(pt)), gt.var, sigma)
        else:
            raise OracleRefused("epsilon gates have no polynomial")
        self._memo[key] = r
        return r


def eval_gate_polynomial_oracle(c: Circuit, gate: int, sigma: Sequence[int]) -> int:
    return GatePolynomialOracle(c)(gate, sigma)


def all_halves(n: int) -> tuple[int, ...]:
    return (HALF,) * n
