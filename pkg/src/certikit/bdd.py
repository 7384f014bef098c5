"""Reduced ordered binary decision diagrams.

Nodes are integer handles into parallel arrays owned by a :class:`BDD`
engine. Handles ``0`` and ``1`` are the terminals. Interior nodes are unique
per ``(var, low, high)`` triple, so two handles are equal exactly when they
denote the same boolean function.

Memory is managed by reference counting with an explicit :meth:`BDD.gc`
sweep: a node's count is the number of parent edges plus external handles
taken with :meth:`BDD.ref`. Freshly built results start unreferenced and are
only reclaimed when ``gc()`` runs, so a caller that wants to keep a result
across a collection must ``ref`` it first. Handles are never recycled, which
lets the computation cache detect stale entries by checking liveness.

Variables are identified by their level (0 is the root-most level).
"""
from __future__ import annotations

import enum
import logging
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

FALSE = 0
TRUE = 1
TERMINAL_LEVEL = 1 << 30
DEAD = -1


class BddError(Exception):
    pass


class BddDomainError(BddError, ValueError):
    """Operation called outside its domain (missing variable, bad count width)."""


class RenameOrderError(BddError):
    """Renaming would break the variable order of the diagram."""


class BinOp(enum.IntEnum):
    """The 16 binary boolean operators.

    The value is the truth table: bit ``2*a + b`` holds ``op(a, b)``.
    """

    FALSE = 0
    NOR = 1
    LT = 2  # !a & b
    NOTA = 3
    GT = 4  # a & !b
    NOTB = 5
    XOR = 6
    NAND = 7
    AND = 8
    XNOR = 9
    B = 10
    IMP = 11  # a -> b
    A = 12
    RIMP = 13  # b -> a
    OR = 14
    TRUE = 15

    def __call__(self, a: int, b: int) -> int:
        return (self.value >> ((a << 1) | b)) & 1

    @property
    def trace_name(self) -> str:
        return _TRACE_NAMES[self.value]

    @classmethod
    def from_trace_name(cls, name: str) -> "BinOp":
        try:
            return cls(_TRACE_NAMES.index(name))
        except ValueError:
            raise ValueError(f"unknown operator {name!r}") from None

    def coefficients(self) -> tuple[int, int, int, int]:
        """Integer coefficients ``(c0, cp, cq, cpq)`` of the multilinear form
        ``c0 + cp*p + cq*q + cpq*p*q`` agreeing with the operator on bits."""
        t00, t01, t10, t11 = self(0, 0), self(0, 1), self(1, 0), self(1, 1)
        return t00, t10 - t00, t01 - t00, t11 - t10 - t01 + t00


_TRACE_NAMES = [
    "false2", "nor2", "lt2", "nota2", "gt2", "notb2", "xor2", "nand2",
    "and2", "xnor2", "b2", "imp2", "a2", "rimp2", "or2", "true2",
]


def _unary_behaviour(op: int, const_first: bool, c: int) -> int:
    """How ``op`` acts on the other operand when one operand is constant ``c``.

    Returns 0 or 1 for a constant result, 2 for identity, 3 for negation.
    """
    if const_first:
        r0 = (op >> ((c << 1) | 0)) & 1
        r1 = (op >> ((c << 1) | 1)) & 1
    else:
        r0 = (op >> (0 | c)) & 1
        r1 = (op >> (2 | c)) & 1
    if r0 == r1:
        return r0
    return 2 if r1 else 3


# _SHORTCUT[op][side][c]: behaviour when the left (side 0) or right (side 1)
# operand is the terminal c.
_SHORTCUT = [
    [[_unary_behaviour(op, True, c) for c in (0, 1)],
     [_unary_behaviour(op, False, c) for c in (0, 1)]]
    for op in range(16)
]


class BDD:
    """A BDD engine: unique table, computation cache and node store."""

    def __init__(self, num_vars: int = 0, cache_bits: int = 20) -> None:
        self.var: list[int] = [TERMINAL_LEVEL, TERMINAL_LEVEL]
        self.lo: list[int] = [0, 1]
        self.hi: list[int] = [0, 1]
        self.refs: list[int] = [1 << 40, 1 << 40]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.num_vars = num_vars
        self.cache_size = 1 << cache_bits
        self._cache_mask = self.cache_size - 1
        self._cache: list = [None] * self.cache_size
        self.created = 0
        self.apply_calls = 0
        self.peak_live = 2
        self.ops = 0

    # -- node store -----------------------------------------------------

    def reduce(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        n = self.unique.get(key)
        if n is not None:
            return n
        var = self.var
        assert v < var[lo] and v < var[hi], "variable order violated"
        n = len(var)
        var.append(v)
        self.lo.append(lo)
        self.hi.append(hi)
        self.refs.append(0)
        self.refs[lo] += 1
        self.refs[hi] += 1
        self.unique[key] = n
        self.created += 1
        if v >= self.num_vars:
            self.num_vars = v + 1
        live = len(self.unique) + 2
        if live > self.peak_live:
            self.peak_live = live
        return n

    def var_node(self, v: int) -> int:
        """The diagram of the single variable ``v``."""
        return self.reduce(v, FALSE, TRUE)

    def level(self, f: int) -> int:
        return self.var[f]

    def low(self, f: int) -> int:
        return self.lo[f]

    def high(self, f: int) -> int:
        return self.hi[f]

    def is_live(self, f: int) -> bool:
        return f <= 1 or self.var[f] != DEAD

    @property
    def live_count(self) -> int:
        return len(self.unique) + 2

    def ref(self, f: int) -> int:
        self.refs[f] += 1
        return f

    def deref(self, f: int) -> None:
        assert self.refs[f] > 0, "deref of unreferenced node"
        self.refs[f] -= 1

    def gc(self) -> int:
        """Free every node that is unreachable from a referenced handle."""
        var, lo, hi, refs = self.var, self.lo, self.hi, self.refs
        stack = [n for n in self.unique.values() if refs[n] == 0]
        freed = 0
        while stack:
            n = stack.pop()
            if var[n] == DEAD or refs[n] != 0:
                continue
            del self.unique[(var[n], lo[n], hi[n])]
            var[n] = DEAD
            freed += 1
            for c in (lo[n], hi[n]):
                refs[c] -= 1
                if refs[c] == 0 and c > 1:
                    stack.append(c)
        if freed:
            log.debug("gc freed %d nodes, %d live", freed, self.live_count)
        return freed

    def clear_cache(self) -> None:
        self._cache = [None] * self.cache_size

    # -- core operations ------------------------------------------------

    def apply(self, f: int, g: int, op: BinOp | int) -> int:
        self.ops += 1
        return self._apply(f, g, int(op))

    def _apply(self, f: int, g: int, op: int) -> int:
        if f <= 1:
            if g <= 1:
                return (op >> ((f << 1) | g)) & 1
            b = _SHORTCUT[op][0][f]
            if b < 2:
                return b
            if b == 2:
                return g
        elif g <= 1:
            b = _SHORTCUT[op][1][g]
            if b < 2:
                return b
            if b == 2:
                return f
        cache = self._cache
        idx = hash((op, f, g)) & self._cache_mask
        e = cache[idx]
        var = self.var
        if e is not None and e[1] == f and e[2] == g and e[0] == op and var[e[3]] != DEAD:
            return e[3]
        self.apply_calls += 1
        vf, vg = var[f], var[g]
        if vf < vg:
            v = vf
            f0, f1, g0, g1 = self.lo[f], self.hi[f], g, g
        elif vg < vf:
            v = vg
            f0, f1, g0, g1 = f, f, self.lo[g], self.hi[g]
        else:
            v = vf
            f0, f1, g0, g1 = self.lo[f], self.hi[f], self.lo[g], self.hi[g]
        r = self.reduce(v, self._apply(f0, g0, op), self._apply(f1, g1, op))
        cache[idx] = (op, f, g, r)
        return r

    def negate(self, f: int) -> int:
        return self.apply(f, TRUE, BinOp.NAND)

    def restrict(self, f: int, x: int, b: int) -> int:
        self.ops += 1
        var, lo, hi = self.var, self.lo, self.hi
        memo: dict[int, int] = {}

        def rec(n: int) -> int:
            v = var[n]
            if v > x:
                return n
            if v == x:
                return hi[n] if b else lo[n]
            r = memo.get(n)
            if r is None:
                r = self.reduce(v, rec(lo[n]), rec(hi[n]))
                memo[n] = r
            return r

        return rec(f)

    def rename(self, f: int, x: int, y: int) -> int:
        """Substitute variable ``y`` for ``x`` in ``f``.

        Requires that ``y`` is not in the support and that no support
        variable lies strictly between ``x`` and ``y`` in the order.
        """
        self.ops += 1
        if x == y:
            return f
        sup = self.support(f)
        if y in sup:
            raise RenameOrderError(f"target x{y} already in support")
        lo_v, hi_v = min(x, y), max(x, y)
        between = [v for v in sup if lo_v < v < hi_v]
        if between:
            raise RenameOrderError(
                f"support variables {sorted(between)} lie between x{x} and x{y}")
        if x not in sup:
            return f
        var, lo, hi = self.var, self.lo, self.hi
        memo: dict[int, int] = {}

        def rec(n: int) -> int:
            v = var[n]
            if v > x:
                return n
            r = memo.get(n)
            if r is None:
                if v == x:
                    r = self.reduce(y, lo[n], hi[n])
                else:
                    r = self.reduce(v, rec(lo[n]), rec(hi[n]))
                memo[n] = r
            return r

        return rec(f)

    def compose(self, f: int, x: int, g: int) -> int:
        """Substitute the function ``g`` for variable ``x`` in ``f``."""
        f1 = self.restrict(f, x, 1)
        f0 = self.restrict(f, x, 0)
        pos = self.apply(g, f1, BinOp.AND)
        neg = self.apply(self.negate(g), f0, BinOp.AND)
        return self.apply(pos, neg, BinOp.OR)

    def exists(self, f: int, xs: Iterable[int]) -> int:
        for x in sorted(set(xs)):
            f = self.apply(self.restrict(f, x, 0), self.restrict(f, x, 1), BinOp.OR)
        return f

    def forall(self, f: int, xs: Iterable[int]) -> int:
        for x in sorted(set(xs)):
            f = self.apply(self.restrict(f, x, 0), self.restrict(f, x, 1), BinOp.AND)
        return f

    @staticmethod
    def equivalent(f: int, g: int) -> bool:
        return f == g

    # -- queries --------------------------------------------------------

    def evaluate(self, f: int, assignment: Mapping[int, int] | Sequence[int]) -> int:
        var, lo, hi = self.var, self.lo, self.hi
        while f > 1:
            v = var[f]
            try:
                bit = assignment[v]
            except (KeyError, IndexError):
                raise BddDomainError(f"assignment misses variable x{v}") from None
            f = hi[f] if bit else lo[f]
        return f

    def count_solutions(self, f: int, n: int) -> int:
        """Number of assignments to variables ``0..n-1`` satisfying ``f``."""
        var, lo, hi = self.var, self.lo, self.hi
        memo: dict[int, int] = {0: 0, 1: 1}

        def lvl(m: int) -> int:
            return n if m <= 1 else var[m]

        def rec(m: int) -> int:
            c = memo.get(m)
            if c is None:
                v = var[m]
                if v >= n:
                    raise BddDomainError(f"support variable x{v} outside the first {n}")
                a, b = lo[m], hi[m]
                c = (rec(a) << (lvl(a) - v - 1)) + (rec(b) << (lvl(b) - v - 1))
                memo[m] = c
            return c

        return rec(f) << lvl(f)

    def nodes(self, f: int) -> Iterator[int]:
        """All nodes reachable from ``f`` (terminals included), each once."""
        seen = {f}
        stack = [f]
        lo, hi = self.lo, self.hi
        while stack:
            n = stack.pop()
            yield n
            if n > 1:
                for c in (lo[n], hi[n]):
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)

    def size(self, f: int) -> int:
        return sum(1 for _ in self.nodes(f))

    def support(self, f: int) -> set[int]:
        var = self.var
        return {var[n] for n in self.nodes(f) if n > 1}

    def sat_one(self, f: int) -> dict[int, int] | None:
        """Some satisfying assignment over the support, or None for FALSE."""
        if f == FALSE:
            return None
        out: dict[int, int] = {}
        while f > 1:
            if self.lo[f] != FALSE:
                out[self.var[f]] = 0
                f = self.lo[f]
            else:
                out[self.var[f]] = 1
                f = self.hi[f]
        return out

    def check_invariants(self) -> None:
        """Structural walk over the unique table (order, reducedness, refcounts)."""
        var, lo, hi = self.var, self.lo, self.hi
        parents = [0] * len(var)
        for (v, l, h), n in self.unique.items():
            assert var[n] == v and lo[n] == l and hi[n] == h
            assert l != h, f"redundant node {n}"
            assert v < var[l] and v < var[h], f"order violated at node {n}"
            assert var[l] != DEAD and var[h] != DEAD, f"dangling child under {n}"
            parents[l] += 1
            parents[h] += 1
        for n in self.unique.values():
            assert self.refs[n] >= parents[n], f"refcount too small at node {n}"

    def to_dot(self, f: int, names: Sequence[str] | None = None) -> str:
        lines = ["digraph bdd {", '  node [shape=circle];',
                 '  0 [shape=box,label="0"];', '  1 [shape=box,label="1"];']
        for n in sorted(self.nodes(f)):
            if n <= 1:
                continue
            v = self.var[n]
            label = names[v] if names is not None else f"x{v}"
            lines.append(f'  {n} [label="{label}"];')
            lines.append(f"  {n} -> {self.lo[n]} [style=dashed];")
            lines.append(f"  {n} -> {self.hi[n]};")
        lines.append("}")
        return "\n".join(lines) + "\n"
