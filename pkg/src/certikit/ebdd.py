"""Extended BDDs that encode every stage of degree reduction.

An eBDD reference is an ``int``: non-negative values are ordinary (final) BDD
nodes of the shared :class:`~certikit.bdd.BDD` engine, negative values
``-1 - i`` index extra nodes held by an :class:`EbddStore`. Extra nodes come in
two kinds:

* binary-operation nodes ``<u op v>`` whose operands are final BDDs and whose
  polynomial is the arithmetized operator applied to the operands' multilinear
  polynomials (not multilinear in general);
* standard nodes ``<x, l, r>`` denoting ``x*[[r]] + (1-x)*[[l]]`` whose
  children may be binary-operation nodes.

Every node has a ``link``. For a binary-operation node with top variable
``x`` the link is the standard node obtained by degree-reducing ``x``; the
link of a standard node is the fully reduced final BDD; final nodes link to
themselves. Nodes are never mutated after creation.

Variable levels grow away from the root, so the chain reduces the root-most
variable first: stage ``k`` of a result ``w`` is the polynomial of ``w`` with
every variable of level ``<= k`` degree-reduced.
"""
from __future__ import annotations

from bisect import bisect_left
from itertools import islice
from typing import Sequence, Union

from .bdd import BDD, BinOp, TERMINAL_LEVEL
from .field import P

BINOP_NODE = 0
STANDARD_NODE = 1

Poly = Union[int, tuple]
"""A constant field element, or coefficients ``(c0, c1, c2)`` in the free variable."""

NO_STAGE = -1  # stage before any reduction


class ProtocolFault(Exception):
    """A challenge outside the protocol's contract (e.g. two free variables)."""


def poly_coeffs(p: Poly) -> tuple[int, int, int]:
    return (p, 0, 0) if isinstance(p, int) else p


def poly_eval(p: Poly, x: int) -> int:
    if isinstance(p, int):
        return p
    c0, c1, c2 = p
    return (c0 + x * (c1 + x * c2)) % P


def _norm(c0: int, c1: int, c2: int) -> Poly:
    c0 %= P
    c1 %= P
    c2 %= P
    if c1 == 0 and c2 == 0:
        return c0
    return (c0, c1, c2)


def _mul(p: Poly, q: Poly) -> Poly:
    a0, a1, a2 = poly_coeffs(p)
    b0, b1, b2 = poly_coeffs(q)
    c3 = (a1 * b2 + a2 * b1) % P
    c4 = (a2 * b2) % P
    if c3 or c4:
        raise ProtocolFault("answer polynomial exceeds degree two")
    return _norm(a0 * b0, a0 * b1 + a1 * b0, a0 * b2 + a1 * b1 + a2 * b0)


_OP_COEFFS = [BinOp(i).coefficients() for i in range(16)]
_INV2 = (P + 1) // 2


def combine(op: int, p: Poly, q: Poly) -> Poly:
    """Arithmetized operator applied to two polynomials."""
    c0, cp, cq, cpq = _OP_COEFFS[op]
    if isinstance(p, int) and isinstance(q, int):
        return (c0 + cp * p + cq * q + cpq * p * q) % P
    a0, a1, a2 = poly_coeffs(p)
    b0, b1, b2 = poly_coeffs(q)
    out = [c0 + cp * a0 + cq * b0, cp * a1 + cq * b1, cp * a2 + cq * b2]
    if cpq:
        m = poly_coeffs(_mul(p, q))
        out = [out[i] + cpq * m[i] for i in range(3)]
    return _norm(*out)


def _run(prog: list, sigma: Sequence[int], vals: list[int], start: int) -> None:
    """Evaluate ``prog[start:]``, keeping the first ``start`` results in ``vals``."""
    del vals[start + 2:]
    push = vals.append
    for x, a, b, co in islice(prog, start, None):
        va = vals[a]
        if co is None:
            push((va + sigma[x] * (vals[b] - va)) % P)
        else:
            vb = vals[b]
            push((co[0] + co[1] * va + co[2] * vb + co[3] * va * vb) % P)


class EbddStore:
    """Holds the extra eBDD nodes built on top of one BDD engine.

    Final BDD nodes referenced by the store are pinned in the engine until
    :meth:`release` is called, so the engine's ``gc`` never invalidates them.
    """

    def __init__(self, bdd: BDD) -> None:
        self.bdd = bdd
        self.kind: list[int] = []
        self.var: list[int] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.op: list[int] = []
        self.links: list[int] = []
        self.deep: list[int] = []  # deepest operation level below each node
        self._memo: dict[tuple[int, int, int], int] = {}
        self._pinned: list[int] = []
        self.last_created = 0
        self._programs: dict[tuple[int, int], tuple] = {}

    def __len__(self) -> int:
        return len(self.kind)

    def _new(self, kind: int, v: int, a: int, b: int, op: int, link: int,
             deep: int) -> int:
        self.deep.append(deep)
        self.kind.append(kind)
        self.var.append(v)
        self.left.append(a)
        self.right.append(b)
        self.op.append(op)
        self.links.append(link)
        return -len(self.kind)

    # -- structure ------------------------------------------------------

    def link(self, w: int) -> int:
        return w if w >= 0 else self.links[-1 - w]

    def final(self, w: int) -> int:
        return self.link(self.link(w))

    def is_final(self, w: int) -> bool:
        return self.link(w) == w

    def top_var(self, w: int) -> int:
        if w >= 0:
            return self.bdd.var[w] if w > 1 else TERMINAL_LEVEL
        return self.var[-1 - w]

    def node_kind(self, w: int) -> str:
        if w >= 0:
            return "final"
        return "binop" if self.kind[-1 - w] == BINOP_NODE else "standard"

    # -- construction ---------------------------------------------------

    def apply_ebdd(self, u: int, v: int, op: BinOp | int) -> int:
        """Build the eBDD of ``u op v`` for final BDDs ``u`` and ``v``.

        The result ``b`` has ``[[b]] = [[u]] op^ [[v]]``; following links from
        ``b`` yields the degree-reduction stages, and ``final(b)`` is the node
        :meth:`BDD.apply` returns for the same arguments.
        """
        bdd = self.bdd
        before = bdd.created + len(self.kind)
        w = self._rec(u, v, int(op))
        self.last_created = bdd.created + len(self.kind) - before
        return w

    def _rec(self, u: int, v: int, op: int) -> int:
        bdd = self.bdd
        if u <= 1 or v <= 1:
            f = bdd.apply(u, v, op)
            self._pin(f)
            return f
        key = (u, v, op)
        w = self._memo.get(key)
        if w is not None:
            return w
        var, lo, hi = bdd.var, bdd.lo, bdd.hi
        vu, vv = var[u], var[v]
        x = vu if vu < vv else vv
        u0, u1 = (lo[u], hi[u]) if vu == x else (u, u)
        v0, v1 = (lo[v], hi[v]) if vv == x else (v, v)
        left = self._rec(u0, v0, op)
        right = self._rec(u1, v1, op)
        final = bdd.reduce(x, self.final(left), self.final(right))
        self._pin(final)
        self._pin(u)
        self._pin(v)
        deep = x
        for c in (left, right):
            if c < 0 and self.deep[-1 - c] > deep:
                deep = self.deep[-1 - c]
        node = self._new(STANDARD_NODE, x, left, right, -1, final, deep)
        b = self._new(BINOP_NODE, x, u, v, op, node, deep)
        self._memo[key] = b
        return b

    def _pin(self, f: int) -> None:
        if f > 1:
            self.bdd.ref(f)
            self._pinned.append(f)

    def release(self) -> None:
        """Drop every extra node and unpin the final nodes they referenced."""
        for f in self._pinned:
            self.bdd.deref(f)
        self._pinned.clear()
        self._memo.clear()
        self._programs.clear()
        for arr in (self.kind, self.var, self.left, self.right, self.op, self.links,
                    self.deep):
            arr.clear()

    # -- prover queries -------------------------------------------------

    def answer_challenge(self, w: int, sigma: Sequence[int], k: int,
                         free: int | None = None) -> Poly:
        """Evaluate stage ``k`` of ``w`` under ``sigma``.

        Every variable of level ``<= k`` is degree-reduced (``k = NO_STAGE``
        reads the unreduced operation). ``sigma`` assigns a field value to
        each level; the optional ``free`` level stays symbolic and the result
        is a polynomial of degree at most two in it.

        Every stage has degree at most two in each variable, so the
        polynomial is interpolated from its values at 0, 1 and 2; only nodes
        at or above the free level are evaluated more than once.
        """
        if 0 <= w <= 1:
            return w
        prog, levels, root = self.program(w, k)
        vals = [0, 1]
        if free is None:
            _run(prog, sigma, vals, 0)
            return vals[root]
        pt = list(sigma)
        pt[free] = 0
        _run(prog, pt, vals, 0)
        v0 = vals[root]
        start = bisect_left(levels, -free)
        pt[free] = 1
        _run(prog, pt, vals, start)
        v1 = vals[root]
        pt[free] = 2
        _run(prog, pt, vals, start)
        v2 = vals[root]
        c2 = (v2 - 2 * v1 + v0) * _INV2 % P
        return _norm(v0, v1 - v0 - c2, c2)

    def program(self, w: int, k: int) -> tuple[list, list[int], int]:
        """Straight-line evaluation order for stage ``k`` of ``w``.

        Instructions are ``(x, a, b, coeffs)``: with ``coeffs`` None the value
        is ``sigma[x]*[b] + (1-sigma[x])*[a]``, otherwise the arithmetized
        operator applied to ``[a]`` and ``[b]``. Operands index earlier
        results, with 0 and 1 standing for the terminals. Nodes are sorted
        from the deepest level up, so everything that depends on a level
        forms a suffix; ``levels`` holds the negated level of each
        instruction for bisection and ``root`` the result index of ``w``.
        Extra nodes whose operations all sit at levels ``<= k`` are fully
        reduced, so they are read through their (smaller) final BDD.
        """
        key = (w, k)
        got = self._programs.get(key)
        if got is not None:
            return got
        bvar, blo, bhi = self.bdd.var, self.bdd.lo, self.bdd.hi
        kind, evar, left, right, eop, links, deep = (
            self.kind, self.var, self.left, self.right, self.op, self.links, self.deep)
        found: dict[int, tuple] = {}
        alias: dict[int, int] = {}
        stack = [w]
        while stack:
            u = stack.pop()
            if 0 <= u <= 1 or u in found or u in alias:
                continue
            if u < 0 and deep[-1 - u] <= k:
                f = alias[u] = self.final(u)
                stack.append(f)
                continue
            if u >= 0:
                ent = (bvar[u], 0, blo[u], bhi[u], None)
            else:
                i = -1 - u
                x = evar[i]
                if kind[i] == BINOP_NODE:
                    if x > k:
                        ent = (x, 2, left[i], right[i], _OP_COEFFS[eop[i]])
                    else:
                        j = -1 - links[i]
                        ent = (x, 1, left[j], right[j], None)
                else:
                    ent = (x, 1, left[i], right[i], None)
            found[u] = ent
            stack.append(ent[2])
            stack.append(ent[3])
        order = sorted(found, key=lambda u: (-found[u][0], found[u][1]))
        index = {0: 0, 1: 1}
        for pos, u in enumerate(order):
            index[u] = pos + 2
        for u, f in alias.items():
            index[u] = index[f]
        prog = []
        levels = []
        for u in order:
            x, _, a, b, co = found[u]
            prog.append((x, index[a], index[b], co))
            levels.append(-x)
        got = (prog, levels, index[w])
        self._programs[key] = got
        return got

    def challenge_distinct(self, u: int, v: int, n: int) -> list[int]:
        """A 0/1 assignment of ``n`` levels on which final BDDs ``u`` and ``v`` differ."""
        if u == v:
            raise ProtocolFault("no distinguishing assignment for equal diagrams")
        var, lo, hi = self.bdd.var, self.bdd.lo, self.bdd.hi
        sigma = [0] * n
        while u > 1 or v > 1:
            vu, vv = var[u], var[v]
            x = vu if vu < vv else vv
            u0, u1 = (lo[u], hi[u]) if vu == x else (u, u)
            v0, v1 = (lo[v], hi[v]) if vv == x else (v, v)
            if u0 != v0:
                u, v = u0, v0
            else:
                sigma[x] = 1
                u, v = u1, v1
        return sigma
