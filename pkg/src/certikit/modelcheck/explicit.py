"""Explicit-state CTL evaluation, used as an independent ground truth.

States are enumerated as integers (bit ``i`` is state variable ``i``); the
transition relation becomes an edge list and every CTL operator, universal
ones included, is evaluated by set fixpoints over boolean numpy arrays.
"""
from __future__ import annotations

import numpy as np

from ..circuit import FConst, FNot, Formula, FVar
from .parser import CAtom, CBin, CConst, CNot, Ctl, CTemporal, Model


class StateSpaceTooLarge(ValueError):
    pass


def _eval(f: Formula, cur: np.ndarray, nxt: np.ndarray | None) -> np.ndarray:
    """Formula value for arrays of current (and next) states."""
    if isinstance(f, FConst):
        return np.full(cur.shape, bool(f.value))
    if isinstance(f, FVar):
        i, primed = divmod(f.index, 2)
        src = nxt if primed else cur
        return ((src >> i) & 1).astype(bool)
    if isinstance(f, FNot):
        return ~_eval(f.arg, cur, nxt)
    a = _eval(f.left, cur, nxt).astype(np.int64)
    b = _eval(f.right, cur, nxt).astype(np.int64)
    return ((int(f.op) >> ((a << 1) | b)) & 1).astype(bool)


class ExplicitSystem:
    def __init__(self, model: Model, max_bits: int = 12) -> None:
        v = len(model.vars)
        if v > max_bits:
            raise StateSpaceTooLarge(f"{v} state bits exceed the explicit limit {max_bits}")
        self.model = model
        self.size = 1 << v
        states = np.arange(self.size, dtype=np.int64)
        self.states = states
        srcs, dsts = [], []
        for s in range(self.size):
            ok = _eval(model.trans, np.full(self.size, s, dtype=np.int64), states)
            succ = np.nonzero(ok)[0]
            srcs.append(np.full(len(succ), s, dtype=np.int64))
            dsts.append(succ)
        self.src = np.concatenate(srcs)
        self.dst = np.concatenate(dsts)
        self.init = _eval(model.init, states, None)

    def ex(self, p: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size, dtype=bool)
        out[self.src[p[self.dst]]] = True
        return out

    def ax(self, p: np.ndarray) -> np.ndarray:
        """All successors in ``p`` (vacuously true without successors)."""
        return ~self.ex(~p)

    def _lfp(self, step) -> np.ndarray:
        z = np.zeros(self.size, dtype=bool)
        while True:
            nz = step(z)
            if np.array_equal(nz, z):
                return z
            z = nz

    def _gfp(self, step) -> np.ndarray:
        z = np.ones(self.size, dtype=bool)
        while True:
            nz = step(z)
            if np.array_equal(nz, z):
                return z
            z = nz

    def sat(self, f: Ctl) -> np.ndarray:
        if isinstance(f, CAtom):
            return _eval(self.model.labels[f.name], self.states, None)
        if isinstance(f, CConst):
            return np.full(self.size, f.value)
        if isinstance(f, CNot):
            return ~self.sat(f.arg)
        if isinstance(f, CBin):
            a = self.sat(f.left).astype(np.int64)
            b = self.sat(f.right).astype(np.int64)
            return ((int(f.op) >> ((a << 1) | b)) & 1).astype(bool)
        if isinstance(f, CTemporal):
            p = self.sat(f.arg)
            op = f.op
            if op == "EX":
                return self.ex(p)
            if op == "AX":
                return self.ax(p)
            if op == "EF":
                return self._lfp(lambda z: p | self.ex(z))
            if op == "AF":
                return self._lfp(lambda z: p | self.ax(z))
            if op == "EG":
                return self._gfp(lambda z: p & self.ex(z))
            return self._gfp(lambda z: p & self.ax(z))  # AG
        p, q = self.sat(f.left), self.sat(f.right)
        if f.path == "E":
            return self._lfp(lambda z: q | (p & self.ex(z)))
        return self._lfp(lambda z: q | (p & self.ax(z)))

    def holds(self, f: Ctl) -> bool:
        return bool(np.all(self.sat(f)[self.init]))


def explicit_oracle(model: Model, f: Ctl, max_bits: int = 12) -> bool:
    """Whether every initial state satisfies ``f``, by state enumeration."""
    return ExplicitSystem(model, max_bits).holds(f)

