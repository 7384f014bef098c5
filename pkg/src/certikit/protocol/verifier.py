"""The verifier: checks claims about a circuit by challenging the prover.

The verifier only knows the circuit's structure. Claims are first normalized
to field evaluations, then pushed from the outputs towards the inputs: at
every gate the claims are merged into one and replaced by claims about the
gate's children, until only constants and variables remain, which the
verifier evaluates itself.

``field_ops`` counts arithmetic in the field plus one unit per coordinate
whenever an assignment is built, compared or sent.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

from ..circuit import BEquiv, BEval, Circuit, Claim, Count, EpsCheck, FEval, GateKind
from ..ebdd import combine, poly_eval
from ..field import P, RandomSource, inv
from .channel import Channel, TransportError
from .fragments import Fragment
from .messages import (AnswerAssignment, AnswerPoint, AnswerPoly, ChallengeDistinct,
                       ChallengeEval, Verdict, WireError)

MAX_COUNT_VARS = 60  # 2^n must stay below the field size


class Reject(Exception):
    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class ConfigurationError(ValueError):
    pass


_LEAVES = (GateKind.CONST, GateKind.VAR)


def error_bound(n: int, size: int) -> float:
    """Probability that one run accepts a false claim set, for ``size`` gates."""
    return (4 * n * size + n) / P


class Verifier:
    """One protocol run. ``sigma_r`` switches to the garbage-collecting mode."""

    def __init__(self, circuit: Circuit, channel: Channel, rng: RandomSource,
                 sigma_r: Sequence[int] | None = None) -> None:
        self.c = circuit
        self.n = circuit.n
        self.channel = channel
        self.rng = rng
        self.sigma_r = tuple(sigma_r) if sigma_r is not None else None
        self.claims: dict[int, list[tuple[tuple[int, ...], int]]] = {}
        self.eps: dict[int, int] = {}
        self.messages = 0
        self.field_ops = 0
        self.challenges = 0

    # -- communication --------------------------------------------------

    def _request(self, msg):
        self.messages += 2
        self.challenges += 1
        try:
            return self.channel.request(msg)
        except (TransportError, WireError, OSError) as exc:
            raise Reject("transport", str(exc)) from None

    def ask_point(self, g: int, sigma: tuple[int, ...]) -> int:
        self.field_ops += self.n + 1
        ans = self._request(ChallengeEval(g, sigma))
        if not isinstance(ans, AnswerPoint):
            raise Reject("malformed-answer", f"expected a point for g{g}")
        return ans.value

    def ask_poly(self, g: int, sigma: tuple[int, ...], x: int) -> tuple[int, int, int]:
        self.field_ops += self.n + 3
        ans = self._request(ChallengeEval(g, sigma, x))
        if not isinstance(ans, AnswerPoly):
            raise Reject("malformed-answer", f"expected a polynomial for g{g}")
        return ans.coeffs

    def ask_distinct(self, g1: int, g2: int) -> tuple[int, ...]:
        ans = self._request(ChallengeDistinct(g1, g2))
        if not isinstance(ans, AnswerAssignment) or len(ans.sigma) != self.n:
            raise Reject("malformed-answer", "expected a full assignment")
        self.field_ops += self.n
        if any(v > 1 for v in ans.sigma):
            raise Reject("malformed-answer", "distinguishing assignment is not boolean")
        return ans.sigma

    def _eval(self, p: tuple[int, int, int], x: int) -> int:
        self.field_ops += 4
        return poly_eval(p, x)

    def _draw(self, x: int) -> int:
        self.field_ops += 1
        if self.sigma_r is not None:
            return self.sigma_r[x]
        return self.rng.sample()

    def _point(self) -> tuple[int, ...]:
        self.field_ops += self.n
        if self.sigma_r is not None:
            return self.sigma_r
        return tuple(self.rng.sample() for _ in range(self.n))

    def _with(self, sigma: tuple[int, ...], x: int, v: int) -> tuple[int, ...]:
        self.field_ops += self.n
        s = list(sigma)
        s[x] = v
        return tuple(s)

    def add(self, g: int, sigma: tuple[int, ...], k: int) -> None:
        self.claims.setdefault(g, []).append((sigma, k))

    # -- normalize ------------------------------------------------------

    def normalize(self, claims: Sequence[Claim]) -> None:
        """Turn every claim into field-evaluation claims, checking equivalences."""
        n = self.n
        for cl in claims:
            if isinstance(cl, (FEval, EpsCheck)):
                self._check_point(cl.sigma)
                self.add(cl.gate, tuple(cl.sigma), cl.k % P)
            elif isinstance(cl, BEval):
                self._check_point(cl.bits)
                self.add(cl.gate, tuple(cl.bits), cl.b)
            elif isinstance(cl, Count):
                if n > MAX_COUNT_VARS:
                    raise ConfigurationError(
                        f"count claims need at most {MAX_COUNT_VARS} variables, circuit has {n}")
                if not 0 <= cl.k <= 1 << n:
                    raise Reject("normalize-check", f"count {cl.k} is impossible over {n} variables")
                self.field_ops += n + 2
                self.add(cl.gate, (inv(2),) * n, cl.k * inv(1 << n) % P)
            elif isinstance(cl, BEquiv):
                if cl.expected:
                    sigma = self._point()
                else:
                    sigma = self.ask_distinct(cl.gate1, cl.gate2)
                k1 = self.ask_point(cl.gate1, sigma)
                k2 = self.ask_point(cl.gate2, sigma)
                self.field_ops += 1
                if (k1 == k2) != bool(cl.expected):
                    raise Reject("normalize-check",
                                 f"g{cl.gate1} and g{cl.gate2} {'differ' if cl.expected else 'agree'}")
                self.add(cl.gate1, sigma, k1)
                self.add(cl.gate2, sigma, k2)
            else:
                raise TypeError(f"not a claim: {cl!r}")

    def _check_point(self, sigma: Sequence[int]) -> None:
        if len(sigma) != self.n or any(not 0 <= v < P for v in sigma):
            raise ConfigurationError("claim point must hold one canonical field element per variable")

    # -- certify --------------------------------------------------------

    def certify(self, lo: int = 0, hi: int | None = None) -> None:
        """Discharge every claim on gates ``[lo, hi)``, from the last gate down.

        Claims left on gates below ``lo`` are checked against the values
        certified by earlier fragments.
        """
        hi = len(self.c) if hi is None else hi
        claims = self.claims
        for g in range(hi - 1, lo - 1, -1):
            cl = claims.pop(g, None)
            if cl:
                self._gate(g, cl)
        for g in sorted((g for g in claims if g < lo), reverse=True):
            cl = claims.pop(g)
            gate = self.c.gates[g]
            if gate.kind in _LEAVES:
                for sigma, k in cl:
                    self._check_leaf(gate, sigma, k)
            else:
                self._check_eps(g, cl, self.eps.get(g))

    def _check_leaf(self, gate, sigma, k) -> None:
        self.field_ops += 1
        want = gate.bit if gate.kind == GateKind.CONST else sigma[gate.var]
        if want != k:
            raise Reject("leaf-mismatch", f"g{gate.id} is {want}, claimed {k}")

    def _gate(self, g: int, cl) -> None:
        gate = self.c.gates[g]
        kind = gate.kind
        if kind in _LEAVES:
            for sigma, k in cl:
                self._check_leaf(gate, sigma, k)
            return
        if kind == GateKind.EPSILON:
            self._check_eps(g, cl, gate.value)
            return
        sigma, k = self._merge(g, cl)
        ch = gate.children
        if kind == GateKind.BINOP:
            ka = self.ask_point(ch[0], sigma)
            kb = self.ask_point(ch[1], sigma)
            self.field_ops += 5
            if combine(gate.op, ka, kb) != k:
                raise Reject("binop-consistency", f"g{g}")
            self.add(ch[0], sigma, ka)
            self.add(ch[1], sigma, kb)
        elif kind == GateKind.NOT:
            ka = self.ask_point(ch[0], sigma)
            self.field_ops += 1
            if (1 - ka) % P != k:
                raise Reject("not-consistency", f"g{g}")
            self.add(ch[0], sigma, ka)
        elif kind == GateKind.DEGREE:
            x = gate.var
            c0, c1, c2 = self.ask_poly(ch[0], sigma, x)
            s = sigma[x]
            self.field_ops += 5
            if (c0 + s * (c1 + c2)) % P != k:  # s*p(1) + (1-s)*p(0)
                raise Reject("degree-consistency", f"g{g}")
            r = self._draw(x)
            self.add(ch[0], self._with(sigma, x, r), self._eval((c0, c1, c2), r))
        elif kind == GateKind.PROJ:
            self.add(ch[0], self._with(sigma, gate.var, gate.bit), k)
        elif kind == GateKind.RENAME:
            self.add(ch[0], self._with(sigma, gate.var, sigma[gate.target]), k)
        else:
            raise Reject("transport", f"unknown gate kind at g{g}")

    def _merge(self, g: int, cl):
        """Collapse the claims on ``g`` into one, sharing one random value per variable."""
        if len(cl) == 1:
            return cl[0]
        free = sorted(self.c.free[g])
        seen: dict[tuple[int, ...], int] = {}
        cur = []
        for sigma, k in cl:
            key = tuple(sigma[x] for x in free)
            self.field_ops += len(free) + 1
            prev = seen.get(key)
            if prev is None:
                seen[key] = k
                cur.append([sigma, k])
            elif prev != k:
                raise Reject("merge-consistency", f"g{g} has two values at one point")
        if len(cur) == 1:
            return tuple(cur[0])
        for x in free:
            first = cur[0][0][x]
            self.field_ops += len(cur)
            if all(item[0][x] == first for item in cur):
                continue
            r = self._draw(x)
            for item in cur:
                sigma, k = item
                p = self.ask_poly(g, sigma, x)
                if self._eval(p, sigma[x]) != k:
                    raise Reject("merge-consistency", f"g{g}")
                item[0] = self._with(sigma, x, r)
                item[1] = self._eval(p, r)
        k0 = cur[0][1]
        self.field_ops += len(cur)
        if any(item[1] != k0 for item in cur):
            raise Reject("merge-consistency", f"g{g} claims disagree after merging")
        return tuple(cur[0])

    def _check_eps(self, g: int, cl, target: int | None) -> None:
        """Move each claim to the global random point and compare with the stored value."""
        sr = self.sigma_r
        if sr is None or target is None:
            raise Reject("stale-epsilon", f"g{g} has no certified value")
        free = sorted(self.c.free[g])
        for sigma, k in cl:
            for x in free:
                self.field_ops += 1
                if sigma[x] != sr[x]:
                    p = self.ask_poly(g, sigma, x)
                    if self._eval(p, sigma[x]) != k:
                        raise Reject("merge-consistency", f"g{g}")
                    k = self._eval(p, sr[x])
                    sigma = self._with(sigma, x, sr[x])
            self.field_ops += 1
            if k != target:
                raise Reject("stale-epsilon", f"g{g}")


# -- top level ------------------------------------------------------------

@dataclass
class ProtocolResult:
    accepted: bool
    reason: str
    repetitions: int
    messages: int = 0
    challenges: int = 0
    field_ops: int = 0
    error_bound: float = 0.0
    detail: str = ""
    per_run_field_ops: list[int] = dc_field(default_factory=list)


def _collect(res: ProtocolResult, v: Verifier) -> None:
    res.messages += v.messages
    res.challenges += v.challenges
    res.field_ops += v.field_ops
    res.per_run_field_ops.append(v.field_ops)


def _finish(res: ProtocolResult, channel: Channel) -> ProtocolResult:
    res.messages += 1
    try:
        channel.close(Verdict(res.accepted, res.reason))
    except (TransportError, WireError, OSError):
        pass
    return res


def run_protocol(circuit: Circuit, claims: Sequence[Claim], channel: Channel, seed: int,
                 repetitions: int = 1, base_size: int | None = None) -> ProtocolResult:
    """Normalize then certify, ``repetitions`` times; accept only if every run accepts.

    ``base_size`` is the circuit size before degree-reduction chains were
    inserted and sets the reported error bound.
    """
    if repetitions < 1:
        raise ConfigurationError("repetitions must be at least 1")
    rng = RandomSource(seed)
    size = base_size if base_size is not None else len(circuit)
    res = ProtocolResult(True, "", repetitions, error_bound=error_bound(circuit.n, size))
    for _ in range(repetitions):
        v = Verifier(circuit, channel, rng)
        try:
            v.normalize(claims)
            v.certify()
        except Reject as exc:
            res.accepted, res.reason, res.detail = False, exc.reason, exc.detail
        finally:
            _collect(res, v)
        if not res.accepted:
            break
    return _finish(res, channel)


def run_protocol_gc(circuit: Circuit, fragments: Sequence[Fragment], channel: Channel,
                    seed: int, repetitions: int = 1,
                    base_size: int | None = None) -> ProtocolResult:
    """Certify fragment by fragment, inputs first, with one global random point.

    After a fragment is certified, the values of its gates that later
    fragments read are kept as epsilon values and the prover may discard
    those gates' diagrams.
    """
    if repetitions < 1:
        raise ConfigurationError("repetitions must be at least 1")
    rng = RandomSource(seed)
    n = circuit.n
    size = base_size if base_size is not None else len(circuit)
    res = ProtocolResult(True, "", repetitions, error_bound=error_bound(n, size))
    for _ in range(repetitions):
        sigma_r = tuple(rng.sample() for _ in range(n))
        v = Verifier(circuit, channel, rng, sigma_r)
        v.field_ops += n
        try:
            for fr in fragments:
                v.normalize(fr.claims)
                pending = {}
                for b in fr.boundary:
                    if circuit.gates[b].kind in _LEAVES:
                        continue
                    k = v.ask_point(b, sigma_r)
                    v.add(b, sigma_r, k)
                    pending[b] = k
                v.certify(fr.lo, fr.hi)
                v.eps.update(pending)
        except Reject as exc:
            res.accepted, res.reason, res.detail = False, exc.reason, exc.detail
        finally:
            _collect(res, v)
        if not res.accepted:
            break
    return _finish(res, channel)
