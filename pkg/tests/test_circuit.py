import itertools
import random

import pytest

from certikit.bdd import BinOp
from certikit.circuit import (AssertCount, AssertEquiv, BEquiv, Circuit, CircuitError, Count,
                              FConst, FOp, FVar, GateKind, GatePolynomialOracle, Trace,
                              TraceError, conv, cube_extension, degree_reduce_at,
                              eval_gate_polynomial_oracle, eval_multilinear_oracle,
                              parse_trace, remap_claim, to_circuit, truth_table)
from certikit.field import HALF, P, inv

from oracles import random_circuit

FIG1_INPUTS = {"p": FVar(0), "I": FVar(1), "R": FOp(BinOp.AND, FVar(0), FVar(1))}


def fig1_trace() -> Trace:
    """The EF p walkthrough; Pre is stood in for by one library call."""
    t = Trace(FIG1_INPUTS)
    c0 = "p"
    pre0 = t.apply(c0, "R", BinOp.AND)
    c1 = t.apply(c0, pre0, BinOp.OR)
    t.record(AssertEquiv(c1, c0, 0))
    pre1 = t.apply(c1, "R", BinOp.AND)
    c2 = t.apply(c1, pre1, BinOp.OR)
    t.record(AssertEquiv(c2, c1, 1))
    c3 = t.apply(c2, "I", BinOp.AND)
    t.record(AssertEquiv(c3, "false", 1))
    return t


def test_fig1_trace_shape():
    t = fig1_trace()
    assert len(t) == 8  # the walkthrough's first line only names p
    assert [a.bit for a in t.assertions()] == [0, 1, 1]
    c, claims, gate_of = to_circuit(t, FIG1_INPUTS, 2)
    assert claims == [BEquiv(gate_of["t1"], gate_of["p"], 0),
                      BEquiv(gate_of["t3"], gate_of["t1"], 1),
                      BEquiv(gate_of["t4"], gate_of["false"], 1)]
    assert c.marks == sorted(c.marks) and len(c.marks) == 3


def test_empty_trace():
    c, claims, _ = to_circuit(Trace(), {}, 3)
    assert len(c) == 0 and claims == []
    assert len(conv(c)) == 0


def test_self_equivalence_claim():
    t = Trace(["C"])
    t.record(AssertEquiv("C", "C", 1))
    c, claims, gate_of = to_circuit(t, {"C": FVar(0)}, 1)
    g = gate_of["C"]
    assert claims == [BEquiv(g, g, 1)]


def test_count_claim():
    t = Trace()
    t.record(AssertCount("x0", 1))
    c, claims, _ = to_circuit(t, {}, 1)
    assert claims == [Count(0, 1)]
    assert c[0].kind == GateKind.VAR


def test_figure_b2_circuit():
    """f = x1 | x2 ; g = f ^ x3, then degree-reduction chains after both operators."""
    t = Trace()
    f = t.apply("x1", "x2", BinOp.OR)
    g = t.apply(f, "x3", BinOp.XOR)
    c, _, gate_of = to_circuit(t, {}, 4)
    kinds = [gate.kind for gate in c.gates]
    assert kinds == [GateKind.VAR, GateKind.VAR, GateKind.BINOP, GateKind.VAR, GateKind.BINOP]
    out = conv(c)
    top = out.top_of
    # the or gate reduces x1 then x2; the xor gate x1, x2, x3
    chain = []
    h = top[gate_of[g]]
    while out[h].kind == GateKind.DEGREE:
        chain.append(out[h].var)
        h = out[h].children[0]
    assert chain == [3, 2, 1] and out[h].kind == GateKind.BINOP
    inner = out[h].children[0]
    assert out[inner].kind == GateKind.DEGREE and out[inner].var == 2
    assert len(out) == 5 + 2 + 3


def test_conv_leaves_variables_alone():
    c = Circuit(2)
    c.var(1)
    out = conv(c)
    assert len(out) == 1 and out[0].kind == GateKind.VAR


def test_conv_makes_x_and_x_multilinear(rng):
    c = Circuit(1)
    x = c.var(0)
    g = c.binop(BinOp.AND, x, x)
    out = conv(c)
    top = out.top_of[g]
    for _ in range(20):
        s = rng.randrange(P)
        assert eval_gate_polynomial_oracle(c, g, [s]) == s * s % P
        assert eval_gate_polynomial_oracle(out, top, [s]) == s


def test_multilinear_oracle_examples():
    c = Circuit(5)
    g = c.binop(BinOp.OR, c.var(1), c.var(2))
    assert eval_multilinear_oracle(c, g, [0, HALF, HALF, 0, 0]) == 3 * inv(4) % P
    assert eval_multilinear_oracle(c, c.const(1), [7] * 5) == 1
    # (x4 | pi[x3:=0] x3) & pi[x3:=1] x3 is x4
    x3 = c.var(3)
    h = c.binop(BinOp.AND, c.binop(BinOp.OR, c.var(4), c.proj(x3, 3, 0)), c.proj(x3, 3, 1))
    rng = random.Random(1)
    for _ in range(10):
        sigma = [rng.randrange(P) for _ in range(5)]
        assert eval_multilinear_oracle(c, h, sigma) == sigma[4]
        assert eval_gate_polynomial_oracle(c, h, sigma) == sigma[4]


def test_negation_arithmetization(rng):
    c = Circuit(3)
    a = c.binop(BinOp.XOR, c.var(0), c.var(2))
    na = c.not_(a)
    for _ in range(20):
        sigma = [rng.randrange(P) for _ in range(3)]
        assert eval_gate_polynomial_oracle(c, na, sigma) == (1 - eval_gate_polynomial_oracle(c, a, sigma)) % P


def test_degree_reduction_of_a_polynomial(rng):
    # delta_x2 (x1 x2^3 - 2 x1 x2^2 + 4) = -x1 x2 + 4
    def poly(pt):
        x1, x2 = pt[1], pt[2]
        return (x1 * x2 ** 3 - 2 * x1 * x2 ** 2 + 4) % P

    for _ in range(20):
        sigma = [0, rng.randrange(P), rng.randrange(P)]
        assert degree_reduce_at(poly, 2, sigma) == (4 - sigma[1] * sigma[2]) % P


def test_cube_extension_on_the_cube(rng):
    for m in range(5):
        vals = [rng.randrange(P) for _ in range(1 << m)]
        for i in range(1 << m):
            assert cube_extension(vals, [(i >> j) & 1 for j in range(m)]) == vals[i]
    with pytest.raises(ValueError):
        cube_extension([1, 2, 3], [0, 1])


def test_projection_and_rename_rewrites(rng):
    c = Circuit(3)
    x = c.var(0)
    assert c.free[c.proj(x, 0, 1)] == frozenset()
    r = c.rename(x, 0, 2)
    assert c.free[r] == frozenset({2})
    back = c.rename(r, 2, 0)
    for _ in range(10):
        sigma = [rng.randrange(P) for _ in range(3)]
        assert eval_gate_polynomial_oracle(c, r, sigma) == sigma[2]
        assert eval_gate_polynomial_oracle(c, back, sigma) == sigma[0]
    with pytest.raises(CircuitError):
        c.rename(c.binop(BinOp.AND, c.var(0), c.var(1)), 0, 1)


def test_arithmetization_agrees_on_the_cube():
    rng = random.Random(8)
    for _ in range(40):
        n = rng.randint(1, 8)
        c, g = random_circuit(rng, n, rng.randint(1, 15))
        table = truth_table(c, g)
        oracle = GatePolynomialOracle(c)
        for i in rng.sample(range(1 << n), min(1 << n, 16)):
            bits = [(i >> j) & 1 for j in range(n)]
            assert oracle(g, bits) == int(table[i])


def test_conv_outputs_are_multilinear_extensions():
    rng = random.Random(9)
    for _ in range(30):
        n = rng.randint(1, 6)
        c, g = random_circuit(rng, n, rng.randint(1, 10))
        out = conv(c)
        top = out.top_of[g]
        oracle = GatePolynomialOracle(out)
        for _ in range(10):
            sigma = [rng.randrange(P) for _ in range(n)]
            assert oracle(top, sigma) == eval_multilinear_oracle(c, g, sigma)


def test_conv_size_bound():
    rng = random.Random(10)
    for _ in range(20):
        n = rng.randint(1, 8)
        c, _ = random_circuit(rng, n, 20)
        assert len(conv(c)) <= (n + 1) * len(c)


def test_trace_text_round_trip():
    t = fig1_trace()
    t.record(AssertCount("t4", 0))
    again = parse_trace(t.to_text(), FIG1_INPUTS)
    assert again.instructions == t.instructions


@pytest.mark.parametrize("text", [
    "let a = apply(x0,x1,and2)\nlet a2 = apply(a,b,or2)",  # b undefined
    "let a = apply(x0,x1,mux)",
    "let a = restrict(x0,y1,0)",
    "let a = restrict(x0,x1,2)",
    "assert_count x0 -1",
    "frobnicate",
])
def test_malformed_traces(text):
    with pytest.raises(TraceError):
        parse_trace(text)


def test_unknown_values_and_bad_eval_width():
    t = Trace(["q"])
    t.apply("q", "x0", BinOp.AND)
    with pytest.raises(TraceError):
        to_circuit(t, {}, 2)  # q has no formula
    with pytest.raises(TraceError):
        t.apply("nope", "x0", BinOp.AND)


def test_remap_claim():
    assert remap_claim(BEquiv(0, 1, 1), [5, 7]) == BEquiv(5, 7, 1)
    assert remap_claim(Count(1, 3), [5, 7]) == Count(7, 3)


def test_input_formulas_build_gates():
    c = Circuit(2)
    g = c.add_formula(FOp(BinOp.IMP, FVar(0), FConst(0)))
    for bits in itertools.product((0, 1), repeat=2):
        idx = bits[0] | (bits[1] << 1)
        assert int(truth_table(c, g)[idx]) == 1 - bits[0]
