import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from certikit.bdd import BinOp
from certikit.circuit import AssertEquiv, FConst, FNot, FOp, FVar, to_circuit, truth_table
from certikit.modelcheck.checker import Checker, check, model_inputs
from certikit.modelcheck.explicit import ExplicitSystem, StateSpaceTooLarge, explicit_oracle
from certikit.modelcheck.parser import (CAtom, CNot, CTemporal, CUntil, ParseError,
                                        ctl_atoms, ctl_text, existential, parse_ctl,
                                        parse_model)

from conftest import MODELS

SUITE = sorted(p.stem for p in MODELS.glob("*.model"))

TOGGLE = """
-- one bit that flips every step
VAR b;
INIT !b;
TRANS next(b) <-> !b;
LABEL on := b;
CTLSPEC AG (EF on);
CTLSPEC EG on;
"""


def load(name, universal=False):
    return parse_model((MODELS / f"{name}.model").read_text(), name, universal)


def test_parse_toggle():
    m = parse_model(TOGGLE)
    assert m.vars == ["b"] and m.n == 2
    assert m.init == FNot(FVar(0))
    assert m.trans == FOp(BinOp.XNOR, FVar(1), FNot(FVar(0)))
    assert m.spec_texts == ["AG ( EF on )", "EG on"]
    assert check(m, m.specs[0]).answer is True
    assert check(m, m.specs[1]).answer is False


def test_precedence_and_associativity():
    m = parse_model("VAR a; VAR b; VAR c; INIT a | b & c; TRANS a -> b -> c;")
    assert m.init == FOp(BinOp.OR, FVar(0), FOp(BinOp.AND, FVar(2), FVar(4)))
    assert m.trans == FOp(BinOp.IMP, FVar(0), FOp(BinOp.IMP, FVar(2), FVar(4)))
    m = parse_model("VAR a; VAR b; INIT !a <-> b ^ TRUE; INIT FALSE | a;")
    assert m.init == FOp(BinOp.AND,
                         FOp(BinOp.XNOR, FNot(FVar(0)), FOp(BinOp.XOR, FVar(2), FConst(1))),
                         FOp(BinOp.OR, FConst(0), FVar(0)))


@pytest.mark.parametrize("text, fragment", [
    ("VAR a; INIT b;", "b"),
    ("VAR a; INIT next(a);", "next"),
    ("VAR a; INIT a", "';'"),
    ("VAR a; VAR a;", "twice"),
    ("VAR a; LABEL p := a; CTLSPEC EF q;", "q"),
    ("VAR a; CTLSPEC EF a;", "a"),
    ("VAR a; FAIRNESS a;", "FAIRNESS"),
    ("INIT TRUE;", "no variables"),
    ("VAR a; INIT (a;", "line 1"),
    ("VAR a; LABEL p := a; CTLSPEC E [p U];", "line 1"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_model(text)


def test_error_mentions_line():
    with pytest.raises(ParseError, match="line 3"):
        parse_model("VAR a;\n-- comment\nINIT a & ;\n")


def test_ctl_parsing_and_duals():
    labels = {"p", "q"}
    f = parse_ctl("A [p U q]", labels, universal=True)
    assert f == CUntil("A", CAtom("p"), CAtom("q"))
    assert ctl_atoms(f) == labels
    g = parse_ctl("AG p", labels)
    assert g == CNot(CTemporal("EF", CNot(CAtom("p"))))
    assert existential(g) == g
    assert ctl_text(parse_ctl("E [p U !q]", labels)) == "E [p U !q]"


@pytest.mark.parametrize("name", SUITE)
def test_suite_agrees_with_explicit_states(name):
    sym = load(name)
    exp = load(name, universal=True)
    for f_sym, f_exp in zip(sym.specs, exp.specs):
        assert check(sym, f_sym).answer == explicit_oracle(exp, f_exp)


@pytest.mark.parametrize("name", SUITE)
def test_duals_agree_explicitly(name):
    sys = ExplicitSystem(load(name, universal=True))
    for f in sys.model.specs:
        assert (sys.sat(f) == sys.sat(existential(f))).all()


def test_eg_is_a_greatest_fixpoint_of_intersection():
    # a holds initially and never again; a union in the fixpoint would
    # accept every state with a successor
    m = parse_model("""
        VAR a;
        INIT a;
        TRANS !next(a);
        LABEL p := a;
        CTLSPEC EG p;
        CTLSPEC EG !p;
        CTLSPEC EX EG !p;
    """)
    assert [check(m, f).answer for f in m.specs] == [False, False, True]


@pytest.mark.parametrize("name", SUITE)
def test_trace_shape_per_fixpoint(name):
    m = load(name)
    for f in m.specs:
        res = check(m, f)
        bits = [a.bit for a in res.trace.assertions() if isinstance(a, AssertEquiv)]
        final = res.trace.assertions()[-1]
        assert final.b == "false" and final.bit == int(res.answer)
        pos = 0
        for rounds in res.iterations:
            assert bits[pos:pos + rounds] == [0] * (rounds - 1) + [1]
            pos += rounds
        assert pos == len(bits) - 1


@pytest.mark.parametrize("name", ["counter2", "mutex2", "token_ring4", "fig1"])
def test_assertions_hold_on_the_circuit(name):
    """Replay the trace as a circuit; every assertion matches the truth tables."""
    m = load(name)
    for f in m.specs:
        res = check(m, f)
        c, claims, _ = to_circuit(res.trace, res.inputs, res.n)
        for cl in claims:
            same = (truth_table(c, cl.gate1) == truth_table(c, cl.gate2)).all()
            assert int(same) == cl.expected


def test_fig1_walkthrough():
    m = load("fig1")
    res = check(m, m.specs[0])
    assert res.iterations == [2]
    assert [a.bit for a in res.trace.assertions()] == [0, 1, 1]
    assert res.answer is True


def test_model_inputs_cover_labels():
    m = load("mutex2")
    inputs = model_inputs(m)
    assert {"init", "trans"} <= set(inputs)
    assert all(f"label.{name}" in inputs for name in m.labels)


def test_rename_fallback_keeps_the_function():
    # x0 -> x2 skips the support variable x1, so the engine composes instead
    ch = Checker(parse_model("VAR a; VAR b; INIT a; TRANS TRUE;"))
    s = ch.solver
    g = s.apply("x0", "x1", BinOp.AND)
    r = s.rename(g, 0, 2)
    want = s.bdd.apply(s.bdd.var_node(2), s.bdd.var_node(1), BinOp.AND)
    assert s.get(r) == want


def test_explicit_refuses_large_models():
    text = "".join(f"VAR v{i};" for i in range(13))
    with pytest.raises(StateSpaceTooLarge):
        ExplicitSystem(parse_model(text))


# -- random models --------------------------------------------------------------

def _expr(rng, names, depth, primed):
    if depth == 0 or rng.random() < 0.3:
        v = rng.choice(names)
        return f"next({v})" if primed and rng.random() < 0.5 else v
    op = rng.choice(["&", "|", "^", "->", "<->"])
    inner = f"({_expr(rng, names, depth - 1, primed)} {op} {_expr(rng, names, depth - 1, primed)})"
    return "!" + inner if rng.random() < 0.2 else inner


def _ctl(rng, depth):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(["p", "q", "TRUE"])
    r = rng.random()
    if r < 0.45:
        return f"{rng.choice(['EX', 'EF', 'EG', 'AX', 'AF', 'AG'])} ({_ctl(rng, depth - 1)})"
    if r < 0.65:
        return f"{rng.choice('EA')} [{_ctl(rng, depth - 1)} U {_ctl(rng, depth - 1)}]"
    if r < 0.8:
        return f"!({_ctl(rng, depth - 1)})"
    return f"({_ctl(rng, depth - 1)} {rng.choice(['&', '|', '->'])} {_ctl(rng, depth - 1)})"


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 2**32))
def test_random_models_agree_with_explicit_states(seed):
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(rng.randint(1, 3))]
    text = "".join(f"VAR {v};" for v in names)
    text += f"INIT {_expr(rng, names, 2, False)};"
    text += f"TRANS {_expr(rng, names, 3, True)};"
    text += f"LABEL p := {_expr(rng, names, 1, False)};"
    text += f"LABEL q := {_expr(rng, names, 1, False)};"
    spec = _ctl(rng, 3)
    text += f"CTLSPEC {spec};"
    sym = parse_model(text)
    exp = parse_model(text, universal=True)
    assert check(sym, sym.specs[0]).answer == explicit_oracle(exp, exp.specs[0]), text
