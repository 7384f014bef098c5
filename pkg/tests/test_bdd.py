import itertools

import pytest
from hypothesis import given, settings, strategies as st

from certikit.bdd import BDD, FALSE, TRUE, BddDomainError, BinOp, RenameOrderError

from conftest import ALL_OPS, from_table, random_bdd, random_table, table_of


def test_binop_truth_tables():
    assert [BinOp.AND(a, b) for a, b in itertools.product((0, 1), repeat=2)] == [0, 0, 0, 1]
    assert [BinOp.IMP(a, b) for a, b in itertools.product((0, 1), repeat=2)] == [1, 1, 0, 1]
    assert BinOp.from_trace_name("xor2") is BinOp.XOR
    with pytest.raises(ValueError):
        BinOp.from_trace_name("mux3")


@pytest.mark.parametrize("op", ALL_OPS)
def test_coefficients_agree_on_bits(op):
    c0, cp, cq, cpq = op.coefficients()
    for a, b in itertools.product((0, 1), repeat=2):
        assert c0 + cp * a + cq * b + cpq * a * b == op(a, b)


def test_reduce_rules():
    bdd = BDD(3)
    n = bdd.var_node(1)
    assert bdd.reduce(0, n, n) == n
    assert bdd.reduce(0, FALSE, TRUE) == bdd.reduce(0, FALSE, TRUE)


def test_all_two_variable_functions_share_nodes():
    bdd = BDD(2)
    tables = [[(t >> i) & 1 for i in range(4)] for t in range(16)]
    roots = [from_table(bdd, t) for t in tables]
    assert len(set(roots)) == 16
    # oracle: one node per distinct non-constant subfunction, where the
    # subfunctions of t are t and its two cofactors on x0
    subfunctions = set()
    for t in tables:
        for sub in (t, [t[(i & 2)] for i in range(4)], [t[(i & 2) | 1] for i in range(4)]):
            if len(set(sub)) > 1:
                subfunctions.add(tuple(sub))
    interior = {u for r in roots for u in bdd.nodes(r) if u > 1}
    assert len(interior) == len(subfunctions) == 14
    assert bdd.live_count - 2 == len(interior)


def test_apply_identities(rng):
    bdd = BDD(5)
    for _ in range(20):
        f = random_bdd(bdd, rng, 5)
        assert bdd.apply(f, TRUE, BinOp.AND) == f
        assert bdd.apply(f, f, BinOp.XOR) == FALSE
        assert bdd.negate(bdd.negate(f)) == f


def test_apply_matches_tables(rng):
    bdd = BDD(5)
    for _ in range(200):
        ta, tb = random_table(rng, 5), random_table(rng, 5)
        op = rng.choice(ALL_OPS)
        f = bdd.apply(from_table(bdd, ta), from_table(bdd, tb), op)
        assert table_of(bdd, f, 5) == [op(a, b) for a, b in zip(ta, tb)]
    bdd.check_invariants()


def test_restrict(rng):
    bdd = BDD(5)
    x0 = bdd.var_node(0)
    assert bdd.restrict(x0, 0, 1) == TRUE
    f = from_table(bdd, random_table(rng, 3), [1, 2, 3])
    assert bdd.restrict(f, 0, 1) == f
    for _ in range(50):
        t = random_table(rng, 5)
        f = from_table(bdd, t)
        x, b = rng.randrange(5), rng.randrange(2)
        want = [t[(i & ~(1 << x)) | (b << x)] for i in range(32)]
        assert table_of(bdd, bdd.restrict(f, x, b), 5) == want


def test_rename(rng):
    bdd = BDD(8)
    assert bdd.rename(bdd.var_node(0), 0, 1) == bdd.var_node(1)
    for _ in range(50):
        # support on even variables; rename one to its odd neighbour
        t = random_table(rng, 4)
        f = from_table(bdd, t, [0, 2, 4, 6])
        i = rng.randrange(4)
        g = bdd.rename(f, 2 * i, 2 * i + 1)
        assert bdd.rename(g, 2 * i + 1, 2 * i) == f
        vars_ = [0, 2, 4, 6]
        vars_[i] += 1
        assert g == from_table(bdd, t, vars_)


def test_rename_order_violations():
    bdd = BDD(4)
    f = bdd.apply(bdd.var_node(0), bdd.var_node(1), BinOp.AND)
    with pytest.raises(RenameOrderError):
        bdd.rename(f, 0, 1)  # target in support
    with pytest.raises(RenameOrderError):
        bdd.rename(f, 0, 2)  # x1 lies between


def test_compose(rng):
    bdd = BDD(5)
    x0 = bdd.var_node(0)
    g = random_bdd(bdd, rng, 5)
    assert bdd.compose(x0, 0, g) == g
    for _ in range(50):
        ta, tb = random_table(rng, 5), random_table(rng, 5)
        f, g = from_table(bdd, ta), from_table(bdd, tb)
        x = rng.randrange(5)
        assert bdd.compose(f, x, bdd.var_node(x)) == f
        want = [ta[(i & ~(1 << x)) | (tb[i] << x)] for i in range(32)]
        assert table_of(bdd, bdd.compose(f, x, g), 5) == want


def test_count_solutions(rng):
    bdd = BDD(12)
    assert bdd.count_solutions(TRUE, 7) == 1 << 7
    assert bdd.count_solutions(FALSE, 7) == 0
    assert bdd.count_solutions(bdd.apply(bdd.var_node(0), bdd.var_node(1), BinOp.OR), 2) == 3
    for _ in range(5):
        t = random_table(rng, 12)
        assert bdd.count_solutions(from_table(bdd, t), 12) == sum(t)


def test_evaluate():
    bdd = BDD(2)
    f = bdd.apply(bdd.var_node(0), bdd.var_node(1), BinOp.AND)
    assert bdd.evaluate(TRUE, [0, 0]) == 1
    assert bdd.evaluate(f, {0: 1, 1: 0}) == 0
    assert bdd.evaluate(f, {0: 1, 1: 1}) == 1


def test_quantifiers(rng):
    bdd = BDD(6)
    x0 = bdd.var_node(0)
    assert bdd.exists(x0, [0]) == TRUE
    assert bdd.forall(x0, [0]) == FALSE
    for _ in range(30):
        t = random_table(rng, 6)
        f = from_table(bdd, t)
        xs = rng.sample(range(6), 3)
        mask = sum(1 << x for x in xs)
        sub = [i for i in range(64) if i & mask == i]
        ex = [int(any(t[(i & ~mask) | s] for s in sub)) for i in range(64)]
        fa = [int(all(t[(i & ~mask) | s] for s in sub)) for i in range(64)]
        assert table_of(bdd, bdd.exists(f, xs), 6) == ex
        assert table_of(bdd, bdd.forall(f, xs), 6) == fa


def test_equivalence():
    bdd = BDD(3)
    a, b, c = (bdd.var_node(i) for i in range(3))
    assert bdd.equivalent(a, a)
    assert bdd.apply(a, b, BinOp.AND) == bdd.apply(b, a, BinOp.AND)
    # a & (b | c) against (a & b) | (a & c)
    lhs = bdd.apply(a, bdd.apply(b, c, BinOp.OR), BinOp.AND)
    rhs = bdd.apply(bdd.apply(a, b, BinOp.AND), bdd.apply(a, c, BinOp.AND), BinOp.OR)
    assert bdd.equivalent(lhs, rhs)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(ALL_OPS), st.integers(0, 5), st.integers(0, 5)),
                min_size=1, max_size=12))
def test_canonicity(ops):
    """Two different constructions of one function give the same node."""
    bdd = BDD(6)
    pool = [bdd.var_node(i) for i in range(6)]
    for op, i, j in ops:
        pool.append(bdd.apply(pool[i % len(pool)], pool[-1 - j % len(pool)], op))
    f = pool[-1]
    again = from_table(bdd, table_of(bdd, f, 6))
    assert again == f


def test_gc_reclaims_dropped_nodes(rng):
    bdd = BDD(8)
    keep = bdd.ref(random_bdd(bdd, rng, 8))
    bdd.gc()
    base = bdd.live_count
    f = bdd.ref(random_bdd(bdd, rng, 8))
    assert bdd.live_count >= base
    bdd.deref(f)
    bdd.gc()
    assert bdd.live_count == base
    assert bdd.gc() == 0
    assert bdd.is_live(keep)
    bdd.check_invariants()


def test_gc_keeps_caches_sound(rng):
    bdd = BDD(6)
    a = bdd.ref(random_bdd(bdd, rng, 6))
    b = bdd.ref(random_bdd(bdd, rng, 6))
    first = bdd.apply(a, b, BinOp.AND)
    table = table_of(bdd, first, 6)
    bdd.gc()  # the result is unreferenced and collected
    again = bdd.apply(a, b, BinOp.AND)
    assert table_of(bdd, again, 6) == table
    bdd.check_invariants()


def test_domain_errors():
    bdd = BDD(3)
    f = bdd.apply(bdd.var_node(0), bdd.var_node(2), BinOp.AND)
    with pytest.raises(BddDomainError):
        bdd.evaluate(f, {0: 1})
    with pytest.raises(BddDomainError):
        bdd.count_solutions(f, 2)


def test_sat_one(rng):
    bdd = BDD(6)
    assert bdd.sat_one(FALSE) is None
    for _ in range(20):
        f = random_bdd(bdd, rng, 6, density=0.3)
        sol = bdd.sat_one(f)
        if f == FALSE:
            assert sol is None
        else:
            pt = [sol.get(i, 0) for i in range(6)]
            assert bdd.evaluate(f, pt) == 1


def test_dot_output():
    bdd = BDD(2)
    f = bdd.apply(bdd.var_node(0), bdd.var_node(1), BinOp.XOR)
    dot = bdd.to_dot(f, ["a", "b"])
    assert dot.startswith("digraph")
    assert 'label="a"' in dot and 'label="b"' in dot
