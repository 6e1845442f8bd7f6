import math
import random

import pytest

from kataback.fsm import (
    EPSILON_ID,
    AlphabetMismatchError,
    SymbolTable,
    UnknownSymbolError,
    Wfst,
    best_path,
    compose,
    cost_of,
    invert,
    k_best,
    linear_acceptor,
    load_fsm,
    project_output,
    save_fsm,
    trim,
)

# ---------------------------------------------------------------------------
# Oracle: exhaustive path enumeration on acyclic machines.


def enumerate_paths(machine):
    """All start-to-final paths of an acyclic machine as
    (cost, input labels, output labels) tuples, eps removed."""
    results = []

    def walk(state, cost, ins, outs):
        final = machine.finals.get(state)
        if final is not None:
            results.append((cost + final, tuple(ins), tuple(outs)))
        for arc in machine.arcs[state]:
            ins2 = ins + [machine.isyms.label(arc.ilabel)] if arc.ilabel else ins
            outs2 = outs + [machine.osyms.label(arc.olabel)] if arc.olabel else outs
            walk(arc.dst, cost + arc.cost, ins2, outs2)

    walk(machine.start, 0.0, [], [])
    return results


def random_acyclic_machine(rng, isyms, osyms, max_states=5, max_arcs=8):
    """Random transducer with forward-only arcs (hence acyclic), some epsilons."""
    n = rng.randint(2, max_states)
    machine = Wfst(isyms=isyms, osyms=osyms)
    for _ in range(n - 1):
        machine.add_state()
    in_ids = list(range(len(isyms)))   # 0 is epsilon
    out_ids = list(range(len(osyms)))
    for _ in range(rng.randint(1, max_arcs)):
        src = rng.randrange(0, n - 1)
        dst = rng.randrange(src + 1, n)
        machine.add_arc(src, rng.choice(in_ids), rng.choice(out_ids),
                        -math.log(rng.uniform(0.05, 1.0)), dst)
    for state in rng.sample(range(n), rng.randint(1, n)):
        machine.set_final(state, -math.log(rng.uniform(0.5, 1.0)))
    return machine


def brute_force_compose_costs(first, second):
    """Costs of all compatible path pairs, matching mid labels after eps removal."""
    costs = []
    for cost_a, _, mid_a in enumerate_paths(first):
        for cost_b, mid_b, _ in enumerate_paths(second):
            if mid_a == mid_b:
                costs.append(cost_a + cost_b)
    return sorted(costs)


@pytest.fixture
def abc():
    return SymbolTable.from_labels(["a", "b", "c", "x", "y", "z"])


def diamond(table):
    """Two a:b paths with probabilities 0.6*0.5 = 0.30 and 0.4*0.9 = 0.36."""
    m = Wfst(isyms=table, osyms=table)
    top, bottom, end = m.add_state(), m.add_state(), m.add_state()
    a, b = table.id("a"), table.id("b")
    m.add_arc(0, a, a, cost_of(0.6), top)
    m.add_arc(top, b, b, cost_of(0.5), end)
    m.add_arc(0, a, a, cost_of(0.4), bottom)
    m.add_arc(bottom, b, b, cost_of(0.9), end)
    m.set_final(end)
    return m


# ---------------------------------------------------------------------------
# linear_acceptor


def test_linear_empty(abc):
    m = linear_acceptor([], abc)
    path = best_path(m)
    assert path.total_cost == 0.0
    assert path.input_labels == ()


def test_linear_single(abc):
    m = linear_acceptor(["a"], abc)
    assert m.num_states == 2
    assert m.num_arcs == 1
    assert best_path(m).input_labels == ("a",)


def test_linear_chain(abc):
    m = linear_acceptor(["a", "b"], abc)
    assert m.num_states == 3
    path = best_path(m)
    assert path.total_cost == 0.0
    assert path.input_labels == ("a", "b") == path.output_labels


def test_linear_unknown_symbol(abc):
    with pytest.raises(UnknownSymbolError, match="bogus"):
        linear_acceptor(["a", "bogus"], abc)


# ---------------------------------------------------------------------------
# compose


def test_compose_single_path_product(abc):
    a, x, z = abc.id("a"), abc.id("x"), abc.id("z")
    first = Wfst(isyms=abc, osyms=abc)
    s = first.add_state()
    first.add_arc(0, a, x, cost_of(0.5), s)
    first.set_final(s)
    second = Wfst(isyms=abc, osyms=abc)
    s = second.add_state()
    second.add_arc(0, x, z, cost_of(0.4), s)
    second.set_final(s)
    path = best_path(compose(first, second))
    assert path.input_labels == ("a",)
    assert path.output_labels == ("z",)
    assert path.prob == pytest.approx(0.20, abs=1e-12)


def test_compose_with_identity(abc):
    m = diamond(abc)
    identity = Wfst(isyms=abc, osyms=abc)
    identity.set_final(0)
    for sym in range(1, len(abc)):
        identity.add_arc(0, sym, sym, 0.0, 0)
    composed = compose(m, identity)
    assert best_path(composed).total_cost == pytest.approx(best_path(m).total_cost)
    assert best_path(composed).output_labels == best_path(m).output_labels


def test_compose_alphabet_mismatch(abc):
    other = SymbolTable.from_labels(["p", "q"])
    first = Wfst(isyms=abc, osyms=abc)
    first.set_final(0)
    second = Wfst(isyms=other, osyms=other)
    second.set_final(0)
    with pytest.raises(AlphabetMismatchError):
        compose(first, second)


def test_compose_matches_brute_force_on_random_pairs(abc):
    rng = random.Random(20250808)
    checked = 0
    for _ in range(250):
        first = random_acyclic_machine(rng, abc, abc)
        second = random_acyclic_machine(rng, abc, abc)
        expected = brute_force_compose_costs(first, second)
        got = best_path(compose(first, second))
        if not expected:
            assert got is None
            continue
        checked += 1
        assert got.total_cost == pytest.approx(expected[0], rel=1e-9)
    assert checked > 100  # the generator must produce plenty of composable pairs


def test_compose_epsilon_paths_counted_once(abc):
    # first: a -> eps eps, second: eps eps -> z; every pairing must appear
    # exactly once so k-best costs match the path-pair enumeration.
    a, x, z = abc.id("a"), abc.id("x"), abc.id("z")
    first = Wfst(isyms=abc, osyms=abc)
    s1, s2 = first.add_state(), first.add_state()
    first.add_arc(0, a, x, cost_of(0.5), s1)
    first.add_arc(s1, a, EPSILON_ID, cost_of(0.5), s2)
    first.set_final(s2)
    second = Wfst(isyms=abc, osyms=abc)
    t1, t2 = second.add_state(), second.add_state()
    second.add_arc(0, x, EPSILON_ID, cost_of(0.5), t1)
    second.add_arc(t1, EPSILON_ID, z, cost_of(0.5), t2)
    second.set_final(t2)
    composed = compose(first, second)
    paths = k_best(composed, 10)
    expected = brute_force_compose_costs(first, second)
    assert [p.total_cost for p in paths] == pytest.approx(expected, rel=1e-9)


# ---------------------------------------------------------------------------
# invert / trim


def test_invert_swaps_labels(abc):
    a, x = abc.id("a"), abc.id("x")
    m = Wfst(isyms=abc, osyms=abc)
    s = m.add_state()
    m.add_arc(0, a, x, cost_of(0.3), s)
    m.set_final(s)
    inv = invert(m)
    arc = inv.arcs[0][0]
    assert (arc.ilabel, arc.olabel) == (x, a)
    assert arc.cost == pytest.approx(cost_of(0.3))


def test_invert_involution(abc):
    m = diamond(abc)
    assert invert(invert(m)) == m


def test_invert_reverses_composition_order(abc):
    rng = random.Random(11)
    for _ in range(40):
        first = random_acyclic_machine(rng, abc, abc)
        second = random_acyclic_machine(rng, abc, abc)
        lhs = best_path(invert(compose(first, second)))
        rhs = best_path(compose(invert(second), invert(first)))
        if lhs is None:
            assert rhs is None
        else:
            assert lhs.total_cost == pytest.approx(rhs.total_cost, rel=1e-9)


def test_trim_removes_dead_branch(abc):
    m = diamond(abc)
    dead = m.add_state()
    m.add_arc(0, abc.id("c"), abc.id("c"), 0.0, dead)  # no path to a final
    trimmed = trim(m)
    assert trimmed.num_states == m.num_states - 1
    assert best_path(trimmed).total_cost == pytest.approx(best_path(m).total_cost)


def test_trim_idempotent_on_trim_machine(abc):
    m = diamond(abc)
    assert trim(m) == m


def test_trim_preserves_weighted_language(abc):
    rng = random.Random(77)
    for _ in range(60):
        m = random_acyclic_machine(rng, abc, abc)
        before = sorted(enumerate_paths(m))
        after = sorted(enumerate_paths(trim(m)))
        assert len(before) == len(after)
        for (c1, i1, o1), (c2, i2, o2) in zip(before, after):
            assert (i1, o1) == (i2, o2)
            assert c1 == pytest.approx(c2, rel=1e-12)


def test_trim_no_path_gives_empty_machine(abc):
    m = Wfst(isyms=abc, osyms=abc)
    s = m.add_state()
    m.add_arc(0, abc.id("a"), abc.id("a"), 0.0, s)  # no final anywhere
    trimmed = trim(m)
    assert trimmed.num_states == 1
    assert trimmed.num_arcs == 0
    assert not trimmed.finals
    assert best_path(trimmed) is None


# ---------------------------------------------------------------------------
# best_path / k_best


def test_best_path_single_path(abc):
    m = linear_acceptor(["a", "b", "c"], abc)
    assert best_path(m).input_labels == ("a", "b", "c")


def test_best_path_diamond(abc):
    path = best_path(diamond(abc))
    assert path.prob == pytest.approx(0.36, abs=1e-12)


def test_best_path_matches_enumeration(abc):
    rng = random.Random(4242)
    for _ in range(120):
        m = random_acyclic_machine(rng, abc, abc, max_states=8)
        paths = enumerate_paths(m)
        got = best_path(m)
        if not paths:
            assert got is None
        else:
            assert got.total_cost == pytest.approx(min(c for c, _, _ in paths), rel=1e-9)


def test_best_path_handles_cycles(abc):
    # Unigram-style hub with self-loops; non-negative costs keep this safe.
    m = Wfst(isyms=abc, osyms=abc)
    m.set_final(0, 0.0)
    m.add_arc(0, abc.id("a"), abc.id("a"), cost_of(0.75), 0)
    m.add_arc(0, abc.id("b"), abc.id("b"), cost_of(0.25), 0)
    path = best_path(m)
    assert path.total_cost == 0.0 and path.input_labels == ()
    seq = linear_acceptor(["a", "a", "b"], abc)
    scored = best_path(compose(seq, m))
    assert scored.prob == pytest.approx(0.75 * 0.75 * 0.25, rel=1e-12)


def test_best_path_empty_machine_is_none(abc):
    m = Wfst(isyms=abc, osyms=abc)
    assert best_path(m) is None


def test_k_best_first_equals_best_path(abc):
    rng = random.Random(99)
    for _ in range(40):
        m = random_acyclic_machine(rng, abc, abc)
        paths = k_best(m, 4)
        bp = best_path(m)
        if bp is None:
            assert paths == []
        else:
            assert paths[0].total_cost == bp.total_cost
            assert paths[0].output_labels == bp.output_labels
            assert all(p1.total_cost <= p2.total_cost + 1e-12
                       for p1, p2 in zip(paths, paths[1:]))


def test_k_best_diamond(abc):
    paths = k_best(diamond(abc), 2)
    assert [p.prob for p in paths] == pytest.approx([0.36, 0.30], abs=1e-12)


def test_k_best_matches_sorted_enumeration(abc):
    rng = random.Random(1234)
    for _ in range(80):
        m = random_acyclic_machine(rng, abc, abc, max_states=6)
        expected = sorted(c for c, _, _ in enumerate_paths(m))[:10]
        got = [p.total_cost for p in k_best(m, 10)]
        assert got == pytest.approx(expected, rel=1e-9)


def test_k_best_paths_distinct_as_arc_sequences(abc):
    m = diamond(abc)
    paths = k_best(m, 5)
    seen = {tuple(id(arc) for _, arc in p.arcs) for p in paths}
    assert len(seen) == len(paths)


# ---------------------------------------------------------------------------
# weights, projection, serialization


def test_cost_prob_round_trip():
    assert cost_of(1.0) == 0.0
    assert cost_of(0.5) + cost_of(0.5) == pytest.approx(cost_of(0.25), rel=1e-12)
    with pytest.raises(ValueError):
        cost_of(0.0)
    with pytest.raises(ValueError):
        cost_of(1.5)


def test_negative_arc_cost_rejected(abc):
    m = Wfst(isyms=abc, osyms=abc)
    s = m.add_state()
    with pytest.raises(ValueError):
        m.add_arc(0, 1, 1, -0.25, s)


def test_project_output(abc):
    a, x = abc.id("a"), abc.id("x")
    m = Wfst(isyms=abc, osyms=abc)
    s = m.add_state()
    m.add_arc(0, a, x, cost_of(0.5), s)
    m.set_final(s)
    proj = project_output(m)
    assert proj.is_acceptor()
    path = best_path(proj)
    assert path.input_labels == ("x",)
    assert path.total_cost == pytest.approx(cost_of(0.5))


def test_symbol_table_round_trip(tmp_path):
    table = SymbolTable.from_labels(["a", "b", "ガ"])
    table.save(tmp_path / "t.syms")
    loaded = SymbolTable.load(tmp_path / "t.syms")
    assert loaded == table


def test_fsm_serialization_round_trip(abc, tmp_path):
    # States on no line (dead, unmentioned) are not representable, so the
    # guarantee is exact equality for trim machines and equal weighted
    # language otherwise.
    rng = random.Random(3)
    for i in range(20):
        m = random_acyclic_machine(rng, abc, abc)
        path = tmp_path / f"m{i}.fsm"
        save_fsm(m, path)
        loaded = load_fsm(path, abc, abc)
        assert trim(loaded) == trim(m)
        trimmed = trim(m)
        save_fsm(trimmed, path)
        assert load_fsm(path, abc, abc) == trimmed


def test_fsm_serialization_empty_machine(abc, tmp_path):
    m = Wfst(isyms=abc, osyms=abc)
    save_fsm(m, tmp_path / "empty.fsm")
    assert (tmp_path / "empty.fsm").read_text() == ""
    loaded = load_fsm(tmp_path / "empty.fsm", abc, abc)
    assert best_path(loaded) is None


def test_fsm_text_format_shape(abc, tmp_path):
    m = diamond(abc)
    save_fsm(m, tmp_path / "d.fsm")
    lines = (tmp_path / "d.fsm").read_text().splitlines()
    arc_lines = [l for l in lines if len(l.split("\t")) == 5]
    final_lines = [l for l in lines if len(l.split("\t")) == 2]
    assert len(arc_lines) == 4 and len(final_lines) == 1
    assert arc_lines[0].split("\t")[0] == "0"  # start state listed first
    src, dst, ilabel, olabel, cost = arc_lines[0].split("\t")
    assert ilabel == "a" and olabel == "a"
    assert float(cost) == pytest.approx(cost_of(0.6))
