import itertools
import math
from fractions import Fraction

import pytest

from probelab.graph import GraphFormatError, cycle_graph, gen_random_regular
from probelab.lll import (
    CriterionViolated,
    Event,
    LllConfig,
    LllInstance,
    PartialAssignment,
    ScopeTooLarge,
    Variable,
    check_criterion,
    event_probability,
    instance_from_json,
    instance_to_json,
    lll_query,
    lll_solve,
    moser_tardos,
    pre_shatter,
    random_instance,
    solve_component,
)
from probelab.sinkless import so_as_lll


def enumerate_probability(inst, eid, fixed):
    e = inst.event[eid]
    free = [x for x in e.vbl if x not in fixed]
    total = Fraction(0)
    for vals in itertools.product(*(range(inst.var[x].domain) for x in free)):
        a = dict(fixed)
        a.update(zip(free, vals))
        w = math.prod((inst.var[x].prob(v) for x, v in zip(free, vals)), start=Fraction(1))
        if tuple(a[x] for x in e.vbl) in e.bad:
            total += w
    return total


def single(p_bad, domain=2, scope=1):
    xs = [Variable(i, domain) for i in range(scope)]
    bad = frozenset(itertools.islice(itertools.product(range(domain), repeat=scope), p_bad))
    return LllInstance(xs, [Event("e", tuple(range(scope)), bad)])


@pytest.mark.parametrize("biased", [False, True])
@pytest.mark.parametrize("seed", range(6))
def test_event_probability_matches_enumeration(seed, biased):
    inst = random_instance(12, 6, 3, seed, domain=3, bad=4, biased=biased)
    for e in inst.events:
        for k in range(len(e.vbl) + 1):
            fixed = {x: (seed + i) % 3 for i, x in enumerate(e.vbl[:k])}
            assert event_probability(inst, e.id, PartialAssignment(fixed)) == enumerate_probability(inst, e.id, fixed)


def test_scope_limit():
    inst = LllInstance([Variable(i, 2) for i in range(30)], [Event(0, tuple(range(30)), frozenset())])
    with pytest.raises(ScopeTooLarge):
        inst.probability(0)


def test_partial_assignment_rejects_overlap():
    with pytest.raises(ValueError):
        PartialAssignment({1: 0}, {1})


def test_single_certain_event_fails_every_criterion():
    inst = single(2)
    for kind in ("4pd", "exp", "poly:1"):
        assert not check_criterion(inst, kind)


def test_so_on_cubic_graph_criteria():
    inst = so_as_lll(gen_random_regular(20, 3, 3, 0))
    assert inst.p == Fraction(1, 8) and inst.d == 3
    assert check_criterion(inst, "exp")  # 2^3 / 8 = 1
    assert not check_criterion(inst, "4pd")  # 4 * 3 / 8 > 1
    assert not check_criterion(inst, "poly:1")


def test_unknown_criterion():
    with pytest.raises(ValueError):
        check_criterion(single(1), "bogus")


@pytest.mark.parametrize("seed", range(20))
def test_moser_tardos_avoids_all_events(seed):
    inst = random_instance(40, 16, 4, seed)
    assert check_criterion(inst, "4pd")
    assert inst.violated(moser_tardos(inst, seed).assignment) == []


@pytest.mark.parametrize("seed", range(10))
def test_solve_component_avoids_component_events(seed):
    inst = random_instance(40, 16, 4, seed, domain=2, bad=1)
    comp = [e.id for e in inst.events]
    vals = solve_component(inst, {}, comp, seed)
    assert inst.violated(vals) == []


def test_solve_component_respects_fixed_values():
    inst = random_instance(30, 10, 3, 4)
    e = inst.events[0]
    fixed = {e.vbl[0]: 1}
    vals = solve_component(inst, fixed, [e.id], 0)
    assert e.vbl[0] not in vals and set(vals) == set(e.vbl[1:])
    assert not inst.is_violated(e.id, {**fixed, **vals})


def test_pre_shatter_requires_criterion():
    inst = so_as_lll(gen_random_regular(20, 3, 3, 0))
    with pytest.raises(CriterionViolated):
        pre_shatter(inst)


@pytest.mark.parametrize("seed", range(5))
def test_pre_shatter_postcondition(seed):
    inst = so_as_lll(gen_random_regular(128, 6, 3, seed))
    sh = pre_shatter(inst, seed=seed)
    for e in inst.events:
        assert event_probability(inst, e.id, sh.partial) <= Fraction(sh.tau)
    assert sh.dangerous >= sh.marked
    for comp in sh.components:
        assert comp <= sh.dangerous


@pytest.mark.parametrize("seed", range(4))
def test_lll_solve_valid_on_so(seed):
    inst = so_as_lll(gen_random_regular(200, 6, 3, seed))
    sol = lll_solve(inst, seed=seed)
    assert inst.violated(sol.assignment) == []


@pytest.mark.parametrize("seed", range(3))
def test_query_matches_global(seed):
    inst = so_as_lll(gen_random_regular(96, 6, 3, seed))
    sol = lll_solve(inst, seed=seed)
    dg = inst.dependency_graph()
    for e in inst.events[::3]:
        vals, tr = lll_query(inst, dg, e.id, seed=seed)
        assert vals == {x: sol.assignment[x] for x in e.vbl}
        assert tr.probe_count > 0


def test_solve_is_seed_deterministic():
    inst = so_as_lll(gen_random_regular(64, 6, 3, 1))
    assert lll_solve(inst, seed=3).assignment == lll_solve(inst, seed=3).assignment


def test_threshold_defaults():
    cfg = LllConfig()
    assert cfg.tau(16) == 16 ** -0.5
    assert cfg.num_colors(6) == 6**5


def test_instance_json_roundtrip():
    inst = random_instance(10, 4, 3, 0, domain=3, bad=2, biased=True)
    back = instance_from_json(instance_to_json(inst))
    assert back.events == inst.events and back.variables == inst.variables


def test_instance_parse_errors():
    with pytest.raises(GraphFormatError, match="line"):
        instance_from_json('{"kind": "lll-instance",\n "version": ')
    with pytest.raises(GraphFormatError):
        instance_from_json('{"kind": "graph"}')


def test_dependency_graph_shape():
    inst = so_as_lll(cycle_graph(7, delta=3), min_deg=2)
    dg = inst.dependency_graph()
    assert dg.n == 7 and all(dg.degree(v) == 2 for v in range(7))
