import random

import pytest

from kbisim.graph import build_graph
from kbisim.kaushik import SplitterLedger, bisim_kaushik, naive_coarsest_partition
from kbisim.oracle import vertex_labeled_backward_levels
from kbisim.partition import (
    Partition,
    check_monotone,
    is_refinement,
    is_stable_partition,
    label_partition,
    partitions_equal,
)

from _graphs import example_graph, random_graph, refinements, stable_blocks

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"


def test_example_sweeps_and_early_stop():
    g = example_graph()
    t = bisim_kaushik(g, 10, record_partitions=True)
    levels = vertex_labeled_backward_levels(g, 2)
    assert [p.n_blocks for p in t.partitions] == [5, 9, 10, 10]
    for a, b in zip(t.partitions, levels):
        assert partitions_equal(a, b)
    # sweep 3 follows the all-singleton state and splits nothing
    assert t.terminated_early and t.iterations_executed == 3
    assert t.block_counts == [5, 9, 10, 10]


def test_uniform_labels_no_edges():
    g = build_graph([(f"v{i}", RDF_TYPE, "K") for i in range(6)])
    t = bisim_kaushik(g, 4)
    assert t.n_blocks == 1 and t.terminated_early and t.iterations_executed == 1


def test_k_zero_returns_label_partition():
    g = example_graph()
    assert bisim_kaushik(g, 0).partition == label_partition(g)
    with pytest.raises(ValueError):
        bisim_kaushik(g, -2)


@pytest.mark.parametrize("seed", range(15))
def test_matches_oracle_every_sweep(seed):
    g = random_graph(seed)
    t = bisim_kaushik(g, 5, early_stop=False, record_partitions=True)
    levels = vertex_labeled_backward_levels(g, 5)
    for a, b in zip(t.partitions, levels):
        assert partitions_equal(a, b)
    assert check_monotone(t.partitions)
    assert t.block_counts == sorted(t.block_counts)
    assert t.block_counts == [p.n_blocks for p in t.partitions]


@pytest.mark.parametrize("seed", range(15))
def test_ledger_does_not_change_results(seed):
    g = random_graph(seed)
    a = bisim_kaushik(g, 6, use_ledger=True, record_partitions=True)
    b = bisim_kaushik(g, 6, use_ledger=False, record_partitions=True)
    assert a.iterations_executed == b.iterations_executed
    for x, y in zip(a.partitions, b.partitions):
        assert x == y


@pytest.mark.parametrize("seed", range(10))
def test_agrees_with_naive_after_early_stop(seed):
    g = random_graph(seed)
    t = bisim_kaushik(g, 1000)
    assert t.terminated_early
    assert partitions_equal(t.partition, naive_coarsest_partition(label_partition(g), g))


@pytest.mark.parametrize("seed", range(8))
def test_forced_continuation_changes_nothing(seed):
    g = random_graph(seed)
    t = bisim_kaushik(g, 10)
    if t.terminated_early:
        assert bisim_kaushik(g, t.iterations_executed + 1, early_stop=False).partition == t.partition


def test_ledger_type():
    ledger = SplitterLedger()
    ledger.add((3, 7))
    assert (3, 7) in ledger and (3, 6) not in ledger and len(ledger) == 1


def test_naive_on_example_gives_singletons():
    g = example_graph()
    assert naive_coarsest_partition(label_partition(g), g).n_blocks == 10


def test_naive_singletons_fixed():
    g = random_graph(4)
    p = Partition.singletons(g.vertex_count)
    assert naive_coarsest_partition(p, g) == p


def test_naive_size_mismatch():
    with pytest.raises(ValueError):
        naive_coarsest_partition(Partition([0, 0]), example_graph())


@pytest.mark.parametrize("seed", range(20))
def test_naive_is_stable_refinement_50(seed):
    g = random_graph(seed, n=50, m=90)
    rng = random.Random(seed)
    p0 = Partition([rng.randrange(3) for _ in range(g.vertex_count)])
    p = naive_coarsest_partition(p0, g)
    assert is_refinement(p, p0)
    assert is_stable_partition(p, g)


@pytest.mark.parametrize("seed", range(25))
def test_naive_is_coarsest_on_small_graphs(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    triples = [(f"v{rng.randrange(n)}", "p", f"v{rng.randrange(n)}") for _ in range(rng.randint(1, 2 * n))]
    g = build_graph(triples)
    p0 = Partition([rng.randrange(2) for _ in range(g.vertex_count)])
    p = naive_coarsest_partition(p0, g)
    succ = [{w for w, _ in g.out_neighbors(v)} for v in range(g.vertex_count)]
    for blocks in refinements(p0):
        if stable_blocks(blocks, succ):
            assert is_refinement(Partition.from_blocks(blocks, g.vertex_count), p)
