"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run as ``python -m pathmine.benchmark``.  Generates a random multigraph,
times each kernel pair on identical inputs, and checks that both backends
agree.  With PATHMINE_NO_NUMBA=1 (or without numba installed) only the
numpy path is timed.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import kernels
from .kg import graph_from_triples


def _random_graph(n_nodes: int, n_edges: int, seed: int):
    rng = np.random.default_rng(seed)
    relations = ["RelatedTo", "AtLocation", "IsA", "PartOf", "Antonym"]
    hubs = max(1, n_nodes // 50)
    triples = []
    for _ in range(n_edges):
        if rng.random() < 0.3:
            a = int(rng.integers(hubs))
        else:
            a = int(rng.integers(n_nodes))
        b = int(rng.integers(n_nodes))
        triples.append((f"w{a}", relations[int(rng.integers(len(relations)))], f"w{b}"))
    extra = [f"w{i}" for i in range(n_nodes)]
    return graph_from_triples(triples, extra_concepts=extra)


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=20000)
    parser.add_argument("--edges", type=int, default=200000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    g = _random_graph(args.nodes, args.edges, args.seed)
    n = g.node_count
    print(f"backend={kernels.backend()}  nodes={n}  edges={g.edge_count}")

    rows = []

    # walk counting: one B*v step on both index directions
    x = np.ones(n, dtype=np.int64)

    def walk_np():
        out = np.zeros(n, dtype=np.int64)
        kernels._walk_step_np(g.fwd_indptr, g.fwd_dst, x, out)
        kernels._walk_step_np(g.rev_indptr, g.rev_dst, x, out)
        return out

    if kernels.HAVE_NUMBA:

        def walk_jit():
            out = np.zeros(n, dtype=np.int64)
            kernels._walk_step_jit(g.fwd_indptr, g.fwd_dst, x, out)
            kernels._walk_step_jit(g.rev_indptr, g.rev_dst, x, out)
            return out

        walk_jit()  # compile
        assert np.array_equal(walk_jit(), walk_np())
        rows.append(("walk step", _time(walk_jit, args.repeat), _time(walk_np, args.repeat)))
    else:
        rows.append(("walk step", None, _time(walk_np, args.repeat)))

    # distinct-neighbor counts
    def nbh_np():
        out = np.zeros(n, dtype=np.int64)
        kernels._neighbor_counts_np(g.fwd_indptr, g.fwd_dst, g.rev_indptr, g.rev_dst, out)
        return out

    if kernels.HAVE_NUMBA:

        def nbh_jit():
            out = np.zeros(n, dtype=np.int64)
            kernels._neighbor_counts_jit(g.fwd_indptr, g.fwd_dst, g.rev_indptr, g.rev_dst, out)
            return out

        nbh_jit()
        assert np.array_equal(nbh_jit(), nbh_np())
        rows.append(("neighbor counts", _time(nbh_jit, args.repeat), _time(nbh_np, args.repeat)))
    else:
        rows.append(("neighbor counts", None, _time(nbh_np, args.repeat)))

    # association scores over a large candidate batch
    rng = np.random.default_rng(args.seed)
    c4s = rng.integers(0, n, size=5000).astype(np.int32)
    nbh = g.neighbor_count
    w3 = g.walk_count(2)
    w4 = g.walk_count(3)
    args_assoc = (g.fwd_indptr, g.fwd_dst, nbh, 0, 1, 2, c4s, w3, w4, n)

    def assoc_np():
        out = np.empty(c4s.size, dtype=np.float64)
        kernels._assoc_batch_np(*args_assoc, out)
        return out

    if kernels.HAVE_NUMBA:

        def assoc_jit():
            out = np.empty(c4s.size, dtype=np.float64)
            kernels._assoc_batch_jit(*args_assoc, out)
            return out

        assoc_jit()
        assert np.allclose(assoc_jit(), assoc_np())
        rows.append(("association batch", _time(assoc_jit, args.repeat), _time(assoc_np, args.repeat)))
    else:
        rows.append(("association batch", None, _time(assoc_np, args.repeat)))

    # candidate expansion over a frontier of hub nodes
    parents = np.arange(min(2000, n), dtype=np.int32)
    ancestors = np.full((parents.size, 4), -1, dtype=np.int32)
    allowed = np.ones(n, dtype=np.bool_)

    def expand(backend_have_numba: bool):
        saved = kernels.HAVE_NUMBA
        kernels.HAVE_NUMBA = backend_have_numba
        try:
            return kernels.expand_candidates(
                parents,
                ancestors,
                g.fwd_indptr,
                g.fwd_dst,
                g.fwd_rel,
                g.rev_indptr,
                g.rev_dst,
                g.rev_rel,
                allowed,
            )
        finally:
            kernels.HAVE_NUMBA = saved

    if kernels.HAVE_NUMBA:
        expand(True)
        a = expand(True)
        b = expand(False)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[2], b[2])
        rows.append(
            (
                "candidate expansion",
                _time(lambda: expand(True), args.repeat),
                _time(lambda: expand(False), args.repeat),
            )
        )
    else:
        rows.append(("candidate expansion", None, _time(lambda: expand(False), args.repeat)))

    print(f"{'kernel':<22}{'numba (s)':>12}{'numpy (s)':>12}{'speedup':>10}")
    for name, t_jit, t_np in rows:
        if t_jit is None:
            print(f"{name:<22}{'-':>12}{t_np:>12.5f}{'-':>10}")
        else:
            print(f"{name:<22}{t_jit:>12.5f}{t_np:>12.5f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
