"""Shared combinatorial enumeration: set partitions and rooted tree shapes."""

from __future__ import annotations

from functools import lru_cache
from itertools import product


def iter_set_partitions(items: tuple):
    """Yield every partition of ``items`` as a tuple of blocks.

    The order is deterministic: partitions of the tail are refined by
    inserting the head into each existing block, then as a new block.
    """
    if not items:
        return
    if len(items) == 1:
        yield (items,)
        return
    first, rest = items[0], items[1:]
    for part in iter_set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + ((first,) + part[i],) + part[i + 1 :]
        yield ((first,),) + part


@lru_cache(maxsize=None)
def rooted_topologies(leaves: tuple) -> tuple:
    """All rooted trees over ``leaves`` whose internal nodes have >= 2 children.

    A leaf is the atom itself; an internal node is the tuple of its children.
    Counts for 1..6 leaves: 1, 1, 4, 26, 236, 2752.
    """
    if len(leaves) == 1:
        return (leaves[0],)
    out = []
    for part in iter_set_partitions(leaves):
        if len(part) < 2:
            continue
        for combo in product(*(rooted_topologies(block) for block in part)):
            out.append(combo)
    return tuple(out)
