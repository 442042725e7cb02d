"""Shared independent oracles for the test suite.

These stay deliberately dumb (full enumeration, no reuse of library
code paths) so they can vouch for the fast implementations.
"""
from __future__ import annotations

import itertools


def king_move_pairs(width: int, height: int) -> set[tuple[int, int]]:
    """All (low, high) cell pairs whose rows and cols differ by <= 1."""
    pairs = set()
    for a in range(width * height):
        for b in range(width * height):
            if a >= b:
                continue
            ra, ca = divmod(a, width)
            rb, cb = divmod(b, width)
            if abs(ra - rb) <= 1 and abs(ca - cb) <= 1:
                pairs.add((a, b))
    return pairs


def brute_force_contacts(records, threshold: int) -> set[tuple[int, int]]:
    """O(users^2 * ticks) pairwise co-location counting over (user, tick, cell)
    records; gap records (cell None) are ignored."""
    cells: dict[tuple[int, int], int] = {}
    users = set()
    ticks = set()
    for user, tick, cell in records:
        if cell is None:
            continue
        cells[(user, tick)] = cell
        users.add(user)
        ticks.add(tick)
    contacts = set()
    for u, v in itertools.combinations(sorted(users), 2):
        count = 0
        for t in ticks:
            cu = cells.get((u, t))
            if cu is not None and cu == cells.get((v, t)):
                count += 1
        if count >= threshold:
            contacts.add((u, v))
    return contacts


def floyd_warshall_hops(nodes, edges) -> dict[tuple[int, int], float]:
    """All-pairs shortest hop counts by Floyd-Warshall (not BFS)."""
    inf = float("inf")
    nodes = sorted(nodes)
    dist = {(a, b): (0 if a == b else inf) for a in nodes for b in nodes}
    for a, b in edges:
        dist[(a, b)] = 1
        dist[(b, a)] = 1
    for k in nodes:
        for i in nodes:
            for j in nodes:
                via = dist[(i, k)] + dist[(k, j)]
                if via < dist[(i, j)]:
                    dist[(i, j)] = via
    return dist
