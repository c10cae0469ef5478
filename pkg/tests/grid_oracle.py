"""Exact reachability probability on the probabilistic grid, independently of
the engine: a frontier dynamic program over columns.

Edges go right (x+1,y), down (x,y+1), or diagonal (x+1,y+1), each present
independently with probability 0.5, so the joint distribution of "which nodes
in column x are reachable from the start" is a distribution over bitmasks
that can be pushed column by column. Within a column, reachability closes
downward through the vertical edges.
"""

from itertools import product
from typing import Dict


def grid_path_probability(n: int, p: float = 0.5) -> float:
    """P(node (n,n) reachable from (1,1)) on an n-by-n grid."""
    q = 1.0 - p

    def close_down(mask: int, verticals) -> int:
        # verticals[y] is the presence of the edge (x,y) -> (x,y+1)
        for y in range(n - 1):
            if mask >> y & 1 and verticals[y]:
                mask |= 1 << (y + 1)
        return mask

    # column 1: the start node, closed through that column's vertical edges
    dist: Dict[int, float] = {}
    for verticals in product((0, 1), repeat=n - 1):
        weight = 1.0
        for bit in verticals:
            weight *= p if bit else q
        mask = close_down(1, verticals)
        dist[mask] = dist.get(mask, 0.0) + weight

    for _ in range(n - 1):  # columns 2..n
        new_dist: Dict[int, float] = {}
        horizontals = list(product((0, 1), repeat=n))
        diagonals = list(product((0, 1), repeat=n - 1))
        verticals_all = list(product((0, 1), repeat=n - 1))
        for mask, mass in dist.items():
            for hs in horizontals:
                w_h = 1.0
                for bit in hs:
                    w_h *= p if bit else q
                for ds in diagonals:
                    w_d = w_h
                    for bit in ds:
                        w_d *= p if bit else q
                    entered = 0
                    for y in range(n):
                        if mask >> y & 1 and hs[y]:
                            entered |= 1 << y
                        if y + 1 < n and mask >> y & 1 and ds[y]:
                            entered |= 1 << (y + 1)
                    for vs in verticals_all:
                        w = mass * w_d
                        for bit in vs:
                            w *= p if bit else q
                        new_mask = close_down(entered, vs)
                        new_dist[new_mask] = new_dist.get(new_mask, 0.0) + w
        dist = new_dist

    return sum(mass for mask, mass in dist.items() if mask >> (n - 1) & 1)
