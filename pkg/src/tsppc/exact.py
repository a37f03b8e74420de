"""Exact optimum by dynamic programming over precedence-closed node sets.

A state is (visited set, last node). Only sets that contain every parent of
each member child are generated, which keeps the table far below 2^N * N
for pickup/delivery structures.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance, Tour

DEFAULT_NODE_LIMIT = 20


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactResult:
    tour: Tour
    optimal: bool
    states: int


def exact_oracle(instance: Instance, node_limit: int = DEFAULT_NODE_LIMIT) -> ExactResult:
    n = instance.n_locations
    if n > node_limit:
        raise InstanceTooLarge(
            f"{instance.name or 'instance'} has {n} locations; the exact oracle is limited to {node_limit}"
        )
    end = instance.end
    c = np.asarray(instance.costs)
    prec = instance.precedence
    # bit (k - 1) stands for location k
    parent_mask = [0] * (n + 1)
    for child, parents in prec.parents_of.items():
        for p in parents:
            parent_mask[child] |= 1 << (p - 1)

    inf = np.inf
    # layer: mask -> (cost per last node, predecessor per last node)
    layer: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for k in range(1, n + 1):
        if parent_mask[k] == 0:
            cost = np.full(end + 1, inf)
            pred = np.full(end + 1, -1, dtype=np.int64)
            cost[k] = c[0, k]
            pred[k] = 0
            layer[1 << (k - 1)] = (cost, pred)
    history = [layer]
    states = sum(int(np.isfinite(v[0]).sum()) for v in layer.values())
    for _ in range(n - 1):
        nxt: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for mask, (cost, _pred) in layer.items():
            lasts = np.flatnonzero(np.isfinite(cost))
            for k in range(1, n + 1):
                bit = 1 << (k - 1)
                if mask & bit or (parent_mask[k] & mask) != parent_mask[k]:
                    continue
                totals = cost[lasts] + c[lasts, k]
                i = int(np.argmin(totals))
                new_mask = mask | bit
                entry = nxt.get(new_mask)
                if entry is None:
                    entry = (np.full(end + 1, inf), np.full(end + 1, -1, dtype=np.int64))
                    nxt[new_mask] = entry
                if totals[i] < entry[0][k]:
                    entry[0][k] = totals[i]
                    entry[1][k] = lasts[i]
        layer = nxt
        history.append(layer)
        states += sum(int(np.isfinite(v[0]).sum()) for v in layer.values())

    full = (1 << n) - 1
    cost, _ = layer[full]
    totals = cost + c[:, end]
    last = int(np.argmin(totals))
    order = [end, last]
    mask = full
    for depth in range(n - 1, 0, -1):
        prev = int(history[depth][mask][1][last])
        mask &= ~(1 << (last - 1))
        order.append(prev)
        last = prev
    order.append(0)
    order.reverse()
    return ExactResult(Tour.build(instance, order, "exact"), True, states)
