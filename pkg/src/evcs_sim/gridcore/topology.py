from __future__ import annotations

import networkx as nx


def graph(case):
    g = nx.Graph()
    g.add_nodes_from(b.id for b in case.buses)
    g.add_edges_from((ln.from_bus, ln.to_bus) for ln in case.lines if ln.in_service)
    return g


def islands(case) -> list[frozenset]:
    """Connected components of the in-service network, ordered by smallest bus id."""
    comps = [frozenset(c) for c in nx.connected_components(graph(case))]
    return sorted(comps, key=min)
