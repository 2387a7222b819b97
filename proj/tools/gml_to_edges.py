#!/usr/bin/env python3
"""Convert a GML network with a per-node community attribute into the
.edges/.truth pair read by stiefelcd.

    tools/gml_to_edges.py football.gml data/football --attribute value
"""
import argparse
import sys

import networkx as nx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("gml")
    ap.add_argument("prefix", help="output prefix; writes PREFIX.edges and PREFIX.truth")
    ap.add_argument("--attribute", default="value", help="node attribute holding the community")
    args = ap.parse_args()

    # Some public GML files repeat edges or are flagged as multigraphs.
    g = nx.Graph(nx.read_gml(args.gml, label="id"))
    g.remove_edges_from(nx.selfloop_edges(g))
    nodes = sorted(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    try:
        raw = [g.nodes[v][args.attribute] for v in nodes]
    except KeyError:
        sys.exit(f"node without attribute {args.attribute!r}")
    labels = {c: i for i, c in enumerate(sorted(set(raw), key=str))}

    with open(args.prefix + ".edges", "w") as f:
        f.write(f"# {len(nodes)} nodes, {g.number_of_edges()} edges, 0-based ids\n")
        for u, v in sorted((min(index[a], index[b]), max(index[a], index[b])) for a, b in g.edges):
            f.write(f"{u} {v}\n")
    with open(args.prefix + ".truth", "w") as f:
        f.write(f"# {args.attribute} of each node (line i = node i)\n")
        for c in raw:
            f.write(f"{labels[c]}\n")
    print(f"{len(nodes)} nodes, {g.number_of_edges()} edges, {len(labels)} communities")


if __name__ == "__main__":
    main()
