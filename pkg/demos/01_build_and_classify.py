"""
Building relay networks and asking what they are
================================================

Every other capability hangs off the Network object, so start here:
construct a few topologies, classify them, and check cuts and paths.
"""

from relaydmt import (classify, expand_antennas, forward_paths, kpp_network,
                      layered_network, min_cut, naf_network, saf_network)

# Three vertex-disjoint relaying paths with 2, 3 and 4 hops. Links are
# bidirectional by default, the way the physical channel actually is.
net = kpp_network((2, 3, 4))
print("kpp(2,3,4):", len(net.nodes), "nodes,", len(net.edges), "directed edges")

cls = classify(net)
print("family:", cls.label)
print("paths: ", [" > ".join(p) for p in cls.backbone])
print("min-cut:", min_cut(net))
print()

# The same skeleton plus a direct source-sink link changes the family
# and raises the cut by one.
direct = kpp_network((2, 3, 4), direct_link=True)
print("plus direct link ->", classify(direct).label, "| min-cut", min_cut(direct))
print()

# Layered networks: every relay sits in a layer, edges join adjacent
# layers. A fully-connected profile (1,3,3,1) is also "regular".
layered = layered_network((1, 3, 3, 1))
print("layered (1,3,3,1) ->", classify(layered).label)
print("forward paths:", len(forward_paths(layered).paths))
print()

# Two reference networks that come up constantly: a single relay plus
# direct link, and a bank of relays behind the source.
# The one-relay-plus-direct-link net has no family label of its own;
# the curve machinery treats it as a relay bank.
print("one relay + direct  ->", classify(naf_network()).label)
print("two-relay bank      ->", classify(saf_network(2)).label)
print()

# Multi-antenna terminals are handled by expansion: each antenna of a
# terminal becomes a parallel edge, each multi-antenna relay a copy.
from relaydmt import Edge, Network, Node

mimo = Network(
    [Node("s", "source", antennas=2), Node("r", "relay"),
     Node("d", "sink", antennas=2)],
    [Edge("s", "r"), Edge("r", "d"), Edge("s", "d")],
)
flat = expand_antennas(mimo)
print("antenna expansion:", len(mimo.edges), "edges ->", len(flat.edges),
      "| min-cut", min_cut(mimo), "(2x2 direct link alone carries 4)")
