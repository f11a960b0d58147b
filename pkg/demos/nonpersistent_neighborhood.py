"""Sublinear attachment: the hub keeps changing, but the root stays close to it.

For f(i) = i^0.4 the identity of the maximal-degree vertex never settles, so
degree top-K sets are poor root finders.  A ball around the youngest
maximal-degree vertex works instead; this script shows how its radius,
size and hit rate move with the constant c1.

    python3 demos/nonpersistent_neighborhood.py
"""
from netarch import AttachmentFunction, EvolvingGraph, classify_regime, malthusian_rate
from netarch import degree_topk, neighborhood_confidence_set

f = AttachmentFunction.power(0.4)
lam = malthusian_rate(f).lambda_star
print(f"regime: {classify_regime(f).value}, lambda* = {lam:.4f}")

g = EvolvingGraph(1, f, seed=2024).grow_to(20_000)
print(f"root degree {g.degrees[0]}, max degree {g.degrees.max()}")
print(f"top-10 by degree contains the root: {degree_topk(g, 10).contains_root}")

print("\nc1     r_n     radius  |ball|   contains root")
for c1 in (0.0, 0.25, 0.5, 1.0, 2.0):
    cs = neighborhood_confidence_set(g, f, c1, lam)
    p = cs.params
    print(f"{c1:<6} {p['r_n']:<7.2f} {p['radius']:<7} {cs.size:<8} {cs.contains_root}")
