"""
Analytic diversity-multiplexing curves
======================================

family_dmt maps a network to its achievable curve and cut-set bound as
exact piecewise-linear functions over Fractions. The curve calculus
underneath (parallel combining, sums, rate scaling) is exposed too.
"""

from fractions import Fraction

from relaydmt import (curve_rows, family_dmt, kpp_network, layered_network,
                      linear_curve, mimo_dmt, naf_network, parallel,
                      rate_scale, single_link_network)

zoo = [
    ("single link", single_link_network()),
    ("one relay + direct", naf_network()),
    ("kpp(2,3,4)", kpp_network((2, 3, 4))),
    ("kpp(2,3,4) + direct", kpp_network((2, 3, 4), direct_link=True)),
    ("layered (1,2,2,1)", layered_network((1, 2, 2, 1))),
    ("layered (1,5,2,2,5,1)", layered_network((1, 5, 2, 2, 5, 1))),
]

for label, net in zoo:
    fam = family_dmt(net)
    pts = " ".join(f"({r},{d})" for r, d in fam.achievable.points)
    tight = "meets cut-set bound" if fam.tight else "below cut-set bound"
    print(f"{label:22} [{fam.label}]")
    print(f"  achievable: {pts}   ({tight})")

print()

# The calculus directly: a 2x2 reference channel, and what happens to
# two unequal parallel branches when rate splits optimally.
print("2x2 point-to-point reference:", mimo_dmt(2, 2).points)
both = parallel([linear_curve(1), linear_curve(2)])
print("one weak + one strong branch:", both.points)
print("slot sharing halves the prelog:", rate_scale(both, Fraction(1, 2)).points)
print()

# Plot-ready rows for any curve.
for row in curve_rows(both):
    print(row)
