"""
From schedule to transfer matrix
================================

Running a schedule over a fading draw produces y = H x + w with a
structured H: the delivered symbols ride the diagonal, inter-symbol
leakage sits below it, and the amplified relay noise shapes Sigma.
"""

import numpy as np

from relaydmt import (FadingRealization, extract_blocks, naf_network,
                      naf_schedule, propagate, saf_network, saf_schedule,
                      structure_certificate)

np.set_printoptions(precision=3, suppress=True, linewidth=100)

# One relay listening while the source talks, then both talking: the
# two-slot cycle gives a 2x2 lower-triangular channel per frame.
net = naf_network()
fading = FadingRealization.sample(net, 42)
model = propagate(net, naf_schedule(net), fading, cycles=1)

print("two-slot relay channel, one frame")
print("H =\n", model.h)
print("Sigma =\n", model.sigma)
print("direct gain:", round(abs(fading.gains[("s", "d")]), 3),
      "| relay product:",
      round(abs(fading.gains[("s", "r1")] * fading.gains[("r1", "d")]), 3))
print()

# The certificate classifies the structure and checks that each row's
# dominant coefficient is the one the schedule promised.
cert = structure_certificate(model)
print("certificate:", cert.kind, "| thread ok:", cert.thread_ok,
      "| worst thread error:", f"{cert.max_thread_error:.2e}")
print()

# A two-relay bank over five slots: the thread is the direct gain on
# every diagonal entry, the sub-diagonal alternates relay products.
bank = saf_network(2)
bmodel = propagate(bank, saf_schedule(bank), FadingRealization.sample(bank, 7),
                   cycles=1)
print("five-slot bank channel")
print("H =\n", bmodel.h)

h_diag, h_rest, independent = extract_blocks(bmodel)
print("thread entries:", np.round(np.abs(h_diag[np.abs(h_diag) > 0]), 3))
print("leakage entries:", np.round(np.abs(h_rest[np.abs(h_rest) > 0]), 3))
print("leakage independent of thread:", independent)
