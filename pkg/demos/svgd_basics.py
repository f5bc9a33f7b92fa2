"""
Particle transport on a tractable target
========================================

Before any intractable normalizer enters, SVGD is a deterministic way of
moving a cloud of particles toward a target whose score we can evaluate.
Here the target is a correlated 2-d Gaussian and the kernel Stein
discrepancy tracks how far the cloud still is from it.
"""

import numpy as np

from mcsvgd import KernelConfig, ParticleSet, ksd_vstat, summarize, svgd_direction, svgd_step

rng = np.random.default_rng(0)
prec = np.linalg.inv(np.array([[1.0, 0.8], [0.8, 1.0]]))


def score(x):
    return -(x - 2.0) @ prec


# start far from the target: a tight blob at the origin
ps = ParticleSet(rng.normal(0.0, 0.3, size=(200, 2)))
kernel = KernelConfig()  # median heuristic bandwidth
print(f"iteration    0  KSD {ksd_vstat(ps.particles, score(ps.particles), kernel):.3f}")

for t in range(1, 1501):
    phi = svgd_direction(ps.particles, score(ps.particles), kernel)
    ps = svgd_step(ps, phi, 0.1)
    if t % 300 == 0:
        print(f"iteration {t:4d}  KSD {ksd_vstat(ps.particles, score(ps.particles), kernel):.3f}")

# the cloud now has the target's mean and spread
for row in summarize(ps):
    print(f"theta_{row.coordinate}: mean {row.mean:.3f}  95% HPD ({row.hpd_low:.3f}, {row.hpd_high:.3f})")
print("sample correlation", round(float(np.corrcoef(ps.particles.T)[0, 1]), 3), "(target 0.8)")
