"""
Unit-variance error families
============================

The likelihood machinery needs three functions of each residual: ln f, the
score ratio f'/f, and the log-density curvature. All three families are
scaled to variance one so the model's noise level is fixed by convention.
"""

import numpy as np

import pstarann as pa

families = [pa.normal(), pa.scaled_t(4), pa.scaled_t(8), pa.laplace()]

s = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
for d in families:
    print(f"--- {d.label}")
    print("  log f     :", np.round(d.log_pdf(s), 4))
    print("  f'/f      :", np.round(d.score(s), 4))
    print("  curvature :", np.round(d.curvature(s), 4))

# Sampling is deterministic per seed and scaled to unit variance; the t(4)
# tails are heavy, the Laplace peak is sharp.
print()
for d in families:
    x = d.sample(123, 10**6)
    print(f"{d.label:8s} sample variance {x.var():.4f}   excess kurtosis "
          f"{x.var() and float(((x - x.mean())**4).mean() / x.var()**2 - 3):+.3f}")

# The Laplace log-density is piecewise linear: no curvature anywhere, and
# no second derivative at 0. Point estimation works, but curvature-based
# covariance does not (see demo 04).
print()
lap = pa.laplace()
print("Laplace score is piecewise constant:", lap.score(np.array([-1e-9, 1e-9])))
