"""Division from ReLUs: a piecewise-linear 1/x^2 and the derived reciprocal.

The approximator is a literal sum of paired ReLUs (hard sigmoids), one
pair per knot interval and side. It matches 1/x^2 at every knot, holds the
first value flat on [-x1, x1], and decays to zero past the cutoff knot.
Multiplying by x (a multiplicative skip connection) then approximates 1/x.
"""

import numpy as np

from elsakit import approx_reciprocal, build_invsqr, invsqr_eval

np.set_printoptions(linewidth=120, suppress=True)

# --- a tiny table you can read in full ------------------------------------------
table = build_invsqr([1.0, 2.0, 4.0])
print("knots :", table.knots)
print("values:", table.values, "(last knot is the zero-valued cutoff)")

xs = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0])
print("\n   x     sigma(x)    1/x^2")
for x in xs:
    truth = np.inf if x == 0 else 1.0 / x**2
    print(f"{x:6.2f}  {invsqr_eval(table, float(x)):9.6f}  {truth:9.6f}")

print("\neven symmetry, sigma(-x) == sigma(x):",
      all(invsqr_eval(table, -float(x)) == invsqr_eval(table, float(x)) for x in xs))

# --- reciprocal via the multiplicative skip -------------------------------------
print("\nreciprocal x * sigma(x) at the knots (exact there):")
for x in table.interior_knots:
    print(f"  1/{x:g} ~ {approx_reciprocal(table, float(x)):.6f}")

# --- refinement: denser geometric grids are uniformly better --------------------
rng = np.random.default_rng(1)
sample = rng.uniform(0.02, 80.0, size=20_000)
print("\nmax relative error of x*sigma(x) vs 1/x on [0.02, 80]:")
for n in (32, 64, 128, 256, 512):
    t = build_invsqr(f"geometric:x1=1e-2,xmax=1e2,n={n}")
    rel = np.abs(approx_reciprocal(t, sample) * sample - 1.0)
    print(f"  {n:4d} intervals: {rel.max():.3e}")
