"""Gaussian elimination assembled from network components.

Every arithmetic move is a declared primitive: masks and componentwise
affine maps (one-hidden-layer ReLU units), the 1/x^2 activation under a
mask, matrix products, and multiplicative skip connections. Forward
elimination clears one column per module; backward substitution
materializes one solution entry per module in the last column.
"""

import numpy as np

from elsakit import (
    LinearSystem,
    Matrix,
    backward_substitute_step,
    build_invsqr,
    embed_system,
    forward_eliminate_step,
    make_problem,
    predict,
    ridge_closed_form,
    ridge_via_gauss,
    solve,
)

np.set_printoptions(linewidth=120, suppress=True, precision=4)

system = LinearSystem(
    f=Matrix([[4.0, 1.0, 2.0],
              [1.0, 5.0, 1.0],
              [2.0, 1.0, 6.0]]),
    alpha=Matrix([[7.0], [7.0], [9.0]]),
)

# --- watch the padded state evolve ------------------------------------------------
state = embed_system(system)
print("embedded system (note the zero pad row):")
print(state.p.array)

for k in (1, 2):
    state = forward_eliminate_step(state, k)
    print(f"\nafter eliminating column {k}:")
    print(state.p.array)

for t in (3, 2, 1):
    state = backward_substitute_step(state, t)
print("\nafter backward substitution (solution sits in the last column):")
print(state.p.array)

# --- one-call solve, exact and approximate division -------------------------------
x, report = solve(system, mode="exact")
print("\nexact division:   x =", x.array[:, 0],
      " residual", report["residual_inf"])

x, report = solve(system, mode="relu")
print("ReLU division:    x =", x.array[:, 0],
      " rel error vs dense solve", f"{report['rel_error_vs_oracle']:.2e}")

print("\npivots consumed along the way:", np.round(report["pivots"], 4))

# --- knot refinement drives the approximate solution toward the exact one ---------
print("\nrefining the division table:")
for n in (64, 128, 256, 512):
    table = build_invsqr(f"geometric:x1=1e-2,xmax=1e2,n={n}")
    _, rep = solve(system, mode="relu", table=table)
    print(f"  {n:4d} intervals: rel error {rep['rel_error_vs_oracle']:.3e}")

# --- the ridge bridge: normal equations solved by the component pipeline ----------
rng = np.random.default_rng(3)
xd = rng.normal(size=(15, 3))
y = xd @ rng.normal(size=(3, 1)) + 0.1 * rng.normal(size=(15, 1))
u = rng.normal(size=(3, 1))
problem = make_problem(Matrix.from_array(xd), Matrix.from_array(y),
                       Matrix.from_array(u), lam=0.8, eta=0.1)
w, pred = ridge_via_gauss(problem, mode="exact")
target = predict(ridge_closed_form(problem), problem.u)
print("\nridge via elimination: prediction", f"{pred:.10f}",
      "| closed form", f"{target:.10f}")
