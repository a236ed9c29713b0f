"""Selector matrices and the mask-and-move operation, step by step.

A 0/1 row selector W copies chosen rows of A into chosen target rows of an
otherwise-zero matrix via W @ A; a column selector V does the same through
A @ V. Chaining both relocates a whole submatrix. Everything here is plain
matrix multiplication, which is exactly why attention layers can do it.
"""

import numpy as np

from elsakit import (
    BlockSpec,
    IndexPairSet,
    MaskSpec,
    Matrix,
    MskMovSpec,
    hadamard,
    mask_matrix,
    matmul,
    mskmov,
    mskmov_selectors,
    selector_v,
    selector_w,
)

np.set_printoptions(linewidth=120, suppress=True)

a = Matrix([[1.0, 2.0, 3.0],
            [4.0, 5.0, 6.0],
            [7.0, 8.0, 9.0]])
print("input A:")
print(a.array)

# --- single row copy: put row 3 of A into row 1 ------------------------------
w = selector_w(IndexPairSet.of([(1, 3)]), 3)
print("\nrow selector W (target 1 <- source 3):")
print(w.array)
print("W @ A:")
print(matmul(w, a).array)

# --- single column copy: put column 1 of A into column 3 ---------------------
v = selector_v(IndexPairSet.of([(1, 3)]), 3)
print("\ncolumn selector V (source 1 -> target 3):")
print(v.array)
print("A @ V:")
print(matmul(a, v).array)

# --- move a 2x2 block one step down-right -------------------------------------
spec = MskMovSpec(i=1, j=2, k=1, l=2, m=3, n=3, a=1, b=1)
moved = mskmov(a, spec)
print("\nmask-and-move of A[1:2,1:2] by offsets (1,1):")
print(moved.array)

w, v = mskmov_selectors(spec)
print("same thing as an explicit W @ A @ V product:")
print(matmul(matmul(w, a), v).array)

# --- masks are the Hadamard counterpart ---------------------------------------
mask = mask_matrix(MaskSpec(BlockSpec(1, 2, 1, 2), 3, 3))
anti = mask_matrix(MaskSpec(BlockSpec(1, 2, 1, 2), 3, 3, anti=True))
print("\nmask for the same block:")
print(mask.array)
print("mask * A + anti-mask * A recovers A exactly:",
      np.array_equal(hadamard(mask, a).array + hadamard(anti, a).array, a.array))
