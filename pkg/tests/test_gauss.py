"""Component-built elimination against hand values, a dense solver, and the shadow."""

import numpy as np
import pytest

from elsakit import (
    BlockSpec,
    LinearSystem,
    Matrix,
    PivotBelowTolerance,
    backward_substitute_step,
    block_read,
    build_invsqr,
    embed_system,
    forward_eliminate_step,
    identity,
    make_problem,
    predict,
    ridge_closed_form,
    ridge_via_gauss,
    solve,
    system_from_json,
    system_to_json,
    zeros,
)
from oracles import random_dd_system, random_ridge_arrays, shadow_backward_step, shadow_forward_step

TWO_BY_TWO = LinearSystem(f=Matrix([[2.0, 1.0], [1.0, 3.0]]), alpha=Matrix([[3.0], [5.0]]))


def dd_system(rng, m, spread=1.0, signed=False):
    f, alpha = random_dd_system(rng, m, spread, signed=signed)
    return LinearSystem(f=Matrix.from_array(f), alpha=Matrix.from_array(alpha))


class TestEmbed:
    def test_layout(self):
        state = embed_system(TWO_BY_TWO)
        assert state.p == Matrix([[2.0, 1.0, 3.0], [1.0, 3.0, 5.0], [0.0, 0.0, 0.0]])
        assert state.stage == ("forward", 0)

    def test_shape(self):
        assert embed_system(TWO_BY_TWO).p.shape == (3, 3)

    def test_round_trip(self):
        state = embed_system(TWO_BY_TWO)
        assert block_read(state.p, BlockSpec(1, 2, 1, 2)) == TWO_BY_TWO.f
        assert block_read(state.p, BlockSpec(1, 2, 3, 3)) == TWO_BY_TWO.alpha

    def test_system_validation(self):
        with pytest.raises(Exception):
            LinearSystem(f=Matrix([[1.0]]), alpha=Matrix([[1.0]]))
        with pytest.raises(Exception):
            LinearSystem(f=identity(2), alpha=zeros(3, 1))


class TestForwardStep:
    def test_first_column_by_hand(self):
        state = forward_eliminate_step(embed_system(TWO_BY_TWO), 1)
        assert np.allclose(state.p.array[1], [0.0, 2.5, 3.5], atol=1e-14)
        assert np.array_equal(state.p.array[0], [2.0, 1.0, 3.0])
        assert state.stage == ("forward", 1)

    def test_already_eliminated_column_is_identity(self):
        state = forward_eliminate_step(embed_system(TWO_BY_TWO), 1)
        again = forward_eliminate_step(state, 1)
        assert again.p == state.p

    def test_full_pass_gives_upper_triangle(self):
        rng = np.random.default_rng(0)
        sys = dd_system(rng, 4)
        state = embed_system(sys)
        for k in range(1, 4):
            state = forward_eliminate_step(state, k)
        below = np.tril(state.p.array[:4, :4], k=-1)
        assert np.abs(below).max() <= 1e-12

    def test_pivot_guard(self):
        singular = LinearSystem(
            f=Matrix([[0.0, 1.0], [1.0, 1.0]]), alpha=Matrix([[1.0], [1.0]])
        )
        with pytest.raises(PivotBelowTolerance):
            forward_eliminate_step(embed_system(singular), 1)

    def test_stage_discipline(self):
        state = embed_system(dd_system(np.random.default_rng(1), 4))
        with pytest.raises(ValueError):
            forward_eliminate_step(state, 2)  # column 1 not eliminated yet


class TestBackwardStep:
    def upper_state(self):
        state = forward_eliminate_step(embed_system(TWO_BY_TWO), 1)
        return state

    def test_solves_last_then_first(self):
        state = self.upper_state()
        state = backward_substitute_step(state, 2)
        assert state.p.get(2, 3) == pytest.approx(1.4, abs=1e-14)
        assert state.p.get(2, 2) == 0.0
        state = backward_substitute_step(state, 1)
        assert state.p.get(1, 3) == pytest.approx(0.8, abs=1e-14)
        assert state.p.get(2, 3) == pytest.approx(1.4, abs=1e-14)

    def test_diagonal_system(self):
        diag = LinearSystem(
            f=Matrix([[2.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 8.0]]),
            alpha=Matrix([[2.0], [2.0], [2.0]]),
        )
        state = embed_system(diag)
        for k in (1, 2):
            state = forward_eliminate_step(state, k)
        for t in (3, 2, 1):
            state = backward_substitute_step(state, t)
        x = block_read(state.p, BlockSpec(1, 3, 4, 4)).array[:, 0]
        assert np.allclose(x, [1.0, 0.5, 0.25], atol=1e-14)

    def test_anti_mask_preserves_solved_entries(self):
        # The cleared pivot cell is what keeps a solved entry from being
        # scaled again; later folds may touch it only through the float-level
        # residue left below the diagonal by forward elimination.
        rng = np.random.default_rng(2)
        sys = dd_system(rng, 5)
        state = embed_system(sys)
        for k in range(1, 5):
            state = forward_eliminate_step(state, k)
        solved = {}
        for t in range(5, 0, -1):
            state = backward_substitute_step(state, t)
            solved[t] = state.p.get(t, 6)
            assert state.p.get(t, t) == 0.0
            for prev, value in solved.items():
                drift = abs(state.p.get(prev, 6) - value)
                assert drift <= 1e-12 * max(1.0, abs(value))

    def test_stage_discipline(self):
        state = self.upper_state()
        with pytest.raises(ValueError):
            backward_substitute_step(state, 1)  # variable 2 not solved yet


class TestSolve:
    def test_hand_example(self):
        x, report = solve(TWO_BY_TWO, mode="exact")
        assert np.allclose(x.array[:, 0], [0.8, 1.4], atol=1e-12)
        assert report["residual_inf"] <= 1e-12
        assert report["mode"] == "exact" and report["m"] == 2

    def test_identity_system(self):
        rng = np.random.default_rng(3)
        alpha = Matrix.from_array(rng.uniform(-1, 1, size=(4, 1)))
        x, _ = solve(LinearSystem(f=identity(4), alpha=alpha))
        assert x == alpha

    def test_exact_matches_dense_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = int(rng.integers(2, 13))
            sys = dd_system(rng, m)
            x, report = solve(sys, mode="exact")
            ref = np.linalg.solve(sys.f.array, sys.alpha.array)
            rel = np.abs(x.array - ref).max() / max(1.0, np.abs(ref).max())
            assert rel <= 1e-8
            assert report["rel_error_vs_oracle"] <= 1e-8

    def test_relu_mode_on_moderate_system(self):
        rng = np.random.default_rng(5)
        sys = dd_system(rng, 6, spread=0.3)
        _, report = solve(sys, mode="relu")  # default knot table
        assert report["rel_error_vs_oracle"] <= 1e-2
        errs = [report["rel_error_vs_oracle"]]
        for n in (256, 512):
            table = build_invsqr(f"geometric:x1=1e-2,xmax=1e2,n={n}")
            _, rep = solve(sys, mode="relu", table=table)
            errs.append(rep["rel_error_vs_oracle"])
        assert errs[0] >= errs[1] >= errs[2]

    def test_relu_mode_handles_negative_pivots(self):
        # The division table is even, so signed pivots divide just as well.
        rng = np.random.default_rng(11)
        sys = dd_system(rng, 5, spread=0.3, signed=True)
        _, report = solve(sys, mode="relu")
        assert report["rel_error_vs_oracle"] <= 1e-2
        assert any(p < 0 for p in report["pivots"])

    def test_relu_flags_out_of_range_pivot(self):
        table = build_invsqr("geometric:x1=1,xmax=10,n=8")
        sys = LinearSystem(
            f=Matrix([[100.0, 1.0], [1.0, 100.0]]), alpha=Matrix([[1.0], [1.0]])
        )
        _, report = solve(sys, mode="relu", table=table)
        assert any("pivot_out_of_table_range" in flag for flag in report["flags"])

    def test_singular_raises(self):
        singular = LinearSystem(
            f=Matrix([[1.0, 2.0], [1.0, 2.0]]), alpha=Matrix([[1.0], [1.0]])
        )
        with pytest.raises(PivotBelowTolerance):
            solve(singular)

    def test_pad_row_stays_zero_through_all_stages(self):
        rng = np.random.default_rng(6)
        sys = dd_system(rng, 6)
        state = embed_system(sys)
        for k in range(1, 6):
            state = forward_eliminate_step(state, k)
            assert np.all(state.p.array[6, :] == 0.0)
        for t in range(6, 0, -1):
            state = backward_substitute_step(state, t)
            assert np.all(state.p.array[6, :] == 0.0)


class TestShadowEquivalence:
    @pytest.mark.parametrize("mode", ["exact", "relu"])
    def test_componentwise_states_match_direct_arithmetic(self, mode):
        rng = np.random.default_rng(7)
        table = build_invsqr("geometric:x1=1e-2,xmax=1e2,n=128")
        for _ in range(5):
            m = int(rng.integers(2, 9))
            sys = dd_system(rng, m)
            state = embed_system(sys, mode=mode, table=table if mode == "relu" else None)
            shadow = state.p.to_array()
            for k in range(1, m):
                state = forward_eliminate_step(state, k)
                if mode == "exact":
                    shadow = shadow_forward_step(shadow, k)
                    scale = max(1.0, np.abs(shadow).max())
                    assert np.abs(state.p.array - shadow).max() <= 1e-12 * scale
            if mode == "relu":
                shadow = state.p.to_array()
            for t in range(m, 0, -1):
                state = backward_substitute_step(state, t)
                if mode == "exact":
                    shadow = shadow_backward_step(shadow, t)
                    scale = max(1.0, np.abs(shadow).max())
                    assert np.abs(state.p.array - shadow).max() <= 1e-12 * scale


class TestRidgeBridge:
    def test_exact_matches_closed_form(self):
        rng = np.random.default_rng(8)
        x, y, u = random_ridge_arrays(rng, 10, 4)
        p = make_problem(Matrix.from_array(x), Matrix.from_array(y),
                         Matrix.from_array(u), 0.8, eta=0.1)
        w, pred = ridge_via_gauss(p, mode="exact")
        w_star = ridge_closed_form(p)
        rel = np.abs(w.array - w_star.array).max() / max(1.0, np.abs(w_star.array).max())
        assert rel <= 1e-10
        assert pred == pytest.approx(predict(w_star, p.u), rel=1e-9, abs=1e-12)

    def test_identity_design_recovers_targets(self):
        rng = np.random.default_rng(9)
        y = rng.uniform(-1, 1, size=(3, 1))
        p = make_problem(identity(3), Matrix.from_array(y), zeros(3, 1), 0.0, eta=0.5)
        w, _ = ridge_via_gauss(p, mode="exact")
        assert np.allclose(w.array, y, atol=1e-12)

    def test_relu_error_shrinks_with_refinement(self):
        rng = np.random.default_rng(10)
        x, y, u = random_ridge_arrays(rng, 12, 3)
        p = make_problem(Matrix.from_array(x), Matrix.from_array(y),
                         Matrix.from_array(u), 1.0, eta=0.1)
        w_star = ridge_closed_form(p).array
        errs = []
        for n in (64, 128, 256):
            table = build_invsqr(f"geometric:x1=1e-2,xmax=1e2,n={n}")
            w, _ = ridge_via_gauss(p, mode="relu", table=table)
            errs.append(np.abs(w.array - w_star).max() / max(1.0, np.abs(w_star).max()))
        assert errs[0] >= errs[1] >= errs[2]


class TestSystemJson:
    def test_round_trip(self):
        text = system_to_json(TWO_BY_TWO)
        sys = system_from_json(text)
        assert sys.f == TWO_BY_TWO.f and sys.alpha == TWO_BY_TWO.alpha
