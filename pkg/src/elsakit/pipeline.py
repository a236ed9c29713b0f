"""End-to-end in-context ridge descent built from attention blocks.

Two prompt layouts are supported:

* designed: a (d+1)-by-s prompt, s = 2n+d+3, carrying sqrt(eta)-scaled
  copies of X and y, a sqrt(eta*lam) identity, the query u, and the
  evolving coefficient column. One step is a 3-head plain-attention sum
  plus a skip connection; only the coefficient column changes.
* enumerated: a d-by-s prompt, s = 2n+2d+3, listing X, a padded target
  block, lam*I, sqrt(eta)*I, u, a scratch column for the prediction, and
  the coefficient column, with no coupled scalings. One step is two
  sequential 4-head bias-extended blocks plus a skip connection.

Step weights are built once and shared across iterations; a final readout
module writes u^T w_T into its reserved cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

from .attention import (
    ElsaParams,
    LsaParams,
    MultiHead,
    multihead_forward,
    skip_params,
    zero_params,
)
from .matrix import BlockSpec, Matrix, add, block_read, block_write, identity, scale, transpose, zeros
from .maskmove import MskMovSpec, mskmov_selectors
from .ridge import RidgeProblem, SingularSystem, gd_run, predict, ridge_closed_form


class LayoutMismatch(ValueError):
    """A state was fed to a step or readout for the other layout."""


@dataclass(frozen=True)
class DesignedLayout:
    n: int
    d: int

    @property
    def s(self) -> int:
        return 2 * self.n + self.d + 3

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d + 1, self.s)

    @property
    def w_col(self) -> int:
        return self.s


@dataclass(frozen=True)
class EnumeratedLayout:
    n: int
    d: int

    @property
    def s(self) -> int:
        return 2 * self.n + 2 * self.d + 3

    @property
    def shape(self) -> tuple[int, int]:
        return (self.d, self.s)

    @property
    def w_col(self) -> int:
        return self.s

    @property
    def z_col(self) -> int:
        return self.s - 1


Layout = Union[DesignedLayout, EnumeratedLayout]


@dataclass(frozen=True)
class PipelineState:
    """The evolving prompt matrix at step t."""

    h: Matrix
    t: int
    layout: Layout

    def __post_init__(self):
        if self.h.shape != self.layout.shape:
            raise LayoutMismatch(
                f"prompt {self.h.shape} does not match layout {self.layout.shape}"
            )


@dataclass(frozen=True)
class DesignedWeights:
    """Step and readout heads for the designed layout (shared across steps)."""

    step_heads: MultiHead
    readout_heads: MultiHead


@dataclass(frozen=True)
class TwoBlockWeights:
    """Two sequential multi-head blocks applied before the skip connection."""

    block1: MultiHead
    block2: MultiHead


@dataclass(frozen=True)
class EnumeratedWeights:
    step: TwoBlockWeights
    readout: TwoBlockWeights


ModuleWeights = Union[DesignedWeights, EnumeratedWeights]


def _moved_selectors(spec: MskMovSpec) -> tuple[Matrix, Matrix]:
    """(w1, w2) such that w1^T (H^T H) w2 applies the mask-and-move of spec."""
    w, v = mskmov_selectors(spec)
    return transpose(w), v


def _eye_block(rows: int, cols: int, block: BlockSpec, sign: float = 1.0) -> Matrix:
    """Zero matrix with +/-I written into the given square block."""
    eye = identity(block.block_rows)
    if sign < 0:
        eye = scale(eye, -1.0)
    return block_write(zeros(rows, cols), block, eye)


# ---------------------------------------------------------------------------
# Designed layout
# ---------------------------------------------------------------------------


def build_designed_input(p: RidgeProblem) -> PipelineState:
    """Assemble the step-0 prompt for the designed layout."""
    n, d = p.n, p.d
    layout = DesignedLayout(n=n, d=d)
    s = layout.s
    sqrt_eta = math.sqrt(p.eta)
    sqrt_eta_lam = math.sqrt(p.eta) * math.sqrt(p.lam)
    h = zeros(d + 1, s)
    h = block_write(h, BlockSpec(1, d, 1, n), scale(transpose(p.x), sqrt_eta))
    h = block_write(h, BlockSpec(d + 1, d + 1, n + 1, 2 * n), scale(transpose(p.y), sqrt_eta))
    h = block_write(h, BlockSpec(d + 1, d + 1, 2 * n + 1, 2 * n + 1), Matrix([[1.0]]))
    h = block_write(
        h,
        BlockSpec(1, d, 2 * n + 2, 2 * n + d + 1),
        scale(identity(d), sqrt_eta_lam),
    )
    h = block_write(h, BlockSpec(1, d, 2 * n + d + 2, 2 * n + d + 2), p.u)
    h = block_write(h, BlockSpec(1, d, s, s), p.w0)
    return PipelineState(h=h, t=0, layout=layout)


def build_designed_weights(n: int, d: int) -> DesignedWeights:
    """Three step heads summing to the negated scaled gradient in the w column.

    Head 1 extracts the scaled targets against the scaled design (the X^T y
    term), head 2 the scaled fitted values against the negated design (the
    X^T X w term), head 3 the ridge column against the negated ridge identity
    (the lam*w term). A fourth module, used once after the last step, moves
    u^T w_T into the bottom-right cell.
    """
    layout = DesignedLayout(n=n, d=d)
    s = layout.s

    w13 = _eye_block(s, s, BlockSpec(1, n, 1, n))
    w11, w12 = _moved_selectors(
        MskMovSpec(i=n + 1, j=2 * n, k=2 * n + 1, l=2 * n + 1, m=s, n=s, a=-n, b=s - (2 * n + 1))
    )
    head1 = LsaParams(w1=w11, w2=w12, w3=w13)

    w21, w22 = _moved_selectors(MskMovSpec(i=1, j=n, k=s, l=s, m=s, n=s))
    head2 = LsaParams(w1=w21, w2=w22, w3=scale(w13, -1.0))

    w31, w32 = _moved_selectors(
        MskMovSpec(i=2 * n + 2, j=2 * n + d + 1, k=s, l=s, m=s, n=s, a=-(2 * n + 1), b=0)
    )
    w33 = _eye_block(s, s, BlockSpec(2 * n + 2, 2 * n + d + 1, 1, d), sign=-1.0)
    head3 = LsaParams(w1=w31, w2=w32, w3=w33)

    r1, r2 = _moved_selectors(
        MskMovSpec(i=2 * n + d + 2, j=2 * n + d + 2, k=s, l=s, m=s, n=s, a=1, b=0)
    )
    r3 = block_write(zeros(s, s), BlockSpec(2 * n + 1, 2 * n + 1, s, s), Matrix([[1.0]]))
    zero_head = LsaParams(w1=zeros(s, s), w2=zeros(s, s), w3=zeros(s, s))
    readout = MultiHead((LsaParams(w1=r1, w2=r2, w3=r3), zero_head, zero_head))

    return DesignedWeights(step_heads=MultiHead((head1, head2, head3)), readout_heads=readout)


def step_designed(state: PipelineState, weights: DesignedWeights) -> PipelineState:
    """One descent step: add the multi-head update to the prompt."""
    if not isinstance(state.layout, DesignedLayout):
        raise LayoutMismatch("step_designed needs a designed-layout state")
    p_t = multihead_forward(state.h, weights.step_heads)
    return PipelineState(h=add(p_t, state.h), t=state.t + 1, layout=state.layout)


def readout_designed(
    state: PipelineState, weights: DesignedWeights
) -> tuple[Matrix, float]:
    """Apply the readout module; the prediction lands in the bottom-right cell."""
    if not isinstance(state.layout, DesignedLayout):
        raise LayoutMismatch("readout_designed needs a designed-layout state")
    p_out = multihead_forward(state.h, weights.readout_heads)
    h_final = add(p_out, state.h)
    return h_final, h_final.get(state.layout.d + 1, state.layout.s)


# ---------------------------------------------------------------------------
# Enumerated layout
# ---------------------------------------------------------------------------


def build_enumerated_input(p: RidgeProblem) -> PipelineState:
    """Assemble the step-0 prompt for the enumerated layout."""
    n, d = p.n, p.d
    layout = EnumeratedLayout(n=n, d=d)
    s = layout.s
    h = zeros(d, s)
    h = block_write(h, BlockSpec(1, d, 1, n), transpose(p.x))
    # Padded target block: y fills the last row, the d-1 rows above stay zero.
    h = block_write(h, BlockSpec(d, d, n + 1, 2 * n), transpose(p.y))
    h = block_write(h, BlockSpec(1, d, 2 * n + 1, 2 * n + d), scale(identity(d), p.lam))
    h = block_write(
        h, BlockSpec(1, d, 2 * n + d + 1, 2 * n + 2 * d), scale(identity(d), math.sqrt(p.eta))
    )
    h = block_write(h, BlockSpec(1, d, 2 * n + 2 * d + 1, 2 * n + 2 * d + 1), p.u)
    h = block_write(h, BlockSpec(1, d, s, s), p.w0)
    return PipelineState(h=h, t=0, layout=layout)


def build_enumerated_weights(n: int, d: int) -> EnumeratedWeights:
    """Two 4-head blocks per step, plus the readout pair.

    First block, head by head: the fitted-values term, the ridge term, the
    negated cross term from the padded target block, and a marker head
    placing -eta*I next to the scratch columns. The second block contracts
    the marker against the assembled gradient, leaving -eta*dw in the last
    column; its remaining heads are all-zero to keep the module uniform.
    """
    layout = EnumeratedLayout(n=n, d=d)
    s = layout.s
    shape = layout.shape
    zs = zeros(s, s)
    zb = zeros(d, s)

    w11, w12 = _moved_selectors(MskMovSpec(i=1, j=n, k=s, l=s, m=s, n=s))
    h1 = ElsaParams(
        w1=w11, w2=w12, w3=_eye_block(s, s, BlockSpec(1, n, 1, n)), b1=zb, b2=zb, b3=zb
    )

    w21, w22 = _moved_selectors(
        MskMovSpec(i=2 * n + 1, j=2 * n + d, k=s, l=s, m=s, n=s, a=-2 * n, b=0)
    )
    h2 = ElsaParams(
        w1=w21, w2=w22, w3=zs, b1=zb, b2=zb, b3=_eye_block(d, s, BlockSpec(1, d, 1, d))
    )

    h3 = ElsaParams(
        w1=_eye_block(s, s, BlockSpec(n + 1, 2 * n, s - n + 1, s)),
        w2=zs,
        w3=_eye_block(s, s, BlockSpec(1, n, s - n + 1, s)),
        b1=zb,
        b2=_eye_block(d, s, BlockSpec(1, d, s - d + 1, s), sign=-1.0),
        b3=zb,
    )

    w41, w42 = _moved_selectors(
        MskMovSpec(
            i=2 * n + d + 1, j=2 * n + 2 * d, k=2 * n + d + 1, l=2 * n + 2 * d,
            m=s, n=s, a=-(2 * n + d), b=0,
        )
    )
    h4 = ElsaParams(
        w1=w41, w2=w42, w3=zs, b1=zb, b2=zb,
        b3=_eye_block(d, s, BlockSpec(1, d, 1, d), sign=-1.0),
    )

    g1, g2 = _moved_selectors(
        MskMovSpec(i=2 * n + d + 1, j=2 * n + 2 * d, k=s, l=s, m=s, n=s, a=-(2 * n + d), b=0)
    )
    contract = ElsaParams(
        w1=g1, w2=g2, w3=zs, b1=zb, b2=zb, b3=_eye_block(d, s, BlockSpec(1, d, 1, d))
    )
    pad = zero_params(shape)
    step = TwoBlockWeights(
        block1=MultiHead((h1, h2, h3, h4)),
        block2=MultiHead((contract, pad, pad, pad)),
    )

    q1, q2 = _moved_selectors(
        MskMovSpec(
            i=2 * n + 2 * d + 1, j=2 * n + 2 * d + 1, k=s, l=s,
            m=s, n=s, a=-(2 * n + 2 * d), b=-1,
        )
    )
    read1 = ElsaParams(
        w1=q1, w2=q2, w3=zs, b1=zb, b2=zb,
        b3=block_write(zeros(d, s), BlockSpec(1, 1, 1, 1), Matrix([[1.0]])),
    )
    readout = TwoBlockWeights(
        block1=MultiHead((read1, pad, pad, pad)),
        block2=MultiHead((skip_params(shape), pad, pad, pad)),
    )
    return EnumeratedWeights(step=step, readout=readout)


def two_block_forward(h: Matrix, weights: TwoBlockWeights) -> Matrix:
    """Second block applied to the first block's multi-head output."""
    p1 = multihead_forward(h, weights.block1)
    return multihead_forward(p1, weights.block2)


def step_enumerated(state: PipelineState, weights: EnumeratedWeights) -> PipelineState:
    """One descent step: two attention blocks, then the skip connection."""
    if not isinstance(state.layout, EnumeratedLayout):
        raise LayoutMismatch("step_enumerated needs an enumerated-layout state")
    p_t = two_block_forward(state.h, weights.step)
    return PipelineState(h=add(p_t, state.h), t=state.t + 1, layout=state.layout)


def readout_enumerated(
    state: PipelineState, weights: EnumeratedWeights
) -> tuple[Matrix, float]:
    """Apply the readout module; the prediction lands in row 1 of the scratch column."""
    if not isinstance(state.layout, EnumeratedLayout):
        raise LayoutMismatch("readout_enumerated needs an enumerated-layout state")
    p_out = two_block_forward(state.h, weights.readout)
    h_final = add(p_out, state.h)
    return h_final, h_final.get(1, state.layout.z_col)


# ---------------------------------------------------------------------------
# Generic running and the designed-as-extended wrapper
# ---------------------------------------------------------------------------


def extract_w(state: PipelineState) -> Matrix:
    """The current coefficient column of the prompt."""
    d = state.layout.d
    return block_read(state.h, BlockSpec(1, d, state.layout.w_col, state.layout.w_col))


def wrap_designed_as_elsa(weights: DesignedWeights, n: int, d: int) -> EnumeratedWeights:
    """Designed-layout step expressed as two bias-extended blocks.

    Block 1 holds the plain heads with zero biases (padded to four heads);
    block 2 is a skip connection. Running it must reproduce the designed
    pipeline trace exactly.
    """
    shape = DesignedLayout(n=n, d=d).shape
    m, s = shape
    zb = zeros(m, s)

    def as_elsa(p: LsaParams) -> ElsaParams:
        return ElsaParams(w1=p.w1, w2=p.w2, w3=p.w3, b1=zb, b2=zb, b3=zb)

    pad = zero_params(shape)
    skip_block = MultiHead((skip_params(shape), pad, pad, pad))
    step = TwoBlockWeights(
        block1=MultiHead(tuple(as_elsa(p) for p in weights.step_heads.heads) + (pad,)),
        block2=skip_block,
    )
    readout = TwoBlockWeights(
        block1=MultiHead(tuple(as_elsa(p) for p in weights.readout_heads.heads) + (pad,)),
        block2=skip_block,
    )
    return EnumeratedWeights(step=step, readout=readout)


def run_wrapped_designed(p: RidgeProblem) -> tuple[list[Matrix], Matrix, float]:
    """Run the designed prompt through the wrapped two-block form.

    Returns the coefficient trace, the final prompt, and the prediction
    (read from the same bottom-right cell as the designed readout).
    """
    weights = wrap_designed_as_elsa(build_designed_weights(p.n, p.d), p.n, p.d)
    state = build_designed_input(p)
    trace = [extract_w(state)]
    for _ in range(p.steps):
        p_t = two_block_forward(state.h, weights.step)
        state = PipelineState(h=add(p_t, state.h), t=state.t + 1, layout=state.layout)
        trace.append(extract_w(state))
    p_out = two_block_forward(state.h, weights.readout)
    h_final = add(p_out, state.h)
    return trace, h_final, h_final.get(p.d + 1, state.layout.s)


class PipelineRun(NamedTuple):
    prediction: float
    w_trace: list[Matrix]
    report: dict


_FORMS = {
    "designed": "designed",
    "lsa": "designed",
    "enumerated": "enumerated",
    "elsa": "enumerated",
}


def run_pipeline(p: RidgeProblem, form: str) -> PipelineRun:
    """Build the prompt and weights, run T steps and the readout.

    The report records, per step, the infinity-norm deviation of the prompt's
    coefficient column from the plain descent recurrence (relative to
    max(1, |w_t|)), plus the closed-form prediction when the normal equations
    are solvable.
    """
    kind = _FORMS.get(form)
    if kind is None:
        raise ValueError(f"unknown pipeline form {form!r}")
    if kind == "designed":
        weights = build_designed_weights(p.n, p.d)
        state = build_designed_input(p)
        step_fn, readout_fn = step_designed, readout_designed
    else:
        weights = build_enumerated_weights(p.n, p.d)
        state = build_enumerated_input(p)
        step_fn, readout_fn = step_enumerated, readout_enumerated

    trace = [extract_w(state)]
    for _ in range(p.steps):
        state = step_fn(state, weights)
        trace.append(extract_w(state))
    _, prediction = readout_fn(state, weights)

    _, oracle_trace = gd_run(p)
    per_step = []
    for w_pipe, w_oracle in zip(trace, oracle_trace):
        diff = float(abs(w_pipe.array - w_oracle.array).max())
        denom = max(1.0, float(abs(w_oracle.array).max()))
        per_step.append(diff / denom)
    oracle_prediction = predict(oracle_trace[-1], p.u)
    try:
        closed_form_prediction = predict(ridge_closed_form(p), p.u)
    except SingularSystem:
        closed_form_prediction = None

    report = {
        "form": kind,
        "n": p.n,
        "d": p.d,
        "lambda": p.lam,
        "eta": p.eta,
        "T": p.steps,
        "prediction": prediction,
        "oracle_prediction": oracle_prediction,
        "closed_form_prediction": closed_form_prediction,
        "max_step_deviation": max(per_step),
        "per_step_deviation": per_step,
    }
    return PipelineRun(prediction=prediction, w_trace=trace, report=report)
