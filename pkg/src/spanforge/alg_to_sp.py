"""The span program of a clean query algorithm.

For a clean algorithm with steps U_1..U_T and query set q_1 < ... < q_S,
the span program has

  H basis (t, b, i, j):  t in 0..T, with b in {0,1} exactly when t+1 is a
      query time (these columns belong to block (i, b)) and b = 0 otherwise
      (always available).  There is no never-available block.
  V basis (t, i, j):     t in 0..T.
  tau = |0> Psi_0  -  |T> Psi_T_accept.

Columns of A, per basis vector of H:

  t = T:               a |T, i, j>
  t+1 a query time:    |t, i, j> - (-1)^b |t+1, i, j>
  otherwise:           M ( |t, i, j> - |t+1> U_(t+1) |i, j> )

with a = sqrt(epsilon / (2S+1)) and M the square root of the largest count
of non-query steps strictly inside a block between consecutive queries.
On input x the positive witness threads the actual trajectory through the
available columns; the negative witness is the trajectory read as a
covector, scaled by 1/(1 - p1(x)).
"""

import dataclasses

import numpy as np

from .circuit_ir import simulate
from .span_core import BlockLayout, SpanProgram


@dataclasses.dataclass(frozen=True)
class WeightParams:
    """Scalar weights of the construction.

    a multiplies the final-time columns, M the interior propagation
    columns; C = 1/2 + (T - q_S)/M^2 shows up in the minimal witness.
    """

    a: float
    M: float
    C: float


class AlgSpanLayout:
    """Index bookkeeping between (t, b, i, j) / (t, i, j) and flat indices.

    H columns are ordered lexicographically by (t, b, i, j); V rows by
    (t, i, j).
    """

    def __init__(self, clean):
        self.T = clean.T
        self.S = clean.S
        self.n = clean.n
        self.w = clean.workspace_dim
        self.query_set = clean.query_set
        self.pre_query = frozenset(q - 1 for q in clean.query_set)
        nw = self.n * self.w
        self._h_offset = {}
        off = 0
        for t in range(self.T + 1):
            for b in ((0, 1) if t in self.pre_query else (0,)):
                self._h_offset[(t, b)] = off
                off += nw
        self.dim_H = off
        self.dim_V = (self.T + 1) * nw

    @property
    def nw(self):
        return self.n * self.w

    def h_block(self, t, b):
        """Slice of H columns for time slot (t, b)."""
        off = self._h_offset[(t, b)]
        return slice(off, off + self.nw)

    def h_index(self, t, b, i, j):
        return self._h_offset[(t, b)] + i * self.w + j

    def v_block(self, t):
        off = t * self.nw
        return slice(off, off + self.nw)

    def v_index(self, t, i, j):
        return t * self.nw + i * self.w + j

    def h_blocks(self):
        """All (t, b) slots in column order."""
        return sorted(self._h_offset, key=self._h_offset.get)

    def index_table(self):
        """Human-readable rows (column, t, b, i, j, block) for every H index."""
        rows = []
        for t, b in self.h_blocks():
            for i in range(self.n):
                for j in range(self.w):
                    col = self.h_index(t, b, i, j)
                    block = "true" if t not in self.pre_query else f"({i},{b})"
                    rows.append((col, t, b, i, j, block))
        return rows


def weight_params(clean):
    qs = (0,) + clean.query_set + (clean.T + 1,)
    block_sizes = [qs[k + 1] - qs[k] - 1 for k in range(len(qs) - 1)]
    M = float(np.sqrt(max(block_sizes)))
    a = float(np.sqrt(clean.epsilon / (2 * clean.S + 1)))
    C = 0.5 + (clean.T - clean.query_set[-1]) / M**2
    return WeightParams(a=a, M=M, C=C)


def build_span_program(clean):
    """Returns (SpanProgram, AlgSpanLayout, WeightParams)."""
    lay = AlgSpanLayout(clean)
    wp = weight_params(clean)
    nw = lay.nw
    eye = np.eye(nw)
    A = np.zeros((lay.dim_V, lay.dim_H), dtype=complex)
    labels = [None] * lay.dim_H
    for t, b in lay.h_blocks():
        cols = lay.h_block(t, b)
        if t == lay.T:
            A[lay.v_block(t), cols] = wp.a * eye
        elif t in lay.pre_query:
            A[lay.v_block(t), cols] = eye
            A[lay.v_block(t + 1), cols] = -((-1.0) ** b) * eye
        else:
            A[lay.v_block(t), cols] = wp.M * eye
            A[lay.v_block(t + 1), cols] = -wp.M * clean.steps[t].matrix
        for i in range(lay.n):
            for j in range(lay.w):
                k = lay.h_index(t, b, i, j)
                labels[k] = (i, b) if t in lay.pre_query else "true"
    tau = np.zeros(lay.dim_V, dtype=complex)
    tau[lay.v_block(0)] = clean.initial_state
    tau[lay.v_block(lay.T)] -= clean.final_accepting_state
    P = SpanProgram(BlockLayout(labels, n=lay.n), A, tau)
    return P, lay, wp


def construct_positive_witness(clean, x):
    """The trajectory witness: A w = tau exactly, supported on H(x).

    Its squared norm is (T-S)/M^2 + S + 2(1 - p1(x))/a^2, which stays
    below 3(2S+1) whenever 1 - p1(x) <= epsilon.
    """
    lay = AlgSpanLayout(clean)
    wp = weight_params(clean)
    traj = simulate(clean.base, x)
    bits = _bits_of(x, clean.n)
    w = np.zeros(lay.dim_H, dtype=complex)
    for t in range(lay.T):
        if t in lay.pre_query:
            for i in range(lay.n):
                seg = slice(i * lay.w, (i + 1) * lay.w)
                blk = lay.h_block(t, bits[i])
                w[blk.start + i * lay.w : blk.start + (i + 1) * lay.w] = traj[t][seg]
        else:
            w[lay.h_block(t, 0)] = traj[t] / wp.M
    w[lay.h_block(lay.T, 0)] = (traj[lay.T] - clean.final_accepting_state) / wp.a
    return w


def construct_negative_witness(clean, x):
    """The trajectory covector omega with <omega, tau> = 1.

    Returned as a vector whose conjugate transpose is the covector; its
    error on H(x) is a^2 / (1 - p1(x))^2, supported entirely on the final
    time slot.
    """
    lay = AlgSpanLayout(clean)
    traj = simulate(clean.base, x)
    overlap = np.vdot(traj[-1], clean.final_accepting_state)
    denom = 1.0 - overlap
    if abs(denom) < 1e-12:
        raise ValueError("input is accepted with certainty; no negative witness")
    omega = np.concatenate(traj)
    return omega / np.conj(denom)


def kernel_basis_maps(clean):
    """Isometry-like maps Phi_l whose images tile Ker(A), for l = 2..S+1.

    Phi_l sends the data space C^(n w) into the H columns of block l, with
    a minus-flavored head on the query slot before the block, the forward
    propagation of the data through the block interior, and either a
    plus-flavored head on the next query slot (l <= S) or the a-weighted
    final slot (l = S+1).  Phi_l^dag Phi_l = c_l I with

        c_l = 1 + |B_l| / M^2            for l <= S
        c_l = 1/2 + |B_l| / M^2 + 1/a^2  for l = S+1.
    """
    lay = AlgSpanLayout(clean)
    wp = weight_params(clean)
    qs = (0,) + clean.query_set + (clean.T + 1,)
    nw = lay.nw
    maps = []
    for ell in range(2, clean.S + 2):
        q_prev, q_cur = qs[ell - 1], qs[ell]
        phi = np.zeros((lay.dim_H, nw), dtype=complex)
        phi[lay.h_block(q_prev - 1, 0)] = 0.5 * np.eye(nw)
        phi[lay.h_block(q_prev - 1, 1)] = -0.5 * np.eye(nw)
        prod = np.eye(nw, dtype=complex)
        for t in range(q_prev, q_cur - 1):
            # prod = U_t ... U_(q_prev + 1); empty at t = q_prev
            if t > q_prev:
                prod = clean.steps[t - 1].matrix @ prod
            phi[lay.h_block(t, 0)] = prod / wp.M
        if ell <= clean.S:
            head = clean.steps[q_cur - 2].matrix @ prod
            phi[lay.h_block(q_cur - 1, 0)] = 0.5 * head
            phi[lay.h_block(q_cur - 1, 1)] = 0.5 * head
        else:
            tail = clean.steps[clean.T - 1].matrix @ prod
            phi[lay.h_block(lay.T, 0)] = tail / wp.a
        maps.append(phi)
    return maps


def analytic_w0(clean):
    """Closed-form minimal witness of the span program, and N = ||w0||^2.

    The head runs the input-independent trajectory up to the first query;
    the tail pulls the accepting state backwards from time T to the last
    query.  With C = 1/2 + (T - q_S)/M^2,

        N = (q_1 - 1)/M^2 + 1/2 + C/(C a^2 + 1).
    """
    lay = AlgSpanLayout(clean)
    wp = weight_params(clean)
    q1 = clean.query_set[0]
    qS = clean.query_set[-1]
    w0 = np.zeros(lay.dim_H, dtype=complex)

    psi = clean.initial_state.copy()
    for t in range(q1):
        # psi = Psi_t, for t < q_1 (no query crossed yet)
        if t > 0:
            psi = clean.steps[t - 1].matrix @ psi
        if t <= q1 - 2:
            w0[lay.h_block(t, 0)] += psi / wp.M
    # psi now holds Psi_(q1-1); it enters the plus-flavored head slot
    w0[lay.h_block(q1 - 1, 0)] += 0.5 * psi
    w0[lay.h_block(q1 - 1, 1)] += 0.5 * psi

    scale = 1.0 / (wp.C * wp.a**2 + 1.0)
    tilde = clean.final_accepting_state.copy()
    tilde_at = {clean.T: tilde.copy()}
    for t in range(clean.T - 1, qS - 1, -1):
        tilde = clean.steps[t].matrix.conj().T @ tilde
        tilde_at[t] = tilde.copy()
    # tilde_at[t] = U_(t+1)^dag ... U_T^dag Psi_T
    w0[lay.h_block(qS - 1, 0)] += 0.5 * scale * tilde_at[qS]
    w0[lay.h_block(qS - 1, 1)] -= 0.5 * scale * tilde_at[qS]
    for t in range(qS, clean.T):
        w0[lay.h_block(t, 0)] += scale * tilde_at[t] / wp.M
    w0[lay.h_block(clean.T, 0)] -= (wp.C * wp.a * scale) * clean.final_accepting_state

    N = (q1 - 1) / wp.M**2 + 0.5 + wp.C * scale
    return w0, float(N)


def _bits_of(x, n):
    if isinstance(x, str):
        return tuple(int(c) for c in x)
    return tuple(int(b) for b in x)
