"""The span program built from a clean algorithm."""

import numpy as np
import pytest

from spanforge.alg_to_sp import (
    AlgSpanLayout,
    analytic_w0,
    build_span_program,
    construct_negative_witness,
    construct_positive_witness,
    kernel_basis_maps,
    weight_params,
)
from spanforge.circuit_ir import output_probabilities, simulate
from spanforge.fixtures import FIXTURES, build_clean
from spanforge.span_core import minimal_witness, positive_witness_size


@pytest.fixture(scope="module")
def cleaned():
    return {name: build_clean(name) for name in FIXTURES}


def test_dimensions_and_labels(cleaned):
    for name, (clean, _) in cleaned.items():
        P, lay, _ = build_span_program(clean)
        nw = clean.n * clean.workspace_dim
        assert P.dim_H == (clean.T + clean.S + 1) * nw, name
        assert P.dim_V == (clean.T + 1) * nw, name
        trues = [lab for lab in P.layout.labels if lab == "true"]
        assert len(trues) == (clean.T + 1 - clean.S) * nw
        assert not any(lab == "false" for lab in P.layout.labels)
        pairs = [lab for lab in P.layout.labels if isinstance(lab, tuple)]
        assert len(pairs) == 2 * clean.S * nw


def test_column_audit(cleaned):
    # reconstruct every column from the definition and compare
    clean, _ = cleaned["read_first_bit"]
    P, lay, wp = build_span_program(clean)
    nw = lay.nw
    for t, b in lay.h_blocks():
        for loc in range(nw):
            col = P.A[:, lay.h_block(t, b).start + loc]
            expected = np.zeros(lay.dim_V, dtype=complex)
            if t == lay.T:
                expected[lay.v_block(t).start + loc] = wp.a
            elif t in lay.pre_query:
                expected[lay.v_block(t).start + loc] = 1.0
                expected[lay.v_block(t + 1).start + loc] = -((-1.0) ** b)
            else:
                expected[lay.v_block(t).start + loc] = wp.M
                expected[lay.v_block(t + 1)] = -wp.M * clean.steps[t].matrix[:, loc]
            assert np.allclose(col, expected, atol=1e-12), (t, b, loc)


def test_tau_is_initial_minus_accepting(cleaned):
    clean, _ = cleaned["grover_or"]
    P, lay, _ = build_span_program(clean)
    assert np.allclose(P.tau[lay.v_block(0)], clean.initial_state)
    assert np.allclose(P.tau[lay.v_block(lay.T)], -clean.final_accepting_state)
    mid = P.tau[lay.nw : lay.T * lay.nw]
    assert np.allclose(mid, 0.0)


def test_positive_witness_reaches_tau(cleaned):
    for name, (clean, table) in cleaned.items():
        P, lay, wp = build_span_program(clean)
        for x, fx in table.items():
            if not fx:
                continue
            w = construct_positive_witness(clean, x)
            assert np.linalg.norm(P.A @ w - P.tau) <= 1e-8 * np.linalg.norm(P.tau), (name, x)
            # witness must vanish outside the available subspace
            mask = P.layout.mask_for(x)
            assert np.allclose(w[~mask], 0.0), (name, x)
            _, p1 = output_probabilities(clean.base, x)
            norm2 = (clean.T - clean.S) / wp.M**2 + clean.S + 2 * (1 - p1) / wp.a**2
            assert np.linalg.norm(w) ** 2 == pytest.approx(norm2, rel=1e-8)
            assert np.linalg.norm(w) ** 2 <= 3 * (2 * clean.S + 1) + 1e-8


def test_positive_witness_solver_agrees(cleaned):
    clean, table = cleaned["noisy_read"]
    P, _, _ = build_span_program(clean)
    w = construct_positive_witness(clean, "10")
    rep = positive_witness_size(P, "10")
    assert rep.w_plus <= np.linalg.norm(w) ** 2 + 1e-8


def test_telescoping_partial_sums(cleaned):
    # dropping every component with time slot above k leaves
    # A w = |0> Psi_0 - |k+1> Psi_(k+1)(x)
    clean, _ = cleaned["read_first_bit"]
    P, lay, _ = build_span_program(clean)
    x = "10"
    w = construct_positive_witness(clean, x)
    traj = simulate(clean.base, x)
    for k in range(lay.T):
        wk = w.copy()
        for t, b in lay.h_blocks():
            if t > k:
                wk[lay.h_block(t, b)] = 0.0
        img = P.A @ wk
        expected = np.zeros_like(img)
        expected[lay.v_block(0)] = clean.initial_state
        expected[lay.v_block(k + 1)] -= traj[k + 1]
        assert np.allclose(img, expected, atol=1e-10), k


def test_negative_witness_properties(cleaned):
    for name, (clean, table) in cleaned.items():
        P, lay, wp = build_span_program(clean)
        for x, fx in table.items():
            if fx:
                continue
            omega = construct_negative_witness(clean, x)
            assert np.vdot(omega, P.tau) == pytest.approx(1.0, abs=1e-10), (name, x)
            row = omega.conj() @ P.A
            _, p1 = output_probabilities(clean.base, x)
            # available columns before the final slot pair to zero
            mask = P.layout.mask_for(x)
            final = np.zeros(lay.dim_H, dtype=bool)
            final[lay.h_block(lay.T, 0)] = True
            assert np.max(np.abs(row[mask & ~final])) <= 1e-8, (name, x)
            err = np.linalg.norm(row[mask]) ** 2
            assert err == pytest.approx(wp.a**2 / (1 - p1) ** 2, rel=1e-8)
            assert err <= 5 * clean.epsilon / (3 * (2 * clean.S + 1)) + 1e-8
            total = np.linalg.norm(row) ** 2
            assert total == pytest.approx(
                (4 * clean.S + wp.a**2) / (1 - p1) ** 2, rel=1e-8
            )
            assert total <= 2 * (4 * clean.S + 1) + 1e-8


def test_kernel_maps_span_kernel(cleaned):
    for name, (clean, _) in cleaned.items():
        P, lay, wp = build_span_program(clean)
        maps = kernel_basis_maps(clean)
        assert len(maps) == clean.S
        qs = (0,) + clean.query_set + (clean.T + 1,)
        for ell, phi in zip(range(2, clean.S + 2), maps):
            assert np.max(np.abs(P.A @ phi)) <= 1e-8, (name, ell)
            gram = phi.conj().T @ phi
            size = qs[ell] - qs[ell - 1] - 1
            if ell <= clean.S:
                c = 1.0 + size / wp.M**2
            else:
                c = 0.5 + size / wp.M**2 + 1.0 / wp.a**2
            assert np.allclose(gram, c * np.eye(lay.nw), atol=1e-8 * c), (name, ell)
        for k in range(len(maps)):
            for m in range(k + 1, len(maps)):
                cross = maps[k].conj().T @ maps[m]
                assert np.max(np.abs(cross)) <= 1e-10, (name, k, m)
        # the images tile the whole kernel: nullity = S * n * w
        rank = np.linalg.matrix_rank(P.A, tol=1e-10 * lay.dim_H)
        assert lay.dim_H - rank == clean.S * lay.nw, name


def test_analytic_w0_matches_pinv(cleaned):
    for name, (clean, _) in cleaned.items():
        P, _, _ = build_span_program(clean)
        w0, N = analytic_w0(clean)
        w0_solver, N_solver = minimal_witness(P)
        assert np.allclose(w0, w0_solver, atol=1e-8), name
        assert N == pytest.approx(N_solver, rel=1e-8)
        assert np.linalg.norm(w0) ** 2 == pytest.approx(N, rel=1e-10)


def test_weight_params_closed_forms(cleaned):
    clean, _ = cleaned["read_first_bit"]
    wp = weight_params(clean)
    # queries at (2, 6) with T = 7: interior blocks have sizes 1, 3, 1
    assert clean.query_set == (2, 6)
    assert wp.M == pytest.approx(np.sqrt(3.0))
    assert wp.a == pytest.approx(np.sqrt(clean.epsilon / 5.0))
    assert wp.C == pytest.approx(0.5 + 1.0 / 3.0)


def test_index_table_is_a_bijection(cleaned):
    clean, _ = cleaned["parity"]
    lay = AlgSpanLayout(clean)
    rows = lay.index_table()
    cols = [r[0] for r in rows]
    assert sorted(cols) == list(range(lay.dim_H))
    # spot-check one row against h_index
    t, b = lay.h_blocks()[3]
    assert (lay.h_index(t, b, 1, 2), t, b, 1, 2) == tuple(
        r[:5] for r in rows if r[0] == lay.h_index(t, b, 1, 2)
    )[0]
