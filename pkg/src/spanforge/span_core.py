"""Span programs: data model, witness solvers, rescaling.

A span program is a 4-tuple (H, V, A, tau).  H carries a block structure:
one block H_(i,b) per input bit i and value b, plus an always-available
block H_true and a never-available block H_false.  On input x the
available subspace H(x) is the span of H_true and the blocks H_(i, x_i).

The positive witness size of x is min ||w||^2 over w in H(x) with Aw = tau;
an approximate negative witness is a covector omega with <omega, tau> = 1
and ||omega A Pi_H(x)||^2 below an error cap, minimizing ||omega A||^2.
"""

import dataclasses

import numpy as np

from .tolerances import DEFAULT


class _Infinite:
    """Explicit infinity for witness sizes.  Never compared as a float."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"


INFINITE = _Infinite()


def is_infinite(value):
    return value is INFINITE


class BlockLayout:
    """Assignment of the H basis vectors to blocks.

    labels holds one entry per basis index: the string "true" or "false",
    or a pair (i, b) with 0 <= i < n and b in {0, 1}.
    """

    def __init__(self, labels, n=None):
        norm = []
        max_i = -1
        for lab in labels:
            if lab in ("true", "false"):
                norm.append(lab)
            else:
                i, b = lab
                if b not in (0, 1) or i < 0:
                    raise ValueError(f"bad block label {lab!r}")
                norm.append((int(i), int(b)))
                max_i = max(max_i, int(i))
        self.labels = tuple(norm)
        self.n = (max_i + 1) if n is None else int(n)
        if max_i >= self.n:
            raise ValueError("label refers to an input bit outside range")

    @property
    def dim(self):
        return len(self.labels)

    def mask_for(self, x):
        """Boolean mask of the basis indices available on input x."""
        bits = _layout_bits(x, self.n)
        mask = np.zeros(self.dim, dtype=bool)
        for k, lab in enumerate(self.labels):
            if lab == "true":
                mask[k] = True
            elif lab != "false" and bits[lab[0]] == lab[1]:
                mask[k] = True
        return mask

    def block_indices(self, label):
        return [k for k, lab in enumerate(self.labels) if lab == label]

    def __eq__(self, other):
        return isinstance(other, BlockLayout) and self.labels == other.labels and self.n == other.n


def _layout_bits(x, n):
    if isinstance(x, str):
        if len(x) != n or set(x) - {"0", "1"}:
            raise ValueError(f"input {x!r} is not a length-{n} bitstring")
        return tuple(int(c) for c in x)
    xs = tuple(int(b) for b in x)
    if len(xs) != n:
        raise ValueError(f"input {x!r} has length {len(xs)}, expected {n}")
    return xs


class SpanProgram:
    def __init__(self, layout, A, tau):
        self.layout = layout
        self.A = np.asarray(A, dtype=complex)
        self.tau = np.asarray(tau, dtype=complex)
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        if self.A.shape[1] != layout.dim:
            raise ValueError(f"A has {self.A.shape[1]} columns, layout has {layout.dim}")
        if self.tau.shape != (self.A.shape[0],):
            raise ValueError("tau does not match the target space dimension")

    @property
    def dim_H(self):
        return self.A.shape[1]

    @property
    def dim_V(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.layout.n


@dataclasses.dataclass
class WitnessReport:
    """Solver output for one input; unused fields stay None.

    w_plus / w_minus_approx are floats or INFINITE.  achieved_error is the
    measured ||omega A Pi_H(x)||^2 of the reported negative witness.
    """

    w_plus: object = None
    witness_vec: object = None
    w_minus_approx: object = None
    neg_witness_vec: object = None
    achieved_error: float = None


def projector_Hx(P, x):
    """Diagonal 0/1 matrix projecting onto the available subspace H(x)."""
    return np.diag(P.layout.mask_for(x).astype(float))


def minimal_witness(P):
    """Minimal-norm solution w0 of A w = tau over all of H, and N = ||w0||^2.

    Raises ValueError when tau is outside the column space, i.e. when no
    positive input can exist for any block structure.
    """
    tol = DEFAULT
    w0 = np.linalg.pinv(P.A, rcond=tol.pinv_rcond) @ P.tau
    residual = np.linalg.norm(P.A @ w0 - P.tau)
    scale = np.linalg.norm(P.tau)
    if scale == 0:
        raise ValueError("tau is zero; the span program accepts nothing")
    if residual > tol.witness_residual_rel * scale:
        raise ValueError(
            f"no positive input exists: tau is not reachable "
            f"(relative residual {residual / scale:.3e})"
        )
    return w0, float(np.linalg.norm(w0) ** 2)


def positive_witness_size(P, x):
    """Exact positive witness for x, or INFINITE when tau is unreachable.

    The witness is the minimal-norm vector supported on H(x) with
    A w = tau; reachability is decided by a relative residual threshold.
    """
    tol = DEFAULT
    mask = P.layout.mask_for(x)
    B = P.A[:, mask]
    scale = np.linalg.norm(P.tau)
    if scale == 0:
        raise ValueError("tau is zero; the span program accepts nothing")
    if B.shape[1] == 0:
        return WitnessReport(w_plus=INFINITE)
    w_sub = np.linalg.pinv(B, rcond=tol.pinv_rcond) @ P.tau
    residual = np.linalg.norm(B @ w_sub - P.tau)
    if residual > tol.witness_residual_rel * scale:
        return WitnessReport(w_plus=INFINITE)
    w = np.zeros(P.dim_H, dtype=complex)
    w[mask] = w_sub
    return WitnessReport(w_plus=float(np.linalg.norm(w) ** 2), witness_vec=w)


def _constrained_min(Q, tau, rcond):
    """Minimize w^dag Q w subject to <tau, w> = 1, for Hermitian PSD Q.

    Returns (w, value).  When tau overlaps the kernel of Q the minimum is
    exactly zero, achieved inside the kernel; otherwise the minimizer is
    Q^+ tau rescaled to meet the constraint.
    """
    vals, vecs = np.linalg.eigh((Q + Q.conj().T) / 2)
    vmax = max(vals[-1], 0.0)
    cut = rcond * vmax if vmax > 0 else np.inf
    coeffs = vecs.conj().T @ tau
    kernel = vals <= cut
    k_norm2 = float(np.sum(np.abs(coeffs[kernel]) ** 2))
    t_norm = np.linalg.norm(tau)
    if k_norm2 > (1e-12 * t_norm) ** 2:
        w = (vecs[:, kernel] @ coeffs[kernel]) / k_norm2
        return w, 0.0
    live = ~kernel
    weights = np.abs(coeffs[live]) ** 2 / vals[live]
    denom = float(np.sum(weights))
    if denom == 0.0:
        raise ValueError("constraint <tau, w> = 1 is unsatisfiable")
    w = (vecs[:, live] @ (coeffs[live] / vals[live])) / denom
    return w, 1.0 / denom


def approx_negative_witness(P, x, lam, W_plus_bound):
    """Best approximate negative witness for x at error cap lam / W_plus_bound.

    Minimizes ||omega A||^2 over covectors with <omega, tau> = 1 and
    ||omega A Pi_H(x)||^2 <= cap, via a penalty multiplier on the error
    term, bisected until the cap is met with small slack.  W_plus_bound = 0
    is read as "no cap" (the error term is unconstrained).

    Returns a WitnessReport; w_minus_approx is INFINITE when even the
    error-minimizing witness misses the cap.
    """
    tol = DEFAULT
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    G = P.A @ P.A.conj().T
    mask = P.layout.mask_for(x)
    B = P.A[:, mask]
    Gx = B @ B.conj().T
    cap = np.inf if W_plus_bound == 0 else lam / W_plus_bound

    def solve(mu):
        w, _ = _constrained_min(G + mu * Gx, P.tau, tol.pinv_rcond)
        err = float(np.real(np.vdot(w, Gx @ w)))
        obj = float(np.real(np.vdot(w, G @ w)))
        return w, err, obj

    w, err, obj = solve(0.0)
    slack = tol.neg_witness_slack * max(1.0, cap if np.isfinite(cap) else 1.0)
    if err <= cap + 1e-15 or not np.isfinite(cap):
        return WitnessReport(w_minus_approx=obj, neg_witness_vec=w, achieved_error=err)

    # the least achievable error, attained by minimizing the error term alone
    w_floor, _ = _constrained_min(Gx, P.tau, tol.pinv_rcond)
    err_floor = float(np.real(np.vdot(w_floor, Gx @ w_floor)))
    obj_floor = float(np.real(np.vdot(w_floor, G @ w_floor)))
    if err_floor > cap * (1 + 1e-9) + 1e-15:
        return WitnessReport(w_minus_approx=INFINITE, achieved_error=err_floor)

    lo, hi = 0.0, 1.0
    w_hi = err_hi = obj_hi = None
    for _ in range(200):
        w_hi, err_hi, obj_hi = solve(hi)
        if err_hi <= cap:
            break
        lo, hi = hi, hi * 4.0
        if hi > 1e18:
            # the cap is only met in the limit; fall back to the floor witness
            return WitnessReport(
                w_minus_approx=obj_floor, neg_witness_vec=w_floor, achieved_error=err_floor
            )
    for _ in range(200):
        if cap - err_hi <= slack or (hi - lo) <= 1e-12 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        w_mid, err_mid, obj_mid = solve(mid)
        if err_mid <= cap:
            hi, w_hi, err_hi, obj_hi = mid, w_mid, err_mid, obj_mid
        else:
            lo = mid
    return WitnessReport(w_minus_approx=obj_hi, neg_witness_vec=w_hi, achieved_error=err_hi)


@dataclasses.dataclass
class ComplexityReport:
    w_plus: object
    w_minus: object
    complexity: object
    lam: float
    per_input: dict
    flags: list


def complexity_report(P, f_table, lam):
    """W+, approximate W-, and the resulting complexity sqrt(W+ W-).

    Negative witnesses are capped at lam / W+ using the measured W+.
    Inputs without a finite witness are flagged rather than silently
    dropped, and empty sides of the table yield 0.0 with a flag.
    """
    per_input = {}
    flags = []
    positives = [x for x, v in f_table.items() if v]
    negatives = [x for x, v in f_table.items() if not v]

    w_plus = 0.0
    for x in positives:
        rep = positive_witness_size(P, x)
        per_input[x] = rep
        if is_infinite(rep.w_plus):
            flags.append(f"positive_witness_infinite:{x}")
            w_plus = INFINITE
        elif not is_infinite(w_plus):
            w_plus = max(w_plus, rep.w_plus)
    if not positives:
        flags.append("no_positive_inputs")

    w_minus = 0.0
    bound = w_plus if (not is_infinite(w_plus) and w_plus > 0) else 0.0
    if is_infinite(w_plus):
        flags.append("negative_caps_unbounded")
    for x in negatives:
        rep = approx_negative_witness(P, x, lam, bound)
        per_input[x] = rep
        if is_infinite(rep.w_minus_approx):
            flags.append(f"negative_witness_infinite:{x}")
            w_minus = INFINITE
        elif not is_infinite(w_minus):
            w_minus = max(w_minus, rep.w_minus_approx)
    if not negatives:
        flags.append("no_negative_inputs")

    if is_infinite(w_plus) or is_infinite(w_minus):
        comp = INFINITE
    else:
        comp = float(np.sqrt(w_plus * w_minus))
    return ComplexityReport(w_plus, w_minus, comp, lam, per_input, flags)


@dataclasses.dataclass
class RescaledSpanProgram:
    """A span program rescaled so its minimal witness has unit norm.

    Two basis vectors are appended to H: hat0 (never available) and hat1
    (always available); one target coordinate is appended to V.  With
    N = ||w0||^2 the new operator and target are

        A_beta = beta A + |tau><hat0| + (sqrt(beta^2+N)/beta) |hat1><hat1|
        tau_beta = tau + |hat1>

    and the new minimal witness w0_beta has norm exactly one.
    """

    base: SpanProgram
    beta: float
    N: float
    A_beta: np.ndarray
    tau_beta: np.ndarray
    hat0_index: int
    hat1_index: int
    w0_beta: np.ndarray

    @property
    def span(self):
        labels = list(self.base.layout.labels) + ["false", "true"]
        return SpanProgram(BlockLayout(labels, n=self.base.layout.n), self.A_beta, self.tau_beta)


def rescale(P, beta):
    """Rescale P by beta > 0; beta >= sqrt(W+) keeps every witness below 2."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    tol = DEFAULT
    w0, N = minimal_witness(P)
    dv, dh = P.dim_V, P.dim_H
    A_beta = np.zeros((dv + 1, dh + 2), dtype=complex)
    A_beta[:dv, :dh] = beta * P.A
    A_beta[:dv, dh] = P.tau  # the hat0 column
    A_beta[dv, dh + 1] = np.sqrt(beta**2 + N) / beta  # the hat1 column
    tau_beta = np.concatenate([P.tau, [1.0]])
    w0_beta = np.concatenate(
        [
            (beta / (beta**2 + N)) * w0,
            [N / (beta**2 + N)],
            [beta / np.sqrt(beta**2 + N)],
        ]
    )
    norm = np.linalg.norm(w0_beta)
    if abs(norm - 1.0) > tol.rescale_norm:
        raise AssertionError(f"rescaled minimal witness has norm {norm:.12f}")
    residual = np.linalg.norm(A_beta @ w0_beta - tau_beta)
    if residual > tol.structure * np.linalg.norm(tau_beta):
        raise AssertionError(f"rescaled witness misses tau (residual {residual:.3e})")
    return RescaledSpanProgram(P, float(beta), N, A_beta, tau_beta, dh, dh + 1, w0_beta)


# ---------------------------------------------------------------------------
# JSON serialization


def _vector_to_json(v):
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]


def _vector_from_json(items):
    return np.array([complex(re, im) for re, im in items])


def span_program_to_json(P, meta=None):
    doc = {
        "labels": [lab if isinstance(lab, str) else [lab[0], lab[1]] for lab in P.layout.labels],
        "n": P.layout.n,
        "dim_V": P.dim_V,
        "A": [_vector_to_json(row) for row in P.A],
        "tau": _vector_to_json(P.tau),
    }
    if meta:
        doc["meta"] = meta
    return doc


def span_program_from_json(doc):
    for key in ("labels", "dim_V", "A", "tau"):
        if key not in doc:
            raise ValueError(f"span program JSON is missing {key!r}")
    labels = [lab if isinstance(lab, str) else (lab[0], lab[1]) for lab in doc["labels"]]
    layout = BlockLayout(labels, n=doc.get("n"))
    A = np.array([_vector_from_json(row) for row in doc["A"]])
    if A.shape[0] != doc["dim_V"]:
        raise ValueError("dim_V does not match the row count of A")
    return SpanProgram(layout, A, _vector_from_json(doc["tau"]))
