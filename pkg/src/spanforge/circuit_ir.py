"""Query algorithm IR and exact state-vector simulation.

An algorithm acts on C^([n] x W): an index register i in {0..n-1} and a
workspace register j of dimension w.  States are dense vectors of length
n*w with flat index i*w + j.  A step is either an explicit unitary or a
query marker; a query applies the input phase oracle

    |i, j>  ->  (-1)^(x_i) |i, j>.

Standing restrictions, enforced at construction time: the first and the
last step are not queries, and no two queries are adjacent.
"""

import numpy as np

from .tolerances import DEFAULT


class QueryMarker:
    """Placeholder step standing for one application of the input oracle."""

    __slots__ = ()

    def __repr__(self):
        return "QUERY"


QUERY = QueryMarker()


class UnitaryStep:
    """One explicit circuit step, stored as a dense unitary matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol=None):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("step matrix must be square")
        allowed = DEFAULT.unitarity if tol is None else tol
        defect = np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0]), ord=2)
        if defect > allowed:
            raise ValueError(f"step matrix is not unitary (defect {defect:.3e})")
        self.matrix = m

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __repr__(self):
        return f"UnitaryStep(dim={self.dim})"


def _bits(x, n):
    """Normalize an input to a tuple of n bits.

    Accepts a '0'/'1' string or any sequence of 0/1 integers.
    """
    if isinstance(x, str):
        if len(x) != n or set(x) - {"0", "1"}:
            raise ValueError(f"input {x!r} is not a length-{n} bitstring")
        return tuple(int(c) for c in x)
    xs = tuple(int(b) for b in x)
    if len(xs) != n or set(xs) - {0, 1}:
        raise ValueError(f"input {x!r} is not a length-{n} bit sequence")
    return xs


def _basis_index(state, tol=1e-12):
    """Index of the single nonzero entry of a computational basis state."""
    idx = np.flatnonzero(np.abs(state) > tol)
    if len(idx) != 1 or abs(state[idx[0]] - 1.0) > 1e-9:
        raise ValueError("state is not a computational basis vector")
    return int(idx[0])


class QueryAlgorithm:
    """A sequence of unitary steps and query markers on C^([n] x W).

    Parameters
    ----------
    n : number of input bits (size of the index register)
    workspace_dim : dimension w of the workspace register
    steps : list of UnitaryStep / QueryMarker, executed in order
    initial_state : length n*w basis vector, or a flat basis index
    answer_qubit : which bit of j carries the answer, counting from the
        least significant bit
    """

    def __init__(self, n, workspace_dim, steps, initial_state=0, answer_qubit=0):
        if n < 1 or workspace_dim < 1:
            raise ValueError("n and workspace_dim must be positive")
        self.n = int(n)
        self.workspace_dim = int(workspace_dim)
        if self.workspace_dim % (2 ** (answer_qubit + 1)) != 0:
            raise ValueError("workspace has no qubit at the answer position")
        self.answer_qubit = int(answer_qubit)
        self.steps = list(steps)
        if not self.steps:
            raise ValueError("algorithm needs at least one step")
        if isinstance(self.steps[0], QueryMarker) or isinstance(self.steps[-1], QueryMarker):
            raise ValueError("first and last steps must not be queries")
        for t in range(len(self.steps) - 1):
            if isinstance(self.steps[t], QueryMarker) and isinstance(self.steps[t + 1], QueryMarker):
                raise ValueError(f"consecutive queries at steps {t + 1}, {t + 2}")
        for t, s in enumerate(self.steps, 1):
            if isinstance(s, QueryMarker):
                continue
            if not isinstance(s, UnitaryStep):
                raise ValueError(f"step {t} is neither a unitary nor a query")
            if s.dim != self.dim:
                raise ValueError(f"step {t} has dimension {s.dim}, expected {self.dim}")
        if np.isscalar(initial_state):
            vec = np.zeros(self.dim, dtype=complex)
            vec[int(initial_state)] = 1.0
            self.initial_state = vec
        else:
            vec = np.asarray(initial_state, dtype=complex)
            if vec.shape != (self.dim,):
                raise ValueError("initial state has the wrong dimension")
            _basis_index(vec)  # must be a computational basis state
            self.initial_state = vec.copy()

    @property
    def dim(self):
        return self.n * self.workspace_dim

    @property
    def T(self):
        return len(self.steps)

    @property
    def query_positions(self):
        """1-based positions of the query markers, in order."""
        return tuple(t for t, s in enumerate(self.steps, 1) if isinstance(s, QueryMarker))

    @property
    def initial_index(self):
        return _basis_index(self.initial_state)

    def answer_bit_of(self, flat_index):
        j = flat_index % self.workspace_dim
        return (j >> self.answer_qubit) & 1

    def answer_mask(self, b):
        """Boolean mask over flat indices whose answer bit equals b."""
        idx = np.arange(self.dim)
        return ((idx % self.workspace_dim) >> self.answer_qubit) & 1 == b


class OracleSuite:
    """Oracle semantics for a fixed input x, with call counters.

    Three oracles are exposed:

      o_x    the input phase oracle
      o_alg  "apply step t": the step unitary for non-query t, and the
             identity on query positions and out-of-range times
      o_s    phase -1 exactly on times t in the query set

    The identity convention on o_alg is what lets circuits address step
    times held in a register without first branching on "is t a query".
    Counters tick on apply_o_x / charge; lookups are free.
    """

    def __init__(self, alg, x):
        self.alg = alg
        self.x = _bits(x, alg.n)
        w = alg.workspace_dim
        signs = np.array([(-1.0) ** self.x[i] for i in range(alg.n)])
        self.phase_vector = np.repeat(signs, w).astype(complex)
        self.counters = {"o_x": 0, "o_alg": 0, "o_s": 0}
        self._queries = set(alg.query_positions)

    def apply_o_x(self, state):
        self.counters["o_x"] += 1
        return self.phase_vector * state

    def is_query(self, t):
        return t in self._queries

    def o_alg_matrix(self, t):
        """Dense matrix of algorithm step t (identity off the unitary steps)."""
        if 1 <= t <= self.alg.T and not self.is_query(t):
            return self.alg.steps[t - 1].matrix
        return np.eye(self.alg.dim, dtype=complex)

    def o_s_sign(self, t):
        return -1.0 if self.is_query(t) else 1.0

    def charge(self, name, k=1):
        if name not in self.counters:
            raise ValueError(f"unknown oracle counter {name!r}")
        self.counters[name] += k


def simulate(alg, x, suite=None):
    """Exact trajectory [Psi_0(x), ..., Psi_T(x)] as dense vectors.

    When a suite is supplied its o_x counter advances once per query, so a
    caller can audit that exactly S oracle calls were made.
    """
    if suite is None:
        suite = OracleSuite(alg, x)
    state = alg.initial_state.copy()
    out = [state.copy()]
    for s in alg.steps:
        if isinstance(s, QueryMarker):
            state = suite.apply_o_x(state)
        else:
            state = s.matrix @ state
        out.append(state.copy())
    return out


def final_state(alg, x):
    return simulate(alg, x)[-1]


def output_probabilities(alg, x):
    """(p0, p1): probability of measuring the answer bit as 0 / 1 at time T."""
    psi = final_state(alg, x)
    p1 = float(np.sum(np.abs(psi[alg.answer_mask(1)]) ** 2))
    p0 = float(np.sum(np.abs(psi[alg.answer_mask(0)]) ** 2))
    return p0, p1


def answer_flip_matrix(alg):
    """The unitary I (x) X flipping the answer bit, as a dense permutation."""
    dim = alg.dim
    perm = np.zeros((dim, dim))
    for f in range(dim):
        i, j = divmod(f, alg.workspace_dim)
        perm[i * alg.workspace_dim + (j ^ (1 << alg.answer_qubit)), f] = 1.0
    return perm


class CleanAlgorithm:
    """An algorithm that restores its workspace and marks the answer.

    On every valid input the final state is (a phase times) the initial
    state with the answer bit replaced by the function value, up to error
    epsilon.  Three conditions characterize the class; see verify_clean.
    Construction checks only the structural one (every unitary step
    commutes with flipping the answer bit), since the others depend on the
    function table.
    """

    def __init__(self, base, query_set, epsilon, final_accepting_state, check=True):
        self.base = base
        self.query_set = tuple(sorted(int(q) for q in query_set))
        if self.query_set != tuple(base.query_positions):
            raise ValueError("query_set does not match the marker positions")
        if not self.query_set:
            raise ValueError("a clean algorithm must make at least one query")
        if not (0 < epsilon < 0.2):
            raise ValueError("epsilon must lie in (0, 1/5)")
        self.epsilon = float(epsilon)
        vec = np.asarray(final_accepting_state, dtype=complex)
        if vec.shape != (base.dim,):
            raise ValueError("final accepting state has the wrong dimension")
        fidx = _basis_index(vec)
        if base.answer_bit_of(fidx) != 1:
            raise ValueError("final accepting state must have answer bit 1")
        self.final_accepting_state = vec.copy()
        if check:
            flip = answer_flip_matrix(base)
            for t, s in enumerate(base.steps, 1):
                if isinstance(s, QueryMarker):
                    continue  # the phase oracle is diagonal, it commutes
                defect = np.linalg.norm(s.matrix @ flip - flip @ s.matrix, ord=2)
                if defect > DEFAULT.unitarity:
                    raise ValueError(
                        f"step {t} does not commute with the answer flip "
                        f"(defect {defect:.3e})"
                    )

    # delegate the common geometry to the base algorithm
    @property
    def n(self):
        return self.base.n

    @property
    def workspace_dim(self):
        return self.base.workspace_dim

    @property
    def dim(self):
        return self.base.dim

    @property
    def steps(self):
        return self.base.steps

    @property
    def T(self):
        return self.base.T

    @property
    def S(self):
        return len(self.query_set)

    @property
    def answer_qubit(self):
        return self.base.answer_qubit

    @property
    def initial_state(self):
        return self.base.initial_state

    @property
    def initial_index(self):
        return self.base.initial_index

    def query_gaps(self):
        """Gaps q_l - q_(l-1) for l = 1..S+1, with q_0 = 0 and q_(S+1) = T+1."""
        qs = (0,) + self.query_set + (self.T + 1,)
        return tuple(qs[i + 1] - qs[i] for i in range(len(qs) - 1))

    def gap_bound(self):
        return (3 * self.T) // self.S


def make_clean(alg, f_table):
    """Run, copy the answer into a fresh qubit, and run backwards.

    The new workspace is W x {0,1} with the fresh answer bit stored least
    significant (new flat index = 2*old + a).  The result has 2T+1 steps,
    doubles the query count, evaluates the same table with the same error,
    and satisfies the clean-algorithm conditions by construction.

    Raises ValueError if some table input is misclassified with error at
    least 1/5.
    """
    errs = {}
    for x, fx in f_table.items():
        p0, p1 = output_probabilities(alg, x)
        err = 1.0 - (p1 if fx else p0)
        if err >= 0.2:
            raise ValueError(f"error {err:.4f} on input {x} is not below 1/5")
        errs[x] = err
    # keep epsilon strictly positive so downstream weights stay finite even
    # for exact algorithms
    epsilon = max(max(errs.values()), 1e-4)

    w2 = 2 * alg.workspace_dim
    dim2 = alg.n * w2
    eye2 = np.eye(2)

    def lift(m):
        # new flat index = 2*old + a, so the lift is m (x) I_2
        return UnitaryStep(np.kron(m, eye2))

    # copy the old answer bit (now one position higher) into the new one
    old_answer = alg.answer_qubit + 1
    cnot = np.zeros((dim2, dim2))
    for f in range(dim2):
        j = f % w2
        a_src = (j >> old_answer) & 1
        cnot[f ^ a_src, f] = 1.0

    fwd = []
    bwd = []
    for s in alg.steps:
        if isinstance(s, QueryMarker):
            fwd.append(QUERY)
            bwd.append(QUERY)
        else:
            fwd.append(lift(s.matrix))
            bwd.append(lift(s.matrix.conj().T))
    steps = fwd + [UnitaryStep(cnot)] + bwd[::-1]

    start = 2 * alg.initial_index
    base = QueryAlgorithm(alg.n, w2, steps, initial_state=start, answer_qubit=0)
    accept = np.zeros(dim2, dtype=complex)
    accept[start ^ 1] = 1.0
    return CleanAlgorithm(base, base.query_positions, epsilon, accept)


def enforce_query_uniformity(clean):
    """Spread queries so consecutive gaps stay at most floor(3T/S).

    Algorithms with one or two queries already satisfy the bound and are
    returned unchanged.  Otherwise a block (I, query, query, I) padded to
    (I, Q, I, Q, I) is inserted after step ceil(k*T/S) for k = 1..S-1.
    Each block is the identity on every input since the phase oracle
    squares to one, so the trajectory at the original steps is preserved.
    The query count at most triples and T grows by 5(S-1).
    """
    S, T = clean.S, clean.T
    if S <= 2:
        return clean
    insert_after = {-(-k * T // S) for k in range(1, S)}  # ceil(k*T/S)
    eye = UnitaryStep(np.eye(clean.dim))
    steps = []
    for t, s in enumerate(clean.steps, 1):
        steps.append(s)
        if t in insert_after:
            steps.extend([eye, QUERY, eye, QUERY, eye])
    base = QueryAlgorithm(
        clean.n,
        clean.workspace_dim,
        steps,
        initial_state=clean.initial_index,
        answer_qubit=clean.answer_qubit,
    )
    out = CleanAlgorithm(
        base, base.query_positions, clean.epsilon, clean.final_accepting_state, check=False
    )
    gaps = out.query_gaps()
    if max(gaps) > out.gap_bound():
        raise AssertionError(f"uniformity failed: gaps {gaps} exceed {out.gap_bound()}")
    return out


class CleanReport:
    """Outcome of verify_clean: one pass/fail per condition plus measurements."""

    def __init__(self, consistency_violation, commutation_violation, max_gap, gap_bound, tol):
        self.consistency_violation = consistency_violation
        self.commutation_violation = commutation_violation
        self.max_gap = max_gap
        self.gap_bound = gap_bound
        self.tol = tol
        self.consistency_ok = consistency_violation <= tol
        self.commutation_ok = commutation_violation <= tol
        self.gap_ok = max_gap <= gap_bound

    @property
    def passed(self):
        return self.consistency_ok and self.commutation_ok and self.gap_ok

    def lines(self):
        return [
            f"consistency  {'PASS' if self.consistency_ok else 'FAIL'}"
            f"  (violation {self.consistency_violation:.3e}, tol {self.tol:.1e})",
            f"commutation  {'PASS' if self.commutation_ok else 'FAIL'}"
            f"  (violation {self.commutation_violation:.3e}, tol {self.tol:.1e})",
            f"query gaps   {'PASS' if self.gap_ok else 'FAIL'}"
            f"  (max gap {self.max_gap}, bound {self.gap_bound})",
        ]

    def __repr__(self):
        return "\n".join(self.lines())


def verify_clean(clean, f_table, tol=None):
    """Check the three clean-algorithm conditions against a function table.

    1. consistency: <Psi_T | Psi_T(x)> = p1(x) and, with the answer bit
       flipped, <Psi_T | (I x X) Psi_T(x)> = p0(x), for every x.
    2. commutation: every unitary step commutes with the answer-bit flip.
    3. gaps: consecutive query gaps are at most floor(3T/S).
    """
    tol = DEFAULT.clean_check if tol is None else tol
    flip = answer_flip_matrix(clean.base)
    psi_acc = clean.final_accepting_state
    worst_consistency = 0.0
    for x, fx in f_table.items():
        psi = final_state(clean.base, x)
        p0, p1 = output_probabilities(clean.base, x)
        ov1 = np.vdot(psi_acc, psi)
        ov0 = np.vdot(psi_acc, flip @ psi)
        worst_consistency = max(worst_consistency, abs(ov1 - p1), abs(ov0 - p0))
    worst_commutation = 0.0
    for s in clean.steps:
        if isinstance(s, QueryMarker):
            continue
        defect = np.linalg.norm(s.matrix @ flip - flip @ s.matrix, ord=2)
        worst_commutation = max(worst_commutation, defect)
    gaps = clean.query_gaps()
    return CleanReport(worst_consistency, worst_commutation, max(gaps), clean.gap_bound(), tol)


# ---------------------------------------------------------------------------
# JSON serialization.  Matrices are nested lists of [re, im] pairs.


def _matrix_to_json(m):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def algorithm_to_json(alg):
    """Serialize a QueryAlgorithm or CleanAlgorithm to a JSON-ready dict."""
    clean = isinstance(alg, CleanAlgorithm)
    base = alg.base if clean else alg
    doc = {
        "n": base.n,
        "workspace_dim": base.workspace_dim,
        "answer_qubit": base.answer_qubit,
        "steps": [
            {"type": "query"}
            if isinstance(s, QueryMarker)
            else {"type": "unitary", "matrix": _matrix_to_json(s.matrix)}
            for s in base.steps
        ],
    }
    if base.initial_index != 0:
        doc["initial_state"] = base.initial_index
    if clean:
        doc["epsilon"] = alg.epsilon
    return doc


def algorithm_from_json(doc):
    """Load an algorithm dict.

    Returns (QueryAlgorithm, epsilon_or_None).  Structural restrictions
    (consecutive queries, query first or last) are rejected here with the
    constructor's error message.
    """
    for key in ("n", "workspace_dim", "answer_qubit", "steps"):
        if key not in doc:
            raise ValueError(f"algorithm JSON is missing {key!r}")
    steps = []
    for k, item in enumerate(doc["steps"], 1):
        kind = item.get("type")
        if kind == "query":
            steps.append(QUERY)
        elif kind == "unitary":
            steps.append(UnitaryStep(_matrix_from_json(item["matrix"])))
        else:
            raise ValueError(f"step {k} has unknown type {kind!r}")
    alg = QueryAlgorithm(
        doc["n"],
        doc["workspace_dim"],
        steps,
        initial_state=int(doc.get("initial_state", 0)),
        answer_qubit=doc["answer_qubit"],
    )
    eps = doc.get("epsilon")
    return alg, (None if eps is None else float(eps))


def as_clean(alg, epsilon):
    """Wrap a loaded algorithm as clean, deriving the accepting state.

    The accepting state is the initial state with the answer bit set; the
    structural clean conditions are checked by the constructor.
    """
    accept = np.zeros(alg.dim, dtype=complex)
    accept[alg.initial_index | (1 << alg.answer_qubit)] = 1.0
    return CleanAlgorithm(alg, alg.query_positions, epsilon, accept)
