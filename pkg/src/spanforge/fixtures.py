"""Built-in example algorithms used by the test-suite and the CLI.

All four live on two input bits with a two-dimensional workspace whose
single bit is the answer.  Flat state index is i*2 + j.
"""

import numpy as np

from .circuit_ir import QUERY, QueryAlgorithm, UnitaryStep, enforce_query_uniformity, make_clean

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_I2 = np.eye(2)

# CNOT from the index register onto the answer bit: (i, j) -> (i, j xor i)
_CNOT = np.zeros((4, 4))
for _i in range(2):
    for _j in range(2):
        _CNOT[_i * 2 + (_j ^ _i), _i * 2 + _j] = 1.0
del _i, _j

_HADAMARD_INDEX = np.kron(_H, _I2)


def fixture_read_first_bit():
    """One query returning x_0 on the promise domain {00, 10}.

    The index register is put in uniform superposition, so the phase query
    picks up the relative phase (-1)^(x_0 xor x_1).  With the second bit
    promised zero that phase is x_0 itself; an H turns it back into a basis
    state and a CNOT copies it into the answer bit.  The final state is
    (-1)^(x_0) |x_0, x_0> exactly.
    """
    steps = [
        UnitaryStep(_HADAMARD_INDEX),
        QUERY,
        UnitaryStep(_CNOT @ _HADAMARD_INDEX),
    ]
    alg = QueryAlgorithm(2, 2, steps, initial_state=0, answer_qubit=0)
    return alg, {"00": 0, "10": 1}


def fixture_grover_or():
    """OR of two bits with a single query, on the promise domain {00, 01, 10}.

    Same step matrices as fixture_read_first_bit: after the query and the
    H, the index register holds the parity x_0 xor x_1, which agrees with
    OR everywhere except on input 11, hence the promise.
    """
    alg, _ = fixture_read_first_bit()
    return alg, {"00": 0, "01": 1, "10": 1}


def fixture_parity():
    """Parity of two bits from two queries, exact on the full domain.

    Between the queries the index register is rotated through the H basis
    and the running parity is copied into the answer bit; the second query
    cancels the leftover input-dependent phase, so the final state is
    exactly |0, x_0 xor x_1> with no phase at all.
    """
    u3 = UnitaryStep(_HADAMARD_INDEX @ _CNOT @ _HADAMARD_INDEX)
    steps = [
        UnitaryStep(_HADAMARD_INDEX),
        QUERY,
        u3,
        QUERY,
        UnitaryStep(_HADAMARD_INDEX),
    ]
    alg = QueryAlgorithm(2, 2, steps, initial_state=0, answer_qubit=0)
    table = {x: (int(x[0]) ^ int(x[1])) for x in ("00", "01", "10", "11")}
    return alg, table


def fixture_noisy_read():
    """fixture_read_first_bit followed by a small answer rotation.

    The trailing rotation moves probability sin(phi)^2 = 0.1 off the
    correct answer, giving a bounded-error algorithm with error exactly
    one tenth on both promise inputs.
    """
    phi = np.arcsin(np.sqrt(0.1))
    c, s = np.cos(phi), np.sin(phi)
    rot = np.array([[c, -s], [s, c]])
    steps = [
        UnitaryStep(_HADAMARD_INDEX),
        QUERY,
        UnitaryStep(_CNOT @ _HADAMARD_INDEX),
        UnitaryStep(np.kron(_I2, rot)),
    ]
    alg = QueryAlgorithm(2, 2, steps, initial_state=0, answer_qubit=0)
    return alg, {"00": 0, "10": 1}


FIXTURES = {
    "read_first_bit": fixture_read_first_bit,
    "grover_or": fixture_grover_or,
    "parity": fixture_parity,
    "noisy_read": fixture_noisy_read,
}


def fixture(name):
    if name not in FIXTURES:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name]()


def build_clean(name):
    """Cleaned and query-spread version of a named fixture, with its table."""
    alg, table = fixture(name)
    return enforce_query_uniformity(make_clean(alg, table)), table
