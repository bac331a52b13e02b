"""Numeric tolerances used across the package.

All thresholds live in one frozen dataclass so that every module agrees on
what "equal", "unitary" and "in the kernel" mean.  The environment variable
SPANFORGE_TOL may point at a JSON file overriding individual fields; the
active configuration is hashed into CLI reports so runs are reproducible.
"""

import dataclasses
import hashlib
import json
import os


@dataclasses.dataclass(frozen=True)
class Tolerances:
    # unitarity defect allowed on step matrices and register primitives
    unitarity: float = 1e-10
    # self-consistency checks on exact linear algebra (simulation norms,
    # answer-register commutation, structural identities)
    structure: float = 1e-8
    # verification threshold for clean-algorithm conditions
    clean_check: float = 1e-9
    # relative residual below which tau counts as reachable
    witness_residual_rel: float = 1e-6
    # rcond for pseudo-inverses, relative to the largest singular value
    pinv_rcond: float = 1e-10
    # slack allowed when bisecting the negative-witness error cap
    neg_witness_slack: float = 1e-6
    # unit-norm check on rescaled minimal witnesses
    rescale_norm: float = 1e-9
    # register circuits must reproduce their target operators this closely
    subroutine_match: float = 1e-6
    # superposition loader must hit its target amplitudes this closely
    c_alpha: float = 1e-8

    def config_hash(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def get_tolerances() -> Tolerances:
    """Default tolerances, with optional overrides from SPANFORGE_TOL.

    The variable, if set, names a JSON file whose keys are a subset of the
    Tolerances fields.  Unknown keys are rejected so typos do not silently
    loosen a check.
    """
    path = os.environ.get("SPANFORGE_TOL")
    if not path:
        return Tolerances()
    with open(path) as fh:
        overrides = json.load(fh)
    known = {f.name for f in dataclasses.fields(Tolerances)}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown tolerance fields: {sorted(bad)}")
    return Tolerances(**overrides)


DEFAULT = Tolerances()
