"""Reference models used by the tests, the CLI and the shipped fixture files.

Each builder returns a model; ``*_state`` helpers give the matching initial
state. ``write_fixture_files`` regenerates the YAML documents under
``fixtures/``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evolution import BlockState
from .io import dump_yaml, model_to_dict, state_to_dict
from .model import OqrwModel, classical_embed, explicit_model, lattice_model

S = 1.0 / np.sqrt(2.0)

# jump rule offset -1 uses B, offset +1 uses C
NN_RANGE_E2 = {
    "B": np.array([[0, 0], [S, S]], dtype=complex),
    "C": np.array([[0, 0], [-S, S]], dtype=complex),
    "h": np.diag([0.0, 1.0]).astype(complex),
}
NN_RANGE_DIAGONAL = {
    "B": np.array([[S, 0], [-S, 0]], dtype=complex),
    "C": np.array([[0, S], [0, -S]], dtype=complex),
    "h": np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
}
THREE_LEVEL = {
    "L1": np.array([[0, 0, 0], [0, S, S], [0, 0, 0]], dtype=complex),
    "L2": np.array([[0, 0, 0], [0, S, -S], [0, 0, 0]], dtype=complex),
    "L3": np.array([[0, 0, 0], [0, 0, 0], [1, 0, 0]], dtype=complex),
    "h": np.diag([0.0, 1.0, 1.0]).astype(complex),
}
HADAMARD = np.array([[S, S], [S, -S]], dtype=complex)


def nearest_neighbour(B, C, window: int = 10) -> OqrwModel:
    return lattice_model({-1: B, 1: C}, window)


def range_e2_model(window: int = 10) -> OqrwModel:
    return nearest_neighbour(NN_RANGE_E2["B"], NN_RANGE_E2["C"], window)


def range_diagonal_model(window: int = 10) -> OqrwModel:
    return nearest_neighbour(NN_RANGE_DIAGONAL["B"], NN_RANGE_DIAGONAL["C"], window)


def three_level_model(window: int = 10) -> OqrwModel:
    return lattice_model({-1: THREE_LEVEL["L1"], 0: THREE_LEVEL["L2"], 1: THREE_LEVEL["L3"]},
                         window)


def unitary_columns(U=HADAMARD):
    """``B = [u 0]`` and ``C = [0 v]`` from the columns of a unitary ``U``."""
    U = np.asarray(U, dtype=complex)
    B = np.zeros_like(U)
    C = np.zeros_like(U)
    B[:, 0] = U[:, 0]
    C[:, 1] = U[:, 1]
    return B, C


def unitary_column_lattice(U=HADAMARD, window: int = 10) -> OqrwModel:
    B, C = unitary_columns(U)
    return nearest_neighbour(B, C, window)


def unitary_column_ring(n_sites: int = 4, U=HADAMARD) -> OqrwModel:
    """The unitary-column walk on a ring, so that a faithful state fits on finitely many sites."""
    if n_sites < 3:
        raise ValueError("a ring needs at least 3 sites")
    B, C = unitary_columns(U)
    ops = {}
    for j in range(n_sites):
        ops[(j, (j - 1) % n_sites)] = B
        ops[(j, (j + 1) % n_sites)] = C
    return explicit_model(ops, range(n_sites))


def maximally_mixed(m: OqrwModel) -> BlockState:
    return BlockState({s: np.eye(m.hdim) / m.total_dim for s in m.sites})


def localized_state(hdim: int, site: int = 0) -> BlockState:
    return BlockState.localized(site, np.eye(hdim) / hdim)


# -- classical chains -------------------------------------------------------

IRREDUCIBLE_P = np.array([
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
])
TWO_CLOSED_P = np.array([
    [0.5, 0.5, 0.0, 0.0],
    [0.3, 0.7, 0.0, 0.0],
    [0.0, 0.0, 0.2, 0.8],
    [0.0, 0.0, 0.6, 0.4],
])
TRANSIENT_P = np.array([
    [0.5, 0.25, 0.25],
    [0.0, 0.4, 0.6],
    [0.0, 0.7, 0.3],
])


def classical_fixture(name: str) -> OqrwModel:
    table = {"irreducible": IRREDUCIBLE_P, "two_closed": TWO_CLOSED_P, "transient": TRANSIENT_P}
    return classical_embed(table[name])


def fixture_set() -> dict:
    """``name -> (model, initial state)`` for every shipped fixture."""
    ring = unitary_column_ring()
    return {
        "range_e2": (range_e2_model(), localized_state(2)),
        "range_diagonal": (range_diagonal_model(), localized_state(2)),
        "three_level": (three_level_model(), localized_state(3)),
        "unitary_column_ring": (ring, maximally_mixed(ring)),
        "unitary_column_lattice": (unitary_column_lattice(), localized_state(2)),
        "classical_irreducible": (classical_fixture("irreducible"),
                                  BlockState.from_distribution([1 / 3, 1 / 3, 1 / 3])),
        "classical_two_closed": (classical_fixture("two_closed"),
                                 BlockState.from_distribution([0, 0, 0.5, 0.5])),
        "classical_transient": (classical_fixture("transient"),
                                BlockState.from_distribution([0, 0.5, 0.5])),
    }


def write_fixture_files(directory) -> list:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (m, rho0) in fixture_set().items():
        for suffix, doc in (("model", model_to_dict(m)), ("state", state_to_dict(rho0))):
            path = directory / f"{name}.{suffix}.yaml"
            path.write_text(dump_yaml(doc))
            written.append(path)
    return written
