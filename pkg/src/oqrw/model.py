"""Open quantum random walk models: sites, transition operators, normalization.

A model stores the operators ``B[i <- j]`` (written ``B^i_j``) acting on the
internal space H for each ordered pair of sites ``(j, i)``. The dilated
operators ``B^i_j (x) |i><j|`` are never built; every computation indexes
blocks by site instead.

Three kinds exist:

* ``explicit``: a finite site list and an arbitrary sparse operator map.
* ``lattice1d``: a translation invariant rule ``offset -> B`` on the integers,
  materialized over the window ``[-W, W]``.
* ``classical``: the embedding of a row-stochastic matrix ``P`` with
  ``H = C`` and ``B^i_j = sqrt(P[j, i])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import DimensionMismatch, MissingOperator, NotStochastic
from .linalg import DEFAULT_TOL, dagger, opnorm

KINDS = ("explicit", "lattice1d", "classical")


def _as_operator(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionMismatch(f"operator must be a matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class OqrwModel:
    """An open quantum random walk.

    Parameters
    ----------
    hdim : int
        Dimension of the internal space H.
    sites : sequence of int
        Site labels. For lattice models this is the truncation window.
    ops : mapping
        ``(from_site, to_site) -> B^to_from``. Absent pairs are zero; exactly
        zero operators are dropped.
    kind : {"explicit", "lattice1d", "classical"}
    lattice_rule : mapping, optional
        ``offset -> B`` for translation invariant 1-D lattices.
    window : int, optional
        Half width ``W`` of the lattice window ``[-W, W]``.
    stochastic : ndarray, optional
        The row-stochastic matrix a classical model was built from.
    """

    hdim: int
    sites: tuple
    ops: Mapping
    kind: str = "explicit"
    lattice_rule: Mapping | None = None
    window: int | None = None
    stochastic: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if int(self.hdim) < 1:
            raise ValueError("hdim must be positive")
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise ValueError("site labels must be unique")
        site_set = set(sites)
        ops = {}
        for (j, i), b in self.ops.items():
            j, i = int(j), int(i)
            if j not in site_set or i not in site_set:
                raise ValueError(f"operator ({j} -> {i}) references an unknown site")
            b = _as_operator(b)
            if np.any(b != 0):
                ops[(j, i)] = b
        outgoing = {s: [] for s in sites}
        incoming = {s: [] for s in sites}
        for (j, i), b in ops.items():
            outgoing[j].append((i, b))
            incoming[i].append((j, b))
        rule = None
        if self.lattice_rule is not None:
            rule = {int(k): _as_operator(v) for k, v in self.lattice_rule.items()}
        object.__setattr__(self, "hdim", int(self.hdim))
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "lattice_rule", rule)
        object.__setattr__(self, "_outgoing", outgoing)
        object.__setattr__(self, "_incoming", incoming)
        object.__setattr__(self, "_site_set", frozenset(sites))

    # -- structure -----------------------------------------------------
    @property
    def is_lattice(self) -> bool:
        return self.kind == "lattice1d"

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def total_dim(self) -> int:
        """``|sites| * hdim``, the dimension of the block-diagonal state space."""
        return self.n_sites * self.hdim

    @property
    def reach(self) -> int:
        """Largest jump length of a lattice rule (0 for other kinds)."""
        if not self.lattice_rule:
            return 0
        return max(abs(k) for k, b in self.lattice_rule.items() if np.any(b != 0))

    def __contains__(self, site) -> bool:
        return site in self._site_set

    def outgoing(self, j: int) -> list:
        """``[(i, B^i_j), ...]`` for the nonzero operators leaving ``j``."""
        return self._outgoing.get(j, [])

    def incoming(self, i: int) -> list:
        """``[(j, B^i_j), ...]`` for the nonzero operators entering ``i``."""
        return self._incoming.get(i, [])

    def op(self, j: int, i: int) -> np.ndarray | None:
        """``B^i_j`` (from ``j`` to ``i``) or ``None`` when it is zero."""
        return self.ops.get((j, i))

    def all_operators(self) -> list:
        """Distinct generators: the lattice rule when present, otherwise every stored operator."""
        if self.lattice_rule is not None:
            return [b for b in self.lattice_rule.values() if np.any(b != 0)]
        return list(self.ops.values())

    def boundary_sites(self) -> frozenset:
        """Window sites with an outgoing rule operator that would leave the window."""
        if not self.is_lattice:
            return frozenset()
        offsets = [k for k, b in self.lattice_rule.items() if np.any(b != 0)]
        return frozenset(j for j in self.sites if any((j + k) not in self for k in offsets))

    def with_window(self, window: int) -> "OqrwModel":
        """Rematerialize a lattice model over ``[-window, window]``."""
        if not self.is_lattice:
            raise ValueError("only lattice1d models have a window")
        return lattice_model(self.lattice_rule, window)


def lattice_model(rule: Mapping[int, np.ndarray], window: int) -> OqrwModel:
    """Translation invariant nearest-neighbour style walk on ``[-window, window]``.

    ``rule[k]`` is the operator applied when jumping from ``j`` to ``j + k``.
    """
    rule = {int(k): _as_operator(v) for k, v in rule.items()}
    if not rule:
        raise ValueError("lattice rule is empty")
    hdim = next(iter(rule.values())).shape[0]
    window = int(window)
    if window < 0:
        raise ValueError("window must be nonnegative")
    sites = tuple(range(-window, window + 1))
    ops = {}
    for j in sites:
        for k, b in rule.items():
            if -window <= j + k <= window:
                ops[(j, j + k)] = b
    return OqrwModel(hdim=hdim, sites=sites, ops=ops, kind="lattice1d",
                     lattice_rule=rule, window=window)


def explicit_model(ops: Mapping, sites: Iterable[int] | None = None) -> OqrwModel:
    ops = {(int(j), int(i)): _as_operator(b) for (j, i), b in ops.items()}
    if not ops:
        raise ValueError("explicit model needs at least one operator")
    if sites is None:
        sites = sorted({s for pair in ops for s in pair})
    hdim = next(iter(ops.values())).shape[0]
    return OqrwModel(hdim=hdim, sites=tuple(sites), ops=ops, kind="explicit")


def check_stochastic(P, tol: float = DEFAULT_TOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NotStochastic(f"expected a square matrix, got shape {P.shape}")
    if np.any(P < -tol):
        raise NotStochastic("negative transition probability")
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > tol:
        raise NotStochastic(f"row sums deviate from 1 by {np.max(np.abs(rows - 1.0)):.3e}")
    return np.clip(P, 0.0, None)


def classical_embed(P, tol: float = DEFAULT_TOL) -> OqrwModel:
    """Embed a classical chain as a walk with one-dimensional internal space.

    The operator from ``j`` to ``i`` is the scalar ``sqrt(P[j, i])``; the
    unitary phases are fixed to 1.
    """
    P = check_stochastic(P, tol)
    n = P.shape[0]
    ops = {(j, i): np.array([[np.sqrt(P[j, i])]], dtype=complex)
           for j in range(n) for i in range(n) if P[j, i] > 0}
    return OqrwModel(hdim=1, sites=tuple(range(n)), ops=ops, kind="classical",
                     stochastic=P)


@dataclass(frozen=True)
class ValidationReport:
    """Normalization defects ``||sum_i B^i_j* B^i_j - I||`` per source site."""

    defects: dict
    boundary: frozenset
    tol: float
    rule_defect: float | None = None

    @property
    def invalid_sites(self) -> list:
        return sorted(j for j, d in self.defects.items()
                      if d > self.tol and j not in self.boundary)

    @property
    def valid(self) -> bool:
        if self.rule_defect is not None and self.rule_defect > self.tol:
            return False
        return not self.invalid_sites

    @property
    def max_defect(self) -> float:
        checked = [d for j, d in self.defects.items() if j not in self.boundary]
        if self.rule_defect is not None:
            checked.append(self.rule_defect)
        return max(checked, default=0.0)


def validate_model(m: OqrwModel, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check ``sum_i B^i_j* B^i_j = I`` at every site.

    A site with no outgoing operator has defect 1. On a truncated lattice the
    sites whose jumps leave the window are flagged as boundary and exempt;
    the rule itself is checked separately as ``rule_defect``.

    Raises
    ------
    DimensionMismatch
        If an operator is not ``hdim x hdim``.
    """
    d = m.hdim
    shapes = list(m.ops.values()) + list((m.lattice_rule or {}).values())
    for b in shapes:
        if b.shape != (d, d):
            raise DimensionMismatch(f"operator of shape {b.shape}, expected ({d}, {d})")
    eye = np.eye(d)
    defects = {}
    for j in m.sites:
        acc = np.zeros((d, d), dtype=complex)
        for _, b in m.outgoing(j):
            acc += dagger(b) @ b
        defects[j] = opnorm(acc - eye)
    rule_defect = None
    if m.lattice_rule is not None:
        acc = sum(dagger(b) @ b for b in m.lattice_rule.values())
        rule_defect = opnorm(acc - eye)
    return ValidationReport(defects=defects, boundary=m.boundary_sites(), tol=tol,
                            rule_defect=rule_defect)


def path_operator(m: OqrwModel, path: Sequence[int]) -> np.ndarray:
    """Ordered product ``B^{i_l}_{i_{l-1}} ... B^{i_1}_{i_0}`` along ``path``.

    Later steps multiply on the left.

    Raises
    ------
    MissingOperator
        If some step of the path has no (nonzero) operator.
    """
    path = [int(s) for s in path]
    if len(path) < 2:
        raise ValueError("a path needs at least two vertices")
    out = np.eye(m.hdim, dtype=complex)
    for j, i in zip(path[:-1], path[1:]):
        b = m.op(j, i)
        if b is None:
            raise MissingOperator(f"no operator from site {j} to site {i}")
        out = b @ out
    return out
