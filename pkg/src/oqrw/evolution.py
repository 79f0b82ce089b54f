"""Block-diagonal states and the one-step walk map.

A state ``sum_i rho_i (x) |i><i|`` is held as a sparse ``site -> rho_i`` map.
Blocks whose trace falls below ``PRUNE_TRACE`` are dropped, so the key set of
a state is exactly its site support.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import BoundaryViolation, InvalidState, TraceError
from .linalg import DEFAULT_TOL, dagger, is_psd, opnorm
from .model import OqrwModel, classical_embed  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)

PRUNE_TRACE = 1e-14


class BlockState:
    """Block-diagonal density operator ``sum_i rho_i (x) |i><i|``.

    Parameters
    ----------
    blocks : mapping
        ``site -> rho_i``. Blocks with trace below ``PRUNE_TRACE`` are dropped.

    Raises
    ------
    InvalidState
        If no block survives (the zero state), or block shapes disagree.
    """

    __slots__ = ("blocks", "hdim")

    def __init__(self, blocks: Mapping[int, np.ndarray]):
        kept = {}
        hdim = None
        for site, rho in blocks.items():
            rho = np.asarray(rho, dtype=complex)
            if rho.ndim == 0:
                rho = rho.reshape(1, 1)
            if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
                raise InvalidState(f"block at site {site} is not square")
            if hdim is None:
                hdim = rho.shape[0]
            elif rho.shape[0] != hdim:
                raise InvalidState("blocks have inconsistent dimensions")
            if abs(np.trace(rho).real) >= PRUNE_TRACE:
                kept[int(site)] = rho
        if not kept:
            raise InvalidState("the zero state is not a valid initial state")
        self.blocks = dict(sorted(kept.items()))
        self.hdim = hdim

    @classmethod
    def localized(cls, site: int, rho) -> "BlockState":
        rho = np.asarray(rho, dtype=complex)
        return cls({site: rho / np.trace(rho)})

    @classmethod
    def from_distribution(cls, p, sites=None) -> "BlockState":
        """Classical (``hdim = 1``) state from a probability vector."""
        p = np.asarray(p, dtype=float)
        sites = range(len(p)) if sites is None else sites
        return cls({s: np.array([[v]]) for s, v in zip(sites, p)})

    @property
    def support(self) -> frozenset:
        return frozenset(self.blocks)

    def block(self, site: int) -> np.ndarray:
        b = self.blocks.get(site)
        return np.zeros((self.hdim, self.hdim), dtype=complex) if b is None else b

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks.values()))

    def distance(self, other: "BlockState") -> float:
        """Largest blockwise spectral-norm difference."""
        sites = self.support | other.support
        return max(opnorm(self.block(s) - other.block(s)) for s in sites)

    def check(self, tol: float = DEFAULT_TOL) -> None:
        """Raise ``InvalidState`` unless normalized and blockwise PSD within ``tol``."""
        if abs(self.trace() - 1.0) > tol:
            raise InvalidState(f"total trace {self.trace():.15g} differs from 1")
        for s, b in self.blocks.items():
            if not is_psd(b, tol):
                raise InvalidState(f"block at site {s} is not positive semidefinite")

    def __repr__(self) -> str:
        return f"BlockState(sites={sorted(self.blocks)}, hdim={self.hdim})"


def step(m: OqrwModel, s: BlockState) -> BlockState:
    """One application of the walk map: ``rho_i <- sum_j B^i_j rho_j B^i_j*``.

    Raises
    ------
    BoundaryViolation
        If the support touches the edge of a truncated lattice window.
    """
    if m.is_lattice:
        hit = s.support & m.boundary_sites()
        if hit:
            raise BoundaryViolation(f"support reaches window boundary at sites {sorted(hit)}")
    out: dict = {}
    for j, rho in s.blocks.items():
        if j not in m:
            raise InvalidState(f"state has mass at site {j} outside the model")
        for i, b in m.outgoing(j):
            term = b @ rho @ dagger(b)
            if i in out:
                out[i] += term
            else:
                out[i] = term
    # exact map keeps blocks Hermitian; drop round-off that dominates vanishing blocks
    return BlockState({i: 0.5 * (a + dagger(a)) for i, a in out.items()})


@dataclass(eq=False)
class Trajectory:
    """States ``rho^(0) ... rho^(N)`` of a walk together with their site supports."""

    model: OqrwModel
    states: tuple
    supports: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.states = tuple(self.states)
        if not self.supports:
            self.supports = tuple(s.support for s in self.states)

    @property
    def n_steps(self) -> int:
        return len(self.states) - 1

    def __len__(self) -> int:
        return len(self.states)

    def ratio(self, n: int, j: int, x) -> complex:
        """``Tr(rho^(n)_j x) / Tr(rho^(n)_j)``."""
        rho = self.states[n].blocks[j]
        return np.trace(rho @ x) / np.trace(rho).real


def required_window(m: OqrwModel, rho0: BlockState, n_steps: int) -> int:
    """Smallest half width that keeps ``n_steps`` steps away from the boundary."""
    extent = max(abs(s) for s in rho0.support)
    return extent + (n_steps + 1) * m.reach


def trajectory(m: OqrwModel, rho0: BlockState, n_steps: int, tol: float = DEFAULT_TOL,
               auto_window: bool = True) -> Trajectory:
    """Evolve ``rho0`` for ``n_steps`` steps.

    Lattice models are widened to a window that the support cannot reach
    when ``auto_window`` is set. Every step is trace-checked against ``tol``.

    Raises
    ------
    TraceError
        If the total trace drifts from 1 by more than ``tol``.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    rho0.check(tol)
    if m.is_lattice and auto_window:
        need = required_window(m, rho0, n_steps)
        if m.window is None or m.window < need:
            m = m.with_window(need)
    states = [rho0]
    for n in range(n_steps):
        nxt = step(m, states[-1])
        if abs(nxt.trace() - 1.0) > tol:
            raise TraceError(f"trace {nxt.trace():.15g} after step {n + 1}")
        states.append(nxt)
    return Trajectory(model=m, states=tuple(states))


def site_distribution(s: BlockState) -> dict:
    """``site -> Tr(rho_site)``."""
    return {i: float(np.trace(b).real) for i, b in s.blocks.items()}


def superoperator(m: OqrwModel) -> np.ndarray:
    """Dense matrix of the walk map on the block-diagonal space.

    Coordinates are ``(site position, a, b)`` in row-major order, matching
    ``np.ravel`` of each block; ``vec(B rho B*) = kron(B, conj(B)) vec(rho)``.
    """
    d2 = m.hdim * m.hdim
    pos = {s: k for k, s in enumerate(m.sites)}
    L = np.zeros((m.n_sites * d2, m.n_sites * d2), dtype=complex)
    for (j, i), b in m.ops.items():
        L[pos[i] * d2:(pos[i] + 1) * d2, pos[j] * d2:(pos[j] + 1) * d2] += np.kron(b, np.conj(b))
    return L


def _vector_to_blocks(m: OqrwModel, v: np.ndarray) -> dict:
    d = m.hdim
    return {s: v[k * d * d:(k + 1) * d * d].reshape(d, d) for k, s in enumerate(m.sites)}


def _dense_fixed_point(m: OqrwModel) -> BlockState | None:
    L = superoperator(m)
    evals, evecs = np.linalg.eig(L)
    k = int(np.argmin(np.abs(evals - 1.0)))
    if abs(evals[k] - 1.0) > 1e-8:
        return None
    near = int(np.sum(np.abs(evals - 1.0) < 1e-8))
    if near > 1:
        log.info("fixed-point space has dimension %d; returning one invariant state", near)
    blocks = _vector_to_blocks(m, evecs[:, k])
    total = sum(np.trace(b) for b in blocks.values())
    blocks = {s: b / total for s, b in blocks.items()}
    blocks = {s: 0.5 * (b + dagger(b)) for s, b in blocks.items()}
    # positive part of a Hermitian fixed point of a trace-preserving map is fixed too
    pos_blocks = {}
    for s, b in blocks.items():
        w, u = np.linalg.eigh(b)
        pos_blocks[s] = (u * np.clip(w, 0.0, None)) @ dagger(u)
    total = sum(np.trace(b).real for b in pos_blocks.values())
    if total <= 0:
        return None
    return BlockState({s: b / total for s, b in pos_blocks.items()})


def invariant_state(m: OqrwModel, tol: float = DEFAULT_TOL, max_iter: int = 20000) -> BlockState | None:
    """A state with ``||M(w) - w|| <= tol``, or ``None`` when none is found.

    Power iteration on the lazy map ``(rho + M(rho)) / 2`` (same fixed points,
    no periodic oscillation) started from the maximally mixed state; once the
    residual is below ``tol`` the iteration continues until it stops
    improving. A dense eigen-solve of the superoperator is the fallback.
    Fixed points need not be unique; the first one found is returned.
    """
    if m.is_lattice:
        raise ValueError("invariant_state needs a finite model (explicit or classical)")
    d = m.hdim
    rho = BlockState({s: np.eye(d) / m.total_dim for s in m.sites})
    best, best_res = None, np.inf
    stall = 0
    for _ in range(max_iter):
        nxt = step(m, rho)
        res = nxt.distance(rho)
        if res < best_res * 0.999:
            best, best_res, stall = rho, res, 0
        else:
            stall += 1
        if best_res <= tol and (stall >= 25 or best_res == 0.0):
            return best
        lazy = {s: 0.5 * (rho.block(s) + nxt.block(s)) for s in rho.support | nxt.support}
        tr = sum(np.trace(b).real for b in lazy.values())
        rho = BlockState({s: b / tr for s, b in lazy.items()})
    if best is not None and best_res <= tol:
        return best
    log.info("power iteration stalled at residual %.3e; trying dense eigen-solve", best_res)
    dense = _dense_fixed_point(m)
    if dense is not None and step(m, dense).distance(dense) <= tol:
        return dense
    return None
