"""The nonhomogeneous quantum Markov chain attached to a walk trajectory.

Given a trajectory ``rho^(0), rho^(1), ...`` the transition expectation at
time ``n`` acts on block observables as::

    E^(n)(x (x) y)(j) = [Tr(rho_j x(j)) / Tr(rho_j)] * sum_i B^i_j* y(i) B^i_j,

for ``j`` in the site support of ``rho^(n)`` and zero elsewhere. The chain
state on a cylinder ``a_0 (x) ... (x) a_n (x) I (x) I ...`` is
``Tr(rho^(0) E_0(a))``, where ``E_0`` nests the transition expectations and
closes the nesting with the limit operators ``bbar(n, j)``.

Sums are restricted to site supports, so everything is computed by backward
dynamic programming over site-indexed tables; no path is ever enumerated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .evolution import BlockState, Trajectory, step
from .exceptions import IndexOutOfRange
from .linalg import DEFAULT_TOL, dagger, opnorm, psd_sqrt

DEFAULT_HORIZON = 20


@dataclass(frozen=True)
class BlockObservable:
    """``sum_i a(i) (x) |i><i|`` with finitely many listed blocks.

    Unlisted sites carry the identity when ``identity_tail`` is set and zero
    otherwise.
    """

    blocks: Mapping = field(default_factory=dict)
    identity_tail: bool = False

    def __post_init__(self):
        blocks = {int(k): np.asarray(v, dtype=complex).reshape(np.shape(v) or (1, 1))
                  for k, v in self.blocks.items()}
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def identity(cls) -> "BlockObservable":
        return cls({}, identity_tail=True)

    @classmethod
    def at(cls, site: int, x) -> "BlockObservable":
        """``x`` at one site, zero everywhere else."""
        return cls({site: x}, identity_tail=False)

    def block(self, i: int, hdim: int) -> np.ndarray | None:
        """The block at ``i``; ``None`` stands for the zero block."""
        b = self.blocks.get(i)
        if b is not None:
            return b
        return np.eye(hdim, dtype=complex) if self.identity_tail else None


@dataclass(frozen=True)
class CylinderObservable:
    """``a_0 (x) a_1 (x) ... (x) a_n (x) I (x) I ...``."""

    factors: tuple

    def __post_init__(self):
        if len(self.factors) == 0:
            raise ValueError("a cylinder needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def n(self) -> int:
        """Index of the last factor."""
        return len(self.factors) - 1

    @classmethod
    def identity(cls, length: int = 1) -> "CylinderObservable":
        return cls(tuple(BlockObservable.identity() for _ in range(length)))

    @classmethod
    def single(cls, n: int, x: BlockObservable) -> "CylinderObservable":
        """``x`` at position ``n`` and the identity before it."""
        return cls(tuple(BlockObservable.identity() for _ in range(n)) + (x,))


@dataclass(frozen=True)
class BbarFamily:
    """Limit operators ``bbar(n, j)`` for ``j`` in the support of ``rho^(n)``."""

    n: int
    values: dict
    horizon_used: int
    converged: bool
    delta: float


def _check_index(traj: Trajectory, n: int, horizon: int = 0) -> None:
    if n < 0 or n + horizon > traj.n_steps:
        raise IndexOutOfRange(
            f"need n + horizon <= {traj.n_steps} (trajectory steps), got n={n}, horizon={horizon}")


def _ratio(traj: Trajectory, n: int, j: int, x: BlockObservable) -> complex:
    xb = x.block(j, traj.model.hdim)
    if xb is None:
        return 0.0
    return traj.ratio(n, j, xb)


def transition_expectation(traj: Trajectory, n: int, x: BlockObservable,
                           y: BlockObservable) -> BlockObservable:
    """``E^(n)(x (x) y)`` as a block observable supported on ``Lambda(rho^(n))``."""
    _check_index(traj, n)
    m = traj.model
    out = {}
    for j in traj.supports[n]:
        r = _ratio(traj, n, j, x)
        acc = np.zeros((m.hdim, m.hdim), dtype=complex)
        for i, b in m.outgoing(j):
            yb = y.block(i, m.hdim)
            if yb is not None:
                acc += dagger(b) @ yb @ b
        out[j] = r * acc
    return BlockObservable(out, identity_tail=False)


def kraus_dilation(traj: Trajectory, n: int) -> dict:
    """``(i, j) -> A^(n)_ij = (rho_j)^{1/2} / Tr(rho_j)^{1/2}`` on the supported sites.

    ``A`` is the ``H`` part of the operator placed at block position
    ``(i, j)``; it vanishes whenever ``rho^(n)_j`` does.
    """
    _check_index(traj, n)
    m = traj.model
    out = {}
    for j in traj.supports[n]:
        rho = traj.states[n].blocks[j]
        a = psd_sqrt(rho) / np.sqrt(np.trace(rho).real)
        for i, _ in m.outgoing(j):
            out[(i, j)] = a
    return out


def transition_mass(traj: Trajectory, n: int) -> BlockObservable:
    """``Tr_2(sum_ij K_ij K_ij*)`` assembled from the Kraus dilation.

    Each term contributes ``Tr(A_ij A_ij*) B^i_j* B^i_j`` at site ``j``; the
    result is bounded by the identity (sub-Markovian) and equals it on the
    site support of ``rho^(n)``.
    """
    m = traj.model
    out = {}
    for (i, j), a in kraus_dilation(traj, n).items():
        b = m.op(j, i)
        w = np.trace(a @ dagger(a)).real
        out[j] = out.get(j, 0) + w * (dagger(b) @ b)
    return BlockObservable(out, identity_tail=False)


def _bbar_pass(traj: Trajectory, n: int, depth: int) -> dict:
    m = traj.model
    eye = np.eye(m.hdim, dtype=complex)
    cur = {i: eye for i in traj.supports[depth]}
    for k in range(depth - 1, n - 1, -1):
        nxt = {}
        for j in traj.supports[k]:
            acc = np.zeros((m.hdim, m.hdim), dtype=complex)
            for i, b in m.outgoing(j):
                c = cur.get(i)
                if c is not None:
                    acc += dagger(b) @ c @ b
            nxt[j] = acc
        cur = nxt
    return cur


def bbar(traj: Trajectory, n: int, horizon: int = DEFAULT_HORIZON,
         tol: float = DEFAULT_TOL) -> BbarFamily:
    """Limit operators at time ``n`` from a backward recursion ``horizon`` steps deep.

    The recursion is seeded with the identity on ``Lambda(rho^(n + horizon))``
    and applies ``b(k, j) = sum_{i in Lambda(rho^(k+1))} B^i_j* b(k+1, i) B^i_j``.
    The iterates decrease with depth; ``converged`` reports whether
    extending the horizon by its last step moved the result by at most
    ``tol`` in operator norm. No rate is known, so non-convergence is
    reported rather than hidden.

    Raises
    ------
    IndexOutOfRange
        If ``n + horizon`` exceeds the trajectory length.
    """
    _check_index(traj, n, horizon)
    key = ("bbar", n, horizon, tol)
    hit = traj._cache.get(key)
    if hit is not None:
        return hit
    values = _bbar_pass(traj, n, n + horizon)
    if horizon >= 1:
        shorter = _bbar_pass(traj, n, n + horizon - 1)
        delta = max((opnorm(values[j] - shorter[j]) for j in values), default=0.0)
        converged = delta <= tol
    else:
        delta, converged = np.inf, False
    fam = BbarFamily(n=n, values=values, horizon_used=horizon, converged=converged,
                     delta=float(delta))
    traj._cache[key] = fam
    return fam


def conditional_expectation_E0(traj: Trajectory, a: CylinderObservable,
                               horizon: int = DEFAULT_HORIZON) -> BlockObservable:
    """``E_0(a)`` for a cylinder ``a_0 (x) ... (x) a_n``.

    Equal to the sum over supported paths ``i_0 ... i_n`` of
    ``prod_k ratio_k(a_k, i_k) * B_pi* bbar(n, i_n) B_pi`` placed at ``i_0``,
    computed backward in time in ``O(n)`` site sweeps.
    """
    n = a.n
    _check_index(traj, n, horizon)
    m = traj.model
    fam = bbar(traj, n, horizon)
    g = {}
    for i, bb in fam.values.items():
        r = _ratio(traj, n, i, a.factors[n])
        if r != 0:
            g[i] = r * bb
    for k in range(n - 1, -1, -1):
        nxt = {}
        for j in traj.supports[k]:
            r = _ratio(traj, k, j, a.factors[k])
            if r == 0:
                continue
            acc = np.zeros((m.hdim, m.hdim), dtype=complex)
            for i, b in m.outgoing(j):
                c = g.get(i)
                if c is not None:
                    acc += dagger(b) @ c @ b
            nxt[j] = r * acc
        g = nxt
    return BlockObservable(g, identity_tail=False)


def qmc_evaluate(traj: Trajectory, a: CylinderObservable,
                 horizon: int = DEFAULT_HORIZON) -> complex:
    """Chain state ``Tr(rho^(0) E_0(a))``."""
    e0 = conditional_expectation_E0(traj, a, horizon)
    rho0 = traj.states[0]
    return complex(sum(np.trace(rho0.blocks[i] @ b) for i, b in e0.blocks.items()
                       if i in rho0.blocks))


@dataclass
class MarkovPairReport:
    total_mass: float
    total_mass_residual: float
    marginal_residuals: dict
    tol: float
    bbar_converged: bool

    @property
    def max_marginal_residual(self) -> float:
        return max(self.marginal_residuals.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return (self.total_mass_residual <= self.tol
                and self.max_marginal_residual <= self.tol)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "total_mass": self.total_mass,
            "total_mass_residual": self.total_mass_residual,
            "max_marginal_residual": self.max_marginal_residual,
            "marginal_residuals": {str(k): v for k, v in self.marginal_residuals.items()},
            "bbar_converged": self.bbar_converged,
            "tol": self.tol,
        }


def _matrix_units(d: int):
    for a in range(d):
        for b in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[a, b] = 1.0
            yield (a, b), e


def verify_markov_pair(traj: Trajectory, depth: int, horizon: int = DEFAULT_HORIZON,
                       tol: float = 1e-9) -> MarkovPairReport:
    """Check total mass 1 and marginal recovery up to ``depth``.

    For each ``n <= depth`` and each matrix unit ``x`` placed at a site
    visited up to ``depth``, the chain value of the single-factor cylinder
    at ``n`` is compared with ``Tr(rho^(n) x)``.
    """
    _check_index(traj, depth, horizon)
    d = traj.model.hdim
    mass = qmc_evaluate(traj, CylinderObservable.identity(depth + 1), horizon)
    sites = sorted(set().union(*traj.supports[:depth + 1]))
    residuals = {}
    for n in range(depth + 1):
        worst = 0.0
        for s in sites:
            rho = traj.states[n].block(s)
            for (a, b), e in _matrix_units(d):
                val = qmc_evaluate(traj, CylinderObservable.single(n, BlockObservable.at(s, e)),
                                   horizon)
                worst = max(worst, abs(val - rho[b, a]))
        residuals[n] = float(worst)
    conv = all(bbar(traj, n, horizon).converged for n in range(depth + 1))
    return MarkovPairReport(total_mass=float(mass.real),
                            total_mass_residual=float(abs(mass - 1.0)),
                            marginal_residuals=residuals, tol=tol, bbar_converged=conv)


def is_invariant_state(m, omega: BlockState, tol: float = DEFAULT_TOL) -> bool:
    """Invariance of ``omega`` for the homogeneous chain seeded at ``omega``.

    Two checks must both hold: ``||M(omega) - omega|| <= tol`` and
    ``Tr(omega x) = Tr(omega E^(0)(I (x) x))`` for every matrix unit ``x``
    at a site reachable from the support of ``omega``.
    """
    moved = step(m, omega)
    map_ok = moved.distance(omega) <= tol
    traj = Trajectory(model=m, states=(omega,))
    sites = set(omega.support)
    for j in omega.support:
        sites.update(i for i, _ in m.outgoing(j))
    ident = BlockObservable.identity()
    functional_ok = True
    for s in sorted(sites):
        lhs_block = omega.block(s)
        for (a, b), e in _matrix_units(m.hdim):
            ex = transition_expectation(traj, 0, ident, BlockObservable.at(s, e))
            rhs = sum(np.trace(omega.blocks[j] @ blk) for j, blk in ex.blocks.items())
            if abs(lhs_block[b, a] - rhs) > tol:
                functional_ok = False
                break
        if not functional_ok:
            break
    return bool(map_ok and functional_ok)
