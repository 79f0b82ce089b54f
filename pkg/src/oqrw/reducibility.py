"""Reducibility and irreducibility of walks and their quantum Markov chains.

Reducing projections are block diagonal, ``p = sum_j p(j) (x) |j><j|``,
applied from time ``n0`` onward. For the chain built from a trajectory, such a
tail projection is reducing exactly when every block ``rho^(n)_j`` with
``n >= n0`` lives inside the range of ``p(j)``. The criteria here are:

* :func:`support_witness` builds the smallest candidate from accumulated
  supports and :func:`verify_reducing` checks it two independent ways.
* :func:`common_range_condition`: a common range ``h`` of all operators makes
  ``h (x) I`` reducing from time 1 on.
* :func:`faithfulness_certificate`: faithful blocks everywhere at all times
  rule out any reducing projection.
* :func:`cp_irreducible` decides irreducibility of the walk map itself through
  invariant subspace families ``B^i_j V_j <= V_i``.
* :func:`classical_classes` gives communicating classes of a stochastic matrix.

:func:`analyze` runs all of them and refuses to hide disagreements.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .evolution import BlockState, Trajectory, superoperator, trajectory
from .exceptions import CriterionDisagreement, IndexOutOfRange, NotNormalized
from .linalg import (ABS_CUTOFF, DEFAULT_TOL, TINY_SPECTRUM, as_matrix, dagger, hermitian_eigh,
                     opnorm, rank, support_basis, support_projection)
from .model import OqrwModel, check_stochastic, validate_model
from .qmc import DEFAULT_HORIZON, BlockObservable, CylinderObservable, qmc_evaluate

log = logging.getLogger(__name__)

CP_SEED = 0x5EED
RANDOM_SEEDS_PER_SITE = 3
CP_LATTICE_WINDOW = 4
VERIFY_TOL = 1e-9

REDUCIBLE = "Reducible"
IRREDUCIBLE = "Irreducible"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ProjectionFamily:
    """Candidate reducing projection ``p_[n0`` with blocks ``p(j)``.

    Sites missing from ``p`` carry ``default``; ``None`` means the identity.
    ``certified`` is set when the family is known to hold for every time
    ``n >= n0``, not only on the examined horizon.
    """

    n0: int
    p: Mapping = field(default_factory=dict)
    default: np.ndarray | None = None
    certified: bool = False

    def block(self, j: int, hdim: int) -> np.ndarray:
        b = self.p.get(j)
        if b is not None:
            return b
        if self.default is None:
            return np.eye(hdim, dtype=complex)
        return self.default

    def is_trivial(self, hdim: int, tol: float = DEFAULT_TOL) -> bool:
        """True when every block is the identity, or every block is zero."""
        eye = np.eye(hdim)
        blocks = list(self.p.values())
        if self.default is not None:
            blocks.append(self.default)
        if all(opnorm(b - eye) <= tol for b in blocks):
            return True
        tail_zero = self.default is not None and opnorm(self.default) <= tol
        return tail_zero and all(opnorm(b) <= tol for b in self.p.values())


@dataclass
class Verdict:
    status: str
    depth_used: int
    witness: ProjectionFamily | None = None
    certificate: dict | None = None
    reason: str | None = None
    tol: float = DEFAULT_TOL
    criteria: dict = field(default_factory=dict)

    @property
    def is_reducible(self) -> bool:
        return self.status == REDUCIBLE

    @property
    def is_irreducible(self) -> bool:
        return self.status == IRREDUCIBLE


# -- witness from accumulated supports ---------------------------------------

def _significant(rho: np.ndarray, tol: float) -> np.ndarray:
    """Block restricted to eigenvalues above ``tol * lambda_max`` and the noise floor.

    Trajectory blocks carry absolute rounding noise of order ``ABS_CUTOFF``
    (states have unit mass), so a decaying block's noise would pass any
    purely relative cut once its trace gets small.
    """
    w, v = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    keep = w > max(tol * (float(w[-1]) if w.size else 0.0), ABS_CUTOFF)
    return (v[:, keep] * w[keep]) @ dagger(v[:, keep])


def _tail_support(traj: Trajectory, n0: int, tol: float):
    """Supports of the accumulated normalized blocks over ``[n0, N]`` and whether they stopped growing.

    The accumulated family ``S_k`` over ``[n0, n0 + k]`` obeys
    ``S_{k+1} = S_0 + B(S_k)``, so once the last state adds nothing the
    family is fixed for all later times.
    """
    N = traj.n_steps
    if n0 < 0 or n0 > N:
        raise IndexOutOfRange(f"n0={n0} outside trajectory of {N} steps")
    acc: dict = {}

    def add(n):
        for j, rho in traj.states[n].blocks.items():
            w = _significant(rho, tol) / np.trace(rho).real
            acc[j] = acc[j] + w if j in acc else w

    for n in range(n0, N):
        add(n)
    before = {j: rank(a, tol) for j, a in acc.items()}
    add(N)
    proj = {j: support_projection(a, tol) for j, a in acc.items()}
    after = {j: int(round(np.trace(p).real)) for j, p in proj.items()}
    stable = N > n0 and before == after
    return proj, stable


def _outside(m: OqrwModel):
    """Block for sites beyond the model: zero past a lattice window, irrelevant otherwise."""
    if m.is_lattice:
        return np.zeros((m.hdim, m.hdim), dtype=complex)
    return None


def _witness_from_tail(traj: Trajectory, n0: int, proj: dict, stable: bool,
                      settled: int | None = None) -> ProjectionFamily:
    d = traj.model.hdim
    if stable:
        zero = np.zeros((d, d), dtype=complex)
        p = {j: proj.get(j, zero) for j in traj.model.sites}
        p.update(proj)
        return ProjectionFamily(n0=n0, p=p, default=_outside(traj.model), certified=True)
    if settled is not None:
        # sites first reached after ``settled`` have seen too few steps to judge
        seen = set().union(*traj.supports[:settled + 1])
        proj = {j: q for j, q in proj.items() if j in seen}
    return ProjectionFamily(n0=n0, p=dict(proj), default=None, certified=False)


def support_witness(traj: Trajectory, n0: int, tol: float = DEFAULT_TOL,
                    settled: int | None = None) -> ProjectionFamily | None:
    """Minimal reducing candidate from time ``n0`` on, or ``None`` if it is trivial.

    ``p(j)`` is the support of ``sum_{n >= n0} rho^(n)_j`` over the available
    trajectory. When that accumulated family has stopped growing it is exact
    for all later times (``certified``) and never visited sites get
    ``p(j) = 0``; otherwise unvisited sites keep the identity. ``None`` at
    finite depth is evidence of irreducibility, not proof.

    When the family is not certified and ``settled`` is given, only sites
    visited by time ``settled`` keep their accumulated support; sites near
    the growing edge of the support would otherwise look rank deficient
    merely because the trajectory ends.
    """
    proj, stable = _tail_support(traj, n0, tol)
    fam = _witness_from_tail(traj, n0, proj, stable, settled)
    if fam.is_trivial(traj.model.hdim):
        return None
    return fam


def _family_observable(fam: ProjectionFamily, sites, hdim: int) -> BlockObservable:
    return BlockObservable({s: fam.block(s, hdim) for s in sites}, identity_tail=False)


def reducing_residuals(traj: Trajectory, fam: ProjectionFamily, depth: int,
                       horizon: int = DEFAULT_HORIZON) -> tuple:
    """``(support residual, mass defect)`` of a candidate on ``[n0, depth]``.

    The support residual is ``max ||(I - p(j)) rho^(n)_j (I - p(j))||``, the
    weight left outside the family; for positive blocks it vanishes exactly
    when ``rho p = rho``, but unlike ``||rho p - rho||`` it is linear in the
    discarded weight rather than its square root. The mass
    defect is ``|rho(p_[n0, depth]) - 1|``, the chain value of the truncated
    projector cylinder, which vanishes exactly when ``E_0(I - p_[n0, depth])``
    has zero expectation.
    """
    if depth < fam.n0:
        raise IndexOutOfRange("depth must be at least n0")
    d = traj.model.hdim
    support_res = 0.0
    for n in range(fam.n0, depth + 1):
        for j, rho in traj.states[n].blocks.items():
            q = np.eye(d) - fam.block(j, d)
            support_res = max(support_res, opnorm(q @ rho @ q))
    factors = []
    for k in range(depth + 1):
        if k < fam.n0:
            factors.append(BlockObservable.identity())
        else:
            factors.append(_family_observable(fam, traj.supports[k], d))
    mass = qmc_evaluate(traj, CylinderObservable(tuple(factors)), horizon)
    return float(support_res), float(abs(mass - 1.0))


def verify_reducing(traj: Trajectory, fam: ProjectionFamily, depth: int,
                    horizon: int = DEFAULT_HORIZON, tol: float = VERIFY_TOL) -> bool:
    """Both the support condition and the chain-mass condition hold within ``tol``.

    A disagreement between the two checks is logged and counts as failure.
    """
    support_res, mass_defect = reducing_residuals(traj, fam, depth, horizon)
    ok_support, ok_mass = support_res <= tol, mass_defect <= tol
    if ok_support != ok_mass:
        log.warning("reducing checks disagree: support residual %.3e, mass defect %.3e",
                    support_res, mass_defect)
    return ok_support and ok_mass


# -- sufficient conditions --------------------------------------------------

def common_range_condition(m: OqrwModel, tol: float = DEFAULT_TOL) -> np.ndarray | None:
    """Projection onto the joint range of all operators, if it is proper.

    Every path operator then satisfies ``h B_pi = B_pi`` because its leftmost
    factor already does.
    """
    ops = m.all_operators()
    gram = sum(b @ dagger(b) for b in ops)
    h = support_projection(gram, tol)
    if rank(gram, tol) == m.hdim:
        return None
    return h


def faithfulness_certificate(traj: Trajectory, tol: float = DEFAULT_TOL) -> bool:
    """Every block of every state is faithful and every model site is occupied."""
    sites = set(traj.model.sites)
    for n, s in enumerate(traj.states):
        if set(s.support) != sites:
            return False
        for rho in s.blocks.values():
            if rank(_significant(rho, tol), tol) < traj.model.hdim:
                return False
    return True


def nn_condition_check(B, C, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``B* x B = 0`` and ``C* x C = 0`` force ``x = 0`` for ``x >= 0``.

    For positive ``x`` the equation ``B* x B = 0`` says that ``range(B)`` lies
    in ``ker(x)``; so a nonzero solution exists exactly when the ranges of
    ``B`` and ``C`` together fail to span H.

    Raises
    ------
    NotNormalized
        If ``B* B + C* C`` differs from the identity by more than ``tol``.
    """
    B, C = as_matrix(B), as_matrix(C)
    d = B.shape[0]
    if opnorm(dagger(B) @ B + dagger(C) @ C - np.eye(d)) > tol:
        raise NotNormalized("B*B + C*C != I")
    return rank(B @ dagger(B) + C @ dagger(C), tol) == d


# -- irreducibility of the walk map ----------------------------------------

def _basis_margin(gram: np.ndarray, tol: float):
    """Support basis and whether an eigenvalue sits near the rank cutoff."""
    evals, evecs = hermitian_eigh(gram)
    lam = float(np.max(evals)) if evals.size else 0.0
    if lam < TINY_SPECTRUM:
        return evecs[:, :0], False
    rel = evals / lam
    keep = rel > tol
    ambiguous = bool(np.any((rel > tol * 1e-2) & (rel < tol * 1e2)))
    return evecs[:, keep], ambiguous


def _closure(m: OqrwModel, site: int, psi: np.ndarray, tol: float, max_rounds: int):
    """Smallest invariant subspace family containing ``psi`` at ``site``.

    Returns ``(bases, ranks_history, ambiguous, stabilized)``.
    """
    d = m.hdim
    seed = psi.reshape(d, 1) / np.linalg.norm(psi)
    bases = {site: seed}
    history = [{site: 1}]
    ambiguous = False
    full = m.total_dim
    for _ in range(max_rounds):
        cols: dict = {s: [q] for s, q in bases.items()}
        for j, q in bases.items():
            for i, b in m.outgoing(j):
                cols.setdefault(i, []).append(b @ q)
        new = {}
        for i, parts in cols.items():
            stack = np.hstack(parts)
            basis, amb = _basis_margin(stack @ dagger(stack), tol)
            ambiguous |= amb
            if basis.shape[1]:
                new[i] = basis
        ranks = {i: q.shape[1] for i, q in new.items()}
        history.append(ranks)
        bases = new
        if ranks == history[-2] or sum(ranks.values()) == full:
            return bases, history, ambiguous, True
    return bases, history, ambiguous, False


def _family_from_bases(m: OqrwModel, bases: dict) -> ProjectionFamily:
    d = m.hdim
    zero = np.zeros((d, d), dtype=complex)
    p = {s: (bases[s] @ dagger(bases[s]) if s in bases else zero) for s in m.sites}
    return ProjectionFamily(n0=0, p=p, default=_outside(m), certified=True)


def _family_from_blocks(m: OqrwModel, blocks: dict, tol: float, kernel: bool = False):
    """Support (or kernel) family of a positive block operator, cutoff relative to its global scale."""
    d = m.hdim
    lam = max(float(np.max(np.linalg.eigvalsh(b))) for b in blocks.values())
    p = {}
    min_rel = np.inf
    for s in m.sites:
        w, u = np.linalg.eigh(blocks[s])
        rel = w / lam
        min_rel = min(min_rel, float(np.min(rel)))
        keep = rel > tol
        if kernel:
            keep = ~keep
        v = u[:, keep]
        p[s] = v @ dagger(v)
    return ProjectionFamily(n0=0, p=p, default=_outside(m), certified=True), min_rel


def _hermitian_blocks(m: OqrwModel, v: np.ndarray) -> dict:
    d = m.hdim
    blocks = {s: v[k * d * d:(k + 1) * d * d].reshape(d, d) for k, s in enumerate(m.sites)}
    total = sum(np.trace(b) for b in blocks.values())
    if abs(total) < 1e-12:
        # fix the phase from the largest entry instead of the trace
        big = max(blocks.values(), key=lambda b: np.max(np.abs(b)))
        k = np.unravel_index(np.argmax(np.abs(big)), big.shape)
        total = big[k] if k[0] == k[1] else abs(big[k])
    blocks = {s: b / total for s, b in blocks.items()}
    return {s: 0.5 * (b + dagger(b)) for s, b in blocks.items()}


def _spectral_check(m: OqrwModel, tol: float):
    """Perron analysis of the walk map on the block-diagonal space.

    A positive map is irreducible iff its spectral radius is a simple
    eigenvalue whose right and left positive eigenvectors are both faithful.
    The support of the right eigenvector and the kernel of the left one are
    invariant families, so a non-faithful one is itself a witness.
    Returns ``(status, witness_or_None, info)``.
    """
    L = superoperator(m)
    evals, right = np.linalg.eig(L)
    r = float(np.max(np.abs(evals)))
    k = int(np.argmin(np.abs(evals - r)))
    gap_tol = 1e-8 * max(1.0, r)
    mult = int(np.sum(np.abs(evals - r) < gap_tol))
    info = {"perron_root": r, "multiplicity": mult}
    lo, hi = max(tol, 1e-10), 1e-6
    if mult > 1:
        report = validate_model(m, tol)
        if not report.valid or report.boundary:
            return INCONCLUSIVE, None, {**info, "reason": "degenerate Perron root of a leaky map"}
        y = _traceless_fixed_point(m, L, gap_tol)
        if y is None:
            return INCONCLUSIVE, None, {**info, "reason": "could not isolate a proper fixed point"}
        pos = {}
        for s, b in y.items():
            w, u = np.linalg.eigh(b)
            pos[s] = (u * np.clip(w, 0.0, None)) @ dagger(u)
        fam, _ = _family_from_blocks(m, pos, lo)
        return REDUCIBLE, fam, {**info, "route": "degenerate fixed points"}
    x = _hermitian_blocks(m, right[:, k])
    fam_r, min_r = _family_from_blocks(m, x, lo)
    evals_l, left = np.linalg.eig(dagger(L))
    kl = int(np.argmin(np.abs(evals_l - r)))
    y = _hermitian_blocks(m, left[:, kl])
    fam_l, min_l = _family_from_blocks(m, y, lo, kernel=True)
    info.update(min_rel_right=min_r, min_rel_left=min_l)
    if min_r <= lo:
        return REDUCIBLE, fam_r, {**info, "route": "support of right Perron vector"}
    if min_l <= lo:
        return REDUCIBLE, fam_l, {**info, "route": "kernel of left Perron vector"}
    if min_r < hi or min_l < hi:
        return INCONCLUSIVE, None, {**info, "reason": "Perron vector near the rank threshold"}
    return IRREDUCIBLE, None, info


def _traceless_fixed_point(m: OqrwModel, L: np.ndarray, gap_tol: float):
    """A unit-norm traceless Hermitian fixed point of a trace-preserving map, or ``None``.

    Such a point is nonzero with trace zero, hence indefinite. The Hermitian
    fixed points are orthonormalized as real vectors first, so no step
    divides by a small trace.
    """
    d, N = m.hdim, L.shape[0]
    _, sv, vh = np.linalg.svd(L - np.eye(N))
    null = vh[sv <= gap_tol].conj().T
    cols = []
    for v in null.T:
        for b in (v, -1j * v):
            b = b.reshape(-1, d, d)
            h = 0.5 * (b + np.conj(np.transpose(b, (0, 2, 1))))
            cols.append(np.concatenate([h.real.ravel(), h.imag.ravel()]))
    if not cols:
        return None
    u, sx, _ = np.linalg.svd(np.array(cols).T, full_matrices=False)
    basis = u[:, sx > 1e-8 * sx[0]]
    if basis.shape[1] < 2:
        return None
    blocks = (basis[:N] + 1j * basis[N:]).T.reshape(basis.shape[1], -1, d, d)
    traces = np.einsum("kspp->k", blocks).real
    # any unit coefficient vector orthogonal to the traces gives a traceless point
    _, _, wt = np.linalg.svd(traces[None, :])
    y = np.tensordot(wt[-1], blocks, axes=1)
    return {s: 0.5 * (y[k] + dagger(y[k])) for k, s in enumerate(m.sites)}


def cp_irreducible(m: OqrwModel, tol: float = DEFAULT_TOL, max_rounds: int | None = None,
                   seed: int = CP_SEED) -> Verdict:
    """Irreducibility of the walk map through invariant subspace families.

    Each seed vector ``psi`` at site ``j`` (all standard basis vectors plus
    three random unit vectors per site) is closed under ``V_i += B^i_j V_j``
    until the ranks stop changing. A proper closure is a reducing family;
    the one of smallest total rank is reported.
    Seeds cannot see invariant families in general position, so when every
    closure is full the Perron eigenvectors of the map are examined as well;
    see ``_spectral_check``. Lattice models are analysed on their current
    window, treated as the whole graph.
    """
    if max_rounds is None:
        max_rounds = m.total_dim + 1
    rng = np.random.default_rng(seed)
    d = m.hdim
    ambiguous = False
    n_seeds = 0
    best = None
    for s in m.sites:
        vectors = [np.eye(d, dtype=complex)[:, k] for k in range(d)]
        for _ in range(RANDOM_SEEDS_PER_SITE):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            vectors.append(v / np.linalg.norm(v))
        for psi in vectors:
            n_seeds += 1
            bases, history, amb, stable = _closure(m, s, psi, tol, max_rounds)
            ambiguous |= amb
            if not stable:
                return Verdict(INCONCLUSIVE, depth_used=max_rounds, tol=tol,
                               reason=f"closure of seed at site {s} did not stabilize")
            total = sum(q.shape[1] for q in bases.values())
            if total < m.total_dim and (best is None or total < best[0]):
                best = (total, s, psi, bases, history, amb)
    if best is not None:
        _, s, psi, bases, history, amb = best
        if amb:
            return Verdict(INCONCLUSIVE, depth_used=len(history) - 1, tol=tol,
                           reason="rank decision within tolerance of the threshold")
        return Verdict(REDUCIBLE, depth_used=len(history) - 1, tol=tol,
                       witness=_family_from_bases(m, bases),
                       certificate={"seed_site": s, "seed": psi.tolist(), "ranks": history[-1]})
    status, fam, info = _spectral_check(m, tol)
    info["seeds"] = n_seeds
    if status == IRREDUCIBLE and ambiguous:
        return Verdict(INCONCLUSIVE, depth_used=max_rounds, tol=tol, certificate=info,
                       reason="rank decision within tolerance of the threshold")
    if status == INCONCLUSIVE:
        return Verdict(INCONCLUSIVE, depth_used=max_rounds, tol=tol, certificate=info,
                       reason=info.get("reason"))
    return Verdict(status, depth_used=max_rounds, tol=tol, witness=fam, certificate=info)


# -- classical chains -------------------------------------------------------

@dataclass(frozen=True)
class ClassStructure:
    classes: list
    closed: list
    irreducible: bool


def classical_classes(P, tol: float = DEFAULT_TOL) -> ClassStructure:
    """Communicating classes of a stochastic matrix via strongly connected components."""
    P = check_stochastic(P, tol)
    adj = (P > tol).astype(int)
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    groups = [tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(n_comp)]
    groups.sort(key=lambda g: g[0])
    closed = []
    for g in groups:
        inside = np.zeros(P.shape[0], dtype=bool)
        inside[list(g)] = True
        closed.append(not bool(np.any(adj[inside][:, ~inside])))
    return ClassStructure(classes=groups, closed=closed, irreducible=len(groups) == 1)


# -- orchestration ----------------------------------------------------------

def periodic_proxy(m: OqrwModel, half_width: int = CP_LATTICE_WINDOW) -> OqrwModel:
    """The lattice rule wrapped on a ring of ``2 * half_width + 1`` sites.

    A truncated window loses the jumps that leave it, which creates
    spurious invariant families at the edges; a ring keeps every jump.
    """
    n = max(2 * half_width + 1, 2 * m.reach + 1, 3)
    ops = {}
    for j in range(n):
        for k, b in m.lattice_rule.items():
            if np.any(b != 0):
                ops[(j, (j + k) % n)] = b
    return OqrwModel(hdim=m.hdim, sites=tuple(range(n)), ops=ops, kind="explicit")


def analyze(m: OqrwModel, rho0: BlockState, depth: int | None = None,
            tol: float = DEFAULT_TOL, horizon: int = DEFAULT_HORIZON, n0: int | None = None,
            seed: int = CP_SEED, cp_window: int = CP_LATTICE_WINDOW) -> Verdict:
    """Decide reducibility of the chain attached to ``(m, rho0)``.

    Finite models are simulated at least ``2 * |sites| * hdim + 1`` steps, which
    is long enough for accumulated supports to settle, so the support
    witness becomes exact. Lattice rules get the window their support needs
    for the run; the walk-map criterion runs on :func:`periodic_proxy`, the
    rule wrapped onto a ring of ``2 * cp_window + 1`` sites.

    Raises
    ------
    CriterionDisagreement
        If criteria that cannot disagree in exact arithmetic do.
    """
    finite = not m.is_lattice
    dmax = m.total_dim
    if finite:
        depth = 2 * dmax + 1 if depth is None else max(depth, 2 * dmax + 1)
    elif depth is None:
        depth = 20
    traj = trajectory(m, rho0, depth + horizon, tol)
    model = traj.model
    hdim = model.hdim
    criteria: dict = {}

    h = common_range_condition(model, tol)
    h_family = h_ok = None
    if h is not None and depth >= 1:
        h_family = ProjectionFamily(n0=1, p={}, default=h, certified=True)
        h_ok = verify_reducing(traj, h_family, depth, horizon)
    criteria["common_range"] = {"applies": h is not None, "h": h, "verified": bool(h_ok)}

    if n0 is None:
        n0 = min(dmax, depth) if finite else min(1, depth)
    proj, stable = _tail_support(traj, n0, tol)
    fam = _witness_from_tail(traj, n0, proj, stable, settled=depth)
    w = None if fam.is_trivial(hdim) else fam
    w_ok = w is not None and verify_reducing(traj, w, depth, horizon)
    tail_irreducible = w is None and stable
    criteria["support_witness"] = {"n0": n0, "found": w is not None, "certified": stable,
                                   "verified": bool(w_ok), "family": w}

    faithful = faithfulness_certificate(traj, tol)
    criteria["faithfulness"] = {"certified": faithful}

    proxy = model.is_lattice
    cp = cp_irreducible(periodic_proxy(model, cp_window) if proxy else model, tol, seed=seed)
    criteria["walk_map"] = {"status": cp.status, "reason": cp.reason,
                            "witness": cp.witness, "periodic_proxy": proxy}
    log.debug("depth %d: common range %s, witness found %s (certified %s, verified %s), "
              "faithful %s, walk map %s", depth, h is not None, w is not None, stable,
              bool(w_ok), faithful, cp.status)

    conflicts = []
    if faithful and (h_ok or w_ok):
        conflicts.append("faithful trajectory but a verified reducing projection exists")
    if cp.is_irreducible and (h is not None or (w_ok and w.certified and not proxy)):
        conflicts.append("walk map irreducible but a certified reducing projection exists")
    if tail_irreducible and h_ok:
        conflicts.append("settled supports are full but a common range projection reduces")
    if conflicts:
        raise CriterionDisagreement("; ".join(conflicts))

    verdict_kw = dict(depth_used=depth, tol=tol, criteria=criteria)
    if h_ok:
        return Verdict(REDUCIBLE, witness=h_family,
                       certificate={"route": "common range of all operators"}, **verdict_kw)
    if w_ok and (w.certified or not cp.is_irreducible):
        return Verdict(REDUCIBLE, witness=w, certificate={"route": "accumulated supports"},
                       **verdict_kw)
    if w_ok:
        criteria["support_witness"]["note"] = ("finite-depth witness discarded: "
                                               "walk map is irreducible")
    if faithful:
        return Verdict(IRREDUCIBLE, certificate={"route": "faithful blocks"}, **verdict_kw)
    if tail_irreducible:
        return Verdict(IRREDUCIBLE, certificate={"route": "settled supports are full"},
                       **verdict_kw)
    if cp.is_irreducible:
        return Verdict(IRREDUCIBLE, certificate={"route": "walk map irreducible"}, **verdict_kw)
    return Verdict(INCONCLUSIVE, reason=f"no criterion decided at depth {depth}", **verdict_kw)
