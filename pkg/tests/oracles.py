"""Independent reference computations.

Everything here works on dense matrices of ``H (x) K`` (``K`` spanned by the
model sites) and follows the Kraus-dilation definitions directly, without
touching the block bookkeeping used by the library.
"""

import itertools

import numpy as np
import scipy.linalg


def _pos(model):
    return {s: k for k, s in enumerate(model.sites)}


def ket_bra(n, a, b):
    e = np.zeros((n, n), dtype=complex)
    e[a, b] = 1.0
    return e


def dense_blocks(model, blocks):
    """``sum_i blocks[i] (x) |i><i|`` as a dense matrix on ``H (x) K``."""
    L, d = model.n_sites, model.hdim
    pos = _pos(model)
    out = np.zeros((d * L, d * L), dtype=complex)
    for s, b in blocks.items():
        out += np.kron(b, ket_bra(L, pos[s], pos[s]))
    return out


def extract_block(model, dense, site):
    L, d = model.n_sites, model.hdim
    p = _pos(model)[site]
    return dense.reshape(d, L, d, L)[:, p, :, p]


def partial_trace_second(m, dim):
    return np.einsum("aibi->ab", m.reshape(dim, dim, dim, dim))


def dense_transition_expectation(model, rho_blocks, x, y):
    """``sum_ij Tr_2(K_ij (y (x) x) K_ij*)`` with ``K_ij = M_ij* (x) A_ij``."""
    L, d = model.n_sites, model.hdim
    pos = _pos(model)
    D = d * L
    yx = np.kron(y, x)
    out = np.zeros((D, D), dtype=complex)
    for (j, i), b in model.ops.items():
        rho = rho_blocks.get(j)
        if rho is None or abs(np.trace(rho)) < 1e-14:
            continue
        m_ij = np.kron(b, ket_bra(L, pos[i], pos[j]))
        a_ij = np.kron(scipy.linalg.sqrtm(rho) / np.sqrt(np.trace(rho).real),
                       ket_bra(L, pos[i], pos[j]))
        k = np.kron(m_ij.conj().T, a_ij)
        out += partial_trace_second(k @ yx @ k.conj().T, D)
    return out


def dense_bbar(model, states, n, horizon):
    """Nested ``E(n)(I (x) E(n+1)(I (x) ... E(n+horizon)(I (x) I)))``."""
    D = model.n_sites * model.hdim
    eye = np.eye(D, dtype=complex)
    b = dense_transition_expectation(model, states[n + horizon].blocks, eye, eye)
    for k in range(n + horizon - 1, n - 1, -1):
        b = dense_transition_expectation(model, states[k].blocks, eye, b)
    return b


def dense_E0(model, states, factors, horizon):
    """Nested ``E(0)(a_0 (x) E(1)(a_1 (x) ... E(n)(a_n (x) bbar(n+1))))`` on dense factors."""
    n = len(factors) - 1
    g = dense_bbar(model, states, n + 1, horizon - 1)
    for k in range(n, -1, -1):
        g = dense_transition_expectation(model, states[k].blocks, factors[k], g)
    return g


def path_E0(model, states, factor_blocks, bbar_blocks):
    """``E_0(a)`` by enumerating every site path ``i_0 ... i_n``.

    ``factor_blocks[k]`` maps sites to the blocks of ``a_k`` (missing = 0);
    ``bbar_blocks`` are the limit operators at time ``n``.
    """
    n = len(factor_blocks) - 1
    d = model.hdim
    out = {}
    for path in itertools.product(model.sites, repeat=n + 1):
        weight = 1.0 + 0j
        ok = True
        for k, s in enumerate(path):
            rho = states[k].blocks.get(s)
            x = factor_blocks[k].get(s)
            if rho is None or x is None:
                ok = False
                break
            weight *= np.trace(rho @ x) / np.trace(rho).real
        if not ok or path[-1] not in bbar_blocks:
            continue
        b_pi = np.eye(d, dtype=complex)
        for j, i in zip(path[:-1], path[1:]):
            op = model.ops.get((j, i))
            if op is None:
                ok = False
                break
            b_pi = op @ b_pi
        if not ok:
            continue
        term = weight * (b_pi.conj().T @ bbar_blocks[path[-1]] @ b_pi)
        out[path[0]] = out.get(path[0], 0) + term
    return out


def reachability(P, tol=1e-10):
    """Boolean transitive closure by repeated squaring."""
    n = P.shape[0]
    r = (P > tol) | np.eye(n, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(n, 2)))) + 1):
        r = r | ((r.astype(int) @ r.astype(int)) > 0)
    return r


def classes_by_reachability(P, tol=1e-10):
    r = reachability(P, tol)
    mutual = r & r.T
    seen, classes = set(), []
    for i in range(P.shape[0]):
        if i in seen:
            continue
        c = tuple(int(j) for j in np.flatnonzero(mutual[i]))
        seen.update(c)
        classes.append(c)
    return classes


def nn_condition_sdp(B, C):
    """Smallest ``||B* X B|| + ||C* X C||`` over density matrices ``X`` (cvxpy)."""
    import cvxpy as cp

    d = B.shape[0]
    X = cp.Variable((d, d), hermitian=True)
    cons = [X >> 0, cp.real(cp.trace(X)) == 1]
    obj = cp.norm(B.conj().T @ X @ B, "fro") + cp.norm(C.conj().T @ X @ C, "fro")
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.SCS, eps=1e-9)
    return float(prob.value)


def dense_fixed_points(model):
    """Basis of the fixed-point space of the walk map (columns, block row-major)."""
    d2 = model.hdim ** 2
    pos = _pos(model)
    N = model.n_sites * d2
    L = np.zeros((N, N), dtype=complex)
    for (j, i), b in model.ops.items():
        for a, c in itertools.product(range(model.hdim), repeat=2):
            e = ket_bra(model.hdim, a, c)
            L[pos[i] * d2:(pos[i] + 1) * d2, pos[j] * d2 + a * model.hdim + c] += \
                (b @ e @ b.conj().T).ravel()
    _, sv, vh = np.linalg.svd(L - np.eye(N))
    return vh[sv <= 1e-9].conj().T
