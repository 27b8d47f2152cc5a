"""Channel representations: superoperator, Choi matrix, Kraus set and unitary dilation.

Choi ordering puts the input space first::

    chi = sum_jk |j><k| (x) E(|j><k|),    rho_out = tr_in[chi (rho^T (x) 1)]

so ``tr_out chi = 1`` for trace-preserving maps.  Dilations put the system
first and the environment second: ``U = sum_l A_l (x) |l><0|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import singledispatch

import numpy as np

from .errors import DimensionError, InfeasibleSchemeError, NotCompletelyPositiveError
from .superop import Superoperator, devectorize, vectorize

COMPLETENESS_TOL = 1e-8
CLAMP_REL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChoiMatrix:
    dim: int
    matrix: np.ndarray
    cp_deficit: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (self.dim**2, self.dim**2):
            raise DimensionError(f"Choi matrix for d={self.dim} must be {self.dim**2}x{self.dim**2}, got {m.shape}")
        object.__setattr__(self, "matrix", _frozen(m))

    def output_marginal(self):
        """``tr_out chi``; the identity for trace-preserving maps."""
        return partial_trace(self.matrix, (self.dim, self.dim), keep=(0,))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T)).min())


@dataclass(frozen=True)
class KrausSet:
    operators: tuple
    weights: tuple = ()
    cp_deficit: float = 0.0

    def __post_init__(self):
        ops = tuple(_frozen(a) for a in self.operators)
        if not ops:
            raise ValueError("a Kraus set needs at least one operator")
        d = ops[0].shape[0]
        if any(a.shape != (d, d) for a in ops):
            raise DimensionError("all Kraus operators must be square and of equal size")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def dim(self):
        return self.operators[0].shape[0]

    def completeness_error(self):
        total = sum(a.conj().T @ a for a in self.operators)
        return float(np.abs(total - np.eye(self.dim)).max())


@dataclass(frozen=True)
class DilationUnitary:
    system_dim: int
    env_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        n = self.system_dim * self.env_dim
        m = np.asarray(self.matrix)
        if m.shape != (n, n):
            raise DimensionError(f"dilation must be {n}x{n}, got {m.shape}")
        object.__setattr__(self, "matrix", _frozen(m))

    def kraus_block(self, l):
        """``(1 (x) <l|) U (1 (x) |0>)``, the l-th Kraus operator."""
        U = self.matrix.reshape(self.system_dim, self.env_dim, self.system_dim, self.env_dim)
        return U[:, l, :, 0]

    def unitarity_error(self):
        return float(np.abs(self.matrix.conj().T @ self.matrix - np.eye(self.matrix.shape[0])).max())


def choi_transform(x):
    """Superoperator to Choi matrix and back (the direction follows the input type)."""
    if isinstance(x, Superoperator):
        d = x.dim
        S = x.to_convention("row").matrix
        chi = S.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)
        return ChoiMatrix(d, chi)
    if isinstance(x, ChoiMatrix):
        d = x.dim
        S = x.matrix.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)
        return Superoperator(S)
    raise TypeError(f"choi_transform expects a Superoperator or ChoiMatrix, got {type(x).__name__}")


def kraus_from_choi(chi: ChoiMatrix, rank_tol=None, clamp_threshold=None):
    """Kraus operators ``A_l = sqrt(r_l) pi_l`` from the Choi eigendecomposition.

    Eigenvalues in ``[-clamp_threshold, 0)`` are clamped to zero and the most
    negative one is stored as ``cp_deficit``; anything below raises
    :class:`NotCompletelyPositiveError`.  The default threshold is
    ``1e-8 * tr chi``.
    """
    m = chi.matrix
    if np.abs(m - m.conj().T).max() > 1e-10 * max(1.0, np.abs(m).max()):
        raise ValueError("Choi matrix is not Hermitian")
    d = chi.dim
    trace = float(np.trace(m).real)
    clamp = CLAMP_REL * trace if clamp_threshold is None else clamp_threshold
    rank_tol = 1e-12 * trace if rank_tol is None else rank_tol
    r, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    deficit = min(0.0, float(r.min()))
    if deficit < -clamp:
        raise NotCompletelyPositiveError(
            f"Choi matrix has eigenvalue {deficit:.3g} below -{clamp:.3g}: map is not completely positive",
            deficit=deficit,
        )
    order = np.argsort(r)[::-1]
    ops, weights = [], []
    for k in order:
        if r[k] <= rank_tol:
            continue
        ops.append(np.sqrt(r[k]) * vecs[:, k].reshape(d, d).T)
        weights.append(r[k])
    return KrausSet(tuple(ops), tuple(weights), deficit)


@singledispatch
def apply_channel(repr_, rho):
    raise TypeError(f"cannot apply a {type(repr_).__name__} as a channel")


def _check_input(rho, d):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise DimensionError(f"input of shape {rho.shape} does not match channel dimension {d}")
    return rho


@apply_channel.register
def _(repr_: Superoperator, rho):
    return repr_.apply(_check_input(rho, repr_.dim))


@apply_channel.register
def _(repr_: ChoiMatrix, rho):
    d = repr_.dim
    rho = _check_input(rho, d)
    return partial_trace(repr_.matrix @ np.kron(rho.T, np.eye(d)), (d, d), keep=(1,))


@apply_channel.register
def _(repr_: KrausSet, rho):
    rho = _check_input(rho, repr_.dim)
    return sum(a @ rho @ a.conj().T for a in repr_.operators)


@apply_channel.register
def _(repr_: DilationUnitary, rho):
    d, de = repr_.system_dim, repr_.env_dim
    rho = _check_input(rho, d)
    env0 = np.zeros((de, de))
    env0[0, 0] = 1
    U = repr_.matrix
    big = U @ np.kron(rho, env0) @ U.conj().T
    return partial_trace(big, (d, de), keep=(0,))


def default_env_dim(n_ops):
    """Smallest power of two holding ``n_ops`` environment levels (at least 2)."""
    de = 2
    while de < n_ops:
        de *= 2
    return de


def _complete_columns(fixed, n):
    """Extend orthonormal columns to a basis with Gram-Schmidt over canonical vectors."""
    basis = [fixed[:, k] for k in range(fixed.shape[1])]
    extra = []
    for k in range(n):
        if len(basis) + len(extra) == n:
            break
        v = np.zeros(n, dtype=complex)
        v[k] = 1
        for _ in range(2):
            for b in basis + extra:
                v = v - b * np.vdot(b, v)
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            extra.append(v / norm)
    if len(basis) + len(extra) != n:
        raise ArithmeticError("column completion failed")
    return np.array(extra).T


def dilation_unitary(K: KrausSet, env_dim=None):
    """Unitary ``U`` with ``U (psi (x) |0>) = sum_l A_l psi (x) |l>``.

    Columns with the environment in ``|0>`` hold the stacked Kraus operators;
    the others are completed deterministically.
    """
    err = K.completeness_error()
    if err > COMPLETENESS_TOL:
        raise ValueError(f"Kraus set is incomplete (|sum A^dag A - 1| = {err:.3g})")
    d, n = K.dim, len(K.operators)
    de = default_env_dim(n) if env_dim is None else int(env_dim)
    if de < n:
        raise ValueError(f"env_dim={de} cannot hold {n} Kraus operators")
    N = d * de
    U = np.zeros((N, N), dtype=complex)
    cols0 = [j * de for j in range(d)]
    for l, A in enumerate(K.operators):
        for s in range(d):
            U[s * de + l, cols0] = A[s, :]
    rest = _complete_columns(U[:, cols0], N)
    others = [c for c in range(N) if c % de != 0]
    U[:, others] = rest
    return DilationUnitary(d, de, U)


def partial_trace(rho, dims, keep):
    """Reduced operator on the factors listed in ``keep``."""
    rho = np.asarray(rho)
    dims = tuple(int(x) for x in dims)
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise DimensionError(f"operator shape {rho.shape} inconsistent with factor dims {dims}")
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for k in range(n):
        if k not in keep:
            col[k] = row[k]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    subscripts = "".join(row) + "".join(col) + "->" + out
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(subscripts, t).reshape(dk, dk)


def _pad(K, size):
    ops = list(K.operators)
    weights = list(K.weights) if K.weights else [float(np.trace(a.conj().T @ a).real) for a in ops]
    order = np.argsort(weights, kind="stable")[::-1]
    ops = [ops[k] for k in order]
    weights = [weights[k] for k in order]
    if len(ops) > size:
        raise ValueError(f"scheme handles at most {size} Kraus operators, got {len(ops)}")
    zero = np.zeros((K.dim, K.dim), dtype=complex)
    while len(ops) < size:
        ops.append(zero)
        weights.append(0.0)
    return ops, weights


def pairwise_two_qubit_scheme(K: KrausSet, pairing=((0, 1), (2, 3))):
    """Split a qubit channel into a mixture of two-qubit unitaries.

    Operators are sorted by descending weight, padded to four, and grouped
    by ``pairing``.  A pair is usable only if ``sum A^dag A = q 1``; the
    pair channel is then realized by the dilation of ``{A / sqrt(q)}`` with a
    single environment qubit and applied with probability ``q``.
    """
    ops, _ = _pad(K, 4)
    used = sorted(i for pair in pairing for i in pair)
    if used != [0, 1, 2, 3]:
        raise ValueError(f"pairing {pairing} must use each of the four slots once")
    out = []
    for pair in pairing:
        total = sum(ops[i].conj().T @ ops[i] for i in pair)
        q = float(np.trace(total).real) / K.dim
        dev = float(np.abs(total - q * np.eye(K.dim)).max())
        if dev > COMPLETENESS_TOL:
            raise InfeasibleSchemeError(
                f"pair {pair} is not proportional to a complete set (deviation {dev:.3g})", dev, pair
            )
        if q <= COMPLETENESS_TOL:
            continue
        sub = KrausSet(tuple(ops[i] / np.sqrt(q) for i in pair))
        out.append((q, dilation_unitary(sub, env_dim=2)))
    return out


def random_unitary_scheme(K: KrausSet):
    """Write the channel as ``sum_l p_l W_l rho W_l^dag`` with unitaries ``W_l``."""
    out = []
    for l, A in enumerate(K.operators):
        s = np.linalg.svd(A, compute_uv=False)
        if s.max() <= 1e-12:
            continue
        spread = float(s.max() - s.min())
        if spread > 1e-8:
            raise InfeasibleSchemeError(
                f"Kraus operator {l} is not proportional to a unitary (singular values {np.round(s, 12)})",
                spread,
                l,
            )
        p = float(np.mean(s) ** 2)
        out.append((p, A / np.sqrt(p)))
    return out


def mixture_apply(components, rho):
    """Apply ``sum_m q_m V_m[rho]`` for (probability, unitary or dilation) pairs."""
    total = 0
    for q, V in components:
        if isinstance(V, DilationUnitary):
            total = total + q * apply_channel(V, rho)
        else:
            total = total + q * (V @ rho @ V.conj().T)
    return total


def induced_qubit_channel(U: DilationUnitary, output_qubit):
    """Single-qubit map from the system input to one qubit of a three-qubit dilation.

    Qubit 0 is the system, qubits 1 and 2 the environment (prepared in
    ``|00>``).
    """
    if U.system_dim * U.env_dim != 8 or U.system_dim != 2:
        raise DimensionError("induced_qubit_channel needs a qubit system with a two-qubit environment")
    if output_qubit not in (0, 1, 2):
        raise IndexError(f"output_qubit must be 0, 1 or 2, got {output_qubit}")
    env0 = np.zeros((4, 4))
    env0[0, 0] = 1
    M = U.matrix
    cols = []
    for k in range(4):
        E = devectorize(np.eye(4)[k])
        big = M @ np.kron(E, env0) @ M.conj().T
        cols.append(vectorize(partial_trace(big, (2, 2, 2), keep=(output_qubit,))))
    return Superoperator(np.array(cols).T)


@dataclass(frozen=True)
class ChannelRepr:
    """One channel held in all four forms."""

    superoperator: Superoperator
    choi: ChoiMatrix
    kraus: KrausSet
    dilation: DilationUnitary = field(repr=False)

    @classmethod
    def from_superoperator(cls, S: Superoperator, env_dim=None, clamp_threshold=None):
        """Build every form; qubit channels get a two-qubit environment by default."""
        if env_dim is None and S.dim == 2:
            env_dim = 4
        chi = choi_transform(S)
        K = kraus_from_choi(chi, clamp_threshold=clamp_threshold)
        chi = ChoiMatrix(chi.dim, chi.matrix, K.cp_deficit)
        return cls(S, chi, K, dilation_unitary(K, env_dim))

    def forms(self):
        return (self.superoperator, self.choi, self.kraus, self.dilation)
