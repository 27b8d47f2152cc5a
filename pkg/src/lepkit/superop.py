"""Vectorization, superoperator matrices and Lindblad generators.

The default ordering is row-major: ``vec(M) = [M00, M01, M10, M11]`` for a
qubit, so that ``vec(A @ rho @ B) = kron(A, B.T) @ vec(rho)``.  A
column-major ordering (``"col"``) is available for interop; every
:class:`Superoperator` carries its ordering tag and refuses to be combined
with one built under the other ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConventionError, DimensionError, NumericalError

ROW = "row"
COL = "col"
_CONVENTIONS = (ROW, COL)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def _frozen(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


def _check_convention(convention):
    if convention not in _CONVENTIONS:
        raise ConventionError(f"unknown vectorization convention {convention!r}")


def _square(M, name="matrix"):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def vectorize(M, convention=ROW):
    """Flatten a square matrix into a Liouville-space vector."""
    _check_convention(convention)
    M = _square(M)
    return M.reshape(-1) if convention == ROW else M.T.reshape(-1)


def devectorize(v, convention=ROW):
    """Exact inverse of :func:`vectorize`."""
    _check_convention(convention)
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or d * d != v.size:
        raise DimensionError(f"vector of length {v.size} is not a flattened square matrix")
    M = v.reshape(d, d)
    return M if convention == ROW else M.T


def is_density_matrix(rho, tol=POSITIVITY_TOL):
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
        return False
    if abs(np.trace(rho) - 1) > TRACE_TOL:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -tol)


def check_density_matrix(rho):
    """Return ``rho`` as a complex array, raising if it is not a valid state."""
    rho = np.asarray(_square(rho, "density matrix"), dtype=complex)
    if not is_density_matrix(rho):
        raise ValueError("not a density matrix (Hermitian, unit trace, positive semidefinite)")
    return rho


@dataclass(frozen=True)
class Superoperator:
    """Matrix of a linear map on d x d operators, tagged with its vectorization order."""

    matrix: np.ndarray
    convention: str = ROW

    def __post_init__(self):
        _check_convention(self.convention)
        m = _square(self.matrix, "superoperator")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise DimensionError(f"superoperator size {m.shape[0]} is not a square number")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self):
        return int(round(np.sqrt(self.matrix.shape[0])))

    @classmethod
    def identity(cls, d, convention=ROW):
        return cls(np.eye(d * d, dtype=complex), convention)

    def apply(self, rho):
        rho = _square(rho)
        if rho.shape[0] != self.dim:
            raise DimensionError(f"operator of dim {rho.shape[0]} fed to a dim-{self.dim} map")
        return devectorize(self.matrix @ vectorize(rho, self.convention), self.convention)

    def _same_frame(self, other):
        if not isinstance(other, Superoperator):
            return NotImplemented
        if other.convention != self.convention:
            raise ConventionError(
                f"cannot combine {self.convention!r}- and {other.convention!r}-ordered superoperators"
            )
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return other

    def __matmul__(self, other):
        """Composition: ``(self @ other)(rho) = self(other(rho))``."""
        other = self._same_frame(other)
        if other is NotImplemented:
            return other
        return Superoperator(self.matrix @ other.matrix, self.convention)

    def __add__(self, other):
        other = self._same_frame(other)
        if other is NotImplemented:
            return other
        return Superoperator(self.matrix + other.matrix, self.convention)

    def __sub__(self, other):
        other = self._same_frame(other)
        if other is NotImplemented:
            return other
        return Superoperator(self.matrix - other.matrix, self.convention)

    def scaled(self, factor):
        return Superoperator(factor * self.matrix, self.convention)

    def to_convention(self, convention):
        _check_convention(convention)
        if convention == self.convention:
            return self
        P = _swap_permutation(self.dim)
        return Superoperator(P @ self.matrix @ P, convention)

    def trace_functional_defect(self, generator=True):
        """``max |vec(1)^dag S - target|``: target 0 for generators, ``vec(1)^dag`` for maps."""
        one = vectorize(np.eye(self.dim), self.convention)
        target = 0 if generator else one.conj()
        return float(np.abs(one.conj() @ self.matrix - target).max())


def _swap_permutation(d):
    """Permutation taking row-major vectors to column-major ones (an involution)."""
    idx = np.arange(d * d).reshape(d, d).T.reshape(-1)
    return np.eye(d * d)[idx]


def sandwich_super(A, B, convention=ROW):
    """Superoperator of ``rho -> A @ rho @ B``."""
    A = _square(A, "A")
    B = _square(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"A is {A.shape}, B is {B.shape}")
    _check_convention(convention)
    m = np.kron(A, B.T) if convention == ROW else np.kron(B.T, A)
    return Superoperator(m, convention)


def left_super(A, convention=ROW):
    A = _square(A, "A")
    return sandwich_super(A, np.eye(A.shape[0]), convention)


def right_super(B, convention=ROW):
    B = _square(B, "B")
    return sandwich_super(np.eye(B.shape[0]), B, convention)


def dissipator_super(jump, rate=1.0, convention=ROW):
    """Superoperator of ``rate * (J rho J^dag - {J^dag J, rho}/2)``."""
    if rate < 0:
        raise ValueError(f"negative rate {rate}")
    J = np.asarray(_square(jump, "jump operator"), dtype=complex)
    JdJ = J.conj().T @ J
    d = J.shape[0]
    one = np.eye(d)
    m = (
        sandwich_super(J, J.conj().T, convention).matrix
        - 0.5 * sandwich_super(JdJ, one, convention).matrix
        - 0.5 * sandwich_super(one, JdJ, convention).matrix
    )
    return Superoperator(rate * m, convention)


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus rated jump operators ``(rate, operator)``."""

    hamiltonian: np.ndarray
    jumps: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = np.asarray(_square(self.hamiltonian, "Hamiltonian"), dtype=complex)
        if np.abs(H - H.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("Hamiltonian is not Hermitian")
        jumps = []
        for rate, op in self.jumps:
            op = np.asarray(_square(op, "jump operator"), dtype=complex)
            if op.shape != H.shape:
                raise DimensionError(f"jump operator {op.shape} does not match Hamiltonian {H.shape}")
            if rate < 0:
                raise ValueError(f"negative rate {rate}")
            jumps.append((float(rate), _frozen(op)))
        object.__setattr__(self, "hamiltonian", _frozen(H))
        object.__setattr__(self, "jumps", tuple(jumps))

    @property
    def dim(self):
        return self.hamiltonian.shape[0]


def effective_hamiltonian(model):
    """``H - (i/2) sum_mu rate_mu J_mu^dag J_mu``."""
    Heff = model.hamiltonian.astype(complex)
    for rate, J in model.jumps:
        Heff = Heff - 0.5j * rate * (J.conj().T @ J)
    return Heff


def liouvillian_matrix(model, convention=ROW, form="standard"):
    """Matrix of the Lindblad generator.

    ``form="standard"`` sums the commutator and the dissipators;
    ``form="effective"`` uses ``-i(Heff rho - rho Heff^dag)`` plus the jump
    terms.  Both give the same matrix.
    """
    d = model.dim
    one = np.eye(d)
    H = model.hamiltonian
    if form == "standard":
        m = -1j * (sandwich_super(H, one, convention).matrix - sandwich_super(one, H, convention).matrix)
        for rate, J in model.jumps:
            m = m + dissipator_super(J, rate, convention).matrix
    elif form == "effective":
        Heff = effective_hamiltonian(model)
        m = -1j * (
            sandwich_super(Heff, one, convention).matrix
            - sandwich_super(one, Heff.conj().T, convention).matrix
        )
        for rate, J in model.jumps:
            m = m + rate * sandwich_super(J, J.conj().T, convention).matrix
    else:
        raise ValueError(f"unknown form {form!r}")
    return Superoperator(m, convention)


def propagator(generator, dt, mode="first_order"):
    """Short-time map ``1 + dt*L`` (``first_order``) or ``exp(dt*L)`` (``exact``)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = generator.matrix
    if mode == "first_order":
        s = np.eye(m.shape[0]) + dt * m
    elif mode == "exact":
        s = scipy.linalg.expm(dt * m)
    else:
        raise ValueError(f"unknown propagator mode {mode!r}")
    if not np.all(np.isfinite(s)):
        raise NumericalError(f"propagator overflowed (dt={dt}, |L|={np.linalg.norm(m):.3g})")
    return Superoperator(s, generator.convention)


def random_liouvillian_model(d, rng, n_jumps=2, rate_scale=1.0):
    """Random Hermitian Hamiltonian with ``n_jumps`` Ginibre jump operators."""
    X = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = 0.5 * (X + X.conj().T)
    jumps = []
    for _ in range(n_jumps):
        J = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2 * d)
        jumps.append((rate_scale * rng.uniform(0.1, 1.0), J))
    return LindbladModel(H, tuple(jumps))


def random_density_matrix(d, rng, rank=None):
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def pure_state(vec: Sequence[complex]):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())
