"""The driven lossy qubit: ``H = (w/2) sz`` with decay through sigma_-, sx and sy.

Basis index 0 is the sz = +1 (excited) state and index 1 the ground
state, so the lowering operator is ``|1><0|``.  With this choice the
effective Hamiltonian is ``diag(w - i(gx+gy+gm), -w - i(gx+gy)) / 2`` and
the steady state puts the larger population on index 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .superop import SIGMA_X, SIGMA_Y, SIGMA_Z, LindbladModel

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class DrivenQubitParams:
    omega: float = 1.0
    gamma_minus: float = 0.0
    gamma_x: float = 0.0
    gamma_y: float = 2.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        for name in ("gamma_minus", "gamma_x", "gamma_y"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a finite non-negative rate, got {value}")

    def with_gamma_x(self, gamma_x):
        return DrivenQubitParams(self.omega, self.gamma_minus, gamma_x, self.gamma_y)


def model_liouvillian(p: DrivenQubitParams) -> LindbladModel:
    H = 0.5 * p.omega * SIGMA_Z
    jumps = ((p.gamma_minus, SIGMA_MINUS), (p.gamma_x, SIGMA_X), (p.gamma_y, SIGMA_Y))
    return LindbladModel(H, jumps)


def omega_squared(p):
    """``Omega^2 = (gx - gy)^2 - w^2``; negative inside the spiraling window."""
    return (p.gamma_x - p.gamma_y) ** 2 - p.omega**2


@dataclass(frozen=True)
class AnalyticSpectrum:
    lambdas: tuple
    right_eigenmatrices: tuple
    omega_cap: complex


def analytic_spectrum(p: DrivenQubitParams) -> AnalyticSpectrum:
    """Closed-form eigenvalues and right eigenmatrices.

    The population-decay eigenvalue is ``-gm - 2(gx+gy)``.  At the
    exceptional points (Omega = 0) the two middle eigenmatrices coincide.
    """
    w, gm, gx, gy = p.omega, p.gamma_minus, p.gamma_x, p.gamma_y
    Om = np.sqrt(complex(omega_squared(p)))
    base = -gm / 2 - gx - gy
    lambdas = (0j, base + Om, base - Om, complex(-gm - 2 * (gx + gy)))

    steady = np.diag([gx + gy, gx + gy + gm]).astype(complex)
    if np.trace(steady) == 0:
        steady = np.eye(2, dtype=complex)
    steady = steady / np.trace(steady)

    coherences = []
    for sign in (1, -1):
        upper, lower = -1j * w + sign * Om, gx - gy
        if abs(upper) == 0 and abs(lower) == 0:
            upper, lower = gx - gy, 1j * w + sign * Om
        if abs(upper) == 0 and abs(lower) == 0:
            # pure decay of one coherence: fall back to matrix units
            upper, lower = (1, 0) if sign == 1 else (0, 1)
        m = np.array([[0, upper], [lower, 0]], dtype=complex)
        coherences.append(m / np.linalg.norm(m))
    population = np.diag([1, -1]).astype(complex) / np.sqrt(2)
    return AnalyticSpectrum(lambdas, (steady, coherences[0], coherences[1], population), Om)


@dataclass(frozen=True)
class LEPLocations:
    """LEP positions on the gamma_x axis.

    ``two_lep_regime`` is False when gamma_y <= omega.  The lower crossing
    is then negative and only the upper one remains physical.
    """

    values: tuple
    two_lep_regime: bool
    note: str = ""


def lep_locations(p: DrivenQubitParams) -> LEPLocations:
    lo, hi = p.gamma_y - p.omega, p.gamma_y + p.omega
    if p.gamma_y > p.omega:
        return LEPLocations((lo, hi), True)
    return LEPLocations(
        (hi,),
        False,
        f"gamma_y={p.gamma_y} <= omega={p.omega}: the lower exceptional point "
        f"gamma_y - omega={lo} lies at a negative rate; only gamma_y + omega remains",
    )


@dataclass(frozen=True)
class ReferenceMatrices:
    """Closed-form tomography matrices for gamma_y = 2w at gamma_x = x*w.

    ``m1_printed``/``m2_printed`` are the matrices as printed.  ``m1`` and
    ``m2`` are the versions a direct construction reproduces in this
    package's conventions:

    * case 1: the six-state matrix needs twice the printed prefactor; the
      Pauli matrix is correct as printed;
    * case 2: the six-state matrix is printed with the lowering operator
      ``|0><1|`` (z+ and z- swapped relative to ours), and the Pauli matrix
      is printed in the basis order (1, sy, sz, sx).

    ``eigenvalues`` are the three nonzero eigenvalues of the printed formulas.
    """

    case: int
    x: float
    omega: float
    m1_printed: np.ndarray
    m1: np.ndarray
    m2_printed: np.ndarray
    m2: np.ndarray
    eigenvalues: tuple

    @property
    def params(self):
        return DrivenQubitParams(self.omega, 0.0 if self.case == 1 else self.omega, self.x * self.omega, 2 * self.omega)


def reference_tables(case, x, omega=1.0):
    if case not in (1, 2):
        raise ValueError(f"case must be 1 or 2, got {case}")
    x = float(x)
    z = np.sqrt(complex(x * x - 4 * x + 3))
    if case == 1:
        a = 2 * (x + 2)
        m1 = 0.25 * np.array(
            [
                [-4, 4, -1, 1, 0, 0],
                [4, -4, 1, -1, 0, 0],
                [1, -1, -2 * x, 2 * x, 0, 0],
                [-1, 1, 2 * x, -2 * x, 0, 0],
                [0, 0, 0, 0, -a, a],
                [0, 0, 0, 0, a, -a],
            ]
        )
        m2 = np.array([[0, 0, 0, 0], [0, -4, -1, 0], [0, 1, -2 * x, 0], [0, 0, 0, -a]], dtype=float)
        eig = (-2 * (2 + x), -(2 + x - z), -(2 + x + z))
        corrected, corrected2 = 2 * m1, m2
    else:
        y2, y3 = 2 * (x + 2), 2 * (x + 3)
        m1 = 0.25 * np.array(
            [
                [-9, 9, -2, 2, 2, -2],
                [9, -9, 2, -2, 2, -2],
                [2, -2, -4 * x - 1, 4 * x + 1, 2, -2],
                [-2, 2, 4 * x + 1, -4 * x - 1, 2, -2],
                [0, 0, 0, 0, -2 * y2, 2 * y2],
                [0, 0, 0, 0, 2 * y3, -2 * y3],
            ]
        )
        m2 = 0.5 * np.array(
            [[0, 0, -2, 0], [0, -4 * x - 1, 0, 2], [0, 0, -4 * x - 10, 0], [0, -2, 0, -9]], dtype=float
        )
        eig = (-(2 * x + 5), -0.5 * (2 * x + 5 + 2 * z), -0.5 * (2 * x + 5 - 2 * z))
        swap_z = [0, 1, 2, 3, 5, 4]
        corrected = m1[np.ix_(swap_z, swap_z)]
        # printed order (1, sy, sz, sx) back to (1, sx, sy, sz)
        order = [0, 3, 1, 2]
        corrected2 = m2[np.ix_(order, order)]
    eig = tuple(complex(omega * e) for e in eig)
    return ReferenceMatrices(case, x, omega, omega * m1, omega * corrected, omega * m2, omega * corrected2, eig)
