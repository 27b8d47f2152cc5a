"""Non-Hermitian eigen-analysis: left/right eigenvectors, exceptional points,
regime classification and first-order perturbation error bars.

Right eigenvectors solve ``M rho = lam rho``; left ones solve
``sigma^dag M = lam sigma^dag`` and are stored as kets ``sigma``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DefectiveError, DimensionError, PerturbationError

RESIDUAL_TOL = 1e-9
COND_MAX = 1e6
BIORTHO_TOL = 1e-8

STEADY, EXPONENTIAL, SPIRALING, OSCILLATING = 1, 2, 3, 4
TYPE_NAMES = {STEADY: "steady", EXPONENTIAL: "exponential", SPIRALING: "spiraling-pair", OSCILLATING: "oscillating"}


def _scale(M):
    return max(1.0, float(np.linalg.norm(M, 2)))


@dataclass(frozen=True)
class EigenSystem:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    right_vectors: np.ndarray  # columns
    left_vectors: np.ndarray  # columns (kets)
    residuals: np.ndarray
    left_residuals: np.ndarray
    condition_numbers: np.ndarray
    defective_flags: np.ndarray
    biorthonormal: bool = False

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def biortho_matrix(self):
        """Table of ``<sigma_i|rho_j>``."""
        return self.left_vectors.conj().T @ self.right_vectors

    def right(self, n):
        return self.right_vectors[:, n]

    def left(self, n):
        return self.left_vectors[:, n]

    def to_dict(self):
        def cplx(a):
            a = np.asarray(a)
            return np.stack([a.real, a.imag], axis=-1).tolist()

        return {
            "dim": int(self.dim),
            "eigenvalues": cplx(self.eigenvalues),
            "right_vectors": cplx(self.right_vectors.T),
            "left_vectors": cplx(self.left_vectors.T),
            "residuals": self.residuals.tolist(),
            "left_residuals": self.left_residuals.tolist(),
            "condition_numbers": self.condition_numbers.tolist(),
            "defective": self.defective_flags.tolist(),
            "biorthonormal": self.biorthonormal,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def sort_order(eigenvalues, tol):
    """Descending real part, ties (within ``tol``) broken by ascending imaginary part."""
    ev = np.asarray(eigenvalues)
    keys = np.round(ev.real / tol) if tol > 0 else ev.real
    return np.lexsort((ev.imag, -keys))


def _clusters(ev, tol):
    """Group indices whose eigenvalues lie within ``tol`` of each other (transitively)."""
    n = len(ev)
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(ev[i] - ev[j]) <= tol:
                label[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def eig_general(M, tol=None, cond_max=COND_MAX):
    """Eigen-decompose a general square matrix with left and right vectors.

    ``tol`` (default ``1e-9 * max(1, ||M||_2)``) sets the tie width used for
    sorting and for grouping nearly degenerate eigenvalues.  The pairing
    condition number of a group is ``1 / s_min`` of its block of the
    ``<sigma|rho>`` table; a group is flagged defective above ``cond_max``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"matrix must be square, got {M.shape}")
    if M.shape[0] > 64:
        raise DimensionError("dense eigen-analysis is limited to dimension 64")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = _scale(M)
    tol = RESIDUAL_TOL * scale if tol is None else tol

    try:
        w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = sort_order(w, tol)
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    vl = vl / np.linalg.norm(vl, axis=0)

    res = np.linalg.norm(M @ vr - vr * w, axis=0)
    lres = np.linalg.norm(M.conj().T @ vl - vl * w.conj(), axis=0)
    worst = max(res.max(), lres.max())
    if worst > RESIDUAL_TOL * scale:
        raise ConvergenceError(f"eigenpair residual {worst:.3g} exceeds tolerance", best_residual=worst)

    B = vl.conj().T @ vr
    cond = np.empty(len(w))
    for group in _clusters(w, max(tol, 1e-6 * scale)):
        block = B[np.ix_(group, group)]
        smin = np.linalg.svd(block, compute_uv=False).min()
        cond[group] = np.inf if smin == 0 else 1.0 / smin
    return EigenSystem(M, w, vr, vl, res, lres, cond, cond > cond_max)


def biorthonormalize(es: EigenSystem, cond_max=COND_MAX):
    """Rescale left vectors so that ``<sigma_i|rho_j> = delta_ij``.

    Right vectors keep unit norm.  Raises :class:`DefectiveError` when the
    pairing condition number exceeds ``cond_max``, which signals a nearby
    exceptional point.
    """
    worst = float(np.max(es.condition_numbers))
    if worst > cond_max:
        raise DefectiveError(
            f"eigenbasis is nearly defective (pairing condition number {worst:.3g} > {cond_max:.3g})",
            condition_number=worst,
        )
    B = es.biortho_matrix
    # sigma_new^dag rho = B^{-1} sigma^dag rho = 1
    left = es.left_vectors @ np.linalg.inv(B).conj().T
    check = np.abs(left.conj().T @ es.right_vectors - np.eye(es.dim)).max()
    if check > BIORTHO_TOL:
        raise DefectiveError(f"biorthonormalization residual {check:.3g}", condition_number=worst)
    return EigenSystem(
        es.matrix,
        es.eigenvalues,
        es.right_vectors,
        left,
        es.residuals,
        np.linalg.norm(es.matrix.conj().T @ left - left * es.eigenvalues.conj(), axis=0),
        es.condition_numbers,
        es.defective_flags,
        biorthonormal=True,
    )


def eigen_overlap(es: EigenSystem, i, j, convention="right_right"):
    """``|<rho_i|rho_j>|`` or ``|<sigma_i|rho_j>|`` with both vectors at unit norm."""
    n = es.dim
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"eigen index out of range for dimension {n}: ({i}, {j})")
    if convention == "right_right":
        a = es.right_vectors[:, i]
    elif convention == "left_right":
        a = es.left_vectors[:, i]
    else:
        raise ValueError(f"unknown overlap convention {convention!r}")
    b = es.right_vectors[:, j]
    value = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(min(value, 1.0))


@dataclass(frozen=True)
class RegimeReport:
    types: tuple
    spectral_gap: float
    spiraling: bool

    @property
    def label(self):
        return "spiraling" if self.spiraling else "non-spiraling"


def classify_modes(es, tol=None):
    """Sort each eigenvalue into steady, exponential, spiraling-pair or oscillating."""
    ev = es.eigenvalues if isinstance(es, EigenSystem) else np.asarray(es)
    if tol is None:
        tol = 1e-8 * (_scale(es.matrix) if isinstance(es, EigenSystem) else 1.0)
    types = []
    for k, lam in enumerate(ev):
        if abs(lam) <= tol:
            types.append(STEADY)
        elif abs(lam.real) <= tol < abs(lam.imag):
            types.append(OSCILLATING)
        elif lam.real < -tol and abs(lam.imag) > tol and any(
            abs(ev[m] - lam.conjugate()) <= max(tol, 1e-9 * abs(lam)) for m in range(len(ev)) if m != k
        ):
            types.append(SPIRALING)
        else:
            types.append(EXPONENTIAL)
    nonzero = [abs(lam.real) for lam, t in zip(ev, types) if t != STEADY]
    gap = float(min(nonzero)) if nonzero else 0.0
    return RegimeReport(tuple(types), gap, SPIRALING in types)


@dataclass(frozen=True)
class LEPReport:
    parameter: float
    indices: tuple
    separation: float
    overlap: float
    bracket: tuple


def _closest_pair(es, skip_steady_tol):
    """Indices of the closest pair of eigenvalues, ignoring steady (zero) ones."""
    ev = es.eigenvalues
    cand = [k for k in range(len(ev)) if abs(ev[k]) > skip_steady_tol]
    best = None
    for a in range(len(cand)):
        for b in range(a + 1, len(cand)):
            i, j = cand[a], cand[b]
            sep = abs(ev[i] - ev[j])
            if best is None or sep < best[0]:
                best = (sep, i, j)
    return best


def detect_leps(
    family: Callable[[float], object],
    lo: float,
    hi: float,
    points: int = 41,
    eps_rel: float = 1e-6,
    overlap_min: float = 0.99,
    xtol: float | None = None,
):
    """Locate exceptional points of a one-parameter family of matrices.

    The grid is scanned for changes in the number of eigenvalues with a
    nonzero imaginary part; each change is refined by bisection.  Grid
    points where two eigenvalues already coincide are also reported.  A
    candidate is accepted when the closest pair is within
    ``eps_rel * ||M||_2`` and their right eigenvectors overlap by at least
    ``overlap_min``.
    """
    if points < 3:
        raise ValueError("detect_leps needs at least 3 grid points")
    grid = np.linspace(lo, hi, points)
    xtol = 1e-13 * max(1.0, abs(hi - lo)) if xtol is None else xtol

    def matrix(x):
        m = family(x)
        return np.asarray(getattr(m, "matrix", m), dtype=complex)

    def n_complex(x):
        m = matrix(x)
        ev = np.linalg.eigvals(m)
        return int(np.sum(np.abs(ev.imag) > 1e-9 * _scale(m)))

    def evaluate(x):
        m = matrix(x)
        es = eig_general(m)
        scale = _scale(m)
        pair = _closest_pair(es, 1e-9 * scale)
        if pair is None:
            return None
        sep, i, j = pair
        return sep, (i, j), eigen_overlap(es, i, j, "right_right"), eps_rel * scale

    reports = []

    def accept(x, bracket):
        r = evaluate(x)
        if r is None:
            return
        sep, idx, ov, eps = r
        if sep <= eps and ov >= overlap_min:
            if all(abs(x - rep.parameter) > (grid[1] - grid[0]) / 2 for rep in reports):
                reports.append(LEPReport(float(x), idx, float(sep), float(ov), bracket))

    counts = [n_complex(x) for x in grid]
    for k, x in enumerate(grid):
        accept(x, (float(x), float(x)))
    for k in range(points - 1):
        if counts[k] == counts[k + 1]:
            continue
        a, b = grid[k], grid[k + 1]
        ca = counts[k]
        while b - a > xtol:
            mid = 0.5 * (a + b)
            if mid in (a, b):
                break
            if n_complex(mid) == ca:
                a = mid
            else:
                b = mid
        # the defective point sits at the boundary; the end with fewer
        # complex eigenvalues is numerically closest to coalescence
        x = a if counts[k] < counts[k + 1] else b
        accept(x, (float(grid[k]), float(grid[k + 1])))
    return sorted(reports, key=lambda r: r.parameter)


@dataclass(frozen=True)
class Perturbation:
    d_lambda: np.ndarray
    d_right: np.ndarray  # columns: first-order change of each rho_n
    d_left: np.ndarray  # columns: first-order change of each sigma_n (kets)


def _require_biorthonormal(es):
    if not es.biorthonormal:
        raise ValueError("perturbation theory needs a biorthonormalized eigensystem")


def perturb_first_order(es0: EigenSystem, dL, tol=None):
    """First-order eigenvalue and eigenvector corrections for ``L + dL``.

    ``d_right[:, n] = -sum_i <sigma_i|dL|rho_n> / (lam_i - lam_n) rho_i`` and
    ``<d_sigma_n| = -sum_i <sigma_n|dL|rho_i> / (lam_i - lam_n) <sigma_i|``.
    """
    _require_biorthonormal(es0)
    dL = np.asarray(dL, dtype=complex)
    if dL.shape != es0.matrix.shape:
        raise DimensionError(f"perturbation shape {dL.shape} does not match {es0.matrix.shape}")
    lam = es0.eigenvalues
    n = len(lam)
    tol = 1e-6 * _scale(es0.matrix) if tol is None else tol
    gaps = np.abs(lam[:, None] - lam[None, :]) + np.diag(np.full(n, np.inf))
    if gaps.min() < tol:
        raise PerturbationError(
            f"eigenvalue gap {gaps.min():.3g} below {tol:.3g}: first-order theory breaks down near degeneracy",
            min_gap=float(gaps.min()),
        )
    R, S = es0.right_vectors, es0.left_vectors
    V = S.conj().T @ dL @ R  # V[i, n] = <sigma_i|dL|rho_n>
    denom = lam[:, None] - lam[None, :]  # lam_i - lam_n
    np.fill_diagonal(denom, np.inf)
    coeff = -V / denom  # coeff[i, n]: weight of rho_i in d_rho_n
    d_right = R @ coeff
    # bra coefficients c[n, i] = -V[n, i] / (lam_i - lam_n); kets take the conjugate
    bra = -V / denom.T
    d_left = S @ bra.conj().T
    return Perturbation(np.diag(V).copy(), d_right, d_left)


def overlap_error_bar(es0: EigenSystem, dL, variant="phase_robust", i=1, j=2, tol=None):
    """Error bar of the overlap ``<sigma_i|rho_j>`` under a perturbation ``dL``.

    ``phase_sensitive`` is ``|a + b + c|`` and ``phase_robust`` is
    ``sqrt(|a|^2 + |b|^2 + |c|^2)`` with ``a = <d_sigma_i|rho_j>``,
    ``b = <sigma_i|d_rho_j>`` and ``c = <d_sigma_i|d_rho_j>``.
    """
    a, b, c = overlap_terms(es0, dL, i, j, tol)
    if variant == "phase_sensitive":
        return float(abs(a + b + c))
    if variant == "phase_robust":
        return float(np.sqrt(abs(a) ** 2 + abs(b) ** 2 + abs(c) ** 2))
    raise ValueError(f"unknown variant {variant!r}")


def overlap_terms(es0, dL, i=1, j=2, tol=None):
    p = perturb_first_order(es0, dL, tol)
    ds, dr = p.d_left[:, i], p.d_right[:, j]
    a = np.vdot(ds, es0.right_vectors[:, j])
    b = np.vdot(es0.left_vectors[:, i], dr)
    c = np.vdot(ds, dr)
    return a, b, c


def rephased(es: EigenSystem, phases: Sequence[float]):
    """Multiply ``rho_n`` and ``sigma_n`` by ``exp(i phase_n)``; biorthonormality is kept."""
    f = np.exp(1j * np.asarray(phases, dtype=float))
    return EigenSystem(
        es.matrix,
        es.eigenvalues,
        es.right_vectors * f,
        es.left_vectors * f,
        es.residuals,
        es.left_residuals,
        es.condition_numbers,
        es.defective_flags,
        es.biorthonormal,
    )
