"""Simulated process tomography of a qubit map with three equivalent read-outs.

Every method is assembled from the same 18 records: the six probe states
prepared (optionally with white noise), evolved by a short-time map ``S``
and measured along x, y and z.

* ``m1``: 6x6 table ``L'[i, j] = <out_j| L(rho_i) |out_j>`` (rows are inputs).
* ``m2``: 4x4 table ``L''[m, n] = tr[L(s_m) s_n] / 2`` over the probe-pair
  operators ``s = (1, sx, P(y+) - P(y-), sz)``.  The third one equals
  ``-sy`` because ``|y+> = (|0> - i|1>)/sqrt(2)``.
* ``m3``: 4x4 table ``L[k, l] = tr[L(E_k)^dag E_l]`` over matrix units in
  row-major order; it equals the adjoint of the superoperator matrix.

Tomograms hold either the raw short-time map (``target="S"``) or the
generator estimate ``(S - S_identity) / dt`` (``target="L"``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .spectral import EigenSystem, RegimeReport, classify_modes, eig_general
from .superop import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    IDENTITY_2,
    LindbladModel,
    Superoperator,
    check_density_matrix,
    liouvillian_matrix,
    propagator,
    vectorize,
)

LABELS = ("x+", "x-", "y+", "y-", "z+", "z-")
AXES = ("x", "y", "z")
METHODS = ("m1", "m2", "m3")
_S2 = 1 / np.sqrt(2)

PROBE_KETS = {
    "x+": np.array([1, 1]) * _S2,
    "x-": np.array([1, -1]) * _S2,
    "y+": np.array([1, -1j]) * _S2,
    "y-": np.array([1, 1j]) * _S2,
    "z+": np.array([1, 0]),
    "z-": np.array([0, 1]),
}
PROBE_KETS = {k: v.astype(complex) for k, v in PROBE_KETS.items()}

STD_PAULIS = (IDENTITY_2, SIGMA_X, SIGMA_Y, SIGMA_Z)
# (1, sx, -sy, sz): the operators measured by the probe pairs
PROBE_PAULIS = (IDENTITY_2, SIGMA_X, -SIGMA_Y, SIGMA_Z)
_Y_FLIP = np.diag([1.0, 1.0, -1.0, 1.0])

# L''= A L' A^T / 2: row 0 sums the z pair, rows 1..3 take pair differences
PAIR_COMBINATION = np.array(
    [
        [0, 0, 0, 0, 1, 1],
        [1, -1, 0, 0, 0, 0],
        [0, 0, 1, -1, 0, 0],
        [0, 0, 0, 0, 1, -1],
    ],
    dtype=float,
)


@dataclass(frozen=True)
class ProbeBasis:
    labels: tuple
    kets: dict

    def projector(self, label):
        v = self.kets[label]
        return np.outer(v, v.conj())

    def bloch(self, label):
        """Standard-Pauli Bloch vector ``(1, <sx>, <sy>, <sz>)``."""
        P = self.projector(label)
        return np.array([np.trace(P @ s).real for s in STD_PAULIS])


def probe_states():
    return ProbeBasis(LABELS, dict(PROBE_KETS))


def overlap_table():
    """``|<out_j|in_i>|^2``, the six-state tomogram of the identity map."""
    return np.array([[abs(np.vdot(PROBE_KETS[b], PROBE_KETS[a])) ** 2 for b in LABELS] for a in LABELS])


def identity_tomogram(method):
    if method == "m1":
        return overlap_table()
    if method in ("m2", "m3"):
        return np.eye(4)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class NoiseModel:
    """White-noise level on the prepared inputs and finite-shot sampling.

    ``shots=None`` means exact probabilities.
    """

    white_noise: float = 0.0
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.white_noise <= 1:
            raise ValueError(f"white noise level must lie in [0, 1], got {self.white_noise}")
        if self.shots is not None and (int(self.shots) != self.shots or self.shots <= 0):
            raise ValueError(f"shots must be a positive integer or None, got {self.shots}")


@dataclass(frozen=True)
class MeasurementRecord:
    input: str
    axis: str
    shots: int | None
    plus: float
    minus: float

    def __post_init__(self):
        if self.input not in LABELS:
            raise ValueError(f"unknown input label {self.input!r}")
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        if self.shots is not None and self.plus + self.minus != self.shots:
            raise ValueError(f"counts {self.plus}+{self.minus} do not sum to shots={self.shots}")

    @property
    def p_plus(self):
        if self.shots is None:
            return float(self.plus)
        return self.plus / self.shots

    def to_dict(self):
        return {
            "input": self.input,
            "axis": self.axis,
            "shots": self.shots,
            "counts": {"plus": self.plus, "minus": self.minus},
        }

    @classmethod
    def from_dict(cls, d):
        c = d["counts"]
        shots = d.get("shots")
        if shots is None:
            return cls(d["input"], d["axis"], None, float(c["plus"]), float(c["minus"]))
        return cls(d["input"], d["axis"], int(shots), int(c["plus"]), int(c["minus"]))


@dataclass(frozen=True)
class Tomogram:
    method: str
    matrix: np.ndarray
    dt: float
    target: str = "L"
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.target not in ("S", "L"):
            raise ValueError(f"target must be 'S' or 'L', got {self.target!r}")
        shape = (6, 6) if self.method == "m1" else (4, 4)
        m = np.array(self.matrix, copy=True)
        if m.shape != shape:
            raise DimensionError(f"{self.method} tomogram must be {shape}, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def as_target(self, target):
        if target == self.target:
            return self
        ident = identity_tomogram(self.method)
        if target == "L":
            return Tomogram(self.method, (self.matrix - ident) / self.dt, self.dt, "L")
        return Tomogram(self.method, self.matrix * self.dt + ident, self.dt, "S")


def add_white_noise(rho, w):
    """``(1 - w) rho + w 1/d``."""
    if not 0 <= w <= 1:
        raise ValueError(f"white noise level must lie in [0, 1], got {w}")
    rho = check_density_matrix(rho)
    d = rho.shape[0]
    return (1 - w) * rho + w * np.eye(d) / d


def sample_counts(probabilities, shots, rng):
    """Multinomial draw of ``shots`` outcomes.

    ``rng`` is a ``numpy.random.Generator`` or anything accepted by
    ``numpy.random.default_rng`` (an int or a sequence of ints).
    """
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or abs(p.sum() - 1) > 1e-9:
        raise ValueError(f"invalid probability distribution {p}")
    if int(shots) != shots or shots <= 0:
        raise ValueError(f"shots must be a positive integer, got {shots}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.multinomial(int(shots), p / p.sum())


def _record_probability(S, label, axis, w):
    rho = add_white_noise(probe_states().projector(label), w)
    out = S.apply(rho)
    ket = PROBE_KETS[axis + "+"]
    return float(np.vdot(ket, out @ ket).real)


def simulate_records(channel: Superoperator, noise: NoiseModel = NoiseModel(), point_index=0):
    """The 18 records of one tomography run.

    Record ``r`` of sweep point ``k`` draws from
    ``default_rng([seed, k, r])`` so parallel sweeps stay reproducible.
    """
    if channel.dim != 2:
        raise DimensionError("tomography is implemented for a single qubit")
    records = []
    for r, (label, axis) in enumerate((a, b) for a in LABELS for b in AXES):
        p = _record_probability(channel, label, axis, noise.white_noise)
        if noise.shots is None:
            records.append(MeasurementRecord(label, axis, None, p, 1 - p))
            continue
        if p < -1e-9 or p > 1 + 1e-9:
            raise ValueError(f"map produced probability {p} outside [0, 1]; step too large for sampling")
        p = min(max(p, 0.0), 1.0)
        plus, minus = sample_counts([p, 1 - p], noise.shots, [noise.seed, point_index, r])
        records.append(MeasurementRecord(label, axis, noise.shots, int(plus), int(minus)))
    return records


def m1_from_records(records):
    """Six-state ``S'`` table from measurement records."""
    S = np.full((6, 6), np.nan)
    for rec in records:
        i = LABELS.index(rec.input)
        j = LABELS.index(rec.axis + "+")
        S[i, j] = rec.p_plus
        S[i, j + 1] = 1 - rec.p_plus
    if np.isnan(S).any():
        missing = [(LABELS[i], AXES[j // 2]) for i, j in zip(*np.where(np.isnan(S)))][::2]
        raise ValueError(f"incomplete record set, missing (input, axis) = {missing}")
    return S


def convert_m1(l1, method):
    """Assemble the m2 or m3 table from a six-state table by linear combination.

    The input may be S- or L-form; the output is in the same form.
    """
    if method == "m1":
        return np.array(l1)
    l2 = 0.5 * PAIR_COMBINATION @ l1 @ PAIR_COMBINATION.T
    if method == "m2":
        return l2
    if method == "m3":
        return _m3_from_m2(l2)
    raise ValueError(f"unknown method {method!r}")


def _pauli_to_superop(G):
    """Superoperator with standard-Pauli transfer matrix ``G[n, m] = tr[s_n L(s_m)]/2``."""
    V = np.array([vectorize(s) for s in STD_PAULIS]).T  # columns vec(s_m)
    return 0.5 * V @ G @ V.conj().T


def _superop_to_pauli(L):
    V = np.array([vectorize(s) for s in STD_PAULIS]).T
    return (0.5 * V.conj().T @ L @ V).real


def _m3_from_m2(l2):
    G = _Y_FLIP @ np.asarray(l2).T @ _Y_FLIP
    return _pauli_to_superop(G).conj().T


def method_table(L: Superoperator, method):
    """Noiseless tomogram (L-form) of a generator, computed directly."""
    m = L.to_convention("row").matrix
    basis = probe_states()
    if method == "m1":
        return np.array(
            [[np.trace(basis.projector(b) @ L.apply(basis.projector(a))).real for b in LABELS] for a in LABELS]
        )
    if method == "m2":
        return np.array([[0.5 * np.trace(L.apply(sm) @ sn).real for sn in PROBE_PAULIS] for sm in PROBE_PAULIS])
    if method == "m3":
        units = [np.eye(4)[k].reshape(2, 2) for k in range(4)]
        return np.array([[np.trace(L.apply(Ek).conj().T @ El) for El in units] for Ek in units])
    raise ValueError(f"unknown method {method!r}")


def tomogram_from_records(records, method, dt, target="L"):
    S1 = m1_from_records(records)
    tomo = Tomogram(method, convert_m1(S1, method), dt, "S")
    return tomo.as_target(target)


def measure_method(channel: Superoperator, method, noise: NoiseModel = NoiseModel(), dt=1 / 15, point_index=0):
    """Tomogram (L-form) of a short-time map ``channel`` taken with step ``dt``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    records = simulate_records(channel, noise, point_index)
    return tomogram_from_records(records, method, dt, "L")


def equivalence_transforms():
    """Constant matrices ``U'`` (4x6) and ``U''`` (4x4) relating the three tables.

    ``U''`` has the vectorized operators (1, sx, sy, sz)/sqrt(2) as columns.
    """
    U1 = _S2 * np.array(
        [
            [1, 1, 0, 0, 0, 0],
            [0, 0, 1, -1, 0, 0],
            [0, 0, 0, 0, 1, -1],
            [1, -1, 0, 0, 0, 0],
        ],
        dtype=float,
    )
    U2 = _S2 * np.array([[1, 0, 0, 1], [0, 1, -1j, 0], [0, 1, 1j, 0], [1, 0, 0, -1]], dtype=complex)
    return U1, U2


def _m1_design():
    """Design matrix of ``L'[i, j] = sum_{m, n>=1} t_j^n G[n, m] s_i^m / 2`` over the 12 free G entries."""
    basis = probe_states()
    s = {lab: basis.bloch(lab) for lab in LABELS}
    rows = []
    for a in LABELS:
        for b in LABELS:
            rows.append([0.5 * s[b][n] * s[a][m] for n in range(1, 4) for m in range(4)])
    return np.array(rows)


_DESIGN = _m1_design()


def to_liouvillian(t: Tomogram, return_residual=False):
    """Reconstruct the generator from a tomogram.

    The six-state table is fitted by linear least squares over the 12 real
    parameters of a trace-annihilating, Hermiticity-preserving generator;
    the 4x4 tables are inverted by a direct basis change.
    """
    t = t.as_target("L")
    residual = 0.0
    if t.method == "m1":
        if np.linalg.matrix_rank(_DESIGN) != 12:
            raise np.linalg.LinAlgError("six-state design matrix is rank deficient")
        y = np.asarray(t.matrix, dtype=float).reshape(-1)
        theta, *_ = np.linalg.lstsq(_DESIGN, y, rcond=None)
        residual = float(np.linalg.norm(_DESIGN @ theta - y))
        G = np.zeros((4, 4))
        G[1:, :] = theta.reshape(3, 4)
        L = _pauli_to_superop(G)
    elif t.method == "m2":
        G = _Y_FLIP @ np.asarray(t.matrix, dtype=float).T @ _Y_FLIP
        L = _pauli_to_superop(G)
    else:
        L = np.asarray(t.matrix).conj().T
    sup = Superoperator(L)
    return (sup, residual) if return_residual else sup


@dataclass(frozen=True)
class QPTResult:
    liouvillian: Superoperator
    eigensystem: EigenSystem
    regime: RegimeReport
    tomogram: Tomogram
    residual: float
    channel: Superoperator

    def __iter__(self):
        return iter((self.liouvillian, self.eigensystem, self.regime))

    @property
    def s_tomogram(self):
        """Short-time-map table ``S = L dt + identity tomogram``."""
        return self.tomogram.as_target("S")


def run_qpt(source, method="m1", noise: NoiseModel = NoiseModel(), dt=1 / 15, mode="first_order", point_index=0):
    """Simulate tomography of a model or generator and analyse the reconstruction.

    ``source`` is a :class:`LindbladModel` or a generator
    :class:`Superoperator`.  The measured map is ``propagator(L, dt, mode)``.
    """
    if isinstance(source, LindbladModel):
        L = liouvillian_matrix(source)
    elif isinstance(source, Superoperator):
        L = source.to_convention("row")
    else:
        raise TypeError(f"run_qpt expects a LindbladModel or Superoperator, got {type(source).__name__}")
    S = propagator(L, dt, mode)
    tomo = measure_method(S, method, noise, dt, point_index)
    rec, residual = to_liouvillian(tomo, return_residual=True)
    es = eig_general(rec.matrix)
    return QPTResult(rec, es, classify_modes(es), tomo, residual, S)
