"""Parameter sweeps of simulated tomography along the gamma_x axis."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from decimal import Decimal

import numpy as np

from .errors import DefectiveError, InfeasibleFitError, PerturbationError
from .matrix_io import matrix_to_json
from .qubit import DrivenQubitParams, model_liouvillian
from .spectral import biorthonormalize, detect_leps, eig_general, eigen_overlap, perturb_first_order
from .superop import liouvillian_matrix
from .tomography import METHODS, NoiseModel, run_qpt
from .uncertainty import gamma_error_bars, model_fidelity_profile

SCHEMA_VERSION = 1
COLUMNS = (
    ["gamma_x"]
    + [f"{part}_l{k}" for k in range(4) for part in ("re", "im")]
    + ["overlap_12", "regime", "gap", "err_re_l1", "err_im_l1", "err_re_l2", "err_im_l2"]
    + ["gamma_err_left", "gamma_err_right"]
)


@dataclass(frozen=True)
class SweepConfig:
    gamma_x_min: float = 0.0
    gamma_x_max: float = 4.0
    points: int = 30
    gamma_y: float = 2.0
    gamma_minus: float = 0.0
    omega: float = 1.0
    dt: float | None = None
    method: str = "m1"
    shots: int | None = 20000
    white_noise: float = 0.02
    seed: int = 0
    workers: int = 1
    gamma_errors: bool = False
    propagator_mode: str = "first_order"

    def __post_init__(self):
        if self.points < 2:
            raise ValueError(f"a sweep needs at least 2 points, got {self.points}")
        if not self.gamma_x_max > self.gamma_x_min or self.gamma_x_min < 0:
            raise ValueError(f"invalid gamma_x range [{self.gamma_x_min}, {self.gamma_x_max}]")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        NoiseModel(self.white_noise, self.shots, self.seed)
        DrivenQubitParams(self.omega, self.gamma_minus, self.gamma_x_min, self.gamma_y)

    @property
    def step(self):
        return 1 / (15 * self.omega) if self.dt is None else self.dt

    def grid(self):
        return np.linspace(self.gamma_x_min, self.gamma_x_max, self.points)

    def params(self, gamma_x):
        return DrivenQubitParams(self.omega, self.gamma_minus, float(gamma_x), self.gamma_y)


@dataclass
class SweepRow:
    gamma_x: float
    eigenvalues: np.ndarray
    overlap_12: float
    regime: str
    gap: float
    eig_errors: tuple
    gamma_errors: tuple
    s_matrix: np.ndarray
    l_matrix: np.ndarray

    def cells(self):
        out = [self.gamma_x]
        for lam in self.eigenvalues:
            out += [lam.real, lam.imag]
        out += [self.overlap_12, self.regime, self.gap, *self.eig_errors, *self.gamma_errors]
        return out


def _eigen_error_bars(ideal, reconstructed):
    """First-order ``|Re dl|, |Im dl|`` for modes 1 and 2; NaN where perturbation theory fails."""
    try:
        es0 = biorthonormalize(eig_general(ideal))
        dl = perturb_first_order(es0, reconstructed - ideal).d_lambda
    except (DefectiveError, PerturbationError):
        return (math.nan,) * 4
    return (abs(dl[1].real), abs(dl[1].imag), abs(dl[2].real), abs(dl[2].imag))


def _gamma_error_bars(cfg, p):
    if cfg.white_noise == 0:
        return (0.0, 0.0)
    if not cfg.gamma_errors:
        return (math.nan, math.nan)
    try:
        fit = gamma_error_bars(model_fidelity_profile(p, dt=cfg.step, span=4.0), cfg.white_noise, 2)
    except InfeasibleFitError:
        return (math.nan, math.nan)
    return (fit.error_left, fit.error_right)


def sweep_point(cfg: SweepConfig, k: int, gamma_x: float) -> SweepRow:
    p = cfg.params(gamma_x)
    model = model_liouvillian(p)
    noise = NoiseModel(cfg.white_noise, cfg.shots, cfg.seed)
    res = run_qpt(model, cfg.method, noise, cfg.step, cfg.propagator_mode, point_index=k)
    es = res.eigensystem
    ideal = liouvillian_matrix(model).matrix
    return SweepRow(
        float(gamma_x),
        es.eigenvalues,
        eigen_overlap(es, 1, 2, "right_right"),
        res.regime.label,
        res.regime.spectral_gap,
        _eigen_error_bars(ideal, res.liouvillian.matrix),
        _gamma_error_bars(cfg, p),
        np.array(res.s_tomogram.matrix),
        np.array(res.tomogram.matrix),
    )


def run_sweep(cfg: SweepConfig):
    """Evaluate every grid point; rows come back in grid order whatever the worker count."""
    grid = cfg.grid()
    if cfg.workers == 1:
        rows = [sweep_point(cfg, k, x) for k, x in enumerate(grid)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda kx: sweep_point(cfg, *kx), enumerate(grid)))
    return rows


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v + 0.0)  # +0.0 folds -0.0 into 0.0


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(c) for c in row.cells()])
    return buf.getvalue()


def spiraling_window(rows):
    xs = [r.gamma_x for r in rows if r.regime == "spiraling"]
    return (min(xs), max(xs)) if xs else None


def lep_report(cfg: SweepConfig, rows):
    """Exceptional points of the ideal family plus the spiraling window seen in the data."""
    family = lambda x: liouvillian_matrix(model_liouvillian(cfg.params(x)))  # noqa: E731
    leps = detect_leps(family, cfg.gamma_x_min, cfg.gamma_x_max, max(cfg.points, 3))
    window = spiraling_window(rows)
    return {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(cfg),
        "leps": [
            {
                "gamma_x": r.parameter,
                "indices": list(r.indices),
                "separation": r.separation,
                "overlap": r.overlap,
                "bracket": list(r.bracket),
            }
            for r in leps
        ],
        "spiraling_window": list(window) if window else None,
    }


def s_matrix_export(cfg, rows):
    return {
        "dt": cfg.step,
        "method": cfg.method,
        "convention": "S = L dt + identity tomogram",
        "points": [
            {"gamma_x": r.gamma_x, "S": matrix_to_json(r.s_matrix), "L": matrix_to_json(r.l_matrix)} for r in rows
        ],
    }


def write_sweep(cfg: SweepConfig, out_path, emit_s_matrix=False):
    """Run the sweep and write the CSV, the LEP report and optionally the S matrices."""
    rows = run_sweep(cfg)
    with open(out_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    stem = os.path.splitext(out_path)[0]
    report = lep_report(cfg, rows)
    with open(stem + ".leps.json", "w") as fh:
        json.dump(report, fh, indent=2)
    if emit_s_matrix:
        with open(stem + ".smatrix.json", "w") as fh:
            json.dump(s_matrix_export(cfg, rows), fh)
    return rows, report


def time_estimate(experiments, shots, shot_time):
    """Total measurement time ``experiments * shots * shot_time``, rounded in decimal."""
    for name, v in (("experiments", experiments), ("shots", shots), ("shot_time", shot_time)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    total = Decimal(str(experiments)) * Decimal(str(shots)) * Decimal(str(shot_time))
    return float(total)

