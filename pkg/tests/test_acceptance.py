"""Acceptance suite: one test and one PASS/FAIL summary line per criterion."""

import os
import subprocess
import sys
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from lepkit.channels import ChannelRepr, apply_channel
from lepkit.qubit import DrivenQubitParams, analytic_spectrum, model_liouvillian, reference_tables
from lepkit.spectral import biorthonormalize, detect_leps, eig_general, overlap_error_bar, perturb_first_order, rephased
from lepkit.superop import Superoperator, liouvillian_matrix, propagator, random_liouvillian_model
from lepkit.sweep import SweepConfig, run_sweep, spiraling_window, sweep_point, time_estimate
from lepkit.tomography import (
    LABELS,
    NoiseModel,
    equivalence_transforms,
    measure_method,
    method_table,
    probe_states,
    run_qpt,
)

OMEGA = 1.0
DT = 1 / 15


def driven(gx, gm=0.0):
    return liouvillian_matrix(model_liouvillian(DrivenQubitParams(OMEGA, gm, gx, 2.0)))


def multiset_distance(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def nonzero(ev, scale):
    ev = np.asarray(ev)
    return ev[np.abs(ev) > 1e-9 * scale]


def random_kraus(rng, k, d=2):
    X = rng.normal(size=(d * k, d)) + 1j * rng.normal(size=(d * k, d))
    V, _ = np.linalg.qr(X)
    return [V[l * d : (l + 1) * d, :] for l in range(k)]


def test_criterion_01_analytic_spectrum(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for gx in np.linspace(0, 4 * OMEGA, 30):
        p = DrivenQubitParams(OMEGA, 0.0, gx, 2 * OMEGA)
        res = run_qpt(model_liouvillian(p), "m1", NoiseModel())
        worst = max(worst, multiset_distance(res.eigensystem.eigenvalues, analytic_spectrum(p).lambdas))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 * OMEGA and elapsed < 5.0
    acceptance(1, ok, f"30-point noiseless sweep, max eigenvalue error {worst:.2e} (tol 1e-8), {elapsed:.2f} s (< 5 s)")
    assert ok


def test_criterion_02_lep_detection(acceptance):
    reps = detect_leps(driven, 0.0, 4 * OMEGA, 30)
    found = [r.parameter for r in reps]
    ok = len(reps) == 2
    if ok:
        err = max(abs(found[0] - 1.0), abs(found[1] - 3.0))
        ov = min(r.overlap for r in reps)
        ok = err < 1e-6 * OMEGA and ov >= 0.999
        detail = f"LEPs at {found[0]:.10f}, {found[1]:.10f}; error {err:.1e} (tol 1e-6); min overlap {ov:.10f}"
    else:
        detail = f"expected two LEPs, found {found}"
    acceptance(2, ok, detail)
    assert ok


def test_criterion_03_method_equivalence(acceptance):
    rng = np.random.default_rng(20240603)
    worst = 0.0
    for _ in range(100):
        L = liouvillian_matrix(random_liouvillian_model(2, rng))
        scale = np.linalg.norm(L.matrix, 2)
        S = propagator(L, DT)
        spectra = []
        for method in ("m1", "m2", "m3"):
            tomo = measure_method(S, method, NoiseModel(), DT)
            spectra.append(nonzero(np.linalg.eigvals(tomo.matrix), scale))
        if not len(spectra[0]) == len(spectra[1]) == len(spectra[2]):
            worst = np.inf
            break
        worst = max(worst, multiset_distance(spectra[0], spectra[1]), multiset_distance(spectra[0], spectra[2]))
    U1, U2 = equivalence_transforms()
    u2 = float(np.abs(U2.conj().T @ U2 - np.eye(4)).max())
    u1 = float(np.abs(U1 @ U1.T - np.eye(4)).max())
    ok = worst < 1e-8 and u2 < 1e-14 and u1 < 1e-14
    acceptance(
        3,
        ok,
        f"100 random generators, max M1/M2/M3 spectral mismatch {worst:.2e} (tol 1e-8); "
        f"U'' unitarity {u2:.1e}, U' row orthonormality {u1:.1e} (tol 1e-14)",
    )
    assert ok


def _up_to_transpose(a, b):
    return min(float(np.abs(a - b).max()), float(np.abs(a - b.T).max()))


def _charpoly_distance(M, roots):
    # symmetric functions of the spectrum stay well conditioned at the Jordan points,
    # where individual eigenvalues are only accurate to sqrt(machine epsilon)
    want = np.poly(np.concatenate([np.asarray(roots), np.zeros(M.shape[0] - len(roots))]))
    return float(np.abs(np.poly(M) - want).max())


def test_criterion_04_reference_tables(acceptance):
    xs = (0.0, 0.5, 1.0, 2.0, 3.0)
    l2_dev = {1: 0.0, 2: 0.0}
    l1_dev, spec_dev = 0.0, 0.0
    for case in (1, 2):
        for x in xs:
            ref = reference_tables(case, x, OMEGA)
            L = liouvillian_matrix(model_liouvillian(ref.params))
            l1, l2 = method_table(L, "m1"), method_table(L, "m2")
            l2_dev[case] = max(l2_dev[case], _up_to_transpose(l2, ref.m2_printed))
            if case == 1:
                l1_dev = max(l1_dev, _up_to_transpose(l1, 2 * ref.m1_printed))
            spec_dev = max(spec_dev, _charpoly_distance(l1, ref.eigenvalues))
    ok = max(l2_dev.values()) < 1e-12 and l1_dev < 1e-12 and spec_dev < 1e-10
    acceptance(
        4,
        ok,
        f"L'' vs printed up to transpose: case 1 {l2_dev[1]:.1e}, case 2 {l2_dev[2]:.2f} (tol 1e-12); "
        f"L' vs 2x printed (case 1) {l1_dev:.1e}; L' spectrum vs formulas {spec_dev:.1e} (tol 1e-10)",
    )
    assert ok


def test_criterion_05_channel_round_trip(acceptance):
    rng = np.random.default_rng(5)
    channels = []
    for _ in range(200):
        kraus = random_kraus(rng, int(rng.integers(1, 5)))
        channels.append(Superoperator(sum(np.kron(A, A.conj()) for A in kraus)))
    channels.append(propagator(driven(0.5), DT, "exact"))
    basis = probe_states()
    worst, unit = 0.0, 0.0
    for S in channels:
        cr = ChannelRepr.from_superoperator(S)
        unit = max(unit, cr.dilation.unitarity_error())
        for lab in LABELS:
            rho = basis.projector(lab)
            outs = [apply_channel(f, rho) for f in cr.forms()]
            worst = max(worst, max(float(np.abs(o - outs[0]).max()) for o in outs[1:]))
    ok = worst < 1e-10 and unit < 1e-10
    acceptance(5, ok, f"201 channels x 6 probes, max form disagreement {worst:.1e}, dilation unitarity {unit:.1e}")
    assert ok


def _exact_shift(M, es0, dL):
    ev = np.linalg.eigvals(M + dL)
    cost = np.abs(ev[:, None] - es0.eigenvalues[None, :])
    r, c = linear_sum_assignment(cost)
    out = np.empty(len(ev), dtype=complex)
    out[c] = ev[r]
    return out - es0.eigenvalues


def _random_dL(rng, norm):
    d = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    return norm * d / np.linalg.norm(d, 2)


def test_criterion_06_perturbation(acceptance):
    rng = np.random.default_rng(6)
    rel, ratio_min, rephase = 0.0, np.inf, 0.0
    for gx in (0.0, 2.0, 4.0):
        M = driven(gx).matrix
        es = biorthonormalize(eig_general(M))
        for _ in range(20):
            dL = _random_dL(rng, 1e-4)
            exact = _exact_shift(M, es, dL)
            first = perturb_first_order(es, dL).d_lambda
            rel = max(rel, float(np.max(np.abs(first - exact) / np.abs(exact))))
            half = _exact_shift(M, es, dL / 2)
            r_full = np.abs(first - exact).max()
            r_half = np.abs(perturb_first_order(es, dL / 2).d_lambda - half).max()
            ratio_min = min(ratio_min, float(r_full / r_half))
            robust = overlap_error_bar(es, dL, "phase_robust")
            es2 = rephased(es, rng.uniform(0, 2 * np.pi, 4))
            rephase = max(rephase, abs(overlap_error_bar(es2, dL, "phase_robust") - robust))
    ok = rel < 0.01 and ratio_min >= 3.5 and rephase < 1e-12
    acceptance(
        6,
        ok,
        f"max relative first-order error {rel:.1e} (tol 1e-2); min halving ratio {ratio_min:.2f} (>= 3.5); "
        f"phase_robust rephasing change {rephase:.1e} (tol 1e-12)",
    )
    assert ok


def _rms_error(gx, shots, seeds):
    p = DrivenQubitParams(OMEGA, 0.0, gx, 2 * OMEGA)
    ideal = np.array(analytic_spectrum(p).lambdas)
    model = model_liouvillian(p)
    sq = []
    for seed in seeds:
        ev = run_qpt(model, "m1", NoiseModel(0.0, shots, seed)).eigensystem.eigenvalues
        cost = np.abs(ev[:, None] - ideal[None, :])
        r, c = linear_sum_assignment(cost)
        sq.extend(cost[r, c][ideal[c] != 0] ** 2)
    return float(np.sqrt(np.mean(sq)))


def test_criterion_07_shot_noise_scaling(acceptance):
    seeds = range(50)
    ratios = {gx: _rms_error(gx, 10**3, seeds) / _rms_error(gx, 10**5, seeds) for gx in (0.0, 2.0)}
    ok = all(7.0 <= r <= 13.0 for r in ratios.values())
    detail = ", ".join(f"gamma_x={gx:g}: {r:.2f}" for gx, r in ratios.items())
    acceptance(7, ok, f"RMS error ratio 1e3/1e5 shots over 50 seeds: {detail} (want 10 +- 30%)")
    assert ok


def test_criterion_08_white_noise_window(acceptance):
    windows, contained = {}, True
    for w in (0.01, 0.02, 0.05, 0.1):
        cfg = SweepConfig(white_noise=w, shots=20000, seed=0)
        win = spiraling_window(run_sweep(cfg))
        windows[w] = win
        contained &= win is not None and 1.0 * OMEGA < win[0] and win[1] < 3.0 * OMEGA
    # how often the grid points just outside the ideal window are classified spiraling
    cfg = SweepConfig(white_noise=0.02, shots=20000)
    grid = cfg.grid()
    outer = [int(np.searchsorted(grid, 1.0)) - 1, int(np.searchsorted(grid, 3.0))]
    flips = {k: 0 for k in outer}
    for seed in range(50):
        c = SweepConfig(white_noise=0.02, shots=20000, seed=seed)
        for k in outer:
            flips[k] += sweep_point(c, k, grid[k]).regime == "spiraling"
    wins = "; ".join(f"w={w:g}: ({v[0]:.4f}, {v[1]:.4f})" if v else f"w={w:g}: none" for w, v in windows.items())
    rates = ", ".join(f"gamma_x={grid[k]:.4f} spirals in {n}/50 seeds" for k, n in flips.items())
    acceptance(8, contained, f"seed 0 windows {wins}; want inside (1, 3). At w=0.02, {rates}")
    assert contained


def test_criterion_09_time_estimates(acceptance):
    got = (time_estimate(72, 20000, 5.7e-6), time_estimate(36, 20000, 6.5e-6), time_estimate(18, 20000, 8.9e-6))
    ok = got == (8.208, 4.68, 3.204)
    acceptance(9, ok, f"time estimates {got} (want exactly (8.208, 4.68, 3.204))")
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path):
    outs = []
    env = {**os.environ, "PYTHONHASHSEED": "random"}
    for run in range(2):
        out = tmp_path / f"run{run}.csv"
        cmd = [sys.executable, "-m", "lepkit.cli", "sweep", "--workers", "8", "--seed", "7", "--out", str(out)]
        subprocess.run(cmd, check=True, capture_output=True, env=env)
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    acceptance(10, ok, f"two 8-worker CLI sweeps, {len(outs[0])} bytes, identical={outs[0] == outs[1]}")
    assert ok
