"""Error bars on a rate from white-noise-limited state preparation.

A prepared state ``(1 - w)|psi><psi| + w/d`` is reinterpreted as a
triangular mixture of ideal states ``|psi(gamma + g)>`` over
``g in [-gamma_L, gamma_R]`` with its peak at ``g = 0``.  The support is
chosen so that both descriptions give the same fidelity with the target:

    integral p(g) F(g) dg = 1 - w (1 - 1/d),    F(g) = |<psi(gamma)|psi(gamma + g)>|^2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.linalg

from .errors import InfeasibleFitError
from .qubit import DrivenQubitParams, model_liouvillian
from .superop import liouvillian_matrix, propagator

QUAD_TOL = 1e-12
ROOT_TOL = 1e-12
SQRT6 = np.sqrt(6.0)


@dataclass(frozen=True)
class FidelityProfile:
    """``F(g)`` on ``[lo, hi]`` with ``lo <= 0 <= hi``.  ``flat`` marks a gamma-independent family."""

    func: Callable[[float], float]
    lo: float
    hi: float
    nodes: tuple = ()
    flat: bool = False

    def __post_init__(self):
        if not self.lo <= 0 <= self.hi:
            raise ValueError(f"profile domain [{self.lo}, {self.hi}] must contain 0")
        f0 = self(0.0)
        if abs(f0 - 1) > 1e-12:
            raise ValueError(f"fidelity profile must satisfy F(0) = 1, got {f0}")

    def __call__(self, g):
        return float(self.func(g))

    @classmethod
    def from_table(cls, gamma_prime, fidelity):
        g = np.asarray(gamma_prime, dtype=float)
        f = np.asarray(fidelity, dtype=float)
        order = np.argsort(g)
        g, f = g[order], f[order]
        if np.any(f < -1e-12) or np.any(f > 1 + 1e-12):
            raise ValueError("tabulated fidelities must lie in [0, 1]")
        flat = bool(np.max(1 - f) < 1e-12)
        return cls(lambda x: np.interp(x, g, f), float(g[0]), float(g[-1]), tuple(g), flat)

    def table(self, points=201):
        g = np.linspace(self.lo, self.hi, points)
        return g, np.array([self(x) for x in g])


@dataclass(frozen=True)
class TriangularNoiseFit:
    gamma_left: float
    gamma_right: float
    b: float
    p_left: float
    p_right: float
    error_left: float
    error_right: float

    def density(self, g):
        if self.gamma_left + self.gamma_right == 0:
            return 0.0
        if -self.gamma_left <= g <= 0:
            return self.b * (1 + g / self.gamma_left) if self.gamma_left > 0 else 0.0
        if 0 <= g <= self.gamma_right:
            return self.b * (1 - g / self.gamma_right) if self.gamma_right > 0 else 0.0
        return 0.0


def _fit(gL, gR):
    if gL + gR == 0:
        return TriangularNoiseFit(0.0, 0.0, np.inf, 0.5, 0.5, 0.0, 0.0)
    b = 2.0 / (gL + gR)
    pL, pR = gL / (gL + gR), gR / (gL + gR)
    return TriangularNoiseFit(*(float(v) for v in (gL, gR, b, pL, pR, pL * gL / SQRT6, pR * gR / SQRT6)))


def _quad(f, a, b, profile):
    if b <= a:
        return 0.0
    if profile.nodes:
        # tabulated profiles are piecewise linear, so every integrand used here is
        # piecewise quadratic between nodes (and 0) and Simpson's rule is exact
        x = np.unique([a, b, *(t for t in (*profile.nodes, 0.0) if a < t < b)])
        mid = 0.5 * (x[:-1] + x[1:])
        fx = np.array([f(t) for t in x])
        fm = np.array([f(t) for t in mid])
        return float(np.sum(np.diff(x) * (fx[:-1] + 4 * fm + fx[1:]) / 6))
    pts = [0.0] if a < 0 < b else None
    val, _ = scipy.integrate.quad(f, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=500, points=pts)
    return val


def _left_mass(profile, gL):
    """``integral_{-gL}^0 (1 + g/gL)(1 - F(g)) dg``: infidelity weight of the left wing (b omitted)."""
    if gL == 0:
        return 0.0
    return _quad(lambda g: (1 + g / gL) * (1 - profile(g)), -gL, 0.0, profile)


def _right_mass(profile, gR):
    if gR == 0:
        return 0.0
    return _quad(lambda g: (1 - g / gR) * (1 - profile(g)), 0.0, gR, profile)


def _bisect(f, a, b, tol=ROOT_TOL):
    """Root of an increasing function with ``f(a) <= 0 <= f(b)``."""
    fa = f(a)
    if fa > 0:
        return a
    while b - a > tol * max(1.0, abs(b)):
        m = 0.5 * (a + b)
        if f(m) <= 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def gamma_error_bars(profile: FidelityProfile, w, d=2, mode="symmetric"):
    """Triangular support and error bars matching the white-noise fidelity.

    ``symmetric`` sets ``gamma_L = gamma_R``.  ``asymmetric`` closes the
    underdetermined problem by requiring equal infidelity mass
    ``integral p (1 - F)`` on both wings.
    """
    if not 0 <= w < 1:
        raise ValueError(f"white noise level must lie in [0, 1), got {w}")
    eps = w * (1 - 1 / d)
    if eps == 0:
        return _fit(0.0, 0.0)
    if profile.flat:
        raise InfeasibleFitError("fidelity profile is flat: the rate does not affect the prepared state")

    if mode == "symmetric":
        hmax = min(-profile.lo, profile.hi)

        def excess(h):  # integral p (1 - F) - eps, increasing in h
            if h == 0:
                return -eps
            return (_left_mass(profile, h) + _right_mass(profile, h)) / h - eps

        if hmax <= 0 or excess(hmax) < 0:
            raise InfeasibleFitError(f"no symmetric support within the profile domain reaches 1 - F = {eps}")
        h = _bisect(excess, 0.0, hmax)
        return _fit(h, h)

    if mode == "asymmetric":
        def right_for(gL):
            target = _left_mass(profile, gL)
            if _right_mass(profile, profile.hi) < target:
                raise InfeasibleFitError("right wing of the profile domain is too short to balance the left wing")
            return _bisect(lambda gR: _right_mass(profile, gR) - target, 0.0, profile.hi)

        def excess(gL):
            if gL == 0:
                return -eps
            gR = right_for(gL)
            return 4 * _left_mass(profile, gL) / (gL + gR) - eps

        gmax = -profile.lo
        try:
            top = excess(gmax)
        except InfeasibleFitError:
            top = None
        if top is None:
            # shrink the left end until the right wing can balance it
            gmax = _bisect(lambda g: _left_mass(profile, g) - _right_mass(profile, profile.hi), 0.0, -profile.lo)
            top = excess(gmax)
        if gmax <= 0 or top < 0:
            raise InfeasibleFitError(f"no asymmetric support within the profile domain reaches 1 - F = {eps}")
        gL = _bisect(excess, 0.0, gmax)
        return _fit(gL, right_for(gL))

    raise ValueError(f"unknown mode {mode!r}")


def fit_fidelity(fit: TriangularNoiseFit, profile: FidelityProfile):
    """``integral p F`` for a fit, for checking."""
    if fit.gamma_left + fit.gamma_right == 0:
        return 1.0
    return _quad(lambda g: fit.density(g) * profile(g), -fit.gamma_left, fit.gamma_right, profile)


def _purified(rho):
    """Canonical purification ``vec(sqrt(rho))`` of a normalized positive operator."""
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    vals, vecs = np.linalg.eigh(rho)
    root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    return root.reshape(-1)


def choi_state(p: DrivenQubitParams, dt=1 / 15):
    """Normalized Choi state of the exact short-time map: the default prepared state."""
    L = liouvillian_matrix(model_liouvillian(p))
    S = propagator(L, dt, "exact").matrix
    d = 2
    chi = S.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)
    return chi / d


def steady_state(p: DrivenQubitParams):
    L = liouvillian_matrix(model_liouvillian(p)).matrix
    null = scipy.linalg.null_space(L, rcond=1e-10)
    return null[:, 0].reshape(2, 2)


def model_fidelity_profile(
    p: DrivenQubitParams,
    state_prep="choi",
    parameter="gamma_x",
    span=1.0,
    points=201,
    dt=1 / 15,
):
    """Tabulated ``F(g)`` for a family of prepared states indexed by one rate.

    ``state_prep`` is ``"choi"`` (Choi state of the exact map), ``"steady"``
    (stationary state) or a callable returning a ket or a density matrix
    for given parameters.  Mixed states enter through their canonical
    purification.  Negative rates are excluded from the domain.
    """
    base = getattr(p, parameter)

    def prepare(value):
        q = DrivenQubitParams(**{**p.__dict__, parameter: value})
        if callable(state_prep):
            out = np.asarray(state_prep(q), dtype=complex)
        elif state_prep == "choi":
            out = choi_state(q, dt)
        elif state_prep == "steady":
            out = steady_state(q)
        else:
            raise ValueError(f"unknown state_prep {state_prep!r}")
        if out.ndim == 2:
            return _purified(out)
        return out / np.linalg.norm(out)

    lo = -min(span, base)
    g = np.unique(np.concatenate([np.linspace(lo, span, points), [0.0]]))
    psi0 = prepare(base)
    f = np.array([abs(np.vdot(psi0, prepare(base + x))) ** 2 for x in g])
    f[g == 0] = 1.0
    f = np.clip(f, 0.0, 1.0)
    return FidelityProfile.from_table(g, f)
