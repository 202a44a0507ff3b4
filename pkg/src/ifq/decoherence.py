"""Decoherence budgets: dielectric T1, 1/f-flux dephasing, thermal photons.

Rates follow the zero-temperature golden-rule and closed-form dephasing
estimates:

    1/T1   = 32 pi E_C |<0|n|1>|^2 / Q_diel          (E_C in Hz)
    Q1     = omega_01 T1
    1/Tphi = A   * |d omega_01 / d(phi_ext/2pi)|      (first order)
    1/Tphi = A^2 * |d^2 omega_01 / d(phi_ext/2pi)^2|  (second order)
    1/T2E  = nbar kappa chi01^2 / (kappa^2 + chi01^2),
             nbar = exp(-h f_cav / kB T)

Times in seconds; A is the 1/f flux-noise amplitude in flux quanta.
This module is where GHz spectra meet angular rad/s rates; every
conversion is explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.constants as const

from .circuit import (
    CircuitParams,
    FluxBias,
    OperatorKind,
    SpectrumResult,
    matrix_element,
    spectrum,
)

__all__ = [
    "NoiseEnvironment",
    "BudgetResult",
    "DesignCurve",
    "t1_dielectric",
    "qdiel_from_t1",
    "q1",
    "flux_derivative",
    "flux_derivative_exact",
    "dephasing_first_order",
    "dephasing_second_order",
    "thermal_photon_t2e",
    "q2_combine",
    "budget",
    "optimize_design",
]

GHZ_TO_ANGULAR = 2.0 * np.pi * 1e9  # GHz -> rad/s


@dataclass(frozen=True)
class NoiseEnvironment:
    """Noise strengths and (optional) readout-cavity block.

    q_diel      : dielectric quality factor 1/tan(delta_C)
    a_1f        : 1/f flux-noise amplitude, flux-quantum units
    temperature : K (cavity photon bath)
    f_cavity    : GHz
    kappa       : cavity linewidth, angular rad/s
    chi01       : dispersive shift, angular rad/s
    """

    q_diel: float
    a_1f: float
    temperature: float | None = None
    f_cavity: float | None = None
    kappa: float | None = None
    chi01: float | None = None

    def __post_init__(self):
        if not self.q_diel > 0:
            raise ValueError("q_diel must be positive")
        if self.a_1f < 0:
            raise ValueError("a_1f must be non-negative")
        for name in ("temperature", "f_cavity", "kappa", "chi01"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive when supplied")

    @property
    def has_cavity(self) -> bool:
        return None not in (self.temperature, self.f_cavity, self.kappa, self.chi01)


@dataclass(frozen=True)
class BudgetResult:
    """Combined decoherence budget at one bias point."""

    t1: float
    q1: float
    t_phi_first: float
    t_phi_second: float
    q_1f: float
    t2e_thermal: float
    q2: float

    def to_json_dict(self) -> dict:
        def enc(v):
            return None if np.isinf(v) else v

        return {k: enc(getattr(self, k)) for k in
                ("t1", "q1", "t_phi_first", "t_phi_second", "q_1f", "t2e_thermal", "q2")}


def t1_dielectric(spec: SpectrumResult, q_diel: float) -> float:
    """Dielectric-loss T1 in seconds from the golden rule."""
    if not q_diel > 0:
        raise ValueError("q_diel must be positive")
    n01 = matrix_element(spec, OperatorKind.CHARGE_N, 0, 1)
    if n01 < 1e-12:
        return np.inf
    return q_diel / (32.0 * np.pi * spec.params.e_c * 1e9 * n01**2)


def qdiel_from_t1(spec: SpectrumResult, t1: float) -> float:
    """Exact inverse of :func:`t1_dielectric`: Q_diel = 32 pi E_C |n01|^2 T1."""
    if not t1 > 0:
        raise ValueError("t1 must be positive")
    n01 = matrix_element(spec, OperatorKind.CHARGE_N, 0, 1)
    return 32.0 * np.pi * spec.params.e_c * 1e9 * n01**2 * t1


def q1(spec: SpectrumResult, t1: float) -> float:
    """Energy-relaxation quality factor omega_01 * T1."""
    if t1 < 0:
        raise ValueError("t1 must be non-negative")
    return spec.transition(0, 1) * GHZ_TO_ANGULAR * t1


class DerivativeNotConverged(RuntimeError):
    """Richardson halving did not stabilize the finite difference."""


def flux_derivative(
    params: CircuitParams,
    phi_ext: float = 0.0,
    order: int = 1,
    step: float = 1e-3,
    rel_tol: float = 0.01,
    max_halvings: int = 12,
    dim: int = 120,
) -> tuple[float, float, float]:
    """Central finite-difference derivative of f01 against x = phi_ext/2pi.

    Returns (value, step_used, error_estimate); value in GHz per x (order 1)
    or GHz per x^2 (order 2).  The step is Richardson-halved until the
    estimate drops below ``rel_tol`` of the value; raises
    :class:`DerivativeNotConverged` otherwise (e.g. when the requested step
    straddles the doublet avoided crossing -- reduce ``step``).
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x0 = phi_ext / (2.0 * np.pi)
    cache: dict[float, float] = {}

    def f01(x):
        if x not in cache:
            cache[x] = spectrum(params, FluxBias.from_flux_quanta(x), dim).transition(0, 1)
        return cache[x]

    def estimate(h):
        if order == 1:
            return (f01(x0 + h) - f01(x0 - h)) / (2.0 * h)
        return (f01(x0 + h) - 2.0 * f01(x0) + f01(x0 - h)) / h**2

    h = step
    for _ in range(max_halvings):
        d_h, d_h2 = estimate(h), estimate(h / 2.0)
        richardson = (4.0 * d_h2 - d_h) / 3.0
        err = abs(d_h2 - d_h)
        # absolute floor keeps symmetry-zero derivatives (sweet spot) convergent
        if err <= rel_tol * abs(richardson) + 1e-6:
            return richardson, h / 2.0, err
        h /= 2.0
    raise DerivativeNotConverged(
        f"order-{order} derivative at x={x0} not converged: last step {h:.2e}, "
        f"estimate {richardson:.4g} +- {err:.2g}; try a smaller starting step"
    )


def flux_derivative_exact(
    params: CircuitParams,
    phi_ext: float = 0.0,
    dim: int = 120,
    n_sum: int = 40,
) -> tuple[float, float]:
    """(d f01/dx, d^2 f01/dx^2) by Hellmann-Feynman / second-order theory.

    dH/dx = -2 pi E_J sin(phi - phi_ext) and d^2H/dx^2 = 4 pi^2 E_J
    cos(phi - phi_ext), so both derivatives come from a single
    diagonalization.  Unlike the finite difference this stays accurate
    when the doublet gap is narrower than any practical step, which is
    what the design-optimization sweep encounters at large E_J/E_C.
    """
    from .circuit import _cos_sin_shifted_phi  # shared operator construction

    sp = spectrum(params, FluxBias(phi_ext), dim)
    dim_eff = sp.basis.dim
    cos_m, sin_m = _cos_sin_shifted_phi(params, phi_ext, dim_eff)
    n_sum = min(n_sum, sp.n_levels)
    v = sp.eigvecs[:, :n_sum]
    hp = -2.0 * np.pi * params.e_j * (v.T @ sin_m @ v)
    hpp_diag = 4.0 * np.pi**2 * params.e_j * np.einsum("ki,kl,li->i", v, cos_m, v)
    out = []
    for i in (0, 1):
        de = sp.energies[i] - sp.energies[:n_sum]
        de[i] = np.inf
        d1 = hp[i, i]
        d2 = hpp_diag[i] + 2.0 * np.sum(hp[i, :] ** 2 / de)
        out.append((d1, d2))
    return out[1][0] - out[0][0], out[1][1] - out[0][1]


def dephasing_first_order(
    params: CircuitParams,
    phi_ext: float,
    a_1f: float,
    dim: int = 120,
) -> float:
    """First-order 1/f dephasing time 1/(A |d omega01/dx|), seconds."""
    if a_1f < 0:
        raise ValueError("a_1f must be non-negative")
    d1, _ = flux_derivative_exact(params, phi_ext, dim)
    if abs(d1) < 1e-9:  # symmetry zero at a sweet spot
        return np.inf
    rate = a_1f * abs(d1) * GHZ_TO_ANGULAR
    return np.inf if rate == 0.0 else 1.0 / rate


def dephasing_second_order(
    params: CircuitParams,
    phi_ext: float,
    a_1f: float,
    dim: int = 120,
) -> float:
    """Second-order 1/f dephasing time 1/(A^2 |d^2 omega01/dx^2|), seconds."""
    if a_1f < 0:
        raise ValueError("a_1f must be non-negative")
    _, d2 = flux_derivative_exact(params, phi_ext, dim)
    rate = a_1f**2 * abs(d2) * GHZ_TO_ANGULAR
    return np.inf if rate == 0.0 else 1.0 / rate


def ramsey_time_1f(params: CircuitParams, phi_ext: float, a_1f: float, dim: int = 120) -> float:
    """Combined 1/f dephasing time: first- and second-order rates added."""
    r1 = 1.0 / dephasing_first_order(params, phi_ext, a_1f, dim)
    r2 = 1.0 / dephasing_second_order(params, phi_ext, a_1f, dim)
    total = r1 + r2
    return np.inf if total == 0.0 else 1.0 / total


def thermal_photon_t2e(env: NoiseEnvironment) -> float:
    """Thermal-photon echo time from the cavity block, seconds."""
    if not env.has_cavity:
        raise ValueError("NoiseEnvironment lacks cavity parameters "
                         "(temperature, f_cavity, kappa, chi01)")
    nbar = np.exp(-const.h * env.f_cavity * 1e9 / (const.k * env.temperature))
    rate = nbar * env.kappa * env.chi01**2 / (env.kappa**2 + env.chi01**2)
    return np.inf if rate == 0.0 else 1.0 / rate


def q2_combine(q1_val: float, q_1f: float, caption_variant: bool = False) -> float:
    """Total decoherence quality factor.

    Default: 1/Q2 = 1/(2 Q1) + 1/Q_1f.  ``caption_variant`` switches to
    Q2 = (2/Q1 + 1/Q_1f)^-1 for curve comparison.
    """
    if q1_val <= 0 or q_1f <= 0:
        raise ValueError("quality factors must be positive")
    w1 = (2.0 / q1_val) if caption_variant else (0.5 / q1_val)
    return 1.0 / (w1 + 1.0 / q_1f)


def budget(
    params: CircuitParams,
    env: NoiseEnvironment,
    phi_ext: float = 0.0,
    dim: int = 120,
) -> BudgetResult:
    """Full budget at one bias point; infinite times mark absent channels."""
    sp = spectrum(params, FluxBias(phi_ext), dim)
    t1 = t1_dielectric(sp, env.q_diel)
    q1_val = q1(sp, t1) if np.isfinite(t1) else np.inf
    tp1 = dephasing_first_order(params, phi_ext, env.a_1f, dim)
    tp2 = dephasing_second_order(params, phi_ext, env.a_1f, dim)
    rate_phi = (0.0 if np.isinf(tp1) else 1.0 / tp1) + (0.0 if np.isinf(tp2) else 1.0 / tp2)
    t_phi = np.inf if rate_phi == 0.0 else 1.0 / rate_phi
    q_1f = sp.transition(0, 1) * GHZ_TO_ANGULAR * t_phi if np.isfinite(t_phi) else np.inf
    t2e = thermal_photon_t2e(env) if env.has_cavity else np.inf
    if np.isinf(q1_val) and np.isinf(q_1f):
        q2 = np.inf
    elif np.isinf(q1_val):
        q2 = q_1f
    elif np.isinf(q_1f):
        q2 = 2.0 * q1_val
    else:
        q2 = q2_combine(q1_val, q_1f)
    return BudgetResult(t1, q1_val, tp1, tp2, q_1f, t2e, q2)


@dataclass(frozen=True)
class DesignCurve:
    """Quality-factor curves along an E_J sweep at fixed E_C, E_L."""

    ej_over_ec: np.ndarray
    q1: np.ndarray
    q_1f: np.ndarray
    q2: np.ndarray
    argmax_ratio: float
    interior: bool

    def to_csv(self) -> str:
        lines = ["ej_over_ec,q1,q1f,q2"]
        for k in range(len(self.ej_over_ec)):
            lines.append(
                f"{self.ej_over_ec[k]:.10g},{self.q1[k]:.10g},"
                f"{self.q_1f[k]:.10g},{self.q2[k]:.10g}"
            )
        return "\n".join(lines) + "\n"


def optimize_design(
    e_c: float,
    e_l: float,
    env: NoiseEnvironment,
    ej_over_ec_range: tuple[float, float] = (2.0, 15.0),
    n_points: int = 41,
    dim: int = 110,
) -> DesignCurve:
    """Sweep E_J at fixed (E_C, E_L), integer flux, and locate the Q2 optimum.

    Uses full circuit spectra for |n01| and the exact second-order flux
    curvature for Q_1f.  A non-interior maximum sets ``interior=False``.
    """
    lo, hi = ej_over_ec_range
    if not (0 < lo < hi):
        raise ValueError("invalid ej_over_ec_range")
    if n_points < 40:
        raise ValueError("need at least 40 sweep points")
    ratios = np.geomspace(lo, hi, n_points)
    q1s = np.empty(n_points)
    q1fs = np.empty(n_points)
    q2s = np.empty(n_points)
    for k, r in enumerate(ratios):
        params = CircuitParams(e_j=r * e_c, e_c=e_c, e_l=e_l)
        sp = spectrum(params, FluxBias(), dim)
        f01 = sp.transition(0, 1)
        t1 = t1_dielectric(sp, env.q_diel)
        q1s[k] = f01 * GHZ_TO_ANGULAR * t1
        tphi = dephasing_second_order(params, 0.0, env.a_1f, dim)
        q1fs[k] = f01 * GHZ_TO_ANGULAR * tphi if np.isfinite(tphi) else np.inf
        if np.isinf(q1fs[k]):
            q2s[k] = 2.0 * q1s[k]
        else:
            q2s[k] = q2_combine(q1s[k], q1fs[k])
    kmax = int(np.argmax(q2s))
    return DesignCurve(
        ej_over_ec=ratios,
        q1=q1s,
        q_1f=q1fs,
        q2=q2s,
        argmax_ratio=float(ratios[kmax]),
        interior=bool(0 < kmax < n_points - 1),
    )
