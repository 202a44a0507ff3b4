"""Flux-dual Cooper-pair-box effective model of the integer fluxonium.

Low-energy physics in the fluxon-number basis |m>: a particle at the
bottom of the m-th Josephson well with inductive energy
(E_L_sigma/2)(2*pi*m - phi_ext)^2 and phenomenological tunneling
amplitudes eps1 (single fluxon) and eps2 (double fluxon),

    H = sum_m (E_Ls/2)(2 pi m - phi_ext)^2 |m><m|
        - (eps1/2) sum_m |m><m+-1|  +  (eps2/2) sum_m |m><m+-2|.

For eps2 = 0 this is the Cooper pair box with charge quantization traded
for flux quantization.  All energies in GHz.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .circuit import CircuitParams, FluxBias, spectrum

__all__ = [
    "FluxonParams",
    "FluxonBasisConfig",
    "FluxonFitResult",
    "build_fluxon_hamiltonian",
    "fluxon_spectrum",
    "perturbative_doublet",
    "dual_charge_element",
    "dual_phase_element",
    "e_l_sigma_from_circuit",
    "fit_fluxon_to_full",
]

#: perturbative expressions require alpha = eps1 / (4 pi^2 E_Ls) below this
ALPHA_MAX = 0.2


@dataclass(frozen=True)
class FluxonParams:
    """Effective-model energies in GHz.

    e_l_sigma : total linearized loop inductive energy
    eps1, eps2 : single- and double-fluxon tunneling amplitudes
    """

    e_l_sigma: float
    eps1: float
    eps2: float = 0.0

    def __post_init__(self):
        if not self.e_l_sigma > 0:
            raise ValueError(f"e_l_sigma must be positive, got {self.e_l_sigma}")
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("tunneling amplitudes must be non-negative")
        if self.eps2 > self.eps1:
            warnings.warn(
                f"eps2={self.eps2} > eps1={self.eps1}: outside the expected "
                "eps2 << eps1 hierarchy",
                stacklevel=2,
            )

    @property
    def alpha(self) -> float:
        """Small parameter eps1 / (4 pi^2 e_l_sigma)."""
        return self.eps1 / (4.0 * np.pi**2 * self.e_l_sigma)

    def require_perturbative(self):
        if self.alpha >= ALPHA_MAX:
            raise ValueError(
                f"alpha = {self.alpha:.3f} >= {ALPHA_MAX}: perturbative doublet "
                "expressions not applicable"
            )


@dataclass(frozen=True)
class FluxonBasisConfig:
    """Fluxon index cutoff; states m = -m_max .. +m_max are kept."""

    m_max: int = 3

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")

    @property
    def size(self) -> int:
        return 2 * self.m_max + 1


def build_fluxon_hamiltonian(
    fp: FluxonParams,
    bias: FluxBias = FluxBias(),
    cfg: FluxonBasisConfig = FluxonBasisConfig(),
) -> np.ndarray:
    """Dense real-symmetric matrix of the effective Hamiltonian, GHz."""
    m = np.arange(-cfg.m_max, cfg.m_max + 1, dtype=float)
    h = np.diag(0.5 * fp.e_l_sigma * (2.0 * np.pi * m - bias.phi_ext) ** 2)
    n = len(m)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = h[idx + 1, idx] = -fp.eps1 / 2.0
    idx2 = np.arange(n - 2)
    h[idx2, idx2 + 2] = h[idx2 + 2, idx2] = fp.eps2 / 2.0
    return h


def fluxon_spectrum(
    fp: FluxonParams,
    bias: FluxBias = FluxBias(),
    cfg: FluxonBasisConfig = FluxonBasisConfig(),
):
    """Eigenvalues and eigenvectors of the effective model, ascending."""
    return np.linalg.eigh(build_fluxon_hamiltonian(fp, bias, cfg))


def perturbative_doublet(fp: FluxonParams) -> tuple[float, float, float, float]:
    """(f01, f02, f12, alpha) at integer flux from the closed-form doublet.

    f01 = 2 pi^2 E_Ls + alpha*eps1 - eps2/2
    f02 = 2 pi^2 E_Ls + 2 alpha*eps1 + eps2/2
    f12 = alpha*eps1 + eps2
    """
    fp.require_perturbative()
    a = fp.alpha
    base = 2.0 * np.pi**2 * fp.e_l_sigma
    f01 = base + a * fp.eps1 - fp.eps2 / 2.0
    f02 = base + 2.0 * a * fp.eps1 + fp.eps2 / 2.0
    return f01, f02, f02 - f01, a


def dual_charge_element(fp: FluxonParams, e_c: float, sweet_spot: str = "integer") -> float:
    """|<0|n|1>| estimate at a sweet spot: (sqrt(2) pi / 8)(eps1/E_C) at
    integer flux, 1/sqrt(2) of that at half flux."""
    fp.require_perturbative()
    if e_c <= 0:
        raise ValueError("e_c must be positive")
    base = np.sqrt(2.0) * np.pi / 8.0 * fp.eps1 / e_c
    if sweet_spot == "integer":
        return base
    if sweet_spot == "half":
        return base / np.sqrt(2.0)
    raise ValueError(f"sweet_spot must be 'integer' or 'half', got {sweet_spot!r}")


def dual_phase_element(fp: FluxonParams, sweet_spot: str = "integer") -> float:
    """|<0|phi|1>| companion estimate: 2 pi alpha at integer flux, pi at half."""
    fp.require_perturbative()
    if sweet_spot == "integer":
        return 2.0 * np.pi * fp.alpha
    if sweet_spot == "half":
        return np.pi
    raise ValueError(f"sweet_spot must be 'integer' or 'half', got {sweet_spot!r}")


def e_l_sigma_from_circuit(params: CircuitParams) -> float:
    """Harmonic combination (E_L^-1 + E_J^-1)^-1, GHz."""
    return 1.0 / (1.0 / params.e_l + 1.0 / params.e_j)


@dataclass(frozen=True)
class FluxonFitResult:
    params: FluxonParams
    rms_residual: float      # GHz (absolute) or fractional if relative=True
    n_points: int
    relative: bool

    def to_json_dict(self) -> dict:
        return {
            "e_l_sigma": self.params.e_l_sigma,
            "eps1": self.params.eps1,
            "eps2": self.params.eps2,
            "rms_residual": self.rms_residual,
        }


def _fit_targets(params: CircuitParams, xs: np.ndarray, dim: int, plasmon_cut: float):
    """Full-model doublet transitions on the grid, masked below the plasmon."""
    rows = []
    for x in xs:
        sp = spectrum(params, FluxBias.from_flux_quanta(x), dim)
        for lev in (1, 2):
            f = sp.transition(0, lev)
            if f < plasmon_cut:
                rows.append((x, lev, f))
    return rows


def fit_fluxon_to_full(
    params: CircuitParams,
    window: float = 0.25,
    n_points: int = 13,
    m_max: int = 3,
    relative: bool = False,
    dim: int = 120,
) -> FluxonFitResult:
    """Least-squares (E_Ls, eps1, eps2) matching the two lowest circuit-model
    transitions over phi_ext/2pi in [-window, window].

    Full-model points at or above 0.85x the plasmon estimate are excluded.
    ``relative=True`` fits fractional residuals, appropriate for windows
    reaching half flux where the branch frequencies span more than a
    decade (the lower branch collapses to the eps1-scale gap there).
    """
    if not 0 < window <= 0.5:
        raise ValueError("window must lie in (0, 0.5] flux quanta")
    if n_points < 3:
        raise ValueError("need at least 3 flux points")
    xs = np.linspace(-window, window, n_points)
    cut = 0.85 * params.plasmon_estimate
    targets = _fit_targets(params, xs, dim, cut)
    if len(targets) < 4:
        raise ValueError("too few usable transitions below the plasmon")
    cfg = FluxonBasisConfig(m_max)

    def resid(p):
        fp = _clip_params(p)
        out = np.empty(len(targets))
        for k, (x, lev, f) in enumerate(targets):
            e = np.linalg.eigvalsh(
                build_fluxon_hamiltonian(fp, FluxBias.from_flux_quanta(x), cfg)
            )
            model = e[lev] - e[0]
            out[k] = (model - f) / (f if relative else 1.0)
        return out

    def _clip_params(p):
        return FluxonParams(max(p[0], 1e-6), max(p[1], 0.0), max(p[2], 0.0))

    sp0 = spectrum(params, FluxBias(), dim)
    f12_0 = sp0.transition(1, 2)
    els0 = e_l_sigma_from_circuit(params)
    e1_0 = np.sqrt(max(f12_0, 1e-9) * 2.0 * np.pi**2 * els0)
    best = None
    for scale in (1.0, 2.5, 0.4):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # transient eps2>eps1 iterates
            res = least_squares(
                resid,
                [els0, scale * e1_0, f12_0 / 2.0],
                bounds=([1e-6, 0.0, 0.0], [10.0, 5.0, 5.0]),
            )
        if best is None or res.cost < best.cost:
            best = res
    if not best.success:
        raise RuntimeError(
            f"fluxon fit did not converge; best residual rms "
            f"{np.sqrt(np.mean(best.fun**2)):.3e}"
        )
    fitted = _clip_params(best.x)  # FluxonParams itself warns if eps2 > eps1
    return FluxonFitResult(
        params=fitted,
        rms_residual=float(np.sqrt(np.mean(best.fun**2))),
        n_points=len(targets),
        relative=relative,
    )
