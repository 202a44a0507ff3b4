"""Fluxonium circuit spectra in a truncated harmonic-oscillator basis.

The circuit Hamiltonian (energies in GHz, i.e. E/h) is

    H = 4 E_C n^2 + (1/2) E_L phi^2 - E_J cos(phi - phi_ext),

with conjugate phase/charge operators satisfying [phi, n] = i.  The
operators are represented on the first ``dim`` number states of the
harmonic part, and the Josephson cosine is evaluated exactly through the
spectral decomposition of the (tridiagonal) phase operator, so there is
no Taylor-truncation bias even at large zero-point phase spread.

All frequencies returned here are plain (not angular) GHz.  Conversion
to angular units happens only at decoherence-rate boundaries, see
:mod:`ifq.decoherence`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

__all__ = [
    "CircuitParams",
    "FluxBias",
    "BasisConfig",
    "SpectrumResult",
    "OperatorKind",
    "FluxSweepResult",
    "ConvergenceError",
    "DiagonalizationError",
    "ResonantCavityError",
    "DEFAULT_DIM",
    "build_hamiltonian",
    "diagonalize",
    "spectrum",
    "matrix_element",
    "charge_matrix",
    "phase_matrix",
    "transition_frequency",
    "flux_sweep",
    "wavefunction",
    "convergence_required",
    "dispersive_shift_ratio",
]

DEFAULT_DIM = 120
#: dimensionless matrix elements below this are treated as numerical zero
NUMERICAL_ZERO = 1e-8


class ConvergenceError(RuntimeError):
    """Basis-size search exhausted its dimension cap without converging."""


class DiagonalizationError(RuntimeError):
    """Dense eigensolver failed; message carries matrix condition info."""


class ResonantCavityError(ValueError):
    """Cavity frequency too close to a qubit transition for dispersive theory."""


@dataclass(frozen=True)
class CircuitParams:
    """The three circuit energies, in GHz (E/h).

    e_j : Josephson energy of the junction
    e_c : charging energy e^2/2C of the total capacitance
    e_l : inductive energy of the superinductance
    """

    e_j: float
    e_c: float
    e_l: float

    def __post_init__(self):
        for name in ("e_j", "e_c", "e_l"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if not self.in_fluxonium_regime:
            warnings.warn(
                f"e_l={self.e_l} >= e_j={self.e_j}: outside the fluxonium regime "
                "(single-well potential); the Hamiltonian is still solvable",
                stacklevel=2,
            )

    @property
    def in_fluxonium_regime(self) -> bool:
        """Multi-well condition e_l < e_j."""
        return self.e_l < self.e_j

    @property
    def phi_zpf(self) -> float:
        """Zero-point phase spread (8 E_C / E_L)^(1/4)."""
        return (8.0 * self.e_c / self.e_l) ** 0.25

    @property
    def plasmon_estimate(self) -> float:
        """Single-well plasma frequency sqrt(8 E_J E_C), GHz."""
        return np.sqrt(8.0 * self.e_j * self.e_c)


@dataclass(frozen=True)
class FluxBias:
    """External flux threading the loop, in radians (2*pi = one flux quantum)."""

    phi_ext: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.phi_ext):
            raise ValueError(f"phi_ext must be finite, got {self.phi_ext}")

    @classmethod
    def from_flux_quanta(cls, x: float) -> "FluxBias":
        """Build from the dimensionless ratio phi_ext / 2*pi."""
        return cls(phi_ext=2.0 * np.pi * float(x))

    @property
    def over_two_pi(self) -> float:
        return self.phi_ext / (2.0 * np.pi)


@dataclass(frozen=True)
class BasisConfig:
    """Oscillator-basis truncation actually used for a spectrum."""

    dim: int
    phi_zpf: float

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if not self.phi_zpf > 0:
            raise ValueError("phi_zpf must be positive")

    @classmethod
    def from_params(cls, params: CircuitParams, dim: int = DEFAULT_DIM) -> "BasisConfig":
        return cls(dim=int(dim), phi_zpf=params.phi_zpf)


class OperatorKind(Enum):
    """Operators whose eigenbasis matrix elements are exposed."""

    CHARGE_N = "n"
    PHASE_PHI = "phi"


def _ladder_offdiag(dim: int) -> np.ndarray:
    """Off-diagonal sqrt(k+1) entries shared by the ladder-built operators."""
    return np.sqrt(np.arange(1, dim, dtype=float))


def _phi_offdiag(params: CircuitParams, dim: int) -> np.ndarray:
    # phi = phi_zpf/sqrt(2) (a + a\dagger): symmetric tridiagonal, zero diagonal
    return params.phi_zpf / np.sqrt(2.0) * _ladder_offdiag(dim)


def _phi_matrix_osc(params: CircuitParams, dim: int) -> np.ndarray:
    off = _phi_offdiag(params, dim)
    m = np.zeros((dim, dim))
    idx = np.arange(dim - 1)
    m[idx + 1, idx] = off
    m[idx, idx + 1] = off
    return m


def _charge_gen_osc(params: CircuitParams, dim: int) -> np.ndarray:
    """Real antisymmetric W with n = i*W; n = i/sqrt(2) (E_L/8E_C)^(1/4) (a\dagger - a)."""
    n_zpf = (params.e_l / (8.0 * params.e_c)) ** 0.25 / np.sqrt(2.0)
    off = n_zpf * _ladder_offdiag(dim)
    w = np.zeros((dim, dim))
    idx = np.arange(dim - 1)
    w[idx + 1, idx] = off
    w[idx, idx + 1] = -off
    return w


def _cos_sin_shifted_phi(params: CircuitParams, phi_ext: float, dim: int):
    """Exact operator cos/sin of (phi - phi_ext) via the phase-operator spectrum."""
    d, v = eigh_tridiagonal(np.zeros(dim), _phi_offdiag(params, dim))
    cos_m = (v * np.cos(d - phi_ext)) @ v.T
    sin_m = (v * np.sin(d - phi_ext)) @ v.T
    return cos_m, sin_m


def build_hamiltonian(
    params: CircuitParams,
    bias: FluxBias = FluxBias(),
    basis: BasisConfig | int | None = None,
) -> np.ndarray:
    """Dense real-symmetric Hamiltonian matrix in the oscillator basis, GHz.

    ``basis`` may be a :class:`BasisConfig`, a plain dimension, or None for
    the default dimension.
    """
    dim = _resolve_dim(basis)
    w = _charge_gen_osc(params, dim)
    phi = _phi_matrix_osc(params, dim)
    cos_m, _ = _cos_sin_shifted_phi(params, bias.phi_ext, dim)
    h = 4.0 * params.e_c * (-w @ w) + 0.5 * params.e_l * (phi @ phi) - params.e_j * cos_m
    return 0.5 * (h + h.T)  # symmetrize away rounding asymmetry


def _resolve_dim(basis: BasisConfig | int | None) -> int:
    if basis is None:
        return DEFAULT_DIM
    if isinstance(basis, BasisConfig):
        return basis.dim
    dim = int(basis)
    if dim < 2:
        raise ValueError(f"basis dimension must be >= 2, got {dim}")
    return dim


@dataclass(frozen=True)
class SpectrumResult:
    """Eigensolution of the circuit Hamiltonian.

    energies : ascending eigenenergies, GHz
    eigvecs  : real coefficient matrix, column j = oscillator-basis
               coefficients c_k of eigenstate j, sign-fixed so the
               largest-magnitude coefficient is positive
    params/bias/basis : inputs the spectrum was computed from; params is
               None for a stand-alone diagonalization of a bare matrix
    """

    energies: np.ndarray
    eigvecs: np.ndarray
    params: CircuitParams | None
    bias: FluxBias
    basis: BasisConfig | None
    _w: np.ndarray | None = field(repr=False, default=None)  # n = i*W, oscillator basis
    _phi: np.ndarray | None = field(repr=False, default=None)

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def transition(self, i: int, j: int) -> float:
        """E_j - E_i in GHz."""
        return float(self.energies[j] - self.energies[i])


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Rephase each column so its largest-magnitude entry is positive real."""
    kmax = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[kmax, np.arange(vecs.shape[1])]
    if np.iscomplexobj(vecs):
        phase = np.where(np.abs(lead) > 0, lead / np.where(np.abs(lead) > 0, np.abs(lead), 1.0), 1.0)
        return vecs / phase
    signs = np.sign(lead)
    signs[signs == 0] = 1.0
    return vecs * signs


def diagonalize(
    h: np.ndarray,
    params: CircuitParams | None = None,
    bias: FluxBias = FluxBias(),
    basis: BasisConfig | None = None,
) -> SpectrumResult:
    """Full eigensolution of a Hermitian matrix with a fixed sign convention.

    When ``params`` is given the result carries the operator generators so
    matrix elements can be formed without rebuilding.
    """
    h = np.asarray(h)
    hermiticity = np.max(np.abs(h - h.conj().T)) / max(np.max(np.abs(h)), 1e-300)
    if hermiticity > 1e-10:
        raise ValueError(f"input not Hermitian (relative asymmetry {hermiticity:.2e})")
    try:
        energies, vecs = np.linalg.eigh(h)
    except LinAlgError as exc:  # pragma: no cover - LAPACK failure is exotic
        cond = np.linalg.cond(h)
        raise DiagonalizationError(
            f"eigensolver failed on {h.shape[0]}x{h.shape[0]} matrix "
            f"(condition number {cond:.3e})"
        ) from exc
    vecs = _fix_signs(np.real_if_close(vecs))
    dim = h.shape[0]
    if params is None:
        return SpectrumResult(energies, vecs, None, bias, None)
    basis_eff = basis or BasisConfig.from_params(params, dim)
    return SpectrumResult(
        energies,
        vecs,
        params,
        bias,
        basis_eff,
        _charge_gen_osc(params, dim),
        _phi_matrix_osc(params, dim),
    )


def spectrum(
    params: CircuitParams,
    bias: FluxBias = FluxBias(),
    basis: BasisConfig | int | None = None,
) -> SpectrumResult:
    """Build and diagonalize in one step."""
    dim = _resolve_dim(basis)
    cfg = BasisConfig.from_params(params, dim)
    return diagonalize(build_hamiltonian(params, bias, cfg), params, bias, cfg)


def _require_generators(spec: SpectrumResult):
    if spec._w is None:
        raise ValueError("SpectrumResult lacks operator generators; build it via spectrum()")


def _check_levels(spec: SpectrumResult, *indices: int):
    for k in indices:
        if not 0 <= k < spec.n_levels:
            raise IndexError(f"level index {k} out of range (0..{spec.n_levels - 1})")


def matrix_element(spec: SpectrumResult, op: OperatorKind, i: int, j: int) -> float:
    """|<i|O|j>| for the charge or phase operator, dimensionless.

    The underlying eigenvector sign convention is fixed, so signed
    quantities derived from :func:`charge_matrix` / :func:`phase_matrix`
    are reproducible; this accessor returns the magnitude.
    """
    _require_generators(spec)
    _check_levels(spec, i, j)
    vi, vj = spec.eigvecs[:, i], spec.eigvecs[:, j]
    if op is OperatorKind.CHARGE_N:
        return float(abs(vi @ spec._w @ vj))
    if op is OperatorKind.PHASE_PHI:
        return float(abs(vi @ spec._phi @ vj))
    raise ValueError(f"unknown operator kind {op!r}")


def charge_matrix(spec: SpectrumResult, n_levels: int) -> np.ndarray:
    """Hermitian charge-operator matrix i*W in the lowest ``n_levels`` eigenstates."""
    _require_generators(spec)
    _check_levels(spec, n_levels - 1)
    v = spec.eigvecs[:, :n_levels]
    return 1j * (v.T @ spec._w @ v)


def phase_matrix(spec: SpectrumResult, n_levels: int) -> np.ndarray:
    """Real symmetric phase-operator matrix in the lowest ``n_levels`` eigenstates."""
    _require_generators(spec)
    _check_levels(spec, n_levels - 1)
    v = spec.eigvecs[:, :n_levels]
    return v.T @ spec._phi @ v


def transition_frequency(spec: SpectrumResult, i: int, j: int) -> float:
    """f_ij = E_j - E_i in GHz, for i < j."""
    _check_levels(spec, i, j)
    if i >= j:
        raise IndexError(f"need i < j, got ({i}, {j})")
    return spec.transition(i, j)


@dataclass(frozen=True)
class FluxSweepResult:
    """Per-flux-point transition frequencies and ground-state charge elements."""

    phi_over_2pi: np.ndarray          # (npts,)
    frequencies: np.ndarray           # (npts, levels) f_0k, GHz
    charge_elements: np.ndarray       # (npts, levels) |<0|n|k>|
    levels: int

    def csv_header(self) -> str:
        cols = ["phi_ext_over_2pi"]
        cols += [f"f0{k}_GHz" for k in range(1, self.levels + 1)]
        cols += [f"n0{k}" for k in range(1, self.levels + 1)]
        return ",".join(cols)

    def to_csv(self) -> str:
        lines = [self.csv_header()]
        for row in range(len(self.phi_over_2pi)):
            vals = [f"{self.phi_over_2pi[row]:.10g}"]
            vals += [f"{v:.10g}" for v in self.frequencies[row]]
            vals += [f"{v:.10g}" for v in self.charge_elements[row]]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def flux_sweep(
    params: CircuitParams,
    phi_ext_grid,
    levels: int = 2,
    basis: BasisConfig | int | None = None,
) -> FluxSweepResult:
    """Sweep external flux; each point is an independent full diagonalization.

    ``phi_ext_grid`` is in radians.  Emits the lowest ``levels`` transitions
    from the ground state and the matching charge matrix elements.
    """
    grid = np.atleast_1d(np.asarray(phi_ext_grid, dtype=float))
    if not np.all(np.isfinite(grid)):
        raise ValueError("flux grid must be finite")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    freqs = np.empty((len(grid), levels))
    elems = np.empty((len(grid), levels))
    for row, phi in enumerate(grid):
        sp = spectrum(params, FluxBias(phi), basis)
        for k in range(1, levels + 1):
            freqs[row, k - 1] = sp.transition(0, k)
            elems[row, k - 1] = matrix_element(sp, OperatorKind.CHARGE_N, 0, k)
    return FluxSweepResult(grid / (2.0 * np.pi), freqs, elems, levels)


def _hermite_functions(dim: int, y: np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions h_k(y), k < dim, on the grid y.

    Uses the stable normalized recurrence, so no Hermite-polynomial
    overflow occurs even for dim of several hundred.
    """
    out = np.empty((dim, len(y)))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if dim > 1:
        out[1] = np.sqrt(2.0) * y * out[0]
    for k in range(2, dim):
        out[k] = np.sqrt(2.0 / k) * y * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    return out


def wavefunction(spec: SpectrumResult, j: int, phi_grid) -> np.ndarray:
    """Real-space amplitude Psi_j(phi) = sum_k c_k psi_k(phi) on ``phi_grid``.

    The oscillator functions use the width set by phi_zpf, i.e.
    psi_0(phi) ~ exp(-phi^2 / (2 phi_zpf^2)).
    """
    _require_generators(spec)
    _check_levels(spec, j)
    grid = np.asarray(phi_grid, dtype=float)
    zpf = spec.basis.phi_zpf
    base = _hermite_functions(spec.basis.dim, grid / zpf) / np.sqrt(zpf)
    return spec.eigvecs[:, j] @ base


_CONVERGENCE_LADDER = (50, 100, 200, 400)


def convergence_required(
    params: CircuitParams,
    bias: FluxBias = FluxBias(),
    target_levels: int = 5,
    tol: float = 1e-5,
) -> BasisConfig:
    """Smallest ladder dimension whose lowest eigenvalues are stable.

    Returns the smallest dim in (50, 100, 200) such that doubling it moves
    each of the ``target_levels`` lowest eigenvalues by less than ``tol``
    (GHz).  Raises :class:`ConvergenceError` if 400 states are not enough.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    energies = {}

    def lowest(dim):
        if dim not in energies:
            energies[dim] = spectrum(params, bias, dim).energies[:target_levels]
        return energies[dim]

    for dim in _CONVERGENCE_LADDER[:-1]:
        drift = np.max(np.abs(lowest(dim) - lowest(2 * dim)))
        if drift < tol:
            return BasisConfig.from_params(params, dim)
    raise ConvergenceError(
        f"lowest {target_levels} levels not converged to {tol} GHz at dim=400 "
        f"(last doubling drift {drift:.3e} GHz)"
    )


def dispersive_shift_ratio(
    spec: SpectrumResult,
    coupling: OperatorKind = OperatorKind.CHARGE_N,
    f_cavity: float = 7.46,
    min_detuning: float = 0.05,
    levels: int = 15,
) -> float:
    """|chi_01 / chi_02| from second-order dispersive shifts, coupling-independent.

    chi_i = sum_j |O_ij|^2 * 2 f_ij / (f_ij^2 - f_cavity^2) up to a common
    coupling prefactor; the returned |(chi_1-chi_0)/(chi_2-chi_0)| cancels it.
    """
    _require_generators(spec)
    levels = min(levels, spec.n_levels)
    if levels < 3:
        raise ValueError("need at least 3 levels for the chi01/chi02 ratio")
    op = charge_matrix if coupling is OperatorKind.CHARGE_N else phase_matrix
    o = np.abs(op(spec, levels))
    e = spec.energies[:levels]
    chis = np.empty(3)
    for i in range(3):
        f_ij = e - e[i]
        gap = np.abs(np.abs(f_ij) - f_cavity)
        gap[i] = np.inf
        if np.min(gap) < min_detuning:
            j = int(np.argmin(gap))
            raise ResonantCavityError(
                f"cavity at {f_cavity} GHz within {min_detuning} GHz of "
                f"transition ({i},{j}) at {abs(f_ij[j]):.4f} GHz"
            )
        terms = o[i] ** 2 * 2.0 * f_ij / (f_ij**2 - f_cavity**2)
        terms[i] = 0.0
        chis[i] = np.sum(terms)
    pull_1, pull_2 = chis[1] - chis[0], chis[2] - chis[0]
    if abs(pull_2) < 1e-12 * max(abs(pull_1), 1e-30):
        raise ZeroDivisionError(
            "chi_02 pull vanishes (two-level-like system); ratio undefined"
        )
    return float(abs(pull_1 / pull_2))
