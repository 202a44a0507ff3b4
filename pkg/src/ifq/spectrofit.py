"""Nonlinear least-squares fits of spectroscopy data to either circuit model.

Datasets are flux-resolved transition frequencies with level labels,
loaded from CSV with header ``phi_ext_over_2pi,frequency_ghz,i,j[,weight]``.
Fits run a derivative-free simplex (every objective evaluation is an
eigensolve, so analytic gradients are unavailable) in log-parameter
space with deterministic multi-starts.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .circuit import CircuitParams, FluxBias, spectrum
from .fluxon import FluxonBasisConfig, FluxonParams, build_fluxon_hamiltonian

__all__ = [
    "SpectroscopyPoint",
    "FitResult",
    "DatasetError",
    "load_dataset",
    "synthesize_dataset",
    "residuals",
    "fit",
    "dual_fit_report",
    "DualFitReport",
]


class DatasetError(ValueError):
    """Malformed spectroscopy input; message carries the offending line."""


@dataclass(frozen=True)
class SpectroscopyPoint:
    phi_ext_over_2pi: float
    frequency: float        # GHz
    i: int
    j: int
    weight: float = 1.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")
        if not 0 <= self.i < self.j:
            raise ValueError(f"need 0 <= i < j, got ({self.i}, {self.j})")
        if self.weight < 0:
            raise ValueError("weight must be non-negative")


_HEADER = ("phi_ext_over_2pi", "frequency_ghz", "i", "j")


def load_dataset(source) -> list[SpectroscopyPoint]:
    """Read points from a CSV path, file object, or CSV text.

    Rows failing validation raise :class:`DatasetError` with their line
    number; duplicate (flux, transition) rows are averaged with their
    weights combined.  Output is sorted by flux, then level labels.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if "\n" not in text and "," not in text:
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DatasetError("empty dataset")
    header = tuple(c.strip() for c in rows[0])
    if header[:4] != _HEADER or len(header) > 5 or (len(header) == 5 and header[4] != "weight"):
        raise DatasetError(
            f"bad header {','.join(header)!r}; expected "
            "'phi_ext_over_2pi,frequency_ghz,i,j[,weight]'"
        )
    points: list[SpectroscopyPoint] = []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) not in (4, 5):
            raise DatasetError(f"line {ln}: expected 4 or 5 fields, got {len(row)}")
        try:
            x = float(row[0])
            freq = float(row[1])
            i, j = int(row[2]), int(row[3])
            w = float(row[4]) if len(row) == 5 else 1.0
            points.append(SpectroscopyPoint(x, freq, i, j, w))
        except (ValueError, DatasetError) as exc:
            raise DatasetError(f"line {ln}: {exc}") from None
    if not points:
        raise DatasetError("dataset has a header but no data rows")
    merged: dict[tuple, list[SpectroscopyPoint]] = {}
    for p in points:
        merged.setdefault((p.phi_ext_over_2pi, p.i, p.j), []).append(p)
    out = []
    for (x, i, j), group in merged.items():
        wsum = sum(p.weight for p in group)
        if len(group) == 1:
            out.append(group[0])
        else:
            favg = (sum(p.weight * p.frequency for p in group) / wsum
                    if wsum > 0 else float(np.mean([p.frequency for p in group])))
            out.append(SpectroscopyPoint(x, favg, i, j, wsum))
    out.sort(key=lambda p: (p.phi_ext_over_2pi, p.i, p.j))
    return out


def synthesize_dataset(
    params: CircuitParams,
    x_grid,
    transitions=((0, 1), (0, 2)),
    noise_ghz: float = 0.0,
    seed: int = 0,
    dim: int = 120,
) -> list[SpectroscopyPoint]:
    """Generate circuit-model data, optionally with Gaussian frequency noise."""
    rng = np.random.default_rng(seed)
    pts = []
    for x in np.atleast_1d(x_grid):
        sp = spectrum(params, FluxBias.from_flux_quanta(float(x)), dim)
        for (i, j) in transitions:
            f = sp.transition(i, j) + (rng.normal(0.0, noise_ghz) if noise_ghz else 0.0)
            pts.append(SpectroscopyPoint(float(x), f, i, j))
    return pts


@dataclass(frozen=True)
class FitResult:
    model: str                 # "full" | "fluxon"
    params: CircuitParams | FluxonParams
    rms_residual: float        # GHz, unweighted rms of (model - data)
    n_points: int
    iterations: int
    converged: bool

    def to_json_dict(self) -> dict:
        if self.model == "full":
            p = {"e_j": self.params.e_j, "e_c": self.params.e_c, "e_l": self.params.e_l}
        else:
            p = {"e_l_sigma": self.params.e_l_sigma, "eps1": self.params.eps1,
                 "eps2": self.params.eps2}
        return {
            "model": self.model,
            "params": p,
            "rms_residual": self.rms_residual,
            "n_points": self.n_points,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _model_frequencies(model: str, params, data: list[SpectroscopyPoint],
                       dim: int, m_max: int) -> np.ndarray:
    """Model transition frequency at each data point; one eigensolve per flux."""
    out = np.empty(len(data))
    by_flux: dict[float, list[int]] = {}
    for k, p in enumerate(data):
        by_flux.setdefault(p.phi_ext_over_2pi, []).append(k)
    for x, idxs in by_flux.items():
        bias = FluxBias.from_flux_quanta(x)
        if model == "full":
            sp = spectrum(params, bias, dim)
            energies = sp.energies
        else:
            energies = np.linalg.eigvalsh(
                build_fluxon_hamiltonian(params, bias, FluxonBasisConfig(m_max))
            )
        for k in idxs:
            p = data[k]
            if p.j >= len(energies):
                raise IndexError(
                    f"transition ({p.i},{p.j}) beyond the {len(energies)} computed levels"
                )
            out[k] = energies[p.j] - energies[p.i]
    return out


def residuals(model: str, params, data: list[SpectroscopyPoint],
              dim: int = 120, m_max: int = 3) -> np.ndarray:
    """sqrt(weight)-scaled (f_model - f_data) vector in GHz."""
    if model not in ("full", "fluxon"):
        raise ValueError("model must be 'full' or 'fluxon'")
    if not data:
        raise ValueError("empty dataset")
    f_model = _model_frequencies(model, params, data, dim, m_max)
    w = np.sqrt(np.array([p.weight for p in data]))
    f_data = np.array([p.frequency for p in data])
    return w * (f_model - f_data)


def _pack(model: str, params) -> np.ndarray:
    if model == "full":
        return np.log([params.e_j, params.e_c, params.e_l])
    return np.log([params.e_l_sigma, max(params.eps1, 1e-6), max(params.eps2, 1e-6)])


def _unpack(model: str, vec: np.ndarray):
    a, b, c = np.exp(vec)
    if model == "full":
        return CircuitParams(e_j=a, e_c=b, e_l=c)
    return FluxonParams(e_l_sigma=a, eps1=b, eps2=c)


def fit(
    model: str,
    data: list[SpectroscopyPoint],
    init,
    n_starts: int = 8,
    seed: int = 7,
    dim: int = 120,
    m_max: int = 3,
    freq_cutoff: float | None = None,
    max_iter: int = 400,
) -> FitResult:
    """Derivative-free simplex least squares from a given initialization.

    ``n_starts`` runs the simplex from the base init plus deterministic
    log-space perturbations (up to +-15%), returning the best by
    (rms, start index).  ``freq_cutoff`` drops data above a frequency
    (used to keep fluxon fits below the plasmon).  Non-convergence
    returns the best-found parameters with ``converged=False``.
    """
    if model not in ("full", "fluxon"):
        raise ValueError("model must be 'full' or 'fluxon'")
    used = [p for p in data if freq_cutoff is None or p.frequency < freq_cutoff]
    n_par = 3
    if len(used) < n_par:
        raise ValueError(f"need at least {n_par} usable points, have {len(used)}")

    import warnings as _w

    def objective(vec):
        try:
            with _w.catch_warnings():
                _w.simplefilter("ignore")  # transient unphysical iterates
                r = residuals(model, _unpack(model, vec), used, dim, m_max)
        except (ValueError, IndexError):
            return 1e6
        return float(r @ r)

    x0 = _pack(model, init)
    rng = np.random.default_rng(seed)
    starts = [x0]
    for _ in range(max(0, n_starts - 1)):
        starts.append(x0 + rng.uniform(-0.15, 0.15, size=n_par))
    best = None
    for k, s in enumerate(starts):
        res = minimize(
            objective, s, method="Nelder-Mead",
            options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": max_iter, "maxfev": 2 * max_iter},
        )
        key = (res.fun, k)
        if best is None or key < best[0]:
            best = (key, res)
    res = best[1]
    with _w.catch_warnings():
        _w.simplefilter("ignore")
        fitted = _unpack(model, res.x)
        final = residuals(model, fitted, used, dim, m_max)
    wsum = np.array([p.weight for p in used])
    plain = final / np.sqrt(np.where(wsum > 0, wsum, 1.0))
    return FitResult(
        model=model,
        params=fitted,
        rms_residual=float(np.sqrt(np.mean(plain**2))),
        n_points=len(used),
        iterations=int(res.nit),
        converged=bool(res.success),
    )


@dataclass(frozen=True)
class DualFitReport:
    """Full-vs-fluxon comparison per data point after fitting both models."""

    full_fit: FitResult
    fluxon_fit: FitResult
    rows: list[dict]          # x, i, j, f_data, f_full, f_fluxon, rel_diff, flagged
    flag_threshold: float

    @property
    def flagged(self) -> list[dict]:
        return [r for r in self.rows if r["flagged"]]

    def to_csv(self) -> str:
        cols = ("phi_ext_over_2pi", "i", "j", "f_data", "f_full", "f_fluxon",
                "rel_diff", "flagged")
        lines = [",".join(cols)]
        for r in self.rows:
            lines.append(
                f"{r['phi_ext_over_2pi']:.10g},{r['i']},{r['j']},{r['f_data']:.10g},"
                f"{r['f_full']:.10g},{r['f_fluxon']:.10g},{r['rel_diff']:.10g},"
                f"{int(r['flagged'])}"
            )
        return "\n".join(lines) + "\n"


def dual_fit_report(
    data: list[SpectroscopyPoint],
    init_full: CircuitParams,
    init_fluxon: FluxonParams | None = None,
    flag_threshold: float = 0.01,
    n_starts: int = 4,
    dim: int = 120,
    m_max: int = 3,
) -> DualFitReport:
    """Fit both models to the same data and tabulate per-point differences.

    The fluxon fit is restricted to frequencies below 0.85x the plasmon of
    the fitted circuit model (its domain of validity); points where the two
    fitted models disagree by more than ``flag_threshold`` (relative) are
    flagged, which is expected near the plasmon.
    """
    full_res = fit("full", data, init_full, n_starts=n_starts, dim=dim)
    if not full_res.converged:
        raise RuntimeError("full-model fit did not converge; cannot build the report")
    cutoff = 0.85 * full_res.params.plasmon_estimate
    if init_fluxon is None:
        from .fluxon import e_l_sigma_from_circuit

        els = e_l_sigma_from_circuit(full_res.params)
        init_fluxon = FluxonParams(e_l_sigma=els, eps1=0.1, eps2=0.01)
    fluxon_res = fit("fluxon", data, init_fluxon, n_starts=n_starts,
                     m_max=m_max, freq_cutoff=cutoff)
    if not fluxon_res.converged:
        raise RuntimeError("fluxon-model fit did not converge; cannot build the report")
    f_full = _model_frequencies("full", full_res.params, data, dim, m_max)
    f_flux = _model_frequencies("fluxon", fluxon_res.params, data, dim, m_max)
    rows = []
    for k, p in enumerate(data):
        rel = abs(f_full[k] - f_flux[k]) / f_full[k]
        rows.append(
            {
                "phi_ext_over_2pi": p.phi_ext_over_2pi,
                "i": p.i,
                "j": p.j,
                "f_data": p.frequency,
                "f_full": float(f_full[k]),
                "f_fluxon": float(f_flux[k]),
                "rel_diff": float(rel),
                "flagged": bool(rel > flag_threshold),
            }
        )
    return DualFitReport(full_fit=full_res, fluxon_fit=fluxon_res, rows=rows,
                         flag_threshold=flag_threshold)
