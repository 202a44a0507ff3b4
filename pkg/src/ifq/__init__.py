"""Integer-fluxonium qubit toolkit.

Library layout (one module per concern):

- :mod:`ifq.circuit`     circuit spectra, matrix elements, wavefunctions
- :mod:`ifq.fluxon`      flux-dual Cooper-pair-box effective model
- :mod:`ifq.decoherence` T1/dephasing budgets and design optimization
- :mod:`ifq.pulses`      shaped-pulse gate simulation and error metrics
- :mod:`ifq.rb`          Clifford randomized benchmarking
- :mod:`ifq.spectrofit`  spectroscopy-data fitting
- :mod:`ifq.devices`     built-in characterized device table
- :mod:`ifq.cli`         command-line front end (``ifq`` entry point)
"""

import os as _os

# Honor IFLUX_THREADS before any BLAS-backed import happens below.
_n = _os.environ.get("IFLUX_THREADS")
if _n:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _n)

__version__ = "0.1.0"

from .circuit import (  # noqa: E402
    BasisConfig,
    CircuitParams,
    FluxBias,
    OperatorKind,
    SpectrumResult,
    build_hamiltonian,
    convergence_required,
    diagonalize,
    dispersive_shift_ratio,
    flux_sweep,
    matrix_element,
    spectrum,
    transition_frequency,
    wavefunction,
)
from .decoherence import (  # noqa: E402
    BudgetResult,
    NoiseEnvironment,
    budget,
    dephasing_first_order,
    dephasing_second_order,
    flux_derivative,
    optimize_design,
    q1,
    q2_combine,
    t1_dielectric,
    thermal_photon_t2e,
)
from .devices import DEVICES, Device, get_device  # noqa: E402
from .fluxon import (  # noqa: E402
    FluxonBasisConfig,
    FluxonParams,
    build_fluxon_hamiltonian,
    dual_charge_element,
    e_l_sigma_from_circuit,
    fit_fluxon_to_full,
    perturbative_doublet,
)
from .pulses import (  # noqa: E402
    DriveSystem,
    GateUnitary,
    PulseShape,
    avg_gate_fidelity,
    calibrate_pi_pulse,
    detuning_error,
    envelope,
    error_vs_gate_time,
    incoherent_error,
    leakage_error,
    propagate,
)
from .rb import (  # noqa: E402
    RBResult,
    build_gate_set,
    clifford_table,
    fidelities_from_p,
    fit_decay,
    ideal_gate_set,
    random_sequence,
    simulate_rb,
)
from .spectrofit import (  # noqa: E402
    FitResult,
    SpectroscopyPoint,
    dual_fit_report,
    fit,
    load_dataset,
    synthesize_dataset,
)
