"""Built-in device parameter sets.

Single source for the measured/fitted constants used by the regression
tests and the CLI; everything else imports from here rather than
re-typing numbers.  Times in seconds, frequencies in GHz, angular rates
in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitParams
from .fluxon import FluxonParams

__all__ = ["Device", "DEVICES", "get_device", "device_names"]


@dataclass(frozen=True)
class Device:
    """One characterized device: circuit fit, fluxon fit, measured summary."""

    name: str
    circuit: CircuitParams
    fluxon: FluxonParams | None
    f01_measured: float | None   # GHz
    f12_measured: float | None   # GHz
    t1: float | None             # s
    t2_echo: float | None        # s
    t2_ramsey: float | None      # s
    q_diel: float                # dimensionless
    n01_sq: float                # |<0|n|1>|^2 quoted for the integer sweet spot
    n03_sq: float
    chi_ratio: float | None      # |chi_01/chi_02|
    f_cavity: float | None = None        # GHz
    kappa: float | None = None           # angular rad/s
    chi01: float | None = None           # angular rad/s


DEVICES: dict[str, Device] = {
    "A": Device(
        name="A",
        circuit=CircuitParams(e_j=4.12, e_c=1.64, e_l=0.18),
        fluxon=FluxonParams(e_l_sigma=0.163, eps1=0.308, eps2=0.073),
        f01_measured=3.20,
        f12_measured=0.103,
        t1=109e-6,
        t2_echo=175e-6,
        t2_ramsey=38e-6,
        q_diel=3.5e5,
        n01_sq=2.1e-2,
        n03_sq=1.6e-1,
        chi_ratio=3.0,
    ),
    "B": Device(
        name="B",
        circuit=CircuitParams(e_j=3.84, e_c=1.75, e_l=0.14),
        fluxon=FluxonParams(e_l_sigma=0.128, eps1=0.362, eps2=0.081),
        f01_measured=2.51,
        f12_measured=0.106,
        t1=101e-6,
        t2_echo=201e-6,
        t2_ramsey=61e-6,
        q_diel=3.6e5,
        n01_sq=1.8e-2,
        n03_sq=1.4e-1,
        chi_ratio=0.7,
    ),
    "C": Device(
        name="C",
        circuit=CircuitParams(e_j=7.20, e_c=2.04, e_l=0.18),
        fluxon=FluxonParams(e_l_sigma=0.175, eps1=0.190, eps2=0.006),
        f01_measured=3.45,
        f12_measured=0.024,
        t1=328e-6,
        t2_echo=81e-6,
        t2_ramsey=57e-6,
        q_diel=2.6e5,
        n01_sq=4.4e-3,
        n03_sq=2.2e-1,
        chi_ratio=0.1,
    ),
    "D": Device(
        name="D",
        circuit=CircuitParams(e_j=6.78, e_c=1.47, e_l=0.22),
        fluxon=FluxonParams(e_l_sigma=0.206, eps1=0.091, eps2=0.009),
        f01_measured=4.14,
        f12_measured=0.011,
        t1=255e-6,
        t2_echo=185e-6,
        t2_ramsey=118e-6,
        q_diel=1.0e5,
        n01_sq=3.1e-3,
        n03_sq=2.9e-1,
        chi_ratio=8.4,
        f_cavity=7.46,
        kappa=2 * np.pi * 15e6,
        chi01=2 * np.pi * 14.3e6,
    ),
    "fig1": Device(
        name="fig1",
        circuit=CircuitParams(e_j=5.0, e_c=1.5, e_l=0.2),
        fluxon=None,
        f01_measured=None,
        f12_measured=None,
        t1=None,
        t2_echo=None,
        t2_ramsey=None,
        q_diel=1.0e5,
        n01_sq=1.2e-2,
        n03_sq=2.2e-1,
        chi_ratio=None,
    ),
}


def device_names() -> list[str]:
    return list(DEVICES)


def get_device(name: str) -> Device:
    try:
        return DEVICES[name]
    except KeyError:
        raise KeyError(
            f"unknown device {name!r}; valid names: {', '.join(DEVICES)}"
        ) from None
