"""Unit conventions and conversions.

Energies are spectroscopic wavenumbers (cm^-1) and times are picoseconds.
A wavenumber E corresponds to an angular frequency 2*pi*c*E with c the speed
of light in cm/ps, so one cm^-1 advances phase by ~0.1884 rad/ps.  Rates
quoted in ps^-1 divide by the same factor to become wavenumbers.
"""

import math

TWO_PI = 2.0 * math.pi

#: speed of light in cm/ps
C_CM_PER_PS = 0.0299792458

#: angular frequency (rad/ps) of a 1 cm^-1 transition
RAD_PER_PS_PER_WAVENUMBER = TWO_PI * C_CM_PER_PS

#: Boltzmann constant over h*c, in cm^-1 per kelvin
KB_WAVENUMBER_PER_KELVIN = 0.695034800


def wavenumber_to_rad_per_ps(energy: float) -> float:
    """Angular frequency (rad/ps) of a transition of the given wavenumber."""
    return RAD_PER_PS_PER_WAVENUMBER * energy


def rate_ps_to_wavenumber(rate_per_ps: float) -> float:
    """Convert a rate in ps^-1 to the equivalent wavenumber (cm^-1)."""
    return rate_per_ps / RAD_PER_PS_PER_WAVENUMBER


def mode_period_ps(omega: float) -> float:
    """Oscillation period (ps) of a mode of wavenumber ``omega``."""
    if omega <= 0:
        raise ValueError(f"mode wavenumber must be positive, got {omega}")
    return 1.0 / (C_CM_PER_PS * omega)


def kelvin_to_wavenumber(temperature: float) -> float:
    """Thermal energy k_B*T in cm^-1 for a temperature in kelvin."""
    return KB_WAVENUMBER_PER_KELVIN * temperature


def thermal_occupation(omega: float, kbt: float) -> float:
    """Mean quanta (e^(omega/kBT) - 1)^-1 of a thermal mode; 0 in the T->0 limit."""
    if omega <= 0 or kbt <= 0:
        raise ValueError("omega and kBT must be positive")
    x = omega / kbt
    if x > 700.0:  # exp would overflow; occupation is numerically zero
        return 0.0
    return 1.0 / math.expm1(x)
