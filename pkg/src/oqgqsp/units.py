"""Unit conventions shared by every module.

Hamiltonians are kept in eV, times in fs, positions in dimensionless
mass-frequency-scaled normal coordinates.
"""

HBAR_EV_FS = 0.6582119569
EV_PER_WAVENUMBER = 1.239841984e-4


def wavenumber_to_ev(omega_cm):
    return omega_cm * EV_PER_WAVENUMBER


def phase_per_fs(energy_ev):
    """Angular frequency (rad/fs) of an energy given in eV."""
    return energy_ev / HBAR_EV_FS
