"""Physical constants (CODATA values from scipy) and unit helpers."""

from scipy import constants as _sc

C0 = _sc.c
EPS0 = _sc.epsilon_0
MU0 = _sc.mu_0
ETA0 = (MU0 / EPS0) ** 0.5
Q_E = -_sc.e
M_E = _sc.m_e

TWO_PI = 2.0 * _sc.pi
THZ = 1.0e12


def thz_to_rad(f_thz: float) -> float:
    """Cyclic frequency in THz to angular frequency in rad/s."""
    return TWO_PI * THZ * f_thz


def rad_to_thz(omega: float) -> float:
    return omega / (TWO_PI * THZ)


def cyclotron_from_bias(b_tesla: float) -> float:
    """Signed electron cyclotron frequency (q_e/m_e)·B_z; negative for B_z > 0."""
    return Q_E / M_E * b_tesla
