"""Closed-form quantities for the undamped vehicle-beam system.

Provides mode-shape wrappers with analytic derivatives, equivalent modal
parameters by adaptive quadrature, the cross-bridge normalisation factor,
the ideal position-domain damage feature, and the exact modal solution for
the chassis acceleration over an undamaged span (the oracle the FEM is
cross-validated against).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericalError, ResonanceError
from .fem import ModalResult
from .model import G, BridgeSpec, DamageSpec, VehicleSpec, stiffness_profile

_RESONANCE_REL = 1e-6


class SineMode:
    """n-th pinned-pinned mode sin(n*pi*x/L) with exact derivatives."""

    def __init__(self, n: int, L: float):
        self.n = n
        self.L = L
        self._k = n * math.pi / L

    def value(self, x):
        return np.sin(self._k * np.asarray(x, dtype=float))

    def slope(self, x):
        return self._k * np.cos(self._k * np.asarray(x, dtype=float))

    def curvature(self, x):
        return -self._k**2 * np.sin(self._k * np.asarray(x, dtype=float))


class SplineMode:
    """Mode shape interpolated from nodal values with a natural cubic spline.

    Natural end conditions (zero curvature at the pins) match the physical
    boundary conditions of a simply supported beam. Values are rescaled to
    unit peak so the shape is comparable to :class:`SineMode`.
    """

    def __init__(self, node_x: np.ndarray, values: np.ndarray):
        peak = np.abs(values).max()
        if peak == 0:
            raise DomainError("mode shape is identically zero")
        self.L = float(node_x[-1])
        self._spline = CubicSpline(node_x, values / peak, bc_type="natural")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)

    @classmethod
    def from_modal(cls, modal: ModalResult, mode: int = 0) -> "SplineMode":
        return cls(modal.node_x, modal.shapes[:, mode])

    def value(self, x):
        return self._spline(x)

    def slope(self, x):
        return self._d1(x)

    def curvature(self, x):
        return self._d2(x)


def mode_shape_sine(n: int, x, L: float):
    """sin(n*pi*x/L); raises if x leaves [0, L]."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(x_arr > L):
        raise DomainError(f"position outside span [0, {L}]")
    out = np.sin(n * math.pi * x_arr / L)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class ModalParams:
    """Equivalent mass, stiffness and resonant frequency of one mode."""

    n: int
    m_tilde: float
    k_tilde: float
    omega_tilde: float
    omega_d: Optional[float] = None   # n*pi*v/L when a speed is supplied


def modal_params(bridge: BridgeSpec, damage: DamageSpec, shape, n: int,
                 speed: Optional[float] = None) -> ModalParams:
    """Project distributed mass/stiffness onto a mode shape.

    m~ = int rhoA * phi^2 dx, k~ = int EI(x) * phi''^2 dx, both by adaptive
    quadrature split at the stiffness discontinuities.
    """
    L = bridge.L
    pts = []
    if damage.R_s > 0:
        pts = [damage.x_s - damage.l_s / 2, damage.x_s + damage.l_s / 2]

    def mass_integrand(x):
        return bridge.rhoA * shape.value(x) ** 2

    def stiff_integrand(x):
        return stiffness_profile(bridge, damage, x) * shape.curvature(x) ** 2

    kwargs = dict(epsrel=1e-8, limit=200)
    m_val, m_err = quad(mass_integrand, 0.0, L, points=pts or None, **kwargs)
    k_val, k_err = quad(stiff_integrand, 0.0, L, points=pts or None, **kwargs)
    if m_err > 1e-6 * abs(m_val) or k_err > 1e-6 * abs(k_val):
        raise NumericalError("modal-parameter quadrature did not converge")
    omega = math.sqrt(k_val / m_val)
    omega_d = n * math.pi * speed / L if speed is not None else None
    return ModalParams(n=n, m_tilde=m_val, k_tilde=k_val, omega_tilde=omega,
                       omega_d=omega_d)


def _guard_resonance(*pairs: tuple[float, float]) -> None:
    for a, b in pairs:
        if abs(a - b) <= _RESONANCE_REL * max(abs(a), abs(b)):
            raise ResonanceError(f"driving frequency at resonance ({a:.6g} ~ {b:.6g})")


def c51_value(m_v: float, omega_v: float, omega_t1: float, k_t1: float,
              v: float, L: float) -> float:
    """Normalisation gain of the twice-driving-frequency response component.

    Evaluates w_v^2 * w~1^2 * m_v * g / (k~1 * (w~1^2 - w_d1^2)) *
    w_d2^2 / (w_v^2 - w_d2^2). Dividing the band-limited reconstruction by
    this gain yields a dimensionless series comparable across bridges.
    """
    omega_d1 = math.pi * v / L
    omega_d2 = 2 * math.pi * v / L
    _guard_resonance((omega_t1**2, omega_d1**2), (omega_v**2, omega_d2**2))
    return (omega_v**2 * omega_t1**2 * m_v * G) / (k_t1 * (omega_t1**2 - omega_d1**2)) \
        * omega_d2**2 / (omega_v**2 - omega_d2**2)


def c51_factor(bridge: BridgeSpec, vehicle: VehicleSpec) -> float:
    """The normalisation gain evaluated with undamaged modal parameters."""
    m_t1 = bridge.rhoA * bridge.L / 2
    omega_t1 = 2 * math.pi * bridge.f1
    k_t1 = omega_t1**2 * m_t1
    return c51_value(vehicle.m_v, vehicle.omega_v, omega_t1, k_t1, vehicle.v, bridge.L)


def ideal_feature(shape, v: float, t):
    """phi(vt)*phi''(vt) + phi'(vt)^2 with time derivatives through x = v*t.

    For the undamaged sine shape this reduces to (pi*v/L)^2 * cos(2*pi*v*t/L).
    """
    x = v * np.asarray(t, dtype=float)
    val = shape.value(x)
    d1 = v * shape.slope(x)
    d2 = v * v * shape.curvature(x)
    return val * d2 + d1 * d1


def feature_scale(v: float, L: float) -> float:
    """Gain linking the ideal feature to the normalised reconstruction.

    The twice-driving-frequency response amplitude equals the normalisation
    gain times y_d/(2*w_d1^2); this returns 2*w_d1^2 = 2*(pi*v/L)^2.
    """
    return 2.0 * (math.pi * v / L) ** 2


def normalized_ideal_feature(shape, v: float, L: float, t):
    """Dimensionless single-mode target for the normalised feature series."""
    return ideal_feature(shape, v, t) / feature_scale(v, L)


@dataclass(frozen=True)
class SolutionCoeffs:
    """Component table of the closed-form chassis acceleration.

    ``components`` lists (amplitude, circular frequency) cosine pairs;
    ``c1``..``c5`` give the per-mode coefficient groups (vehicle-frequency
    amplitude, shape-modulated pair and the twice-driving-frequency gain).
    """

    omega_v: float
    components: tuple[tuple[float, float], ...]
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    c5: np.ndarray


def _mode_component_amps(bridge: BridgeSpec, vehicle: VehicleSpec, n: int):
    """Cosine amplitudes the n-th mode contributes to the contact displacement."""
    L, v = bridge.L, vehicle.v
    omega_d = n * math.pi * v / L
    omega_t = 2 * math.pi * bridge.natural_frequency(n)
    m_t = bridge.rhoA * L / 2
    _guard_resonance((omega_t**2, omega_d**2))
    delta = vehicle.m_v * G / (m_t * (omega_t**2 - omega_d**2))
    r = omega_d / omega_t
    const = delta / 2
    pairs = [(-delta / 2, 2 * omega_d),
             (-delta * r / 2, omega_t - omega_d),
             (delta * r / 2, omega_t + omega_d)]
    return const, pairs


def solution_coeffs(bridge: BridgeSpec, vehicle: VehicleSpec,
                    n_modes: int) -> SolutionCoeffs:
    """Exact cosine decomposition of the undamaged chassis acceleration.

    Zero initial conditions, no damping. The chassis filters each contact
    displacement component A*cos(Om*t) with gain w_v^2/(w_v^2 - Om^2); the
    homogeneous part restores y(0) = 0.
    """
    wv = vehicle.omega_v
    comps: list[tuple[float, float]] = []
    c1 = np.zeros(n_modes)
    c2 = np.zeros(n_modes)
    c3 = np.zeros(n_modes)
    c4 = np.zeros(n_modes)
    c5 = np.zeros(n_modes)
    for n in range(1, n_modes + 1):
        const, pairs = _mode_component_amps(bridge, vehicle, n)
        omega_d = n * math.pi * vehicle.v / bridge.L
        B_n = -const
        acc_amps = []
        for A, Om in pairs:
            _guard_resonance((wv**2, Om**2))
            y_amp = A * wv**2 / (wv**2 - Om**2)
            comps.append((-(Om**2) * y_amp, Om))
            B_n -= y_amp
            acc_amps.append(-(Om**2) * y_amp)
        # pairs order: twice-driving, lower shifted, upper shifted
        c5[n - 1] = acc_amps[0] / omega_d**2
        c2[n - 1] = acc_amps[1] - acc_amps[2]
        c3[n - 1] = (acc_amps[1] + acc_amps[2]) / omega_d
        c1[n - 1] = -(wv**2) * B_n
        comps.append((c1[n - 1], wv))
    return SolutionCoeffs(omega_v=wv, components=tuple(comps),
                          c1=c1, c2=c2, c3=c3, c4=c4, c5=c5)


def analytic_vehicle_acceleration(bridge: BridgeSpec, vehicle: VehicleSpec,
                                  n_modes: int, t) -> np.ndarray:
    """Chassis acceleration over an undamaged span, from the modal series."""
    coeffs = solution_coeffs(bridge, vehicle, n_modes)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    for amp, omega in coeffs.components:
        out += amp * np.cos(omega * t_arr)
    return out


def band_component_amplitudes(bridge: BridgeSpec, vehicle: VehicleSpec,
                              f_lo: float, f_hi: float,
                              n_modes: int = 12) -> list[tuple[float, float]]:
    """(amplitude, frequency Hz) of solution components inside [f_lo, f_hi].

    These are the twice-driving-frequency terms of successive modes; the
    oracle for what a band-limited reconstruction should contain over an
    undamaged span.
    """
    coeffs = solution_coeffs(bridge, vehicle, n_modes)
    out = []
    for amp, omega in coeffs.components:
        f = omega / (2 * math.pi)
        if f_lo <= f <= f_hi:
            out.append((amp, f))
    return out


def analytic_band_feature(bridge: BridgeSpec, vehicle: VehicleSpec,
                          f_lo: float, f_hi: float, t,
                          n_modes: int = 12) -> np.ndarray:
    """Band content of the closed-form acceleration divided by the
    undamaged normalisation gain: the oracle for an extracted series."""
    gain = c51_factor(bridge, vehicle)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    for amp, f in band_component_amplitudes(bridge, vehicle, f_lo, f_hi, n_modes):
        out += amp * np.cos(2 * math.pi * f * t_arr)
    return out / gain


def moving_load_deflection(bridge: BridgeSpec, load: float, speed: float,
                           x: float, t, n_modes: int = 10) -> np.ndarray:
    """Deflection under a constant force crossing the span (modal series).

    Independent closed form used to cross-check the FEM in the small-mass
    limit: u(x,t) = sum phi_n(x) * D_n * (sin(w_dn t) - r_n sin(w~n t)).
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    L = bridge.L
    for n in range(1, n_modes + 1):
        omega_d = n * math.pi * speed / L
        omega_t = 2 * math.pi * bridge.natural_frequency(n)
        m_t = bridge.rhoA * L / 2
        delta = load / (m_t * (omega_t**2 - omega_d**2))
        r = omega_d / omega_t
        out += math.sin(n * math.pi * x / L) * delta * (
            np.sin(omega_d * t_arr) - r * np.sin(omega_t * t_arr))
    return out
