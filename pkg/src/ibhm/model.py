"""Domain types and parameter derivations shared by every other module.

All types are frozen dataclasses: safe to share across worker processes.
The five-bridge / single-vehicle study configuration is exposed through
:func:`paper_bridges` and :func:`paper_vehicle`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DomainError, ValidationError

G = 9.81  # gravity (m/s^2)

_REL_TOL = 1e-9


def derive_rhoA(L: float, EI0: float, f1: float) -> float:
    """Mass per unit length of a simply supported beam with first frequency ``f1``.

    Inverts (pi/L)^2 * sqrt(EI0/rhoA) = 2*pi*f1.
    """
    if L <= 0 or EI0 <= 0 or f1 <= 0:
        raise ValidationError(f"all inputs must be positive, got L={L}, EI0={EI0}, f1={f1}")
    return EI0 * math.pi**2 / (4.0 * f1**2 * L**4)


def derive_kv(m_v: float, f_v: float) -> float:
    """Spring stiffness of a single-DOF oscillator with mass ``m_v`` and frequency ``f_v``."""
    if m_v <= 0 or f_v <= 0:
        raise ValidationError(f"all inputs must be positive, got m_v={m_v}, f_v={f_v}")
    return m_v * (2.0 * math.pi * f_v) ** 2


@dataclass(frozen=True)
class BridgeSpec:
    """Geometry and material of one simply supported beam.

    ``rhoA`` is derived, not free: it must satisfy the pinned-pinned
    frequency relation for (L, EI0, f1). ``freq_law`` is the coefficient c
    in f_n = c * n**2 (Hz).
    """

    id: str
    L: float
    EI0: float
    rhoA: float
    f1: float
    freq_law: float

    def __post_init__(self):
        for name in ("L", "EI0", "rhoA", "f1"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{self.id}: {name} must be positive")
        f1_implied = (math.pi / self.L) ** 2 * math.sqrt(self.EI0 / self.rhoA) / (2 * math.pi)
        if abs(f1_implied - self.f1) > _REL_TOL * self.f1:
            raise ValidationError(
                f"{self.id}: rhoA inconsistent with f1 ({f1_implied:.9g} != {self.f1:.9g})"
            )

    @classmethod
    def from_frequency(cls, id: str, L: float, EI0: float, f1: float,
                       freq_law: Optional[float] = None) -> "BridgeSpec":
        """Build a spec deriving ``rhoA`` from (L, EI0, f1)."""
        return cls(id=id, L=L, EI0=EI0, rhoA=derive_rhoA(L, EI0, f1), f1=f1,
                   freq_law=f1 if freq_law is None else freq_law)

    def natural_frequency(self, n: int) -> float:
        """f_n = freq_law * n**2 (Hz)."""
        return self.freq_law * n * n


@dataclass(frozen=True)
class VehicleSpec:
    """Sprung-mass vehicle: mass on a spring(+damper) moving at constant speed."""

    m_v: float
    f_v: float
    k_v: float
    v: float
    c_v: float = 0.0

    def __post_init__(self):
        if self.m_v <= 0 or self.v <= 0 or self.f_v <= 0:
            raise ValidationError("m_v, f_v and v must be positive")
        if self.c_v < 0:
            raise ValidationError("c_v must be non-negative")
        if abs(self.k_v - derive_kv(self.m_v, self.f_v)) > _REL_TOL * self.k_v:
            raise ValidationError("k_v inconsistent with m_v*(2*pi*f_v)^2")

    @classmethod
    def from_frequency(cls, m_v: float, f_v: float, v: float, c_v: float = 0.0) -> "VehicleSpec":
        return cls(m_v=m_v, f_v=f_v, k_v=derive_kv(m_v, f_v), v=v, c_v=c_v)

    @property
    def omega_v(self) -> float:
        """Natural circular frequency (rad/s)."""
        return 2.0 * math.pi * self.f_v


@dataclass(frozen=True)
class DamageSpec:
    """Local stiffness reduction: EI drops by factor (1 - R_s) on [x_s - l_s/2, x_s + l_s/2].

    ``R_s = 0`` encodes the undamaged state; ``x_s`` is then irrelevant and may be None.
    """

    x_s: Optional[float]
    l_s: float
    R_s: float

    def __post_init__(self):
        if not (0.0 <= self.R_s < 1.0):
            raise ValidationError(f"R_s must lie in [0, 1), got {self.R_s}")
        if self.l_s <= 0:
            raise ValidationError("l_s must be positive")
        if self.R_s > 0 and self.x_s is None:
            raise ValidationError("damaged spec requires a damage centre x_s")

    @classmethod
    def undamaged(cls, l_s: float = 0.6) -> "DamageSpec":
        return cls(x_s=None, l_s=l_s, R_s=0.0)

    def check_within(self, L: float) -> None:
        """Raise unless the damage interval fits inside [0, L]."""
        if self.R_s > 0:
            if self.x_s - self.l_s / 2 < 0 or self.x_s + self.l_s / 2 > L:
                raise ValidationError(
                    f"damage interval [{self.x_s - self.l_s / 2}, {self.x_s + self.l_s / 2}] "
                    f"outside span [0, {L}]"
                )


def stiffness_profile(bridge: BridgeSpec, damage: DamageSpec, x):
    """Flexural stiffness EI(x): EI0 outside the damage interval, EI0*(1-R_s) inside.

    Accepts scalar or array ``x``; the damage interval is closed.
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(x_arr > bridge.L):
        raise DomainError(f"position outside span [0, {bridge.L}]")
    if damage.R_s == 0:
        out = np.full_like(x_arr, bridge.EI0)
    else:
        lo = damage.x_s - damage.l_s / 2
        hi = damage.x_s + damage.l_s / 2
        out = np.where((x_arr >= lo) & (x_arr <= hi),
                       bridge.EI0 * (1.0 - damage.R_s), bridge.EI0)
    return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to reproduce one traverse simulation, RNG seed included."""

    bridge: BridgeSpec
    vehicle: VehicleSpec
    damage: DamageSpec
    noise_std: float
    dt: float
    seed: int
    trial: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("dt must be positive")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be non-negative")
        self.damage.check_within(self.bridge.L)

    @property
    def duration(self) -> float:
        """Traverse duration L/v (s)."""
        return self.bridge.L / self.vehicle.v

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.dt)) + 1

    def to_manifest(self) -> dict:
        """Flat JSON-serialisable dict; field names are the on-disk contract."""
        b, v, d = self.bridge, self.vehicle, self.damage
        return {
            "id": b.id, "L": b.L, "EI0": b.EI0, "rhoA": b.rhoA, "f1": b.f1,
            "m_v": v.m_v, "f_v": v.f_v, "k_v": v.k_v, "c_v": v.c_v, "v": v.v,
            "x_s": None if d.R_s == 0 else d.x_s, "l_s": d.l_s, "R_s": d.R_s,
            "noise_std": self.noise_std, "dt": self.dt,
            "seed": self.seed, "trial": self.trial,
        }

    @classmethod
    def from_manifest(cls, m: dict) -> "ScenarioSpec":
        bridge = BridgeSpec(id=m["id"], L=m["L"], EI0=m["EI0"], rhoA=m["rhoA"],
                            f1=m["f1"], freq_law=m.get("freq_law", m["f1"]))
        vehicle = VehicleSpec(m_v=m["m_v"], f_v=m["f_v"], k_v=m["k_v"],
                              v=m["v"], c_v=m["c_v"])
        damage = DamageSpec(x_s=m["x_s"], l_s=m["l_s"], R_s=m["R_s"])
        return cls(bridge=bridge, vehicle=vehicle, damage=damage,
                   noise_std=m["noise_std"], dt=m["dt"], seed=m["seed"],
                   trial=m["trial"])

    def with_damage(self, damage: DamageSpec) -> "ScenarioSpec":
        return replace(self, damage=damage)


@dataclass(frozen=True)
class SignalRecord:
    """Uniformly sampled vertical chassis acceleration plus full provenance."""

    scenario: ScenarioSpec
    t: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        if len(self.t) != len(self.a):
            raise ValidationError("t and a must have equal length")
        if len(self.t) < 2:
            raise ValidationError("record too short")
        dt = self.scenario.dt
        steps = np.diff(self.t)
        if self.t[0] != 0.0 or not np.allclose(steps, dt, rtol=0, atol=1e-12):
            raise ValidationError("t must be a uniform grid starting at 0")
        if abs(self.t[-1] - self.scenario.duration) > dt:
            raise ValidationError("record does not span the traverse")


# Study configuration: five beams sharing EI0, one vehicle.
_BRIDGE_TABLE = (
    ("B1", 25.0, 2.0),
    ("B2", 25.0, 2.5),
    ("B3", 25.0, 3.0),
    ("B4", 20.0, 2.5),
    ("B5", 30.0, 2.5),
)
EI0_DEFAULT = 14.54e9


def paper_bridges() -> tuple[BridgeSpec, ...]:
    """The five study bridges (shared EI0, n^2 frequency laws)."""
    return tuple(BridgeSpec.from_frequency(bid, L, EI0_DEFAULT, f1)
                 for bid, L, f1 in _BRIDGE_TABLE)


def paper_vehicle(v: float = 3.0) -> VehicleSpec:
    """The study vehicle: 100 kg sprung mass at 6.5 Hz."""
    return VehicleSpec.from_frequency(m_v=100.0, f_v=6.5, v=v)
