import functools

import numpy as np
import pytest

import ibhm

BRIDGES = {b.id: b for b in ibhm.paper_bridges()}
VEHICLE = ibhm.paper_vehicle()


def rel_rms(x, ref):
    x = np.asarray(x, dtype=float)
    ref = np.asarray(ref, dtype=float)
    return float(np.sqrt(np.mean((x - ref) ** 2)) / np.sqrt(np.mean(ref ** 2)))


@functools.lru_cache(maxsize=None)
def simulate_cached(bridge_id: str, loc_frac=None, r_s: float = 0.0,
                    noise_std: float = 0.0, seed: int = 0, dt: float = 1e-3,
                    m_v=None):
    """Traverse records shared across the suite (records are immutable).

    Damage follows the dataset realisation: one element nearest the
    requested centre.
    """
    bridge = BRIDGES[bridge_id]
    vehicle = VEHICLE if m_v is None else ibhm.VehicleSpec.from_frequency(m_v, 6.5, 3.0)
    if r_s == 0.0:
        damage = ibhm.DamageSpec.undamaged()
    else:
        damage = ibhm.fem.snap_damage(bridge, loc_frac, r_s)
    scenario = ibhm.ScenarioSpec(bridge=bridge, vehicle=vehicle, damage=damage,
                                 noise_std=noise_std, dt=dt, seed=seed)
    return ibhm.simulate_vbi(scenario)


@functools.lru_cache(maxsize=None)
def feature_cached(bridge_id: str, loc_frac=None, r_s: float = 0.0,
                   method: str = "ours", noise_std: float = 0.0, seed: int = 0,
                   m_v=None):
    record = simulate_cached(bridge_id, loc_frac, r_s, noise_std, seed, m_v=m_v)
    return ibhm.extract_method(record, method)


@pytest.fixture(scope="session")
def bridges():
    return BRIDGES


@pytest.fixture(scope="session")
def vehicle():
    return VEHICLE


@pytest.fixture(scope="session")
def b1_record():
    return simulate_cached("B1")


@pytest.fixture(scope="session")
def b1_damaged_record():
    return simulate_cached("B1", 0.5, 0.5)
