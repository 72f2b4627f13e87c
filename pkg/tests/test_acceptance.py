"""Acceptance gate: one test per criterion, each printing a PASS line with
the measured value at its stated tolerance.

The first six criteria run from scratch in seconds to a couple of minutes.
Criteria 7-9 operate on the full 2000-record dataset and dominate the
suite's runtime; they share session-scoped fixtures.
"""
import itertools
import math
import os
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

import ibhm
from ibhm.dataset import DatasetConfig, scenario_grid
from ibhm.diagnose import RecordFeatures, SplitSpec, peak_deviation
from ibhm.tfr import Band

from conftest import BRIDGES, VEHICLE, feature_cached, rel_rms, simulate_cached

JOBS = min(2, os.cpu_count() or 1)
COMMON_GRID = np.linspace(0.06, 0.94, 400)


def report(criterion: str, value: str, ok: bool):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {value}")
    assert ok, f"{criterion}: {value}"


def test_criterion_1_modal_fidelity():
    worst = 0.0
    for bridge in BRIDGES.values():
        mesh = ibhm.build_mesh(bridge, ibhm.DamageSpec.undamaged())
        modal = ibhm.modal_analysis(ibhm.assemble(mesh, bridge.rhoA), 3)
        law = bridge.freq_law * np.array([1.0, 4.0, 9.0])
        worst = max(worst, float(np.abs(modal.freqs / law - 1).max()))
    report("criterion 1 (modal fidelity, 5 bridges, n=1..3)",
           f"max relative error {worst:.2e} (tol 1e-2)", worst < 0.01)


def test_criterion_2_analytic_numeric_cross_validation(b1_record):
    oracle = ibhm.analytic_vehicle_acceleration(BRIDGES["B1"], VEHICLE, 3, b1_record.t)
    n = len(b1_record.t)
    sl = slice(int(0.1 * n), int(0.9 * n))
    err = rel_rms(b1_record.a[sl], oracle[sl])
    report("criterion 2 (FEM vs closed form, interior 80%)",
           f"relative RMS {err:.4f} (tol 0.05)", err <= 0.05)


def test_criterion_3_swt_round_trip():
    fs, dur = 50.0, 120.0
    t = np.arange(int(fs * dur)) / fs
    x = (np.cos(2 * np.pi * 0.12 * t) + 0.8 * np.cos(2 * np.pi * 2.0 * t)
         + 0.5 * np.cos(2 * np.pi * 6.5 * t))
    cw = ibhm.cwt(x, 1 / fs, 32, Band(0.05, 16.0))
    swt = ibhm.synchrosqueeze(cw, ibhm.inst_freq(cw))
    n = len(t)
    sl = slice(int(0.05 * n), int(0.95 * n))
    full = ibhm.iswt_band(swt, Band(0.05, 16.0))
    err_full = float(np.linalg.norm(full[sl] - x[sl]) / np.linalg.norm(x[sl]))
    low = ibhm.iswt_band(swt, Band(0.06, 1.0))
    tone = np.cos(2 * np.pi * 0.12 * t)
    resid = low[sl] - tone[sl]
    leak = -math.inf
    for f0, amp in ((2.0, 0.8), (6.5, 0.5)):
        probe = np.exp(2j * np.pi * f0 * t[sl])
        comp = np.abs(np.vdot(probe, resid)) / (0.5 * len(resid))
        leak = max(leak, 20 * math.log10(comp / amp))
    ok = err_full <= 0.02 and leak <= -26.0
    report("criterion 3 (round trip / band isolation)",
           f"full-band {err_full:.4f} (tol 0.02), worst leakage {leak:.1f} dB (tol -26)", ok)


def test_criterion_4_concentration():
    fs, dur = 50.0, 120.0
    t = np.arange(int(fs * dur)) / fs
    x = np.sin(2 * np.pi * 2.0 * t)
    cw = ibhm.cwt(x, 1 / fs, 32, Band(0.5, 8.0))
    swt = ibhm.synchrosqueeze(cw, ibhm.inst_freq(cw))
    n = len(t)
    sl = slice(int(0.05 * n), int(0.95 * n))
    energy = np.abs(swt.T[:, sl]) ** 2
    k0 = int(np.argmin(np.abs(swt.freq_bins - 2.0)))
    frac = float(energy[max(0, k0 - 1):k0 + 2].sum() / energy.sum())

    def entropy(p):
        p = p[p > 0]
        p = p / p.sum()
        return float(-(p * np.log(p)).sum())

    h_t = entropy(energy.sum(axis=1))
    h_w = entropy((np.abs(cw.W[:, sl]) ** 2).sum(axis=1))
    ok = frac >= 0.90 and h_t < h_w
    report("criterion 4 (synchrosqueezed concentration)",
           f"energy in +-1 bin {frac:.4f} (tol 0.90), entropy {h_t:.3f} < {h_w:.3f}", ok)


def test_criterion_5_damage_sensitivity():
    ref = feature_cached("B1")
    levels = (0.3, 0.4, 0.5, 0.6, 0.7)
    peaks = [peak_deviation(feature_cached("B1", 0.5, r_s), ref) for r_s in levels]
    rho = spearmanr(levels, peaks).statistic
    ok = rho == 1.0 and all(b > a for a, b in zip(peaks, peaks[1:]))
    report("criterion 5 (peak deviation monotone in reduction)",
           f"peaks {['%.3f' % p for p in peaks]}, spearman {rho:.2f}", ok)


def test_criterion_6_domain_invariance():
    features, raw = {}, {}
    for bid in BRIDGES:
        series = feature_cached(bid, 0.5, 0.5)
        resampled = ibhm.resample(series, COMMON_GRID)
        features[bid] = resampled.y_d
        raw[bid] = resampled.y_d * series.c51
    min_corr = 1.0
    spread_after, spread_before = [], []
    scale_after = np.mean([np.sqrt(np.mean(v ** 2)) for v in features.values()])
    scale_before = np.mean([np.sqrt(np.mean(v ** 2)) for v in raw.values()])
    for a, b in itertools.combinations(sorted(BRIDGES), 2):
        min_corr = min(min_corr, float(np.corrcoef(features[a], features[b])[0, 1]))
        spread_after.append(np.sqrt(np.mean((features[a] - features[b]) ** 2)) / scale_after)
        spread_before.append(np.sqrt(np.mean((raw[a] - raw[b]) ** 2)) / scale_before)
    ratio = float(np.mean(spread_after) / np.mean(spread_before))
    ok = min_corr > 0.9 and ratio <= 1.0 / 3.0
    report("criterion 6 (cross-bridge invariance)",
           f"min pairwise corr {min_corr:.3f} (tol 0.9), "
           f"spread ratio after/before {ratio:.3f} (tol 0.333)", ok)


INTERIOR = (0.25, 0.375, 0.5, 0.625, 0.75)


def test_criterion_7_localization_noise_free():
    errors = []
    for bid, bridge in BRIDGES.items():
        ref = feature_cached(bid)
        for loc in INTERIOR:
            for r_s in (0.4, 0.5, 0.6, 0.7):
                feat = feature_cached(bid, loc, r_s)
                errors.append(ibhm.localize(feat, ref) - loc)
    rmse = float(np.sqrt(np.mean(np.square(errors))))
    report("criterion 7a (noise-free localization, interior, R_s >= 0.4)",
           f"RMSE {rmse:.4f} (tol 0.10), n={len(errors)}", rmse <= 0.10)


# ---------------------------------------------------------------------------
# Full-dataset criteria
# ---------------------------------------------------------------------------

@pytest.fixture(scope="session")
def full_dataset(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("dataset") / "full"
    ibhm.generate_dataset(DatasetConfig(), out_dir=root, jobs=JOBS)
    return root


@pytest.fixture(scope="session")
def full_features(full_dataset) -> list:
    """All four methods extracted for every record of the full dataset."""
    records = []
    for entry in ibhm.load_index(full_dataset):
        record = ibhm.load_record(full_dataset / f"{entry['stem']}.csv")
        feats = {m: ibhm.extract_method(record, m) for m in ibhm.METHODS}
        records.append(RecordFeatures(stem=entry["stem"], bridge_id=entry["bridge"],
                                      r_true=entry["R_s"], loc_frac=entry["loc_frac"],
                                      trial=entry["trial"], features=feats))
    return records


def test_criterion_7_localization_with_noise(full_features):
    refs = ibhm.undamaged_references(full_features, ["ours"])
    errors = []
    for rec in full_features:
        if not rec.damaged or rec.r_true < 0.4 or rec.loc_frac not in INTERIOR:
            continue
        ref = refs[(rec.bridge_id, "ours")]
        errors.append(ibhm.localize(rec.features["ours"], ref) - rec.loc_frac)
    rmse = float(np.sqrt(np.mean(np.square(errors))))
    report("criterion 7b (noisy localization, 10 trials)",
           f"RMSE {rmse:.4f} (tol 0.20), n={len(errors)}", rmse <= 0.20)


def test_criterion_8_cross_bridge_quantification_noise_free():
    ref_by_bridge = {bid: feature_cached(bid) for bid in BRIDGES}
    pairs = []
    for bid in ("B1", "B2", "B3"):
        pairs.append((0.0, 0.0))
        for loc in INTERIOR:
            for r_s in (0.3, 0.4, 0.5, 0.6, 0.7):
                dev = peak_deviation(feature_cached(bid, loc, r_s), ref_by_bridge[bid])
                pairs.append((dev, r_s))
    cal = ibhm.calibrate(pairs, bridge_ids=("B1", "B2", "B3"))
    errors = []
    for bid in ("B4", "B5"):
        for loc in INTERIOR:
            for r_s in (0.3, 0.4, 0.5, 0.6, 0.7):
                r_hat = ibhm.quantify(feature_cached(bid, loc, r_s),
                                      ref_by_bridge[bid], cal)
                errors.append(r_hat - r_s)
    rmse = float(np.sqrt(np.mean(np.square(errors))))
    report("criterion 8a (noise-free cross-bridge reduction estimate)",
           f"SRE RMSE {rmse:.4f} (tol 0.15), n={len(errors)}", rmse <= 0.15)


def test_criterion_8_noisy_ranking(full_features):
    lines = []
    ok = True
    for split_name in ("diffL", "diffOmega"):
        result = ibhm.evaluate(full_features, SplitSpec(split_name))
        ours = result.row("ours", split_name)
        for method in ("bandpass1", "icwt1", "raw"):
            other = result.row(method, split_name)
            ok &= ours.sre <= other.sre + 1e-12
        lines.append(f"{split_name}: " + " ".join(
            f"{r.method}={r.sre:.3f}" for r in result.rows))
    sup = ibhm.evaluate(full_features, SplitSpec("supervised", holdout=0.3, seed=7))
    ours = sup.row("ours", "supervised")
    for method in ("bandpass1", "icwt1", "raw"):
        other = sup.row(method, "supervised")
        ok &= ours.sre <= other.sre + 1e-12
        ok &= ours.dle <= other.dle + 1e-12
    lines.append("supervised: " + " ".join(
        f"{r.method}=(DLE {r.dle:.3f}, SRE {r.sre:.3f})" for r in sup.rows))
    report("criterion 8b (noisy SRE ranking, ours <= baselines)", "; ".join(lines), ok)


def test_criterion_9_regeneration_byte_identical(full_dataset, tmp_path_factory):
    again = tmp_path_factory.mktemp("dataset_again") / "full"
    ibhm.generate_dataset(DatasetConfig(), out_dir=again, jobs=JOBS)
    stems = [e["stem"] for e in ibhm.load_index(full_dataset)]
    mismatched = sum(
        (full_dataset / f"{stem}.csv").read_bytes() != (again / f"{stem}.csv").read_bytes()
        for stem in stems)
    report("criterion 9 (full 2000-record regeneration)",
           f"{len(stems) - mismatched}/{len(stems)} record CSVs byte-identical",
           mismatched == 0)
