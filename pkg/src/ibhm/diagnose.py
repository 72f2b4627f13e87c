"""Damage localisation, stiffness-reduction quantification, and the RMSE
evaluation harness over a generated dataset.

Estimators are deliberately transparent: localisation is the argmax of the
smoothed deviation from an undamaged reference; quantification is isotonic
regression of the reduction against the peak deviation. Whatever separates
methods here is the feature, not the estimator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from sklearn.isotonic import IsotonicRegression

from .errors import CalibrationError, NoEstimateError, ValidationError
from .feature import METHODS, FeatureSeries

DETECTION_RATIO = 2.0      # peak-to-floor ratio below which "no damage detected"
SMOOTH_SPAN = 0.02         # moving-average width as a fraction of the span


def _smoothed_deviation(feature: FeatureSeries, reference: FeatureSeries):
    if len(feature.pos) != len(reference.pos) or not np.allclose(
            feature.pos, reference.pos, rtol=0, atol=1e-12):
        raise ValidationError("feature and reference must share the position grid")
    dev = np.abs(feature.y_d - reference.y_d)
    dpos = feature.pos[1] - feature.pos[0]
    width = max(1, int(round(SMOOTH_SPAN / dpos)))
    if width > 1:
        dev = np.convolve(dev, np.ones(width) / width, mode="same")
    mask = feature.edge_mask & reference.edge_mask
    if not mask.any():
        raise NoEstimateError("no valid samples to localise from")
    return dev, mask


def peak_deviation(feature: FeatureSeries, reference: FeatureSeries) -> float:
    """Peak smoothed |feature - reference| over the valid region."""
    dev, mask = _smoothed_deviation(feature, reference)
    return float(dev[mask].max())


def localize(feature: FeatureSeries, reference: FeatureSeries) -> float:
    """Normalised position of the peak deviation from the reference."""
    dev, mask = _smoothed_deviation(feature, reference)
    dev = np.where(mask, dev, -np.inf)
    return float(feature.pos[int(np.argmax(dev))])


def peak_confidence(feature: FeatureSeries, reference: FeatureSeries) -> float:
    """Peak-to-floor ratio of the smoothed deviation (floor = valid-region median)."""
    dev, mask = _smoothed_deviation(feature, reference)
    floor = float(np.median(dev[mask]))
    peak = float(dev[mask].max())
    if floor == 0.0:
        return 1.0 if peak == 0.0 else math.inf
    return peak / floor


@dataclass(frozen=True)
class Calibration:
    """Isotonic map from peak deviation to stiffness reduction."""

    knots: np.ndarray            # (k, 2): deviation, reduction; both non-decreasing
    bridge_ids: tuple[str, ...]

    def predict(self, peak_dev: float) -> float:
        x, y = self.knots[:, 0], self.knots[:, 1]
        return float(np.clip(np.interp(peak_dev, x, y), 0.0, 0.99))


def calibrate(training: Sequence[tuple], bridge_ids: tuple[str, ...] = (),
              reference_for: Optional[Callable[[FeatureSeries], FeatureSeries]] = None,
              ) -> Calibration:
    """Fit reduction against peak deviation, monotone by construction.

    ``training`` holds (peak_deviation, R_s) pairs, or (FeatureSeries, R_s)
    pairs when ``reference_for`` resolves each series' undamaged reference.
    """
    if not training:
        raise CalibrationError("empty training set")
    xs, ys = [], []
    for item, r_s in training:
        if isinstance(item, FeatureSeries):
            if reference_for is None:
                raise CalibrationError("FeatureSeries training needs reference_for")
            xs.append(peak_deviation(item, reference_for(item)))
        else:
            xs.append(float(item))
        ys.append(float(r_s))
    if len(set(ys)) < 2:
        raise CalibrationError("need at least two distinct reduction levels")
    iso = IsotonicRegression(y_min=0.0, y_max=0.99, out_of_bounds="clip")
    iso.fit(xs, ys)
    knots = np.column_stack([iso.X_thresholds_, iso.y_thresholds_])
    return Calibration(knots=knots, bridge_ids=tuple(bridge_ids))


def quantify(feature: FeatureSeries, reference: FeatureSeries,
             calibration: Calibration) -> float:
    """Estimated stiffness-reduction fraction in [0, 1)."""
    return calibration.predict(peak_deviation(feature, reference))


@dataclass(frozen=True)
class DiagnosisResult:
    x_hat: float
    r_hat: float
    confidence: float

    @property
    def detected(self) -> bool:
        return self.confidence >= DETECTION_RATIO


def diagnose(feature: FeatureSeries, reference: FeatureSeries,
             calibration: Optional[Calibration] = None) -> DiagnosisResult:
    """Bundle localisation, quantification and the detection confidence."""
    x_hat = localize(feature, reference)
    conf = peak_confidence(feature, reference)
    r_hat = quantify(feature, reference, calibration) if calibration else float("nan")
    return DiagnosisResult(x_hat=x_hat, r_hat=r_hat, confidence=conf)


# ---------------------------------------------------------------------------
# Evaluation harness
# ---------------------------------------------------------------------------

@dataclass
class RecordFeatures:
    """One dataset record's metadata plus its features, one per method."""

    stem: str
    bridge_id: str
    r_true: float                    # 0 for undamaged records
    loc_frac: Optional[float]        # x_s / L, None for undamaged
    trial: int
    features: dict[str, FeatureSeries] = field(default_factory=dict)

    @property
    def damaged(self) -> bool:
        return self.r_true > 0


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split: 'supervised' (random holdout), 'diffL', 'diffOmega'."""

    name: str
    holdout: float = 0.3
    seed: int = 7

    TRAIN_BRIDGES = {"diffL": ("B1", "B2", "B3"), "diffOmega": ("B2", "B4", "B5")}
    TEST_BRIDGES = {"diffL": ("B4", "B5"), "diffOmega": ("B1", "B3")}

    def partition(self, records: Sequence[RecordFeatures]):
        if self.name == "supervised":
            order = np.argsort([r.stem for r in records])
            shuffled = np.random.default_rng(self.seed).permutation(order)
            n_test = int(round(self.holdout * len(records)))
            test_idx = set(shuffled[:n_test].tolist())
            train = [records[i] for i in range(len(records)) if i not in test_idx]
            test = [records[i] for i in sorted(test_idx)]
        elif self.name in self.TRAIN_BRIDGES:
            train = [r for r in records if r.bridge_id in self.TRAIN_BRIDGES[self.name]]
            test = [r for r in records if r.bridge_id in self.TEST_BRIDGES[self.name]]
        else:
            raise ValidationError(f"unknown split {self.name!r}")
        if not train or not test:
            raise ValidationError(f"split {self.name!r} left an empty partition")
        return train, test


@dataclass
class EvaluationRow:
    method: str
    split: str
    dle: float
    sre: float
    n_records: int


@dataclass
class EvaluationResult:
    rows: list[EvaluationRow]
    diagnostics: list[dict]

    def table_csv(self, path: Path) -> None:
        lines = ["method,split,DLE,SRE,n_records"]
        lines += [f"{r.method},{r.split},{r.dle:.6f},{r.sre:.6f},{r.n_records}"
                  for r in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")

    def diagnostics_csv(self, path: Path) -> None:
        cols = ["stem", "method", "split", "bridge", "r_true", "loc_true",
                "x_hat", "r_hat", "confidence"]
        lines = [",".join(cols)]
        for d in self.diagnostics:
            lines.append(",".join("" if d[c] is None else
                                  (d[c] if isinstance(d[c], str) else f"{d[c]:.6g}")
                                  for c in cols))
        Path(path).write_text("\n".join(lines) + "\n")

    def row(self, method: str, split: str) -> EvaluationRow:
        for r in self.rows:
            if r.method == method and r.split == split:
                return r
        raise KeyError((method, split))


def undamaged_references(records: Sequence[RecordFeatures],
                         methods: Sequence[str]) -> dict[tuple[str, str], FeatureSeries]:
    """Mean undamaged feature per (bridge, method): the reference state."""
    refs: dict[tuple[str, str], FeatureSeries] = {}
    by_key: dict[tuple[str, str], list[FeatureSeries]] = {}
    for rec in records:
        if rec.damaged:
            continue
        for method in methods:
            by_key.setdefault((rec.bridge_id, method), []).append(rec.features[method])
    for key, series_list in by_key.items():
        base = series_list[0]
        mean_y = np.mean([s.y_d for s in series_list], axis=0)
        refs[key] = FeatureSeries(pos=base.pos, y_d=mean_y, c51=base.c51,
                                  band=base.band, edge_mask=base.edge_mask,
                                  method=base.method)
    return refs


def evaluate(records: Sequence[RecordFeatures], split: SplitSpec,
             methods: Sequence[str] = METHODS) -> EvaluationResult:
    """Per-method location and reduction RMSE on the split's test partition.

    Location error is normalised (x_hat - x_s/L) over damaged test records;
    reduction error spans all test records. Calibration is fitted on the
    training partition only; undamaged references are the per-bridge means.
    """
    if not records:
        raise ValidationError("no records to evaluate")
    records = sorted(records, key=lambda r: r.stem)  # order-independent output
    refs = undamaged_references(records, methods)
    train, test = split.partition(records)
    rows, diagnostics = [], []
    for method in methods:
        pairs = []
        for rec in train:
            ref = refs[(rec.bridge_id, method)]
            pairs.append((peak_deviation(rec.features[method], ref), rec.r_true))
        cal = calibrate(pairs, bridge_ids=tuple(sorted({r.bridge_id for r in train})))
        loc_errs, red_errs = [], []
        for rec in test:
            ref = refs[(rec.bridge_id, method)]
            result = diagnose(rec.features[method], ref, cal)
            red_errs.append(result.r_hat - rec.r_true)
            if rec.damaged:
                loc_errs.append(result.x_hat - rec.loc_frac)
            diagnostics.append({
                "stem": rec.stem, "method": method, "split": split.name,
                "bridge": rec.bridge_id, "r_true": rec.r_true,
                "loc_true": rec.loc_frac, "x_hat": result.x_hat,
                "r_hat": result.r_hat, "confidence": result.confidence,
            })
        dle = float(np.sqrt(np.mean(np.square(loc_errs)))) if loc_errs else float("nan")
        sre = float(np.sqrt(np.mean(np.square(red_errs))))
        rows.append(EvaluationRow(method=method, split=split.name, dle=dle,
                                  sre=sre, n_records=len(test)))
    return EvaluationResult(rows=rows, diagnostics=diagnostics)
