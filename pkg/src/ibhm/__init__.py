"""Bridge-health monitoring from vehicle vibrations: simulation, feature
extraction, and diagnosis."""

__version__ = "0.1.0"

from .model import (G, BridgeSpec, DamageSpec, ScenarioSpec, SignalRecord,
                    VehicleSpec, derive_kv, derive_rhoA, paper_bridges,
                    paper_vehicle, stiffness_profile)
from .fem import (BeamMesh, GlobalSystem, ModalResult, SimConfig, assemble,
                  build_mesh, modal_analysis, simulate_vbi, traverse_with_trace)
from .analytic import (ModalParams, SineMode, SplineMode, SolutionCoeffs,
                       analytic_band_feature, analytic_vehicle_acceleration,
                       c51_factor, c51_value, feature_scale, ideal_feature,
                       modal_params, mode_shape_sine, moving_load_deflection,
                       normalized_ideal_feature, solution_coeffs)
from .tfr import (Band, CwtResult, SwtResult, admissibility_constant, bandpass,
                  cwt, icwt_band, inst_freq, iswt_band, synchrosqueeze)
from .feature import (METHODS, ExtractionConfig, FeatureSeries,
                      IdentifiedSystem, extract_baseline, extract_feature,
                      extract_method, identify_system, resample, select_band)
from .diagnose import (Calibration, DiagnosisResult, EvaluationResult,
                       RecordFeatures, SplitSpec, calibrate, diagnose,
                       evaluate, localize, peak_confidence, peak_deviation,
                       quantify, undamaged_references)
from .dataset import (DatasetConfig, generate_dataset, iter_records,
                      load_index, load_record, record_seed, scenario_grid,
                      write_record)

__all__ = [name for name in dir() if not name.startswith("_")]
