"""fpcgsim: parametric simulator for abdominal fetal phonocardiogram signals."""

from .analysis import (AcfCurve, AnalysisResult, ComparisonReport, CycleSet, PreprocConfig,
                       PsdCurve, analyze, compare_stats, cycle_averaged_acf,
                       estimate_period, preprocess_envelope, segment_cycles, welch_psd_db)
from .config import SimConfig, catalog, list_presets, load_config, serialize_config
from .errors import FpcgError
from .fitting import (FitResult, ParamSummary, calibrate_cycles, default_global_bounds,
                      fit_cycle, gaussian_corner_samples, measure_delta_t,
                      summarize_parameters)
from .heart import (CycleTheta, HRVConfig, MaternalConfig, RRSeries, apply_shared_tau,
                    make_rr_series, onset_times, render_fetal_train, render_maternal_train)
from .kernel import EventParams, Signal, envelope, kernel, render_event
from .noise import (MovementConfig, NoiseConfig, UterineConfig, ar1_noise, gain_modulate,
                    mix_with_snr, movement_artifacts, uterine_contraction_track)
from .sampling import (ParamBounds, PriorSpec, bootstrap_delta_t, ensemble_mcmc_sample,
                       sample_thetas)
from .simulate import Recording, realized_snr_db, simulate
from .transmission import TransmissionConfig, cascade_response, exp_kernel, propagate

__version__ = "0.1.0"
