"""Energy-aware metro timetable optimization by linear programming."""
from .errors import (DegenerateSamples, EmptyRobustWindow, InfeasibleTripTime, MissingEvent,
                     MissingFit, MissingSamples, ModelError)
from .fitting import AffineFit, FitBundle, OracleSamples, PhaseFits, fit_affine, fit_affine_nonneg, \
    fit_instance, fit_pipeline, generate_oracle_samples
from .kinematics import (build_speed_profile, energy_vs_triptime_samples, exact_overlap_regen, fwhm,
                         minimum_trip_time, power_profile, simulate_trip, trip_sample)
from .lp import (LinearProgram, VarRef, build_lp, complete_overlaps, evaluate_sigma, extract_timetable,
                 overlap_time, point_from_timetable, timetable_point)
from .network import (CrossOver, Headway, Instance, PhysicsParams, Platform, Timetable, TimeWindow, Track,
                      Train, UncertainWindow, audit_timetable, robustify, validate_instance)
from .pairing import LEFT, RIGHT, SyncEvent, build_sync_events
from .pipeline import RunResult, optimize
from .reporting import ComparisonReport, EnergyReport, compare, crossvalidate, predict_energy
from .scenario import ScenarioParams, generate_scenario
from .solver import Solution, solve

__version__ = "0.1.0"
