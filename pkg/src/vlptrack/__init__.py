"""Visible-light positioning: adaptive Kalman tracking under AP blocking.

The package simulates a mobile receiver walking under four corner-mounted
multi-LED access points, localizes it per step from received optical
gains, and tracks it with a Kalman filter whose measurement trust adapts
to how many APs got through. The harness sweeps blocking probability and
LED count over random-waypoint routes and reports pooled RMSE.
"""

from .availability import BlockingConfig, LayoutClass, classify_layout, draw_blocked
from .calibration import (CalibrationTable, asymptotic_coefficients,
                          calibrate_mean_errors, calibrated_coefficients,
                          fixed_coefficients, load_calibration_table,
                          save_calibration_table)
from .channel import (ChannelSample, MeasurementSnapshot, NoiseModel, apply_noise,
                      led_gains, los_gain, snapshot)
from .errors import (ConfigError, DegenerateGeometryError, DomainError,
                     GeometryError, NoSignalError, NumericalError)
from .geometry import (AccessPoint, LedSource, Receiver, RoomConfig,
                       build_led_layout, build_room, room_bounds)
from .harness import (ExperimentConfig, ResultRow, RouteTrace, apply_config,
                      build_schemes, default_config, emit_results,
                      load_config_file, load_results, render_results_csv,
                      simulate_route, sweep_blocking, sweep_leds, trace_route)
from .localization import (AoaEstimate, PositionMeasurement, ReceiverHeightPrior,
                           estimate_aoa, locate_aoa_multilateration, locate_hybrid,
                           locate_single_ap, localize, refine_objective)
from .mobility import MobilityConfig, Route, generate_route, route_rmse
from .tracking import (CoefficientScheme, FilterConfig, FilterState, init_filter,
                       kf_predict, kf_update, track_route)

__version__ = "0.1.0"
