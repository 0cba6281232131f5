"""Geometry of time-dependent Riemannian metrics.

Connections derived from a metric family g_t, geodesics and parallel
transport, the time-dependent bracket and torsion with numerical limit
probes, and a double-pendulum model with varying masses as a test bed.
"""
from .connection import (ChristoffelEval, DotNabla, ExtendedConnection, dotnabla_apply, extended_cov_deriv,
                         gamma_dot, levi_civita, metric_dotnabla, suspension_connection)
from .dynamics import (embedded_length, flow, flow_tangent, forced_geodesic, functionals, geodesic_dotnabla,
                       geodesic_metric, geodesic_suspension, kinetic_energy, length_critical_residual,
                       parallel_transport)
from .errors import GeometryError, InputError, NumericalError
from .fields import (EndomorphismField, Event, MetricField, ScalarField, TangentVector, TimeDepVectorField,
                     metric_from_eval, metric_inverse, musical_endomorphism)
from .integrators import IntegratorConfig, Trajectory, integrate
from .models import EmbeddingFamily, builtin, induced_metric, list_models
from .operators import lie_bracket, td_bracket, torsion_operator, vertical_torsion_check
from .probes import ProbeResult, bracket_probe, torsion_loop_probe
from .validation import validate

__version__ = "0.1.0"
