"""
Fixed-step and step-doubling adaptive RK4 for density matrices.

Trace is never renormalized and eigenvalues are never clipped; drift and
negativity are recorded as diagnostics.
"""
import math
from collections import OrderedDict

import attr
import numpy as np

from . import diagnostics
from .error_types import NonFiniteState, StepUnderflow, TruncationOverflow
from .hilbert import build_momentum, build_position, min_eigenvalue, positive, purity
from .master_equation import rhs as generator_rhs
from .utils import hermitize, max_abs

MODE_FIXED = "fixed"
MODE_ADAPTIVE = "adaptive"

TRUNCATION_FRACTION = 0.1
TRUNCATION_LIMIT = 1e-3

SAFETY = 0.9
MIN_STEP_FACTOR = 1e-3
MAX_STEP_FACTOR = 100.0

OBSERVABLES = (
    "mean_x",
    "mean_p",
    "var_x",
    "var_p",
    "cov_xp",
    "energy",
    "purity",
    "trace_drift",
    "min_eig",
    "truncation_health",
)


def _tolerance(instance, attribute, value):
    if not (1e-14 < value < 1e-2):
        raise ValueError("{0} must lie in (1e-14, 1e-2), got {1!r}".format(attribute.name, value))


@attr.s(frozen=True)
class IntegratorConfig(object):
    dt = attr.ib(validator=positive)
    t_end = attr.ib(validator=positive)
    mode = attr.ib(default=MODE_FIXED)
    rel_tol = attr.ib(default=1e-8, validator=_tolerance)
    abs_tol = attr.ib(default=1e-10, validator=_tolerance)
    record_every = attr.ib(default=1)
    hermitize = attr.ib(default=False)

    @mode.validator
    def _check_mode(self, attribute, value):
        if value not in (MODE_FIXED, MODE_ADAPTIVE):
            raise ValueError("Unknown integrator mode {0!r}".format(value))

    @record_every.validator
    def _check_record_every(self, attribute, value):
        if not isinstance(value, int) or value < 1:
            raise ValueError("record_every must be a positive integer, got {0!r}".format(value))

    def __attrs_post_init__(self):
        if not self.dt < self.t_end:
            raise ValueError("dt ({0}) must be smaller than t_end ({1})".format(self.dt, self.t_end))


@attr.s
class TrajectoryRecord(object):
    times = attr.ib(factory=list)
    rows = attr.ib(factory=list)  # list of OrderedDict keyed by OBSERVABLES
    steps = attr.ib(default=0)
    rejected_steps = attr.ib(default=0)
    final_state = attr.ib(default=None, repr=False)

    def append(self, t, row):
        if self.times and t <= self.times[-1]:
            raise ValueError("Trajectory times must increase ({0} after {1})".format(t, self.times[-1]))
        self.times.append(t)
        self.rows.append(row)

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def as_array(self):
        """
        Rows of (t, *OBSERVABLES).
        """
        data = np.empty((len(self.times), len(OBSERVABLES) + 1))
        for i, (t, row) in enumerate(zip(self.times, self.rows)):
            data[i, 0] = t
            data[i, 1:] = [row[name] for name in OBSERVABLES]
        return data


class ObservableSet(object):
    """
    Pre-built operators for recording observables along a trajectory.
    """
    def __init__(self, spec):
        basis = spec.basis
        self.x = build_position(basis)
        self.p = build_momentum(basis)
        self.x2 = self.x @ self.x
        self.p2 = self.p @ self.p
        self.xp_anti = self.x @ self.p + self.p @ self.x
        self.h = getattr(spec, "h0", None)
        if self.h is None:
            self.h = spec.H

    def moments(self, rho):
        """
        The observables that are smooth in rho, plus the trace.
        """
        def ev(op):
            return float(np.trace(rho @ op).real)

        trace = float(np.trace(rho).real)
        mean_x = ev(self.x) / trace
        mean_p = ev(self.p) / trace
        return OrderedDict([
            ("mean_x", mean_x),
            ("mean_p", mean_p),
            ("var_x", ev(self.x2) / trace - mean_x ** 2),
            ("var_p", ev(self.p2) / trace - mean_p ** 2),
            ("cov_xp", 0.5 * ev(self.xp_anti) / trace - mean_x * mean_p),
            ("energy", ev(self.h)),
            ("purity", purity(rho)),
            ("trace", trace),
        ])

    def measure(self, rho, trace0):
        row = self.moments(rho)
        trace = row.pop("trace")
        return OrderedDict(list(row.items()) + [
            ("trace_drift", trace - trace0),
            ("min_eig", min_eigenvalue(rho)),
            ("truncation_health", diagnostics.truncation_health(rho, TRUNCATION_FRACTION)),
        ])


def step_rk4(rhs, rho, dt, hermitize_step=False):
    """
    One classical RK4 step of d rho/dt = rhs(rho). The trace is not
    renormalized.
    """
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    out = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if hermitize_step:
        out = hermitize(out)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("RK4 step with dt={0!r} produced non-finite entries".format(dt), step=dt)
    return out


def _record(record, observables, t, rho, trace0):
    record.append(t, observables.measure(rho, trace0))


def _check_truncation(rho, t, record):
    health = diagnostics.truncation_health(rho, TRUNCATION_FRACTION)
    if health > TRUNCATION_LIMIT:
        raise TruncationOverflow(
            "Population {0:.3g} in the top {1:.0%} of basis levels at t={2:.6g} exceeds {3:g}; "
            "increase basis.dim".format(health, TRUNCATION_FRACTION, t, TRUNCATION_LIMIT),
            time=t, health=health, record=record)


def integrate(spec, rho0, config, rhs=None):
    """
    Evolve rho0 under the generator described by spec, recording the
    observables every `config.record_every` base steps of size `config.dt`.
    """
    if rhs is None:
        def rhs(r):
            return generator_rhs(spec, r)

    rho = np.array(getattr(rho0, "matrix", rho0), dtype=complex)
    trace0 = float(np.trace(rho).real)
    observables = ObservableSet(spec)
    record = TrajectoryRecord()
    _record(record, observables, 0.0, rho, trace0)

    n_steps = max(1, int(round(config.t_end / config.dt)))
    dt = config.t_end / n_steps
    record_times = [k * dt for k in range(config.record_every, n_steps, config.record_every)]
    record_times.append(config.t_end)

    if config.mode == MODE_FIXED:
        rho = _integrate_fixed(rhs, rho, config, n_steps, record, observables, trace0)
    else:
        rho = _integrate_adaptive(rhs, rho, config, record_times, record, observables, trace0)
    record.final_state = rho
    return record


def _integrate_fixed(rhs, rho, config, n_steps, record, observables, trace0):
    dt = config.t_end / n_steps
    for step in range(1, n_steps + 1):
        t = config.t_end if step == n_steps else step * dt
        try:
            rho = step_rk4(rhs, rho, dt, hermitize_step=config.hermitize)
        except NonFiniteState as e:
            e.time = t
            raise
        record.steps += 1
        _check_truncation(rho, t, record)
        if step % config.record_every == 0 or step == n_steps:
            _record(record, observables, t, rho, trace0)
    return rho


def error_ratio(observables, full, half, config, h):
    """
    Richardson estimate of the error in `half` (two half steps) against
    `full` (one step), over its tolerance. The largest ratio across the
    matrix entries and the smooth observables is returned. Tolerances are
    per unit time, so the errors of all accepted steps add up to at most
    the tolerance at t_end.
    """
    share = h / config.t_end

    def ratio(diff, scale):
        return (diff / 15.0) / (share * (config.abs_tol + config.rel_tol * scale))

    ratios = [ratio(max_abs(half - full), max_abs(half))]
    coarse = observables.moments(full)
    fine = observables.moments(half)
    width_x = math.sqrt(max(fine["var_x"], 0.0))
    width_p = math.sqrt(max(fine["var_p"], 0.0))
    # Means and the covariance can cross zero; they are measured against the widths.
    scales = {
        "mean_x": abs(fine["mean_x"]) + width_x,
        "mean_p": abs(fine["mean_p"]) + width_p,
        "cov_xp": width_x * width_p,
    }
    for name, value in fine.items():
        ratios.append(ratio(abs(value - coarse[name]), scales.get(name, abs(value))))
    worst = max(ratios)
    return worst if math.isfinite(worst) else math.inf


def _integrate_adaptive(rhs, rho, config, record_times, record, observables, trace0):
    dt_min = config.dt * MIN_STEP_FACTOR
    dt_max = config.dt * MAX_STEP_FACTOR
    dt = config.dt
    t = 0.0
    for target in record_times:
        while t < target:
            remaining = target - t
            h = remaining if remaining <= dt * (1.0 + 1e-9) else dt
            full = step_rk4(rhs, rho, h, hermitize_step=config.hermitize)
            half = step_rk4(rhs, rho, 0.5 * h, hermitize_step=config.hermitize)
            half = step_rk4(rhs, half, 0.5 * h, hermitize_step=config.hermitize)
            ratio = error_ratio(observables, full, half, config, h)
            if ratio <= 1.0:
                t = target if h == remaining else t + h
                rho = half
                record.steps += 1
                _check_truncation(rho, t, record)
            else:
                record.rejected_steps += 1
            factor = 5.0 if ratio == 0.0 else SAFETY * ratio ** -0.25
            factor = min(5.0, max(0.2, factor))
            # A step shortened to hit a record time says nothing about dt.
            if ratio > 1.0 or h == dt:
                dt = min(dt_max, h * factor)
            if dt < dt_min:
                raise StepUnderflow(
                    "Adaptive step fell below {0:g} at t={1:.6g}".format(dt_min, t), time=t, dt=dt)
        _record(record, observables, t, rho, trace0)
    return rho

