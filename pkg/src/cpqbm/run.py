import json
import threading
import time
import warnings
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor

import attr
import click
import fs.path
import numpy as np

from . import coefficients, diagnostics, error_types, gaussian, hilbert, integrator
from .config import (
    INITIAL_COHERENT,
    INITIAL_FOCK,
    INITIAL_RANDOM,
    INITIAL_SQUEEZED,
    INITIAL_THERMAL,
)
from .master_equation import GeneratorSpec, anticommutator_hamiltonian_weight

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PHYSICS_ABORT = 2

CSV_HEADER = ("t",) + integrator.OBSERVABLES
COMPARE_HEADER = ("name", "form", "D_pp", "D_qq", "gamma", "cp_verdict", "stationary_var_p",
                  "final_var_p", "min_eig_overall", "max_dev_vs_first")
MOMENT_COLUMNS = ("mean_x", "mean_p", "var_x", "var_p", "cov_xp")

# The warnings filter is process-wide, so captures from concurrent scenarios
# take turns.
_WARNINGS_LOCK = threading.Lock()


@attr.s
class RunOptions(object):
    output_fs = attr.ib()
    out_dir = attr.ib(default=".")
    jobs = attr.ib(default=1)
    override_brownian_limit = attr.ib(default=False)
    verbose = attr.ib(default=False)


@attr.s
class AxisResult(object):
    axis = attr.ib()
    record = attr.ib()
    oracle_max_rel_dev = attr.ib(default=None)
    aborted = attr.ib(default=None)  # TruncationOverflow or None


@attr.s
class ScenarioResult(object):
    scenario = attr.ib()
    status = attr.ib(default=EXIT_OK)
    coefficients = attr.ib(default=None)
    effective = attr.ib(default=None)  # coefficients as the chosen form uses them
    anticommutator_weight = attr.ib(default=0.0)
    cp_report = attr.ib(default=None)
    stationary = attr.ib(default=None)
    axes = attr.ib(factory=list)  # AxisResult per axis
    summary = attr.ib(default=None)
    errors = attr.ib(factory=list)
    warnings = attr.ib(factory=list)
    written = attr.ib(factory=list)


def initial_state(scenario, axis):
    init = scenario.initial
    basis = scenario.basis
    if init.kind == INITIAL_FOCK:
        return hilbert.dm_fock(basis, init.n)
    if init.kind == INITIAL_COHERENT:
        return hilbert.dm_coherent(basis, init.alpha_for_axis(axis))
    if init.kind == INITIAL_THERMAL:
        return hilbert.dm_thermal(basis, init.beta_eff)
    if init.kind == INITIAL_SQUEEZED:
        return hilbert.dm_squeezed(basis, init.r, alpha=init.alpha_for_axis(axis))
    if init.kind == INITIAL_RANDOM:
        return hilbert.dm_random(basis, seed=init.seed + axis, rank=init.rank)
    raise ValueError("Unknown initial state kind {0!r}".format(init.kind))


def _axis_key(scenario, axis):
    # Axes with identical initial states have identical trajectories.
    init = scenario.initial
    if init.kind == INITIAL_RANDOM:
        return axis
    if init.kind in (INITIAL_COHERENT, INITIAL_SQUEEZED):
        return init.alpha_for_axis(axis)
    return None


def form_coefficients(spec):
    D_pp, D_qq, gamma = spec.effective_coefficients()
    return attr.evolve(spec.coefficients, D_pp=D_pp, D_qq=D_qq, gamma=gamma)


def oracle_deviation(record, rho0, spec):
    state0 = gaussian.moments_from_rho(rho0, spec.basis)
    oracle = gaussian.propagate_moments(state0, form_coefficients(spec), spec.hamiltonian, record.times)
    states = [gaussian.GaussianState(**{name: row[name] for name in MOMENT_COLUMNS})
              for row in record.rows]
    return gaussian.max_relative_deviation(states, oracle)


def run_scenario(scenario, options):
    """
    Computes coefficients, integrates every axis, checks the result against
    the moment oracle and writes the CSV and JSON artifacts.
    """
    result = ScenarioResult(scenario=scenario)
    started = time.perf_counter()

    brownian = coefficients.check_brownian_limit(
        scenario.gas, scenario.M,
        override=scenario.override_brownian_limit or options.override_brownian_limit)
    if not brownian.may_proceed:
        result.errors.append(error_types.BrownianLimitFailure(scenario.name, brownian))
        result.status = EXIT_ERROR
        return result
    if brownian.status != coefficients.BROWNIAN_OK:
        result.warnings.append("Scenario '{0}': mass ratio m/M = {1:.4g} ({2})".format(
            scenario.name, brownian.alpha, brownian.status))

    try:
        _compute(scenario, result)
    except error_types.ComputeError as e:
        result.errors.append(e)
        result.status = EXIT_ERROR
        return result

    if any(a.aborted is not None for a in result.axes):
        result.status = EXIT_PHYSICS_ABORT
        aborts = OrderedDict((id(a.aborted), a.aborted) for a in result.axes if a.aborted is not None)
        result.errors.extend(aborts.values())

    result.summary = build_summary(result, brownian, time.perf_counter() - started)
    try:
        write_artifacts(result, options)
    except ValueError as e:
        # json refuses NaN and infinity
        result.errors.append(error_types.ComputeError("Non-finite value in output: {0}".format(e)))
        result.status = EXIT_ERROR
    return result


def _collecting_warnings(result, func, *args, **kwargs):
    """
    Calls func and adds the warnings it raises to the scenario's warnings.
    """
    with _WARNINGS_LOCK:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            value = func(*args, **kwargs)
    result.warnings.extend(
        "Scenario '{0}': {1}".format(result.scenario.name, w.message) for w in caught)
    return value


def _compute(scenario, result):
    coeffs = _collecting_warnings(
        result, coefficients.compute_coefficients,
        scenario.gas, scenario.M, scenario.tmatrix, f_re0=scenario.f_re0,
        quad=scenario.quadrature, hbar=scenario.basis.hbar)
    result.coefficients = coeffs
    hamiltonian = attr.evolve(scenario.hamiltonian, shift=coeffs.V_shift)
    spec = GeneratorSpec(form=scenario.form, basis=scenario.basis, coefficients=coeffs,
                         hamiltonian=hamiltonian)
    effective = form_coefficients(spec)
    result.effective = effective

    report = diagnostics.cp_condition(effective)
    if scenario.outputs.choi:
        unit = 1.0 / effective.gamma if effective.gamma > 0 else 1.0
        report = diagnostics.with_choi_scan(
            report, spec, [t * unit for t in scenario.outputs.choi_times], dim=scenario.outputs.choi_dim)
    result.cp_report = report
    result.stationary = gaussian.stationary_moments(effective, hamiltonian)

    done = {}
    for axis in range(scenario.axes):
        key = _axis_key(scenario, axis)
        if key in done:
            reused = done[key]
            result.axes.append(attr.evolve(reused, axis=axis))
            continue
        rho0 = _collecting_warnings(result, initial_state, scenario, axis)
        try:
            # Blow-ups are raised as NonFiniteState.
            with np.errstate(over="ignore", invalid="ignore"):
                record = integrator.integrate(spec, rho0, scenario.integrator)
            aborted = None
        except error_types.TruncationOverflow as e:
            record = e.record
            aborted = e
        axis_result = AxisResult(axis=axis, record=record, aborted=aborted,
                                 oracle_max_rel_dev=oracle_deviation(record, rho0, spec))
        done[key] = axis_result
        result.axes.append(axis_result)
    result.anticommutator_weight = anticommutator_hamiltonian_weight(spec)


def _min_over_axes(result, name):
    return float(min(np.min(a.record.column(name)) for a in result.axes))


def _max_abs_over_axes(result, name):
    return float(max(np.max(np.abs(a.record.column(name))) for a in result.axes))


def build_summary(result, brownian, wall_time):
    scenario = result.scenario
    coeffs = result.coefficients
    effective = result.effective
    axes = []
    for a in result.axes:
        last = a.record.rows[-1]
        axes.append({
            "axis": a.axis,
            "csv": csv_path_for_axis(scenario, a.axis),
            "oracle_max_rel_dev": a.oracle_max_rel_dev,
            "min_eig": float(np.min(a.record.column("min_eig"))),
            "max_trace_drift": float(np.max(np.abs(a.record.column("trace_drift")))),
            "steps": a.record.steps,
            "rejected_steps": a.record.rejected_steps,
            "aborted": None if a.aborted is None else str(a.aborted),
            "final": dict(last),
            "t_final": a.record.times[-1],
        })
    kossakowski = diagnostics.kossakowski_eigenvalues(
        effective.D_pp, effective.D_qq, effective.gamma, hbar=coeffs.hbar)
    return {
        "name": scenario.name,
        "form": scenario.form,
        "coefficients": coeffs.as_dict(),
        "effective_D_qq": effective.D_qq,
        "gao_D_qq": coefficients.gao_position_diffusion(coeffs.gamma, coeffs.beta, coeffs.M,
                                                        hbar=coeffs.hbar),
        "brownian_limit": brownian.as_dict(),
        "cp_report": result.cp_report.as_dict(),
        "kossakowski_eigenvalues": [float(v) for v in kossakowski],
        "hamiltonian_anticommutator_weight": result.anticommutator_weight,
        "stationary": result.stationary.as_dict(),
        "equilibrium_var_p": (gaussian.equilibrium_var_p(
            coeffs.M, coeffs.beta, scenario.hamiltonian.omega, hbar=coeffs.hbar)),
        "oracle_max_rel_dev": max(a.oracle_max_rel_dev for a in result.axes),
        "min_eig_overall": _min_over_axes(result, "min_eig"),
        "max_trace_drift": _max_abs_over_axes(result, "trace_drift"),
        "total_final_energy": float(sum(a.record.rows[-1]["energy"] for a in result.axes)),
        "axes": axes,
        "status": result.status,
        "wall_time": wall_time,
    }


def csv_path_for_axis(scenario, axis):
    path = scenario.outputs.csv
    if scenario.axes == 1:
        return path
    stem, dot, ext = path.rpartition(".")
    if not dot:
        stem, ext = path, "csv"
    return "{0}.axis{1}.{2}".format(stem, axis + 1, ext)


def ensure_dir(output_fs, path):
    dirname = fs.path.dirname(path)
    if dirname and not output_fs.exists(dirname):
        output_fs.makedirs(dirname)


def write_trajectory_csv(output_fs, path, record):
    ensure_dir(output_fs, path)
    with output_fs.open(path, "w") as f:
        np.savetxt(f, record.as_array(), fmt="%.17g", delimiter=",",
                   header=",".join(CSV_HEADER), comments="")


def write_artifacts(result, options):
    scenario = result.scenario
    # Serialize first so that a non-finite value writes nothing.
    summary_text = json.dumps(result.summary, indent=2, sort_keys=True, allow_nan=False)
    for a in result.axes:
        path = fs.path.join(options.out_dir, csv_path_for_axis(scenario, a.axis))
        write_trajectory_csv(options.output_fs, path, a.record)
        result.written.append(path)
    path = fs.path.join(options.out_dir, scenario.outputs.json)
    ensure_dir(options.output_fs, path)
    options.output_fs.writetext(path, summary_text + "\n")
    result.written.append(path)


def run_scenarios(scenarios, options):
    """
    Runs scenarios concurrently, up to options.jobs at a time. Results come
    back in the order given.
    """
    if options.verbose:
        for s in scenarios:
            click.echo("Running scenario '{0}' ({1})".format(s.name, s.form))
    if options.jobs <= 1 or len(scenarios) <= 1:
        return [run_scenario(s, options) for s in scenarios]
    with ThreadPoolExecutor(max_workers=options.jobs) as executor:
        return list(executor.map(lambda s: run_scenario(s, options), scenarios))


def overall_status(results):
    statuses = [r.status for r in results]
    if EXIT_ERROR in statuses:
        return EXIT_ERROR
    if EXIT_PHYSICS_ABORT in statuses:
        return EXIT_PHYSICS_ABORT
    return EXIT_OK


def check_compatible(scenarios):
    """
    Returns a list of errors, empty if the scenarios can be compared.
    """
    if len(scenarios) < 2:
        return [error_types.IncompatibleScenarios("compare needs at least two scenarios")]
    first = scenarios[0]
    errors = []
    for s in scenarios[1:]:
        for field in ("gas", "M", "basis"):
            if getattr(s, field) != getattr(first, field):
                errors.append(error_types.IncompatibleScenarios(
                    "scenario '{0}' has a different {1} from '{2}'".format(s.name, field, first.name),
                    s.source))
    return errors


def _observable_deviation(result, reference):
    a, b = result.axes[0].record, reference.axes[0].record
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        return None
    return float(max(np.max(np.abs(a.column(name) - b.column(name))) for name in MOMENT_COLUMNS))


def comparison_table(results):
    rows = []
    reference = results[0]
    for r in results:
        if r.summary is None:
            rows.append((r.scenario.name, r.scenario.form) + (None,) * (len(COMPARE_HEADER) - 2))
            continue
        rows.append((
            r.scenario.name,
            r.scenario.form,
            r.effective.D_pp,
            r.effective.D_qq,
            r.effective.gamma,
            r.cp_report.verdict,
            r.stationary.var_p,
            r.summary["axes"][0]["final"]["var_p"],
            r.summary["min_eig_overall"],
            _observable_deviation(r, reference) if reference.summary is not None else None,
        ))
    return rows


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_comparison_csv(output_fs, path, rows):
    ensure_dir(output_fs, path)
    lines = [",".join(COMPARE_HEADER)]
    lines.extend(",".join(format_cell(v) for v in row) for row in rows)
    output_fs.writetext(path, "\n".join(lines) + "\n")


def print_comparison(rows):
    def short(value):
        if value is None:
            return "-"
        if isinstance(value, float):
            return "{0:.6g}".format(value)
        return str(value)

    table = [COMPARE_HEADER] + [tuple(short(v) for v in row) for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(COMPARE_HEADER))]
    for row in table:
        click.echo("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())


def print_errors(results):
    for r in results:
        for err in r.errors:
            if hasattr(err, "display"):
                click.echo(err.display())
            else:
                click.echo("Scenario '{0}': {1}".format(r.scenario.name, err))


def print_warnings(results):
    for r in results:
        for w in r.warnings:
            click.echo(w)


def report(results, options):
    if any(r.warnings for r in results):
        click.secho("\nWarnings:\n", fg="yellow", bold=True)
        print_warnings(results)

    if options.verbose:
        for r in results:
            if r.coefficients is not None:
                click.secho("\nScenario '{0}' ({1})".format(r.scenario.name, r.scenario.form),
                            fg="green", bold=True)
                c = r.coefficients
                click.echo("  D_pp = {0:.6g}, D_qq = {1:.6g}, gamma = {2:.6g}".format(
                    c.D_pp, c.D_qq, c.gamma))
                click.echo("\n".join("  " + line for line in r.cp_report.display().splitlines()))
                for path in r.written:
                    click.echo("  Wrote {0}".format(path))

    if any(r.errors for r in results):
        click.secho("\nErrors:\n", fg="red", bold=True)
        print_errors(results)
        if options.verbose:
            click.secho("Failed!", fg="red", bold=True)
    elif options.verbose:
        click.secho("Success!", fg="green", bold=True)


def run_all(scenarios, options):
    results = run_scenarios(scenarios, options)
    report(results, options)
    return overall_status(results)


def compare_mode(scenarios, options):
    results = run_scenarios(scenarios, options)
    rows = comparison_table(results)
    report(results, options)
    click.echo("")
    print_comparison(rows)
    write_comparison_csv(options.output_fs, fs.path.join(options.out_dir, "compare.csv"), rows)
    return overall_status(results)
