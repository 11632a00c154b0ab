"""
Scenario configuration files.

The format is flat ``section.key = value`` lines. Blank lines and lines
starting with ``#`` are ignored, as is anything after a ``#`` preceded by
whitespace. Each ``scenario.name = ...`` line starts a new scenario; keys
that appear before the first one are defaults shared by every scenario.
"""
import math
import re
from collections import OrderedDict

import attr

from . import error_types
from .coefficients import (
    Constant,
    GasParameters,
    GaussianKernel,
    QuadratureConfig,
    load_tabulated,
)
from .hilbert import BasisConfig
from .integrator import MODE_ADAPTIVE, MODE_FIXED, IntegratorConfig
from .master_equation import (
    FORM_CALDEIRA_LEGGETT,
    FORM_DIOSI,
    FORM_QBM4,
    FORM_QBM5,
    HAMILTONIAN_FREE,
    HAMILTONIAN_HARMONIC,
    HamiltonianSpec,
)
from .utils import ConfigSource

INITIAL_FOCK = "fock"
INITIAL_COHERENT = "coherent"
INITIAL_THERMAL = "thermal"
INITIAL_SQUEEZED = "squeezed"
INITIAL_RANDOM = "random"

TMATRIX_CONSTANT = "constant"
TMATRIX_GAUSSIAN = "gaussian"
TMATRIX_TABULATED = "tabulated"

NAME_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")


@attr.s(frozen=True)
class InitialState(object):
    kind = attr.ib(default=INITIAL_FOCK)
    n = attr.ib(default=0)
    alphas = attr.ib(default=(0j,))  # one per axis, or a single shared value
    beta_eff = attr.ib(default=None)
    r = attr.ib(default=0.0)
    seed = attr.ib(default=0)
    rank = attr.ib(default=1)

    def alpha_for_axis(self, axis):
        return self.alphas[axis] if len(self.alphas) > 1 else self.alphas[0]


@attr.s(frozen=True)
class OutputSpec(object):
    csv = attr.ib()
    json = attr.ib()
    choi = attr.ib(default=False)
    choi_dim = attr.ib(default=6)
    choi_times = attr.ib(default=(0.1, 0.5, 1.0, 2.0))


@attr.s(frozen=True)
class Scenario(object):
    name = attr.ib()
    form = attr.ib()
    gas = attr.ib()
    M = attr.ib()
    tmatrix = attr.ib()
    hamiltonian = attr.ib()
    basis = attr.ib()
    initial = attr.ib()
    integrator = attr.ib()
    outputs = attr.ib()
    f_re0 = attr.ib(default=0.0)
    quadrature = attr.ib(factory=QuadratureConfig)
    axes = attr.ib(default=1)
    override_brownian_limit = attr.ib(default=False)
    source = attr.ib(default=None, eq=False)


# Converters. Each takes the raw string and returns a value or raises
# ValueError with a human readable reason.

def _real(raw):
    try:
        value = float(raw)
    except ValueError:
        raise ValueError("expected a number, got {0!r}".format(raw))
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _positive(raw):
    value = _real(raw)
    if value <= 0:
        raise ValueError("must be positive")
    return value


def _non_negative(raw):
    value = _real(raw)
    if value < 0:
        raise ValueError("must not be negative")
    return value


def _integer(lo=None, hi=None):
    def convert(raw):
        try:
            value = int(raw)
        except ValueError:
            raise ValueError("expected an integer, got {0!r}".format(raw))
        if lo is not None and value < lo:
            raise ValueError("must be at least {0}".format(lo))
        if hi is not None and value > hi:
            raise ValueError("must be at most {0}".format(hi))
        return value
    return convert


def _tolerance(raw):
    value = _real(raw)
    if not (1e-14 < value < 1e-2):
        raise ValueError("must lie in (1e-14, 1e-2)")
    return value


def _bool(raw):
    lowered = raw.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError("expected true or false, got {0!r}".format(raw))


def _choice(*options):
    def convert(raw):
        if raw not in options:
            raise ValueError("must be one of {0}".format(", ".join(options)))
        return raw
    return convert


def _complex_list(raw):
    values = []
    for part in raw.split(","):
        part = part.strip().replace(" ", "")
        try:
            value = complex(part)
        except ValueError:
            raise ValueError("expected a complex number, got {0!r}".format(part))
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ValueError("must be finite")
        values.append(value)
    return tuple(values)


def _positive_list(raw):
    return tuple(_positive(part.strip()) for part in raw.split(","))


def _name(raw):
    if not NAME_RE.match(raw):
        raise ValueError("must be usable as a filename stem (letters, digits, '_', '-', '.')")
    return raw


def _string(raw):
    if not raw:
        raise ValueError("must not be empty")
    return raw


REQUIRED = object()

# key -> (converter, default). Defaults of None are resolved later or are
# conditionally required.
KEYS = OrderedDict([
    ("scenario.name", (_name, REQUIRED)),
    ("scenario.form", (_choice(FORM_QBM4, FORM_QBM5, FORM_CALDEIRA_LEGGETT, FORM_DIOSI), FORM_QBM4)),
    ("scenario.axes", (_integer(1, 3), 1)),
    ("scenario.override_brownian_limit", (_bool, False)),
    ("gas.m", (_positive, REQUIRED)),
    ("gas.beta", (_positive, REQUIRED)),
    ("gas.n", (_positive, REQUIRED)),
    ("particle.M", (_positive, REQUIRED)),
    ("tmatrix.model", (_choice(TMATRIX_CONSTANT, TMATRIX_GAUSSIAN, TMATRIX_TABULATED), TMATRIX_CONSTANT)),
    ("tmatrix.t0", (_non_negative, None)),
    ("tmatrix.sigma", (_positive, None)),
    ("tmatrix.file", (_string, None)),
    ("tmatrix.f_re0", (_real, 0.0)),
    ("quadrature.nodes", (_integer(8), 64)),
    ("quadrature.max_nodes", (_integer(8), 4096)),
    ("hamiltonian.kind", (_choice(HAMILTONIAN_FREE, HAMILTONIAN_HARMONIC), HAMILTONIAN_FREE)),
    ("hamiltonian.omega", (_positive, None)),
    ("basis.dim", (_integer(2), 40)),
    ("basis.omega_ref", (_positive, None)),
    ("basis.hbar", (_positive, 1.0)),
    ("initial.kind", (_choice(INITIAL_FOCK, INITIAL_COHERENT, INITIAL_THERMAL, INITIAL_SQUEEZED,
                              INITIAL_RANDOM), INITIAL_FOCK)),
    ("initial.n", (_integer(0), 0)),
    ("initial.alpha", (_complex_list, (0j,))),
    ("initial.beta_eff", (_positive, None)),
    ("initial.r", (_real, 0.0)),
    ("initial.seed", (_integer(0), 0)),
    ("initial.rank", (_integer(1), 1)),
    ("integrator.dt", (_positive, 0.01)),
    ("integrator.t_end", (_positive, 10.0)),
    ("integrator.mode", (_choice(MODE_FIXED, MODE_ADAPTIVE), MODE_FIXED)),
    ("integrator.rel_tol", (_tolerance, 1e-8)),
    ("integrator.abs_tol", (_tolerance, 1e-10)),
    ("integrator.record_every", (_integer(1), 10)),
    ("integrator.hermitize", (_bool, False)),
    ("output.csv", (_string, None)),
    ("output.json", (_string, None)),
    ("output.choi", (_bool, False)),
    ("output.choi_dim", (_integer(2, 8), 6)),
    ("output.choi_times", (_positive_list, (0.1, 0.5, 1.0, 2.0))),
])


@attr.s
class _RawScenario(object):
    entries = attr.ib(factory=OrderedDict)  # key -> (raw value, ConfigSource)


def _split_lines(text, filename, errors):
    """
    Yields (ConfigSource, key, raw value) for each meaningful line.
    """
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        stripped = re.split(r"\s+#", stripped, maxsplit=1)[0].strip()
        if "=" not in stripped:
            errors.append(error_types.BadValue(
                "expected 'section.key = value'", ConfigSource(filename, lineno)))
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        yield ConfigSource(filename, lineno, key), key, raw


def parse_config(text, filename="<config>", fs=None):
    """
    Parses scenario config text.

    Returns a tuple (scenarios, errors). If errors is not empty the scenario
    list should not be used. `fs` is used to read tabulated T-matrix files.
    """
    errors = []
    defaults = _RawScenario()
    raws = []
    current = defaults
    for source, key, raw in _split_lines(text, filename, errors):
        if key not in KEYS:
            errors.append(error_types.UnknownKey("unknown key", source))
            continue
        if key == "scenario.name":
            current = _RawScenario(entries=OrderedDict(defaults.entries))
            raws.append(current)
        current.entries[key] = (raw, source)

    if not raws:
        errors.append(error_types.NoScenario("no scenario defined",
                                             ConfigSource(filename, 1)))
        return [], errors

    scenarios = []
    for raw_scenario in raws:
        scenario = _build_scenario(raw_scenario, filename, fs, errors)
        if scenario is not None:
            scenarios.append(scenario)

    names = [s.name for s in scenarios]
    for s in scenarios:
        if names.count(s.name) > 1 and s is scenarios[names.index(s.name)]:
            errors.append(error_types.BadValue("duplicate scenario name {0!r}".format(s.name), s.source))
    return scenarios, errors


def _build_scenario(raw_scenario, filename, fs, errors):
    values = {}
    sources = {}
    start_errors = len(errors)
    name_source = raw_scenario.entries["scenario.name"][1]
    for key, (converter, default) in KEYS.items():
        if key in raw_scenario.entries:
            raw, source = raw_scenario.entries[key]
            sources[key] = source
            try:
                values[key] = converter(raw)
            except ValueError as e:
                errors.append(error_types.BadValue(str(e), source))
        elif default is REQUIRED:
            errors.append(error_types.MissingKey(
                "missing required key '{0}'".format(key), ConfigSource(filename, name_source.line)))
        else:
            values[key] = default
    if len(errors) > start_errors:
        return None

    def require(key, reason):
        if values.get(key) is None:
            errors.append(error_types.MissingKey(
                "missing required key '{0}' ({1})".format(key, reason),
                ConfigSource(filename, name_source.line)))

    model = values["tmatrix.model"]
    if model in (TMATRIX_CONSTANT, TMATRIX_GAUSSIAN):
        require("tmatrix.t0", "needed for the {0} T-matrix model".format(model))
    if model == TMATRIX_GAUSSIAN:
        require("tmatrix.sigma", "needed for the gaussian T-matrix model")
    if model == TMATRIX_TABULATED:
        require("tmatrix.file", "needed for the tabulated T-matrix model")
    if values["hamiltonian.kind"] == HAMILTONIAN_HARMONIC:
        require("hamiltonian.omega", "needed for a harmonic Hamiltonian")
    if values["initial.kind"] == INITIAL_THERMAL:
        require("initial.beta_eff", "needed for a thermal initial state")
    if len(errors) > start_errors:
        return None

    def bad(key, reason):
        errors.append(error_types.BadValue(reason, sources.get(key, name_source)))

    if values["initial.kind"] == INITIAL_FOCK and values["initial.n"] >= values["basis.dim"]:
        bad("initial.n", "Fock level must be below basis.dim ({0})".format(values["basis.dim"]))
    alphas = values["initial.alpha"]
    if len(alphas) not in (1, values["scenario.axes"]):
        bad("initial.alpha", "give one amplitude, or one per axis ({0})".format(values["scenario.axes"]))
    if values["integrator.dt"] >= values["integrator.t_end"]:
        bad("integrator.dt", "must be smaller than integrator.t_end")
    if values["quadrature.max_nodes"] < values["quadrature.nodes"]:
        bad("quadrature.max_nodes", "must not be smaller than quadrature.nodes")

    tmatrix = None
    if model == TMATRIX_CONSTANT:
        tmatrix = Constant(t0=values["tmatrix.t0"])
    elif model == TMATRIX_GAUSSIAN:
        tmatrix = GaussianKernel(t0=values["tmatrix.t0"], sigma=values["tmatrix.sigma"])
    else:
        path = values["tmatrix.file"]
        if fs is None or not fs.exists(path):
            bad("tmatrix.file", "T-matrix file '{0}' not found".format(path))
        else:
            try:
                tmatrix = load_tabulated(fs, path)
            except ValueError as e:
                bad("tmatrix.file", str(e))
    if len(errors) > start_errors:
        return None

    name = values["scenario.name"]
    hamiltonian = HamiltonianSpec(kind=values["hamiltonian.kind"], omega_trap=values["hamiltonian.omega"])
    omega_ref = values["basis.omega_ref"]
    if omega_ref is None:
        omega_ref = hamiltonian.omega_trap if hamiltonian.kind == HAMILTONIAN_HARMONIC else 1.0
    return Scenario(
        name=name,
        form=values["scenario.form"],
        axes=values["scenario.axes"],
        override_brownian_limit=values["scenario.override_brownian_limit"],
        gas=GasParameters(m=values["gas.m"], beta=values["gas.beta"], n=values["gas.n"]),
        M=values["particle.M"],
        tmatrix=tmatrix,
        f_re0=values["tmatrix.f_re0"],
        quadrature=QuadratureConfig(nodes=values["quadrature.nodes"],
                                    max_nodes=values["quadrature.max_nodes"]),
        hamiltonian=hamiltonian,
        basis=BasisConfig(dim=values["basis.dim"], mass=values["particle.M"],
                          omega_ref=omega_ref, hbar=values["basis.hbar"]),
        initial=InitialState(
            kind=values["initial.kind"],
            n=values["initial.n"],
            alphas=alphas,
            beta_eff=values["initial.beta_eff"],
            r=values["initial.r"],
            seed=values["initial.seed"],
            rank=values["initial.rank"],
        ),
        integrator=IntegratorConfig(
            dt=values["integrator.dt"],
            t_end=values["integrator.t_end"],
            mode=values["integrator.mode"],
            rel_tol=values["integrator.rel_tol"],
            abs_tol=values["integrator.abs_tol"],
            record_every=values["integrator.record_every"],
            hermitize=values["integrator.hermitize"],
        ),
        outputs=OutputSpec(
            csv=values["output.csv"] or "{0}.csv".format(name),
            json=values["output.json"] or "{0}.json".format(name),
            choi=values["output.choi"],
            choi_dim=values["output.choi_dim"],
            choi_times=values["output.choi_times"],
        ),
        source=name_source,
    )
