"""Scenario configuration: strict INI parsing with exhaustive error reports.

Sections and keys are allowlisted per scenario kind; anything unknown is an
error, and every problem found is reported in one ConfigError rather than
bailing at the first.  parse/render round-trip: render_config produces a
canonical text whose parse is equivalent, which is what run manifests echo.
"""

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .errors import ConfigError
from .grid import GridSpec, PhysicalParams, build_grid


def bundled_scenario_text(name: str) -> str:
    """Source text of a packaged scenario config (name without .cfg)."""
    ref = resources.files("stochmech") / "scenarios" / f"{name}.cfg"
    try:
        return ref.read_text()
    except FileNotFoundError:
        available = sorted(p.name[:-4] for p in
                           (resources.files("stochmech") / "scenarios").iterdir()
                           if p.name.endswith(".cfg"))
        raise ConfigError(f"no bundled scenario {name!r}; "
                          f"available: {', '.join(available)}") from None

KINDS = ("coherent_oscillator", "stationary_ground", "barrier_tunneling",
         "custom_potential")
ANALYSES = ("density", "trajectories", "autocorrelation", "psd", "fpt",
            "actions", "fields")
BOUNDARY_POLICIES = ("reflect", "absorb")
FPT_SENSES = ("enter", "exit", "traverse")
POTENTIALS = ("harmonic", "quartic", "double_well")

# (section, key) -> kinds that accept it; "*" = every kind
_ALLOWED = {
    ("scenario", "kind"): "*",
    ("scenario", "name"): "*",
    ("physics", "hbar"): "*",
    ("physics", "mass"): "*",
    ("physics", "omega"): ("coherent_oscillator", "stationary_ground"),
    ("physics", "n_mean"): ("coherent_oscillator",),
    ("physics", "potential"): ("custom_potential",),
    ("physics", "potential_a"): ("custom_potential",),
    ("physics", "potential_b"): ("custom_potential",),
    ("physics", "potential_omega"): ("custom_potential",),
    ("physics", "e_lo"): ("stationary_ground", "custom_potential"),
    ("physics", "e_hi"): ("stationary_ground", "custom_potential"),
    ("physics", "barrier_height"): ("barrier_tunneling",),
    ("physics", "barrier_width"): ("barrier_tunneling",),
    ("physics", "barrier_center"): ("barrier_tunneling",),
    ("physics", "packet_x0"): ("barrier_tunneling",),
    ("physics", "packet_sigma"): ("barrier_tunneling",),
    ("physics", "packet_k0"): ("barrier_tunneling",),
    ("grid", "x_min"): "*",
    ("grid", "x_max"): "*",
    ("grid", "n_points"): "*",
    ("grid", "dt_pde"): "*",
    ("sde", "dt_sde"): "*",
    ("sde", "n_paths"): "*",
    ("sde", "seed"): "*",
    ("sde", "boundary_policy"): "*",
    ("sde", "record_every"): "*",
    ("sde", "horizon"): "*",
    ("analysis", "analyses"): "*",
    ("analysis", "bins"): "*",
    ("analysis", "max_lag"): "*",
    ("analysis", "segment_length"): "*",
    ("analysis", "overlap"): "*",
    ("analysis", "fpt_lo"): "*",
    ("analysis", "fpt_hi"): "*",
    ("analysis", "fpt_sense"): "*",
    ("analysis", "csv_paths"): "*",
    ("analysis", "density_time"): "*",
    ("analysis", "ks_budget"): "*",
    ("output", "directory"): "*",
}

_INT_KEYS = {"n_points", "n_paths", "seed", "record_every", "bins",
             "segment_length", "csv_paths"}
_STR_KEYS = {"kind", "name", "boundary_policy", "potential", "fpt_sense",
             "analyses", "directory"}

# kind -> {(section, key): default-as-string}
_DEFAULTS_COMMON = {
    ("physics", "hbar"): "1.0",
    ("physics", "mass"): "1.0",
    ("sde", "seed"): "20260101",
    ("sde", "boundary_policy"): "reflect",
    ("analysis", "bins"): "64",
    ("analysis", "overlap"): "0.5",
    ("analysis", "fpt_sense"): "traverse",
    ("analysis", "csv_paths"): "8",
    ("analysis", "ks_budget"): "0.05",
}
_DEFAULTS_BY_KIND = {
    "coherent_oscillator": {
        ("physics", "omega"): "1.0",
        ("physics", "n_mean"): "0",
        ("grid", "x_min"): "-10.0", ("grid", "x_max"): "10.0",
        ("grid", "n_points"): "2001", ("grid", "dt_pde"): "0.01",
        ("sde", "dt_sde"): "0.001", ("sde", "n_paths"): "2000",
        ("sde", "record_every"): "10", ("sde", "horizon"): "12.56",
        ("analysis", "analyses"): "density, trajectories",
        ("analysis", "max_lag"): "3.0",
        ("analysis", "segment_length"): "256",
    },
    "stationary_ground": {
        ("physics", "omega"): "1.0",
        ("physics", "e_lo"): "0.2", ("physics", "e_hi"): "0.9",
        ("grid", "x_min"): "-8.0", ("grid", "x_max"): "8.0",
        ("grid", "n_points"): "2001", ("grid", "dt_pde"): "0.001",
        ("sde", "dt_sde"): "0.001", ("sde", "n_paths"): "2000",
        ("sde", "record_every"): "10", ("sde", "horizon"): "10.0",
        ("analysis", "analyses"): "density, autocorrelation, psd, actions",
        ("analysis", "max_lag"): "3.0",
        ("analysis", "segment_length"): "256",
    },
    "custom_potential": {
        ("grid", "x_min"): "-6.0", ("grid", "x_max"): "6.0",
        ("grid", "n_points"): "2001", ("grid", "dt_pde"): "0.001",
        ("sde", "dt_sde"): "0.001", ("sde", "n_paths"): "2000",
        ("sde", "record_every"): "10", ("sde", "horizon"): "10.0",
        ("analysis", "analyses"): "density",
        ("analysis", "max_lag"): "3.0",
        ("analysis", "segment_length"): "256",
    },
    "barrier_tunneling": {
        ("physics", "barrier_height"): "2.0",
        ("physics", "barrier_width"): "0.7",
        ("physics", "barrier_center"): "0.0",
        ("physics", "packet_x0"): "-8.0",
        ("physics", "packet_sigma"): "1.0",
        ("physics", "packet_k0"): "2.0",
        ("grid", "x_min"): "-60.0", ("grid", "x_max"): "60.0",
        ("grid", "n_points"): "4801", ("grid", "dt_pde"): "0.0005",
        ("sde", "dt_sde"): "0.0005", ("sde", "n_paths"): "4000",
        ("sde", "boundary_policy"): "absorb",
        ("sde", "record_every"): "20", ("sde", "horizon"): "12.0",
        ("analysis", "analyses"): "density, trajectories, fpt",
        ("analysis", "max_lag"): "3.0",
        ("analysis", "segment_length"): "256",
    },
}


@dataclass(frozen=True)
class AnalysisOptions:
    analyses: tuple
    bins: int
    max_lag: float
    segment_length: int
    overlap: float
    fpt_lo: Optional[float]
    fpt_hi: Optional[float]
    fpt_sense: str
    csv_paths: int
    density_time: Optional[float]
    ks_budget: float


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    name: str
    params: PhysicalParams
    grid: GridSpec
    dt_sde: float
    n_paths: int
    seed: int
    boundary_policy: str
    record_every: int
    horizon: float
    analysis: AnalysisOptions
    outdir: Optional[str]
    omega: float = 1.0
    n_means: tuple = (0.0,)
    potential_variant: str = "harmonic"
    potential_params: dict = field(default_factory=dict)
    e_bracket: tuple = (0.2, 0.9)
    barrier: Optional[dict] = None
    packet: Optional[dict] = None


def _read_ini(text: str, errors: list) -> Optional[configparser.ConfigParser]:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        errors.append(f"malformed config: {exc}")
        return None
    return parser


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario text, reporting every error at once."""
    errors: list = []
    parser = _read_ini(text, errors)
    if parser is None:
        raise ConfigError("\n".join(errors))

    raw = {(s, k): v for s in parser.sections() for k, v in parser.items(s)}

    kind = raw.get(("scenario", "kind"))
    if "scenario" not in parser.sections():
        errors.append("missing required section [scenario]")
    elif kind is None:
        errors.append("section [scenario]: missing required key 'kind'")
    elif kind not in KINDS:
        errors.append(f"section [scenario]: unknown kind {kind!r}; "
                      f"expected one of {', '.join(KINDS)}")

    known_sections = {s for s, _ in _ALLOWED}
    for s in parser.sections():
        if s not in known_sections:
            errors.append(f"unknown section [{s}]")
    for (s, k) in raw:
        if s not in known_sections:
            continue
        allowed = _ALLOWED.get((s, k))
        if allowed is None:
            errors.append(f"section [{s}]: unknown key {k!r}")
        elif allowed != "*" and kind in KINDS and kind not in allowed:
            errors.append(f"section [{s}]: key {k!r} not applicable to kind {kind!r}")

    if kind not in KINDS:
        raise ConfigError("\n".join(errors))

    merged = dict(_DEFAULTS_COMMON)
    merged.update(_DEFAULTS_BY_KIND[kind])
    merged.update({sk: v for sk, v in raw.items()
                   if _ALLOWED.get(sk) == "*" or (kind in (_ALLOWED.get(sk) or ()))})

    def get(section, key, default=None):
        value = merged.get((section, key))
        if value is None:
            return default
        key_err = f"section [{section}]: key {key!r}"
        if key in _STR_KEYS:
            return value.strip()
        try:
            if key in _INT_KEYS:
                return int(value)
            return float(value)
        except ValueError:
            kind_word = "an integer" if key in _INT_KEYS else "a number"
            errors.append(f"{key_err} expects {kind_word}, got {value!r}")
            return default

    def check(cond, message):
        if not cond:
            errors.append(message)
        return cond

    hbar = get("physics", "hbar")
    mass = get("physics", "mass")
    check(hbar is None or hbar > 0, "section [physics]: hbar must be > 0")
    check(mass is None or mass > 0, "section [physics]: mass must be > 0")

    omega = get("physics", "omega", 1.0)
    check(omega is None or omega > 0, "section [physics]: omega must be > 0")

    n_means = (0.0,)
    if ("physics", "n_mean") in merged:
        parts = [p.strip() for p in merged[("physics", "n_mean")].split(",") if p.strip()]
        vals = []
        for p in parts:
            try:
                v = float(p)
            except ValueError:
                errors.append(f"section [physics]: n_mean entry {p!r} is not a number")
                continue
            if v < 0:
                errors.append("n_mean must be ≥ 0")
            else:
                vals.append(v)
        if parts:
            n_means = tuple(vals) if vals else (0.0,)

    potential_variant = get("physics", "potential", "harmonic")
    potential_params: dict = {}
    if kind == "custom_potential":
        if ("physics", "potential") not in merged:
            errors.append("section [physics]: custom_potential requires key 'potential'")
        elif potential_variant not in POTENTIALS:
            errors.append(f"section [physics]: unknown potential {potential_variant!r}; "
                          f"expected one of {', '.join(POTENTIALS)}")
        if potential_variant == "harmonic":
            w = get("physics", "potential_omega", 1.0)
            check(w > 0, "section [physics]: potential_omega must be > 0")
            potential_params = {"omega": w}
        elif potential_variant == "quartic":
            a = get("physics", "potential_a", 0.25)
            check(a > 0, "section [physics]: potential_a must be > 0")
            potential_params = {"a": a}
        elif potential_variant == "double_well":
            a = get("physics", "potential_a", 1.0)
            b = get("physics", "potential_b", 2.0)
            check(a > 0, "section [physics]: potential_a must be > 0")
            check(b >= 0, "section [physics]: potential_b must be ≥ 0")
            potential_params = {"a": a, "b": b}

    default_bracket = {"harmonic": (0.2, 0.9), "quartic": (0.2, 0.9),
                       "double_well": (-0.5, 0.5)}.get(potential_variant, (0.2, 0.9))
    e_lo = get("physics", "e_lo", default_bracket[0])
    e_hi = get("physics", "e_hi", default_bracket[1])
    check(e_lo is None or e_hi is None or e_lo < e_hi,
          "section [physics]: e_lo must be below e_hi")

    barrier = packet = None
    if kind == "barrier_tunneling":
        barrier = {"height": get("physics", "barrier_height"),
                   "width": get("physics", "barrier_width"),
                   "center": get("physics", "barrier_center")}
        packet = {"x0": get("physics", "packet_x0"),
                  "sigma": get("physics", "packet_sigma"),
                  "k0": get("physics", "packet_k0")}
        check(barrier["height"] is None or barrier["height"] > 0,
              "section [physics]: barrier_height must be > 0")
        check(barrier["width"] is None or barrier["width"] > 0,
              "section [physics]: barrier_width must be > 0")
        check(packet["sigma"] is None or packet["sigma"] > 0,
              "section [physics]: packet_sigma must be > 0")

    x_min = get("grid", "x_min")
    x_max = get("grid", "x_max")
    n_points = get("grid", "n_points")
    dt_pde = get("grid", "dt_pde")
    check(x_min is None or x_max is None or x_min < x_max,
          "section [grid]: x_min must be below x_max")
    check(n_points is None or n_points >= 16, "section [grid]: n_points must be ≥ 16")
    check(dt_pde is None or dt_pde > 0, "section [grid]: dt_pde must be > 0")

    dt_sde = get("sde", "dt_sde")
    n_paths = get("sde", "n_paths")
    seed = get("sde", "seed")
    boundary = get("sde", "boundary_policy")
    record_every = get("sde", "record_every")
    horizon = get("sde", "horizon")
    check(dt_sde is None or dt_sde > 0, "section [sde]: dt_sde must be > 0")
    check(dt_sde is None or dt_pde is None or dt_sde <= dt_pde * (1 + 1e-9),
          "section [sde]: dt_sde must not exceed dt_pde")
    check(n_paths is None or n_paths >= 1, "section [sde]: n_paths must be ≥ 1")
    check(seed is None or 0 <= seed < 2**64, "section [sde]: seed must fit in 64 bits")
    check(boundary in BOUNDARY_POLICIES,
          f"section [sde]: boundary_policy must be one of {', '.join(BOUNDARY_POLICIES)}")
    check(record_every is None or record_every >= 1,
          "section [sde]: record_every must be ≥ 1")
    check(horizon is None or horizon > 0, "section [sde]: horizon must be > 0")
    if None not in (horizon, dt_sde, record_every) and horizon > 0 and dt_sde > 0:
        stride = dt_sde * record_every
        n_rec = horizon / stride
        check(abs(n_rec - round(n_rec)) < 1e-6,
              "section [sde]: horizon must be a multiple of dt_sde * record_every")
    if (kind in ("coherent_oscillator", "barrier_tunneling")
            and None not in (horizon, dt_pde) and horizon > 0 and dt_pde > 0):
        # field tables for these kinds are built on the dt_pde time grid
        n_slices = horizon / dt_pde
        check(abs(n_slices - round(n_slices)) < 1e-6,
              "section [sde]: horizon must be a multiple of dt_pde for this kind")

    analyses_raw = merged.get(("analysis", "analyses"), "")
    analyses = tuple(a.strip() for a in analyses_raw.split(",") if a.strip())
    for a in analyses:
        check(a in ANALYSES,
              f"section [analysis]: unknown analysis {a!r}; "
              f"expected a subset of {', '.join(ANALYSES)}")
        if kind == "barrier_tunneling" and a in ("autocorrelation", "psd"):
            errors.append(f"section [analysis]: {a!r} assumes a non-absorbing "
                          "stationary ensemble and is not applicable to "
                          "barrier_tunneling")
    bins = get("analysis", "bins")
    max_lag = get("analysis", "max_lag")
    segment_length = get("analysis", "segment_length")
    overlap = get("analysis", "overlap")
    fpt_lo = get("analysis", "fpt_lo")
    fpt_hi = get("analysis", "fpt_hi")
    fpt_sense = get("analysis", "fpt_sense")
    csv_paths = get("analysis", "csv_paths")
    density_time = get("analysis", "density_time")
    ks_budget = get("analysis", "ks_budget")
    check(bins is None or bins >= 1, "section [analysis]: bins must be ≥ 1")
    check(max_lag is None or max_lag > 0, "section [analysis]: max_lag must be > 0")
    check(segment_length is None or segment_length >= 8,
          "section [analysis]: segment_length must be ≥ 8")
    check(overlap is None or 0 <= overlap < 1,
          "section [analysis]: overlap must lie in [0, 1)")
    check(fpt_sense in FPT_SENSES,
          f"section [analysis]: fpt_sense must be one of {', '.join(FPT_SENSES)}")
    check(csv_paths is None or csv_paths >= 0,
          "section [analysis]: csv_paths must be ≥ 0")
    check(ks_budget is None or ks_budget > 0,
          "section [analysis]: ks_budget must be > 0")

    outdir = get("output", "directory")

    if errors:
        raise ConfigError("\n".join(errors))

    params = PhysicalParams(mass=mass, hbar=hbar)
    grid = build_grid(x_min, x_max, n_points, dt_pde)
    analysis = AnalysisOptions(analyses=analyses, bins=bins, max_lag=max_lag,
                               segment_length=segment_length, overlap=overlap,
                               fpt_lo=fpt_lo, fpt_hi=fpt_hi, fpt_sense=fpt_sense,
                               csv_paths=csv_paths, density_time=density_time,
                               ks_budget=ks_budget)
    return ScenarioConfig(kind=kind, name=raw.get(("scenario", "name"), kind),
                          params=params, grid=grid, dt_sde=dt_sde,
                          n_paths=n_paths, seed=seed, boundary_policy=boundary,
                          record_every=record_every, horizon=horizon,
                          analysis=analysis, outdir=outdir, omega=omega,
                          n_means=n_means, potential_variant=potential_variant,
                          potential_params=potential_params,
                          e_bracket=(e_lo, e_hi), barrier=barrier, packet=packet)


def render_config(config: ScenarioConfig) -> str:
    """Canonical text whose parse reproduces config (the manifest echo)."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str

    def put(section, key, value):
        if value is None:
            return
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))

    put("scenario", "kind", config.kind)
    put("scenario", "name", config.name)
    put("physics", "hbar", repr(config.params.hbar))
    put("physics", "mass", repr(config.params.mass))
    if config.kind in ("coherent_oscillator", "stationary_ground"):
        put("physics", "omega", repr(config.omega))
    if config.kind == "coherent_oscillator":
        put("physics", "n_mean", ", ".join(repr(v) for v in config.n_means))
    if config.kind == "custom_potential":
        put("physics", "potential", config.potential_variant)
        pp = config.potential_params
        if config.potential_variant == "harmonic":
            put("physics", "potential_omega", repr(pp["omega"]))
        elif config.potential_variant == "quartic":
            put("physics", "potential_a", repr(pp["a"]))
        elif config.potential_variant == "double_well":
            put("physics", "potential_a", repr(pp["a"]))
            put("physics", "potential_b", repr(pp["b"]))
    if config.kind in ("stationary_ground", "custom_potential"):
        put("physics", "e_lo", repr(config.e_bracket[0]))
        put("physics", "e_hi", repr(config.e_bracket[1]))
    if config.kind == "barrier_tunneling":
        put("physics", "barrier_height", repr(config.barrier["height"]))
        put("physics", "barrier_width", repr(config.barrier["width"]))
        put("physics", "barrier_center", repr(config.barrier["center"]))
        put("physics", "packet_x0", repr(config.packet["x0"]))
        put("physics", "packet_sigma", repr(config.packet["sigma"]))
        put("physics", "packet_k0", repr(config.packet["k0"]))
    put("grid", "x_min", repr(config.grid.x_min))
    put("grid", "x_max", repr(config.grid.x_max))
    put("grid", "n_points", config.grid.n_points)
    put("grid", "dt_pde", repr(config.grid.dt_pde))
    put("sde", "dt_sde", repr(config.dt_sde))
    put("sde", "n_paths", config.n_paths)
    put("sde", "seed", config.seed)
    put("sde", "boundary_policy", config.boundary_policy)
    put("sde", "record_every", config.record_every)
    put("sde", "horizon", repr(config.horizon))
    a = config.analysis
    put("analysis", "analyses", ", ".join(a.analyses))
    put("analysis", "bins", a.bins)
    put("analysis", "max_lag", repr(a.max_lag))
    put("analysis", "segment_length", a.segment_length)
    put("analysis", "overlap", repr(a.overlap))
    if a.fpt_lo is not None:
        put("analysis", "fpt_lo", repr(a.fpt_lo))
    if a.fpt_hi is not None:
        put("analysis", "fpt_hi", repr(a.fpt_hi))
    put("analysis", "fpt_sense", a.fpt_sense)
    put("analysis", "csv_paths", a.csv_paths)
    if a.density_time is not None:
        put("analysis", "density_time", repr(a.density_time))
    put("analysis", "ks_budget", repr(a.ks_budget))
    if config.outdir is not None:
        put("output", "directory", config.outdir)

    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
