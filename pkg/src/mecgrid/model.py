"""Data model of a multi-carrier hybrid AC/DC microgrid.

Electrical quantities are kW / kvar / kWh on the outside and per-unit on a
``PerUnitBase`` inside the optimization model.  Gas quantities stay in
Skcf/hr throughout.  All classes are frozen dataclasses so a validated case
can be shared between concurrent solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence, Union

import numpy as np

TERMINAL_RULES = ("free", "at-least-initial")
NETWORKS = ("ac", "dc")
RENEWABLE_KINDS = ("wind", "solar")


@dataclass(frozen=True)
class PolyCurve:
    """Polynomial ``y = sum(coeffs[k] * x**k)`` with ascending coefficients."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = np.zeros_like(x)
        for c in reversed(self.coeffs):
            y = y * x + c
        return float(y) if y.ndim == 0 else y

    def scale_input(self, factor: float) -> "PolyCurve":
        """Curve ``g(x) = f(factor * x)``."""
        return PolyCurve(tuple(c * factor**k for k, c in enumerate(self.coeffs)))


@dataclass(frozen=True)
class PerUnitBase:
    power_kva: float = 100.0
    pressure: float = 1.0


@dataclass(frozen=True)
class AcHub:
    id: str
    v_min: float
    v_max: float
    demand_p: tuple[float, ...]
    demand_q: tuple[float, ...]
    is_reference: bool = False


@dataclass(frozen=True)
class AcLine:
    id: str
    from_hub: str
    to_hub: str
    g: float
    b: float
    sl_max: float


@dataclass(frozen=True)
class DcHub:
    id: str
    v_min: float
    v_max: float
    demand_p: tuple[float, ...]


@dataclass(frozen=True)
class DcLine:
    id: str
    from_hub: str
    to_hub: str
    r: float
    sl_max: float


@dataclass(frozen=True)
class Inverter:
    """Bidirectional converter; positive active power flows DC -> AC."""

    id: str
    ac_hub: str
    dc_hub: str
    p_min: float
    p_max: float
    q_min: float
    q_max: float


@dataclass(frozen=True)
class Microturbine:
    id: str
    network: str
    hub: str
    p_min: float
    p_max: float
    q_min: float
    q_max: float
    fuel_curve: PolyCurve
    gas_hub: str


@dataclass(frozen=True)
class RenewableUnit:
    id: str
    kind: str
    network: str
    hub: str
    forecast: tuple[float, ...]


@dataclass(frozen=True)
class BatteryUnit:
    id: str
    dc_hub: str
    p_ch_min: float
    p_ch_max: float
    p_dc_min: float
    p_dc_max: float
    eta_ch: float
    eta_dc: float
    e_min: float
    e_max: float
    e_initial: float
    terminal_rule: str = "at-least-initial"


@dataclass(frozen=True)
class GasHub:
    id: str
    pi_min: float
    pi_max: float
    heat_demand: tuple[float, ...]


@dataclass(frozen=True)
class GasPipe:
    id: str
    from_hub: str
    to_hub: str
    c_p: float
    pi0_from: float
    pi0_to: float
    f_max: float


@dataclass(frozen=True)
class GasSupplier:
    id: str
    gas_hub: str
    v_min: float
    v_max: float
    cost_curve: PolyCurve


@dataclass(frozen=True)
class CostParams:
    voll_e: float
    voll_g: float
    beta: float
    xi: float = 0.0
    pwl_segments: int = 4


@dataclass(frozen=True)
class MicrogridCase:
    ac_hubs: tuple[AcHub, ...]
    dc_hubs: tuple[DcHub, ...]
    gas_hubs: tuple[GasHub, ...]
    ac_lines: tuple[AcLine, ...] = ()
    dc_lines: tuple[DcLine, ...] = ()
    inverters: tuple[Inverter, ...] = ()
    turbines: tuple[Microturbine, ...] = ()
    renewables: tuple[RenewableUnit, ...] = ()
    batteries: tuple[BatteryUnit, ...] = ()
    pipes: tuple[GasPipe, ...] = ()
    suppliers: tuple[GasSupplier, ...] = ()
    horizon: int = 24
    base: PerUnitBase = field(default_factory=PerUnitBase)
    costs: CostParams = field(default_factory=lambda: CostParams(0.0, 0.0, 0.0))
    per_unit: bool = False
    name: str = ""
    description: str = ""

    def reference_hub(self) -> AcHub | None:
        refs = [h for h in self.ac_hubs if h.is_reference]
        return refs[0] if len(refs) == 1 else None


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __str__(self):
        return "\n".join(str(v) for v in self.violations) or "ok"


def curve_shape_problems(curve, lo: float, hi: float, nondecreasing: bool = False,
                         samples: int = 65) -> list[str]:
    """Sample-based convexity (and optional monotonicity) check on [lo, hi]."""
    if hi <= lo:
        return []
    x = np.linspace(lo, hi, samples)
    y = np.asarray([curve(v) for v in x], dtype=float)
    if not np.all(np.isfinite(y)):
        return ["curve is not finite on its domain"]
    slopes = np.diff(y) / np.diff(x)
    scale = max(1.0, float(np.max(np.abs(slopes))))
    out = []
    if np.any(np.diff(slopes) < -1e-9 * scale):
        out.append(f"curve is not convex on [{lo:g}, {hi:g}]")
    if nondecreasing and np.any(slopes < -1e-9 * scale):
        out.append(f"curve is decreasing on [{lo:g}, {hi:g}]")
    return out


def validate_case(case: MicrogridCase) -> ValidationReport:
    """Collect every invariant violation of ``case``; never raises."""
    v: list[Violation] = []

    def bad(path, msg):
        v.append(Violation(path, msg))

    T = case.horizon
    if not isinstance(T, int) or T < 1:
        bad("horizon", f"must be a positive integer, got {T!r}")
        T = None

    def check_profile(path, values, nonneg=True):
        if T is not None and len(values) != T:
            bad(path, f"profile has {len(values)} entries, expected {T}")
        if nonneg and any(x < 0 for x in values):
            bad(path, "profile has negative entries")

    def unique(kind, items):
        seen = set()
        for i, item in enumerate(items):
            if item.id in seen:
                bad(f"{kind}[{i}].id", f"duplicate id {item.id!r}")
            seen.add(item.id)
        return seen

    ac_ids = unique("ac_hubs", case.ac_hubs)
    dc_ids = unique("dc_hubs", case.dc_hubs)
    gas_ids = unique("gas_hubs", case.gas_hubs)
    hub_sets = {"ac": ac_ids, "dc": dc_ids}

    seen_devices: dict[str, str] = {}
    for kind in ("ac_lines", "dc_lines", "inverters", "turbines", "renewables",
                 "batteries", "pipes", "suppliers"):
        for i, dev in enumerate(getattr(case, kind)):
            if dev.id in seen_devices:
                bad(f"{kind}[{i}].id",
                    f"duplicate device id {dev.id!r} (also in {seen_devices[dev.id]})")
            else:
                seen_devices[dev.id] = kind

    if case.base.power_kva <= 0 or case.base.pressure <= 0:
        bad("base", "per-unit bases must be positive")

    n_ref = sum(1 for h in case.ac_hubs if h.is_reference)
    if case.ac_hubs and n_ref != 1:
        bad("ac_hubs", f"exactly one reference hub required, found {n_ref}")
    for i, h in enumerate(case.ac_hubs):
        p = f"ac_hubs[{i}]"
        if not 0 < h.v_min <= h.v_max:
            bad(p, f"voltage bounds must satisfy 0 < v_min <= v_max (hub {h.id!r})")
        check_profile(f"{p}.demand_p", h.demand_p)
        check_profile(f"{p}.demand_q", h.demand_q)
    for i, h in enumerate(case.dc_hubs):
        p = f"dc_hubs[{i}]"
        if not 0 < h.v_min <= h.v_max:
            bad(p, f"voltage bounds must satisfy 0 < v_min <= v_max (hub {h.id!r})")
        check_profile(f"{p}.demand_p", h.demand_p)
    for i, h in enumerate(case.gas_hubs):
        p = f"gas_hubs[{i}]"
        if not 0 < h.pi_min <= h.pi_max:
            bad(p, f"pressure bounds must satisfy 0 < pi_min <= pi_max (hub {h.id!r})")
        check_profile(f"{p}.heat_demand", h.heat_demand)

    for kind, lines, hubs in (("ac_lines", case.ac_lines, ac_ids),
                              ("dc_lines", case.dc_lines, dc_ids)):
        for i, ln in enumerate(lines):
            p = f"{kind}[{i}]"
            for end in (ln.from_hub, ln.to_hub):
                if end not in hubs:
                    bad(p, f"unknown hub {end!r}")
            if ln.from_hub == ln.to_hub:
                bad(p, "line endpoints must differ")
            if not ln.sl_max > 0:
                bad(p, "sl_max must be positive")
    for i, ln in enumerate(case.dc_lines):
        if not ln.r > 0:
            bad(f"dc_lines[{i}]", "resistance must be positive")

    for i, c in enumerate(case.inverters):
        p = f"inverters[{i}]"
        if c.ac_hub not in ac_ids:
            bad(p, f"unknown AC hub {c.ac_hub!r}")
        if c.dc_hub not in dc_ids:
            bad(p, f"unknown DC hub {c.dc_hub!r}")
        if c.p_min > c.p_max:
            bad(p, "p_min > p_max")
        if c.q_min > c.q_max:
            bad(p, "q_min > q_max")

    for i, g in enumerate(case.turbines):
        p = f"turbines[{i}]"
        if g.network not in NETWORKS:
            bad(p, f"network must be one of {NETWORKS}")
        elif g.hub not in hub_sets[g.network]:
            bad(p, f"unknown {g.network.upper()} hub {g.hub!r}")
        if g.gas_hub not in gas_ids:
            bad(p, f"unknown gas hub {g.gas_hub!r}")
        if not 0 <= g.p_min <= g.p_max:
            bad(p, "active bounds must satisfy 0 <= p_min <= p_max")
        if g.q_min > g.q_max:
            bad(p, "q_min > q_max")
        for msg in curve_shape_problems(g.fuel_curve, g.p_min, g.p_max, nondecreasing=True):
            bad(f"{p}.fuel_curve", msg)

    for i, r in enumerate(case.renewables):
        p = f"renewables[{i}]"
        if r.kind not in RENEWABLE_KINDS:
            bad(p, f"kind must be one of {RENEWABLE_KINDS}")
        if r.network not in NETWORKS:
            bad(p, f"network must be one of {NETWORKS}")
        elif r.hub not in hub_sets[r.network]:
            bad(p, f"unknown {r.network.upper()} hub {r.hub!r}")
        check_profile(f"{p}.forecast", r.forecast)

    for i, k in enumerate(case.batteries):
        p = f"batteries[{i}]"
        if k.dc_hub not in dc_ids:
            bad(p, f"unknown DC hub {k.dc_hub!r}")
        if not 0 <= k.p_ch_min <= k.p_ch_max:
            bad(p, "charge bounds must satisfy 0 <= p_ch_min <= p_ch_max")
        if not 0 <= k.p_dc_min <= k.p_dc_max:
            bad(p, "discharge bounds must satisfy 0 <= p_dc_min <= p_dc_max")
        if not (0 < k.eta_ch <= 1 and 0 < k.eta_dc <= 1):
            bad(p, "efficiencies must lie in (0, 1]")
        if not k.e_min <= k.e_initial <= k.e_max:
            bad(p, "BatteryUnit bounds violated: need e_min <= e_initial <= e_max")
        if k.terminal_rule not in TERMINAL_RULES:
            bad(p, f"terminal_rule must be one of {TERMINAL_RULES}")

    for i, pp in enumerate(case.pipes):
        p = f"pipes[{i}]"
        for end in (pp.from_hub, pp.to_hub):
            if end not in gas_ids:
                bad(p, f"unknown gas hub {end!r}")
        if pp.from_hub == pp.to_hub:
            bad(p, "pipe endpoints must differ")
        if not pp.f_max > 0:
            bad(p, "f_max must be positive")
        if not pp.c_p > 0:
            bad(p, "c_p must be positive")
        if not (pp.pi0_from > 0 and pp.pi0_to > 0):
            bad(p, "initial pressures must be positive")
        elif pp.pi0_from == pp.pi0_to:
            bad(p, "equal initial pressures make the linear flow model singular")

    for i, s in enumerate(case.suppliers):
        p = f"suppliers[{i}]"
        if s.gas_hub not in gas_ids:
            bad(p, f"unknown gas hub {s.gas_hub!r}")
        if not 0 <= s.v_min <= s.v_max:
            bad(p, "supply bounds must satisfy 0 <= v_min <= v_max")
        for msg in curve_shape_problems(s.cost_curve, s.v_min, s.v_max):
            bad(f"{p}.cost_curve", msg)

    c = case.costs
    if min(c.voll_e, c.voll_g, c.beta) < 0:
        bad("costs", "voll_e, voll_g and beta must be non-negative")
    if c.xi < 0:
        bad("costs.xi", "must be non-negative")
    if not isinstance(c.pwl_segments, int) or c.pwl_segments < 1:
        bad("costs.pwl_segments", "must be an integer >= 1")

    return ValidationReport(tuple(v))


class CaseError(ValueError):
    """Raised when an invalid case is handed to an operation that needs a valid one."""

    def __init__(self, report: ValidationReport):
        super().__init__(f"invalid case:\n{report}")
        self.report = report


def require_valid(case: MicrogridCase) -> MicrogridCase:
    report = validate_case(case)
    if not report.ok:
        raise CaseError(report)
    return case


# -- admittance ---------------------------------------------------------------


@dataclass(frozen=True)
class AdmittanceMatrix:
    G: np.ndarray
    B: np.ndarray
    hub_ids: tuple[str, ...] = ()


def assemble_admittance(ac_lines: Iterable[AcLine],
                        hubs: Union[int, Sequence[str]]) -> AdmittanceMatrix:
    """Nodal conductance/susceptance matrices of a shunt-free line set.

    ``hubs`` is either the hub count (line endpoints are then 0-based
    positions) or the ordered hub ids.
    """
    if isinstance(hubs, int):
        n = hubs
        ids = tuple(str(i) for i in range(n))
        pos = None
    else:
        ids = tuple(hubs)
        n = len(ids)
        pos = {h: i for i, h in enumerate(ids)}
    G = np.zeros((n, n))
    B = np.zeros((n, n))
    for ln in ac_lines:
        ends = []
        for end in (ln.from_hub, ln.to_hub):
            if pos is None:
                j = int(end)
                if not 0 <= j < n:
                    raise ValueError(f"line {ln.id!r}: endpoint {end!r} out of range")
            else:
                if end not in pos:
                    raise ValueError(f"line {ln.id!r}: unknown hub {end!r}")
                j = pos[end]
            ends.append(j)
        j, o = ends
        for M, y in ((G, ln.g), (B, ln.b)):
            M[j, j] += y
            M[o, o] += y
            M[j, o] -= y
            M[o, j] -= y
    return AdmittanceMatrix(G, B, ids)


# -- per-unit -----------------------------------------------------------------


def _scale_power(case: MicrogridCase, f: float, curve_factor: float) -> MicrogridCase:
    def prof(values):
        return tuple(x * f for x in values)

    ac = tuple(replace(h, demand_p=prof(h.demand_p), demand_q=prof(h.demand_q))
               for h in case.ac_hubs)
    dc = tuple(replace(h, demand_p=prof(h.demand_p)) for h in case.dc_hubs)
    inv = tuple(replace(c, p_min=c.p_min * f, p_max=c.p_max * f,
                        q_min=c.q_min * f, q_max=c.q_max * f) for c in case.inverters)
    gen = tuple(replace(g, p_min=g.p_min * f, p_max=g.p_max * f,
                        q_min=g.q_min * f, q_max=g.q_max * f,
                        fuel_curve=g.fuel_curve.scale_input(curve_factor))
                for g in case.turbines)
    ren = tuple(replace(r, forecast=prof(r.forecast)) for r in case.renewables)
    bat = tuple(replace(k, p_ch_min=k.p_ch_min * f, p_ch_max=k.p_ch_max * f,
                        p_dc_min=k.p_dc_min * f, p_dc_max=k.p_dc_max * f,
                        e_min=k.e_min * f, e_max=k.e_max * f,
                        e_initial=k.e_initial * f) for k in case.batteries)
    # $/kWh -> $/(p.u. h) and back
    costs = replace(case.costs, voll_e=case.costs.voll_e / f, beta=case.costs.beta / f)
    return replace(case, ac_hubs=ac, dc_hubs=dc, inverters=inv, turbines=gen,
                   renewables=ren, batteries=bat, costs=costs)


def to_per_unit(case: MicrogridCase) -> MicrogridCase:
    """Divide every kW/kvar/kWh quantity by the base power.

    Line parameters and voltages are already per-unit; gas quantities are
    left in physical units.
    """
    base = case.base
    if base.power_kva <= 0 or base.pressure <= 0:
        raise ValueError(f"per-unit bases must be positive, got {base}")
    if case.per_unit:
        return case
    out = _scale_power(case, 1.0 / base.power_kva, base.power_kva)
    return replace(out, per_unit=True)


def from_per_unit(case: MicrogridCase) -> MicrogridCase:
    base = case.base
    if base.power_kva <= 0 or base.pressure <= 0:
        raise ValueError(f"per-unit bases must be positive, got {base}")
    if not case.per_unit:
        return case
    out = _scale_power(case, base.power_kva, 1.0 / base.power_kva)
    return replace(out, per_unit=False)


def numeric_fields(obj, prefix=""):
    """Yield ``(path, value)`` for every numeric leaf of a case (test helper)."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return
    if isinstance(obj, (int, float)):
        yield prefix, float(obj)
    elif isinstance(obj, PolyCurve):
        for k, c in enumerate(obj.coeffs):
            yield f"{prefix}.coeffs[{k}]", c
    elif isinstance(obj, tuple):
        for i, item in enumerate(obj):
            yield from numeric_fields(item, f"{prefix}[{i}]")
    elif hasattr(obj, "__dataclass_fields__"):
        for f in fields(obj):
            yield from numeric_fields(getattr(obj, f.name),
                                      f"{prefix}.{f.name}" if prefix else f.name)
