"""Post-solve checks, summary metrics and parameter sweeps.

Everything here works on physical units (kW, kWh, Skcf/hr, $) and recomputes
quantities from the case data rather than reading them back from the MILP
rows, so a wrong row in the builder shows up as a nonzero residual.
"""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .builder import DispatchSchedule, ac, build_problem, dc, extract_solution, gas, pwl_curves
from .linearize import PwlCurve, gas_flow_coefficients, pwl_evaluate, weymouth_flow
from .milp import MilpProblem
from .model import GasPipe, MicrogridCase, assemble_admittance
from .solver import BnbOptions, MilpSolution, solve

__all__ = [
    "PlanResult", "ResidualReport", "SummaryMetrics", "SweepPathError", "SweepRow",
    "balance_residuals", "compute_metrics", "disable_batteries", "set_parameter",
    "solve_case", "sweep", "weymouth_error", "weymouth_error_at",
]

_SNAP = 1e-9


def _snap(x: float) -> float:
    return 0.0 if abs(x) < _SNAP else float(x)


def _curve_at(curve: PwlCurve, x: float) -> float:
    # solver output may sit a hair outside the domain
    lo, hi = curve.domain
    span = max(hi - lo, 1.0)
    if lo - 1e-6 * span <= x < lo:
        x = lo
    elif hi < x <= hi + 1e-6 * span:
        x = hi
    return pwl_evaluate(curve, x)


# -- residuals ----------------------------------------------------------------


@dataclass
class ResidualReport:
    """Nodal balance residuals per hub and hour (kW, kvar or Skcf/hr).

    ``ac_p``/``ac_q`` use the nodal injection formula on the admittance
    matrix; ``ac_p_lines``/``ac_q_lines`` use the solved line flows instead.
    """

    hubs: dict[str, tuple[str, ...]]
    values: dict[str, np.ndarray]

    def max(self, family: str | None = None) -> float:
        fams = [family] if family else list(self.values)
        m = 0.0
        for f in fams:
            a = self.values[f]
            if a.size:
                m = max(m, float(np.max(np.abs(a))))
        return m

    def worst(self, family: str) -> tuple[str, int, float]:
        a = np.abs(self.values[family])
        if not a.size:
            return "", -1, 0.0
        i, t = np.unravel_index(int(np.argmax(a)), a.shape)
        return self.hubs[family][i], int(t), float(self.values[family][i, t])

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max() <= tol

    def summary(self) -> dict[str, float]:
        return {f: self.max(f) for f in self.values}


def _series(schedule: DispatchSchedule, element: str, qty: str) -> np.ndarray:
    if schedule.has(element, qty):
        return schedule.get(element, qty)
    return np.zeros(schedule.horizon)


def balance_residuals(case: MicrogridCase, schedule: DispatchSchedule) -> ResidualReport:
    """Residual of every AC, DC and gas balance at every hub and hour."""
    T = schedule.horizon
    base = case.base.power_kva
    ids = [h.id for h in case.ac_hubs]
    Y = assemble_admittance(case.ac_lines, ids)
    V = np.array([_series(schedule, ac(h), "V") for h in ids]).reshape(len(ids), T)
    th = np.array([_series(schedule, ac(h), "θ") for h in ids]).reshape(len(ids), T)

    # injection formula, per unit
    n = len(ids)
    p_inj = np.zeros((n, T))
    q_inj = np.zeros((n, T))
    for j in range(n):
        p_inj[j] = (2 * V[j] - 1) * Y.G[j, j]
        q_inj[j] = -(2 * V[j] - 1) * Y.B[j, j]
        for o in range(n):
            if o == j:
                continue
            p_inj[j] += Y.G[j, o] * (V[j] + V[o] - 1) + Y.B[j, o] * (th[j] - th[o])
            q_inj[j] += Y.G[j, o] * (th[j] - th[o]) - Y.B[j, o] * (V[j] + V[o] - 1)

    supply_p = np.zeros((n, T))
    supply_q = np.zeros((n, T))
    out_p = np.zeros((n, T))
    out_q = np.zeros((n, T))
    pos = {h: i for i, h in enumerate(ids)}
    for g in case.turbines:
        if g.network == "ac":
            supply_p[pos[g.hub]] += _series(schedule, g.id, "P_g")
            supply_q[pos[g.hub]] += _series(schedule, g.id, "Q_g")
    for r in case.renewables:
        if r.network == "ac":
            p, q = ("P_w", "Q_w") if r.kind == "wind" else ("P_s", "Q_s")
            supply_p[pos[r.hub]] += _series(schedule, r.id, p)
            supply_q[pos[r.hub]] += _series(schedule, r.id, q)
    for c in case.inverters:
        supply_p[pos[c.ac_hub]] += _series(schedule, c.id, "P_c")
        supply_q[pos[c.ac_hub]] += _series(schedule, c.id, "Q_c")
    for i, h in enumerate(ids):
        supply_p[i] -= _series(schedule, ac(h), "P_d")
        supply_q[i] -= _series(schedule, ac(h), "Q_d")
    for ln in case.ac_lines:
        pl, ql = _series(schedule, ln.id, "PL"), _series(schedule, ln.id, "QL")
        out_p[pos[ln.from_hub]] += pl
        out_q[pos[ln.from_hub]] += ql
        out_p[pos[ln.to_hub]] -= pl
        out_q[pos[ln.to_hub]] -= ql

    values = {
        "ac_p": supply_p - base * p_inj,
        "ac_q": supply_q - base * q_inj,
        "ac_p_lines": supply_p - out_p,
        "ac_q_lines": supply_q - out_q,
    }

    dids = [h.id for h in case.dc_hubs]
    dpos = {h: i for i, h in enumerate(dids)}
    dres = np.zeros((len(dids), T))
    for g in case.turbines:
        if g.network == "dc":
            dres[dpos[g.hub]] += _series(schedule, g.id, "P_g")
    for r in case.renewables:
        if r.network == "dc":
            dres[dpos[r.hub]] += _series(schedule, r.id, "P_w" if r.kind == "wind" else "P_s")
    for b in case.batteries:
        dres[dpos[b.dc_hub]] += _series(schedule, b.id, "P_dc") - _series(schedule, b.id, "P_ch")
    for c in case.inverters:
        dres[dpos[c.dc_hub]] -= _series(schedule, c.id, "P_c")
    for ln in case.dc_lines:
        # flow from the voltages, not the solved line variable
        flow = base * (_series(schedule, dc(ln.from_hub), "V")
                       - _series(schedule, dc(ln.to_hub), "V")) / ln.r
        dres[dpos[ln.from_hub]] -= flow
        dres[dpos[ln.to_hub]] += flow
    for i, h in enumerate(dids):
        dres[i] -= _series(schedule, dc(h), "P_d")
    values["dc"] = dres

    gids = [h.id for h in case.gas_hubs]
    gpos = {h: i for i, h in enumerate(gids)}
    gres = np.zeros((len(gids), T))
    fuel, _ = pwl_curves(case)
    for s in case.suppliers:
        gres[gpos[s.gas_hub]] += _series(schedule, s.id, "v_gs")
    for p in case.pipes:
        f = _series(schedule, p.id, "f_p")
        gres[gpos[p.from_hub]] -= f
        gres[gpos[p.to_hub]] += f
    for g in case.turbines:
        pg = _series(schedule, g.id, "P_g")
        gres[gpos[g.gas_hub]] -= np.array([_curve_at(fuel[g.id], x) for x in pg])
    for i, h in enumerate(gids):
        gres[i] -= _series(schedule, gas(h), "g_d")
    values["gas"] = gres

    hubs = {"ac_p": tuple(ids), "ac_q": tuple(ids), "ac_p_lines": tuple(ids),
            "ac_q_lines": tuple(ids), "dc": tuple(dids), "gas": tuple(gids)}
    return ResidualReport(hubs, values)


# -- gas linearization error --------------------------------------------------


def weymouth_error_at(pipe: GasPipe, pi_n: float, pi_m: float) -> float:
    """Linear model flow minus the true Weymouth flow at the given pressures."""
    model = gas_flow_coefficients(pipe)
    return model.flow(pi_n, pi_m) - weymouth_flow(pipe.c_p, pi_n, pi_m)


def weymouth_error(case: MicrogridCase, schedule: DispatchSchedule) -> dict[str, np.ndarray]:
    out = {}
    for p in case.pipes:
        pn = _series(schedule, gas(p.from_hub), "π")
        pm = _series(schedule, gas(p.to_hub), "π")
        out[p.id] = np.array([weymouth_error_at(p, a, b) for a, b in zip(pn, pm)])
    return out


# -- metrics ------------------------------------------------------------------


@dataclass
class SummaryMetrics:
    status: str
    objective: float
    total_cost: float
    fuel_cost: float
    degradation_cost: float
    lost_load_cost: float
    heat_shed_cost: float
    lost_load_kwh: float
    heat_demand_skcf: float
    heat_served_skcf: float
    heat_served_fraction: float
    turbine_fuel_skcf: float
    total_generation_kwh: float
    battery_charge_kwh: float
    battery_discharge_kwh: float
    hourly_lost_load_kw: list[float] = field(default_factory=list)
    hourly_heat_shed_skcf: list[float] = field(default_factory=list)
    hourly_fuel_cost: list[float] = field(default_factory=list)
    hourly_generation_kw: list[float] = field(default_factory=list)
    hourly_discharge_kw: list[float] = field(default_factory=list)

    def cost_terms(self) -> dict[str, float]:
        return {"fuel_cost": self.fuel_cost, "degradation_cost": self.degradation_cost,
                "lost_load_cost": self.lost_load_cost, "heat_shed_cost": self.heat_shed_cost}


def compute_metrics(case: MicrogridCase, schedule: DispatchSchedule) -> SummaryMetrics:
    T = schedule.horizon
    k = case.costs
    _, cost = pwl_curves(case)
    fuel, _ = pwl_curves(case)

    lost = np.zeros(T)
    for h in case.ac_hubs:
        lost += np.asarray(h.demand_p) - _series(schedule, ac(h.id), "P_d")
    for h in case.dc_hubs:
        lost += np.asarray(h.demand_p) - _series(schedule, dc(h.id), "P_d")
    shed = np.zeros(T)
    demand_g = 0.0
    for h in case.gas_hubs:
        shed += np.asarray(h.heat_demand) - _series(schedule, gas(h.id), "g_d")
        demand_g += float(np.sum(h.heat_demand))
    fuel_cost = np.zeros(T)
    for s in case.suppliers:
        fuel_cost += [_curve_at(cost[s.id], v) for v in _series(schedule, s.id, "v_gs")]
    gen = np.zeros(T)
    burn = 0.0
    for g in case.turbines:
        pg = _series(schedule, g.id, "P_g")
        gen += pg
        burn += sum(_curve_at(fuel[g.id], x) for x in pg)
    for r in case.renewables:
        gen += _series(schedule, r.id, "P_w" if r.kind == "wind" else "P_s")
    dis = np.zeros(T)
    chg = np.zeros(T)
    for b in case.batteries:
        dis += _series(schedule, b.id, "P_dc")
        chg += _series(schedule, b.id, "P_ch")

    lost = np.array([_snap(x) for x in lost])
    shed = np.array([_snap(x) for x in shed])
    lost_kwh = float(lost.sum())
    shed_total = float(shed.sum())
    served = demand_g - shed_total
    frac = 1.0 if demand_g == 0 else served / demand_g
    # hourly steps are one hour long, so kW per hour sums to kWh
    m = SummaryMetrics(
        status=schedule.status,
        objective=schedule.objective,
        total_cost=0.0,
        fuel_cost=float(fuel_cost.sum()),
        degradation_cost=k.beta * float(dis.sum()),
        lost_load_cost=k.voll_e * lost_kwh,
        heat_shed_cost=k.voll_g * shed_total,
        lost_load_kwh=lost_kwh,
        heat_demand_skcf=demand_g,
        heat_served_skcf=served,
        heat_served_fraction=min(1.0, max(0.0, frac)),
        turbine_fuel_skcf=float(burn),
        total_generation_kwh=float(gen.sum()),
        battery_charge_kwh=float(chg.sum()),
        battery_discharge_kwh=float(dis.sum()),
        hourly_lost_load_kw=lost.tolist(),
        hourly_heat_shed_skcf=shed.tolist(),
        hourly_fuel_cost=fuel_cost.tolist(),
        hourly_generation_kw=gen.tolist(),
        hourly_discharge_kw=dis.tolist(),
    )
    m.total_cost = sum(m.cost_terms().values())
    return m


# -- solving ------------------------------------------------------------------


@dataclass
class PlanResult:
    case: MicrogridCase
    problem: MilpProblem
    solution: MilpSolution
    schedule: DispatchSchedule | None
    metrics: SummaryMetrics | None

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def ok(self) -> bool:
        return self.schedule is not None


def solve_case(case: MicrogridCase, *, segments: int | None = None,
               options: BnbOptions | None = None, backend: str | None = None) -> PlanResult:
    """Build, solve and post-process one case."""
    if segments is not None:
        case = dataclasses.replace(case, costs=dataclasses.replace(case.costs,
                                                                   pwl_segments=int(segments)))
    problem = build_problem(case)
    sol = solve(problem, options, backend)
    schedule = metrics = None
    if sol.has_solution:
        status = "optimal" if sol.status == "optimal" else sol.status
        schedule = extract_solution(problem, sol.x, sol.objective, status)
        metrics = compute_metrics(case, schedule)
    return PlanResult(case, problem, sol, schedule, metrics)


# -- parameter sweeps ---------------------------------------------------------


class SweepPathError(ValueError):
    pass


_PATH = re.compile(r"^(?P<list>[a-z_]+)(?:\[(?P<idx>\d+|\*)\])?(?:\.(?P<field>[a-z_0-9]+))?$")
_FROZEN = {"pi0_from", "pi0_to", "id", "hub", "from_hub", "to_hub", "ac_hub", "dc_hub",
           "gas_hub", "network", "kind", "terminal_rule", "is_reference"}


def _targets(case: MicrogridCase, path: str):
    m = _PATH.match(path.strip())
    if not m:
        raise SweepPathError(f"cannot parse parameter path {path!r}")
    name, idx, fld = m["list"], m["idx"], m["field"]
    if name not in {f.name for f in dataclasses.fields(case)} or name == "per_unit":
        raise SweepPathError(f"{path!r}: case has no field {name!r}")
    obj = getattr(case, name)
    if isinstance(obj, tuple):
        if idx is None or fld is None:
            raise SweepPathError(f"{path!r}: address an element field, e.g. {name}[0].<field>")
        idxs = range(len(obj)) if idx == "*" else [int(idx)]
        if not obj or any(i >= len(obj) for i in idxs):
            raise SweepPathError(f"{path!r}: index out of range ({len(obj)} items)")
        items = [obj[i] for i in idxs]
    elif dataclasses.is_dataclass(obj):
        if idx is not None or fld is None:
            raise SweepPathError(f"{path!r}: {name} is not a list; use {name}.<field>")
        items = [obj]
    else:
        if idx is not None or fld is not None:
            raise SweepPathError(f"{path!r}: {name} is a scalar")
        if name != "horizon":
            raise SweepPathError(f"{path!r}: {name} is not numeric")
        return name, None, None
    for it in items:
        if fld not in {f.name for f in dataclasses.fields(it)}:
            raise SweepPathError(f"{path!r}: {type(it).__name__} has no field {fld!r}")
        v = getattr(it, fld)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SweepPathError(f"{path!r}: {fld!r} is not a numeric field")
        if fld in _FROZEN:
            raise SweepPathError(f"{path!r}: {fld!r} cannot be swept (the gas linearization "
                                 "point is held fixed)")
    return name, idxs if isinstance(obj, tuple) else None, fld


def set_parameter(case: MicrogridCase, path: str, value: float) -> MicrogridCase:
    """Return a copy of ``case`` with the field at ``path`` set to ``value``."""
    if isinstance(value, bool) or not math.isfinite(float(value)):
        raise SweepPathError(f"sweep value {value!r} is not a finite number")
    name, idxs, fld = _targets(case, path)
    if fld is None:
        return dataclasses.replace(case, **{name: int(value)})
    obj = getattr(case, name)
    cast = type(getattr(obj[0] if idxs is not None else obj, fld))
    v = cast(value)
    if cast is int and v != value:
        raise SweepPathError(f"{path!r} needs an integer, got {value!r}")
    if idxs is None:
        return dataclasses.replace(case, **{name: dataclasses.replace(obj, **{fld: v})})
    items = list(obj)
    for i in idxs:
        items[i] = dataclasses.replace(items[i], **{fld: v})
    return dataclasses.replace(case, **{name: tuple(items)})


@dataclass
class SweepRow:
    value: float
    status: str
    metrics: SummaryMetrics | None = None
    message: str = ""


def sweep(case: MicrogridCase, path: str, values: Sequence[float], *,
          segments: int | None = None, options: BnbOptions | None = None,
          backend: str | None = None) -> list[SweepRow]:
    """One solve per value, rows in the given order; failures become rows."""
    _targets(case, path)
    for v in values:
        if isinstance(v, bool) or not math.isfinite(float(v)):
            raise SweepPathError(f"sweep value {v!r} is not a finite number")
    rows = []
    for v in values:
        try:
            variant = set_parameter(case, path, v)
            res = solve_case(variant, segments=segments, options=options, backend=backend)
        except (ValueError, ArithmeticError) as exc:
            rows.append(SweepRow(float(v), "error", None, str(exc)))
            continue
        rows.append(SweepRow(float(v), res.status, res.metrics, res.solution.message))
    return rows


def disable_batteries(case: MicrogridCase) -> MicrogridCase:
    """Variant with every battery pinned at its initial energy and no power."""
    pinned = tuple(dataclasses.replace(b, p_ch_min=0.0, p_ch_max=0.0, p_dc_min=0.0,
                                       p_dc_max=0.0, e_min=b.e_initial, e_max=b.e_initial)
                   for b in case.batteries)
    return dataclasses.replace(case, batteries=pinned)
