"""Translate a ``MicrogridCase`` into a ``MilpProblem`` and back.

Every electrical quantity in the model is per-unit on ``case.base``; gas
quantities are in Skcf/hr.  Variable keys are ``(element, quantity, hour)``
with hubs qualified by network (``"ac:1"``, ``"dc:1"``, ``"gas:1"``) and
devices by their own ids.  Piecewise-linear segment columns carry a fourth
key component, the segment number.

Sign conventions:

* inverter ``P_c > 0`` moves power from the DC hub into the AC hub, so it
  enters the AC balance with ``+`` and the DC balance with ``-``;
* line quantities are oriented ``from_hub -> to_hub``;
* pipe flow ``f_p > 0`` leaves ``from_hub``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .linearize import (LinearFlowModel, PwlCurve, gas_flow_coefficients,
                        pwl_approximate)
from .milp import Key, MilpProblem, VariableIndex
from .model import MicrogridCase, assemble_admittance, require_valid, to_per_unit

POWER_QUANTITIES = frozenset({
    "P_g", "Q_g", "P_w", "Q_w", "P_s", "Q_s", "P_c", "Q_c", "P_d", "Q_d",
    "PL", "QL", "SL", "P_ch", "P_dc", "E", "P_g_seg",
})
BINARY_QUANTITIES = frozenset({"I_ch", "I_dc"})
INF = math.inf


class BuildError(ValueError):
    pass


class IntegralityError(ValueError):
    pass


class ConsistencyError(ValueError):
    pass


def ac(h): return f"ac:{h}"
def dc(h): return f"dc:{h}"
def gas(h): return f"gas:{h}"


def _renewable_qty(kind: str) -> tuple[str, str]:
    return ("P_w", "Q_w") if kind == "wind" else ("P_s", "Q_s")


# -- indexing -----------------------------------------------------------------


def pwl_curves(case: MicrogridCase) -> tuple[dict[str, PwlCurve], dict[str, PwlCurve]]:
    """Fuel curves per turbine and cost curves per supplier for ``case``'s units."""
    k = case.costs.pwl_segments
    fuel = {g.id: pwl_approximate(g.fuel_curve, (g.p_min, g.p_max), k) for g in case.turbines}
    cost = {s.id: pwl_approximate(s.cost_curve, (s.v_min, s.v_max), k) for s in case.suppliers}
    return fuel, cost


def index_variables(case: MicrogridCase, horizon: int | None = None,
                    curves: tuple[dict, dict] | None = None) -> VariableIndex:
    """Deterministic hour-major column order over every decision quantity."""
    T = case.horizon if horizon is None else horizon
    fuel, cost = curves or pwl_curves(case)
    idx = VariableIndex()
    for t in range(T):
        for h in case.ac_hubs:
            idx.add((ac(h.id), "V", t))
            if not h.is_reference:
                idx.add((ac(h.id), "θ", t))
            idx.add((ac(h.id), "P_d", t))
            idx.add((ac(h.id), "Q_d", t))
        for ln in case.ac_lines:
            for q in ("PL", "QL", "SL"):
                idx.add((ln.id, q, t))
        for c in case.inverters:
            idx.add((c.id, "P_c", t))
            idx.add((c.id, "Q_c", t))
        for r in case.renewables:
            p, q = _renewable_qty(r.kind)
            idx.add((r.id, p, t))
            if r.network == "ac":
                idx.add((r.id, q, t))
        for g in case.turbines:
            idx.add((g.id, "P_g", t))
            if g.network == "ac":
                idx.add((g.id, "Q_g", t))
            for k in range(fuel[g.id].segments):
                idx.add((g.id, "P_g_seg", t, k))
        for h in case.dc_hubs:
            idx.add((dc(h.id), "V", t))
            idx.add((dc(h.id), "P_d", t))
        for ln in case.dc_lines:
            idx.add((ln.id, "PL", t))
        for b in case.batteries:
            for q in ("P_ch", "P_dc", "I_ch", "I_dc", "E"):
                idx.add((b.id, q, t))
        for s in case.suppliers:
            idx.add((s.id, "v_gs", t))
            for k in range(cost[s.id].segments):
                idx.add((s.id, "v_gs_seg", t, k))
        for h in case.gas_hubs:
            idx.add((gas(h.id), "π", t))
            idx.add((gas(h.id), "g_d", t))
        for p in case.pipes:
            idx.add((p.id, "f_p", t))
    return idx


@dataclass
class BuildContext:
    case: MicrogridCase  # per-unit
    fuel: dict[str, PwlCurve]
    cost: dict[str, PwlCurve]
    flows: dict[str, LinearFlowModel]


def new_problem(case: MicrogridCase, curves=None, name: str = "") -> MilpProblem:
    """Declare every indexed column (free, or [0, 1] for binaries)."""
    if not case.per_unit:
        raise BuildError("the model builder expects a per-unit case")
    curves = curves or pwl_curves(case)
    idx = index_variables(case, case.horizon, curves)
    prob = MilpProblem(name or case.name)
    for key in idx:
        qty = key[1]
        label = f"{qty}[{key[0]},{','.join(str(k) for k in key[2:])}]"
        if qty in BINARY_QUANTITIES:
            prob.add_var(label, 0.0, 1.0, kind="binary")
        else:
            prob.add_var(label, -INF, INF)
    prob.index = idx
    base = case.base.power_kva
    prob.scale = {q: base for q in POWER_QUANTITIES}
    fuel, cost = curves
    prob.context = BuildContext(case, fuel, cost, {})
    return prob


def _bound(prob: MilpProblem, key: Key, lo: float, hi: float):
    j = prob.index[key]
    prob.lb[j], prob.ub[j] = float(lo), float(hi)


# -- AC network ---------------------------------------------------------------


def add_ac_constraints(prob: MilpProblem, case: MicrogridCase) -> None:
    if case.ac_hubs and case.reference_hub() is None:
        raise BuildError("AC network has no unique reference hub")
    col = prob.index.__getitem__
    ids = [h.id for h in case.ac_hubs]
    Y = assemble_admittance(case.ac_lines, ids)
    G, B = Y.G, Y.B
    xi = case.costs.xi

    for t in range(case.horizon):
        for h in case.ac_hubs:
            _bound(prob, (ac(h.id), "V", t), h.v_min, h.v_max)
            pd, qd = h.demand_p[t], h.demand_q[t]
            _bound(prob, (ac(h.id), "P_d", t), 0.0, pd)
            if pd > 0:
                _bound(prob, (ac(h.id), "Q_d", t), min(0.0, qd), max(0.0, qd))
                prob.add_constraint({col((ac(h.id), "Q_d", t)): 1.0,
                                     col((ac(h.id), "P_d", t)): -qd / pd}, "==", 0.0,
                                    f"served_q[{h.id},{t}]", "ac_served_q")
            else:
                _bound(prob, (ac(h.id), "Q_d", t), qd, qd)
        for g in case.turbines:
            if g.network == "ac":
                _bound(prob, (g.id, "P_g", t), g.p_min, g.p_max)
                _bound(prob, (g.id, "Q_g", t), g.q_min, g.q_max)
        for r in case.renewables:
            if r.network != "ac":
                continue
            p, q = _renewable_qty(r.kind)
            _bound(prob, (r.id, p, t), 0.0, r.forecast[t])
            jp, jq = col((r.id, p, t)), col((r.id, q, t))
            prob.add_constraint({jq: 1.0, jp: -1.0}, "<=", 0.0, f"{q}_hi[{r.id},{t}]",
                                "ac_renewable_q")
            prob.add_constraint({jq: 1.0, jp: 1.0}, ">=", 0.0, f"{q}_lo[{r.id},{t}]",
                                "ac_renewable_q")
        for c in case.inverters:
            _bound(prob, (c.id, "P_c", t), c.p_min, c.p_max)
            _bound(prob, (c.id, "Q_c", t), c.q_min, c.q_max)

        def angle(hub_pos):
            h = case.ac_hubs[hub_pos]
            return None if h.is_reference else col((ac(h.id), "θ", t))

        for j, h in enumerate(case.ac_hubs):
            p_row: dict[int, float] = {}
            q_row: dict[int, float] = {}

            def put(row, c_, a):
                if c_ is not None and a != 0.0:
                    row[c_] = row.get(c_, 0.0) + a

            for g in case.turbines:
                if g.network == "ac" and g.hub == h.id:
                    put(p_row, col((g.id, "P_g", t)), 1.0)
                    put(q_row, col((g.id, "Q_g", t)), 1.0)
            for r in case.renewables:
                if r.network == "ac" and r.hub == h.id:
                    p, q = _renewable_qty(r.kind)
                    put(p_row, col((r.id, p, t)), 1.0)
                    put(q_row, col((r.id, q, t)), 1.0)
            for c in case.inverters:
                if c.ac_hub == h.id:
                    put(p_row, col((c.id, "P_c", t)), 1.0)
                    put(q_row, col((c.id, "Q_c", t)), 1.0)
            put(p_row, col((ac(h.id), "P_d", t)), -1.0)
            put(q_row, col((ac(h.id), "Q_d", t)), -1.0)

            # injections, linear in V and θ, moved to the left-hand side
            vj = col((ac(h.id), "V", t))
            tj = angle(j)
            p_const = -G[j, j]
            q_const = B[j, j]
            put(p_row, vj, -2.0 * G[j, j])
            put(q_row, vj, 2.0 * B[j, j])
            for o in range(len(ids)):
                if o == j or (G[j, o] == 0.0 and B[j, o] == 0.0):
                    continue
                vo = col((ac(ids[o]), "V", t))
                to = angle(o)
                gjo, bjo = G[j, o], B[j, o]
                # P_inj += G_jo (V_j + V_o - 1) + B_jo (θ_j - θ_o)
                put(p_row, vj, -gjo)
                put(p_row, vo, -gjo)
                put(p_row, tj, -bjo)
                put(p_row, to, bjo)
                p_const += -gjo
                # Q_inj += G_jo (θ_j - θ_o) - B_jo (V_j + V_o - 1)
                put(q_row, tj, -gjo)
                put(q_row, to, gjo)
                put(q_row, vj, bjo)
                put(q_row, vo, bjo)
                q_const += bjo
            prob.add_constraint(p_row, "==", p_const, f"bal_p[{h.id},{t}]", "ac_balance_p")
            prob.add_constraint(q_row, "==", q_const, f"bal_q[{h.id},{t}]", "ac_balance_q")

        pos = {hid: i for i, hid in enumerate(ids)}
        for ln in case.ac_lines:
            vj, vo = col((ac(ln.from_hub), "V", t)), col((ac(ln.to_hub), "V", t))
            tj, to = angle(pos[ln.from_hub]), angle(pos[ln.to_hub])
            jpl, jql, jsl = col((ln.id, "PL", t)), col((ln.id, "QL", t)), col((ln.id, "SL", t))
            # per-line admittance entries G_jo = -g, B_jo = -b
            row = {jpl: 1.0, vj: -ln.g, vo: ln.g}
            if tj is not None:
                row[tj] = row.get(tj, 0.0) + ln.b
            if to is not None:
                row[to] = row.get(to, 0.0) - ln.b
            prob.add_constraint(row, "==", 0.0, f"pl[{ln.id},{t}]", "ac_line_p")
            row = {jql: 1.0, vj: ln.b, vo: -ln.b}
            if tj is not None:
                row[tj] = row.get(tj, 0.0) + ln.g
            if to is not None:
                row[to] = row.get(to, 0.0) - ln.g
            prob.add_constraint(row, "==", 0.0, f"ql[{ln.id},{t}]", "ac_line_q")
            prob.add_constraint({jsl: 1.0, jpl: -1.0, jql: -xi}, "==", 0.0,
                                f"sl[{ln.id},{t}]", "ac_line_s")
            prob.add_constraint({jsl: 1.0}, "<=", ln.sl_max, f"sl_hi[{ln.id},{t}]",
                                "ac_line_limit")
            prob.add_constraint({jsl: 1.0}, ">=", -ln.sl_max, f"sl_lo[{ln.id},{t}]",
                                "ac_line_limit")


# -- DC network ---------------------------------------------------------------


def add_dc_constraints(prob: MilpProblem, case: MicrogridCase) -> None:
    col = prob.index.__getitem__
    T = case.horizon
    for t in range(T):
        for h in case.dc_hubs:
            _bound(prob, (dc(h.id), "V", t), h.v_min, h.v_max)
            _bound(prob, (dc(h.id), "P_d", t), 0.0, h.demand_p[t])
        for g in case.turbines:
            if g.network == "dc":
                _bound(prob, (g.id, "P_g", t), g.p_min, g.p_max)
        for r in case.renewables:
            if r.network == "dc":
                _bound(prob, (r.id, _renewable_qty(r.kind)[0], t), 0.0, r.forecast[t])
        for b in case.batteries:
            _bound(prob, (b.id, "P_ch", t), 0.0, b.p_ch_max)
            _bound(prob, (b.id, "P_dc", t), 0.0, b.p_dc_max)
            _bound(prob, (b.id, "E", t), b.e_min, b.e_max)
            pch, pdc = col((b.id, "P_ch", t)), col((b.id, "P_dc", t))
            ich, idc = col((b.id, "I_ch", t)), col((b.id, "I_dc", t))
            e = col((b.id, "E", t))
            prob.add_constraint({pch: 1.0, ich: -b.p_ch_max}, "<=", 0.0,
                                f"ch_hi[{b.id},{t}]", "dc_battery_ch")
            prob.add_constraint({pch: 1.0, ich: -b.p_ch_min}, ">=", 0.0,
                                f"ch_lo[{b.id},{t}]", "dc_battery_ch")
            prob.add_constraint({pdc: 1.0, idc: -b.p_dc_max}, "<=", 0.0,
                                f"dc_hi[{b.id},{t}]", "dc_battery_dc")
            prob.add_constraint({pdc: 1.0, idc: -b.p_dc_min}, ">=", 0.0,
                                f"dc_lo[{b.id},{t}]", "dc_battery_dc")
            prob.add_constraint({ich: 1.0, idc: 1.0}, "<=", 1.0,
                                f"excl[{b.id},{t}]", "dc_battery_excl")
            # E_t = E_{t-1} - (P_dc / eta_dc - eta_ch * P_ch)
            row = {e: 1.0, pch: -b.eta_ch, pdc: 1.0 / b.eta_dc}
            rhs = 0.0
            if t == 0:
                rhs = b.e_initial
            else:
                row[col((b.id, "E", t - 1))] = -1.0
            prob.add_constraint(row, "==", rhs, f"energy[{b.id},{t}]", "dc_battery_energy")
            if t == T - 1 and b.terminal_rule == "at-least-initial":
                prob.add_constraint({e: 1.0}, ">=", b.e_initial, f"terminal[{b.id}]",
                                    "dc_battery_terminal")
        for ln in case.dc_lines:
            _bound(prob, (ln.id, "PL", t), -ln.sl_max, ln.sl_max)
            prob.add_constraint({col((ln.id, "PL", t)): 1.0,
                                 col((dc(ln.from_hub), "V", t)): -1.0 / ln.r,
                                 col((dc(ln.to_hub), "V", t)): 1.0 / ln.r}, "==", 0.0,
                                f"pl_dc[{ln.id},{t}]", "dc_line")
        for h in case.dc_hubs:
            row: dict[int, float] = {}

            def put(c_, a):
                row[c_] = row.get(c_, 0.0) + a

            for b in case.batteries:
                if b.dc_hub == h.id:
                    put(col((b.id, "P_dc", t)), 1.0)
                    put(col((b.id, "P_ch", t)), -1.0)
            for g in case.turbines:
                if g.network == "dc" and g.hub == h.id:
                    put(col((g.id, "P_g", t)), 1.0)
            for r in case.renewables:
                if r.network == "dc" and r.hub == h.id:
                    put(col((r.id, _renewable_qty(r.kind)[0], t)), 1.0)
            for c in case.inverters:
                if c.dc_hub == h.id:
                    put(col((c.id, "P_c", t)), -1.0)
            put(col((dc(h.id), "P_d", t)), -1.0)
            for ln in case.dc_lines:
                if ln.from_hub == h.id:
                    put(col((ln.id, "PL", t)), -1.0)
                elif ln.to_hub == h.id:
                    put(col((ln.id, "PL", t)), 1.0)
            prob.add_constraint(row, "==", 0.0, f"bal_dc[{h.id},{t}]", "dc_balance")


# -- gas network --------------------------------------------------------------


def add_gas_constraints(prob: MilpProblem, case: MicrogridCase,
                        flow_models: dict[str, LinearFlowModel],
                        fuel_curves: dict[str, PwlCurve] | None = None) -> None:
    col = prob.index.__getitem__
    fuel = fuel_curves if fuel_curves is not None else prob.context.fuel
    for p in case.pipes:
        if p.id not in flow_models:
            raise BuildError(f"pipe {p.id!r} has no linear flow model")
    prob.context.flows = dict(flow_models)
    cost = prob.context.cost
    for t in range(case.horizon):
        for s in case.suppliers:
            _bound(prob, (s.id, "v_gs", t), s.v_min, s.v_max)
            curve = cost[s.id]
            row = {col((s.id, "v_gs", t)): 1.0}
            for k, w in enumerate(curve.widths):
                _bound(prob, (s.id, "v_gs_seg", t, k), 0.0, w)
                row[col((s.id, "v_gs_seg", t, k))] = -1.0
            prob.add_constraint(row, "==", curve.xs[0], f"v_pwl[{s.id},{t}]",
                                "gas_supplier_pwl")
        for g in case.turbines:
            curve = fuel[g.id]
            row = {col((g.id, "P_g", t)): 1.0}
            for k, w in enumerate(curve.widths):
                _bound(prob, (g.id, "P_g_seg", t, k), 0.0, w)
                row[col((g.id, "P_g_seg", t, k))] = -1.0
            prob.add_constraint(row, "==", curve.xs[0], f"p_pwl[{g.id},{t}]",
                                "gas_fuel_pwl")
        for h in case.gas_hubs:
            _bound(prob, (gas(h.id), "π", t), h.pi_min, h.pi_max)
            _bound(prob, (gas(h.id), "g_d", t), 0.0, h.heat_demand[t])
        for p in case.pipes:
            fm = flow_models[p.id]
            jf = col((p.id, "f_p", t))
            prob.add_constraint({jf: 1.0, col((gas(p.from_hub), "π", t)): -fm.a_n,
                                 col((gas(p.to_hub), "π", t)): fm.a_m}, "==", 0.0,
                                f"flow[{p.id},{t}]", "gas_flow")
            prob.add_constraint({jf: 1.0}, "<=", p.f_max, f"flow_hi[{p.id},{t}]",
                                "gas_flow_limit")
            prob.add_constraint({jf: 1.0}, ">=", -p.f_max, f"flow_lo[{p.id},{t}]",
                                "gas_flow_limit")
        for h in case.gas_hubs:
            row: dict[int, float] = {}
            rhs = 0.0

            def put(c_, a):
                row[c_] = row.get(c_, 0.0) + a

            for s in case.suppliers:
                if s.gas_hub == h.id:
                    put(col((s.id, "v_gs", t)), 1.0)
            for p in case.pipes:
                if p.from_hub == h.id:
                    put(col((p.id, "f_p", t)), -1.0)
                elif p.to_hub == h.id:
                    put(col((p.id, "f_p", t)), 1.0)
            for g in case.turbines:
                if g.gas_hub == h.id:
                    curve = fuel[g.id]
                    rhs += curve.ys[0]
                    for k, slope in enumerate(curve.slopes):
                        put(col((g.id, "P_g_seg", t, k)), -float(slope))
            put(col((gas(h.id), "g_d", t)), -1.0)
            prob.add_constraint(row, "==", rhs, f"bal_gas[{h.id},{t}]", "gas_balance")


# -- objective ----------------------------------------------------------------


def add_objective(prob: MilpProblem, case: MicrogridCase,
                  pwl_costs: dict[str, PwlCurve] | None = None) -> None:
    col = prob.index.__getitem__
    costs = pwl_costs if pwl_costs is not None else prob.context.cost
    kc = case.costs
    for s in case.suppliers:
        if s.id not in costs:
            raise BuildError(f"supplier {s.id!r} has no cost curve")
    const = 0.0
    for t in range(case.horizon):
        for s in case.suppliers:
            curve = costs[s.id]
            const += curve.ys[0]
            for k, slope in enumerate(curve.slopes):
                prob.add_objective(col((s.id, "v_gs_seg", t, k)), float(slope))
        for h in case.ac_hubs:
            const += kc.voll_e * h.demand_p[t]
            prob.add_objective(col((ac(h.id), "P_d", t)), -kc.voll_e)
        for h in case.dc_hubs:
            const += kc.voll_e * h.demand_p[t]
            prob.add_objective(col((dc(h.id), "P_d", t)), -kc.voll_e)
        for h in case.gas_hubs:
            const += kc.voll_g * h.heat_demand[t]
            prob.add_objective(col((gas(h.id), "g_d", t)), -kc.voll_g)
        for b in case.batteries:
            prob.add_objective(col((b.id, "P_dc", t)), kc.beta)
    prob.obj_constant += const


# -- whole model --------------------------------------------------------------


def build_problem(case: MicrogridCase, segments: int | None = None) -> MilpProblem:
    """Validate, convert to per-unit and emit the complete MILP."""
    require_valid(case)
    if segments is not None:
        case = replace(case, costs=replace(case.costs, pwl_segments=int(segments)))
        require_valid(case)
    pu = to_per_unit(case)
    curves = pwl_curves(pu)
    prob = new_problem(pu, curves)
    flows = {p.id: gas_flow_coefficients(p) for p in pu.pipes}
    add_ac_constraints(prob, pu)
    add_dc_constraints(prob, pu)
    add_gas_constraints(prob, pu, flows)
    add_objective(prob, pu)
    return prob


# -- solution mapping ---------------------------------------------------------


@dataclass
class DispatchSchedule:
    """Solved values keyed semantically, in model units (see ``get`` for kW)."""

    values: dict
    scale: dict
    horizon: int
    objective: float
    status: str = "optimal"

    def raw(self, element: str, quantity: str) -> np.ndarray:
        return np.array([self.values.get((element, quantity, t), np.nan)
                         for t in range(self.horizon)])

    def get(self, element: str, quantity: str) -> np.ndarray:
        """Physical-unit series: kW / kvar / kWh, p.u. voltage, rad, Skcf/hr."""
        return self.raw(element, quantity) * self.scale.get(quantity, 1.0)

    def has(self, element: str, quantity: str) -> bool:
        return (element, quantity, 0) in self.values

    def to_vector(self, index: VariableIndex) -> np.ndarray:
        x = np.empty(len(index))
        for key, j in index.items():
            x[j] = self.values[key]
        return x


def extract_solution(problem: MilpProblem, raw_values, solver_objective: float | None = None,
                     status: str = "optimal", int_tol: float = 1e-6) -> DispatchSchedule:
    x = np.asarray(raw_values, dtype=float)
    if x.shape != (problem.n_vars,):
        raise ValueError(f"raw vector has length {x.size}, problem has {problem.n_vars} columns")
    if status not in ("optimal", "feasible", "node_limit", "time_limit"):
        raise ValueError(f"cannot extract a schedule from a {status!r} solve")
    x = x.copy()
    mask = problem.binary_mask
    if mask.any():
        r = np.round(x[mask])
        off = np.abs(x[mask] - r)
        if np.any(off > int_tol):
            j = np.flatnonzero(mask)[int(np.argmax(off))]
            raise IntegralityError(f"binary {problem.names[j]} = {x[j]!r} is not integral")
        x[mask] = r
    obj = problem.objective_value(x)
    if solver_objective is not None and abs(obj - solver_objective) > 1e-6 * max(1.0, abs(obj)):
        raise ConsistencyError(f"recomputed objective {obj!r} differs from solver's "
                               f"{solver_objective!r}")
    values = {key: float(x[j]) for key, j in problem.index.items()}
    horizon = problem.context.case.horizon if hasattr(problem, "context") else \
        1 + max(k[2] for k in values)
    return DispatchSchedule(values, dict(problem.scale), horizon, obj, status)
