"""Case files (JSON, ``schema: 1``) and result files.

Field names carry their units (``p_max_kw``, ``f_max_skcf_hr``...).  Every
writer goes through :func:`atomic_write` so an interrupted run never leaves
a half-written file behind.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import fields
from pathlib import Path
from typing import Any

from .model import (AcHub, AcLine, BatteryUnit, CostParams, DcHub, DcLine, GasHub,
                    GasPipe, GasSupplier, Inverter, MicrogridCase, Microturbine,
                    PerUnitBase, PolyCurve, RenewableUnit, ValidationReport,
                    validate_case)

SCHEMA_VERSION = 1


class CaseFileError(ValueError):
    """Malformed, unknown-field or invalid case file."""

    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


# json name, attribute, kind
_LAYOUT: dict[type, list[tuple[str, str, str]]] = {
    AcHub: [("id", "id", "str"), ("v_min_pu", "v_min", "float"), ("v_max_pu", "v_max", "float"),
            ("demand_p_kw", "demand_p", "profile"), ("demand_q_kvar", "demand_q", "profile"),
            ("is_reference", "is_reference", "bool")],
    DcHub: [("id", "id", "str"), ("v_min_pu", "v_min", "float"), ("v_max_pu", "v_max", "float"),
            ("demand_p_kw", "demand_p", "profile")],
    GasHub: [("id", "id", "str"), ("pi_min_psi", "pi_min", "float"),
             ("pi_max_psi", "pi_max", "float"),
             ("heat_demand_skcf_hr", "heat_demand", "profile")],
    AcLine: [("id", "id", "str"), ("from", "from_hub", "str"), ("to", "to_hub", "str"),
             ("g_pu", "g", "float"), ("b_pu", "b", "float"), ("sl_max_pu", "sl_max", "float")],
    DcLine: [("id", "id", "str"), ("from", "from_hub", "str"), ("to", "to_hub", "str"),
             ("r_pu", "r", "float"), ("sl_max_pu", "sl_max", "float")],
    Inverter: [("id", "id", "str"), ("ac_hub", "ac_hub", "str"), ("dc_hub", "dc_hub", "str"),
               ("p_min_kw", "p_min", "float"), ("p_max_kw", "p_max", "float"),
               ("q_min_kvar", "q_min", "float"), ("q_max_kvar", "q_max", "float")],
    Microturbine: [("id", "id", "str"), ("network", "network", "str"), ("hub", "hub", "str"),
                   ("p_min_kw", "p_min", "float"), ("p_max_kw", "p_max", "float"),
                   ("q_min_kvar", "q_min", "float"), ("q_max_kvar", "q_max", "float"),
                   ("fuel_poly_kw_to_skcf_hr", "fuel_curve", "poly"),
                   ("gas_hub", "gas_hub", "str")],
    RenewableUnit: [("id", "id", "str"), ("kind", "kind", "str"), ("network", "network", "str"),
                    ("hub", "hub", "str"), ("forecast_kw", "forecast", "profile")],
    BatteryUnit: [("id", "id", "str"), ("dc_hub", "dc_hub", "str"),
                  ("p_ch_min_kw", "p_ch_min", "float"), ("p_ch_max_kw", "p_ch_max", "float"),
                  ("p_dc_min_kw", "p_dc_min", "float"), ("p_dc_max_kw", "p_dc_max", "float"),
                  ("eta_ch", "eta_ch", "float"), ("eta_dc", "eta_dc", "float"),
                  ("e_min_kwh", "e_min", "float"), ("e_max_kwh", "e_max", "float"),
                  ("e_initial_kwh", "e_initial", "float"),
                  ("terminal_rule", "terminal_rule", "str")],
    GasPipe: [("id", "id", "str"), ("from", "from_hub", "str"), ("to", "to_hub", "str"),
              ("c_p", "c_p", "float"), ("pi0_from_psi", "pi0_from", "float"),
              ("pi0_to_psi", "pi0_to", "float"), ("f_max_skcf_hr", "f_max", "float")],
    GasSupplier: [("id", "id", "str"), ("gas_hub", "gas_hub", "str"),
                  ("v_min_skcf_hr", "v_min", "float"), ("v_max_skcf_hr", "v_max", "float"),
                  ("cost_poly_skcf_hr_to_usd", "cost_curve", "poly")],
    CostParams: [("voll_e_usd_per_kwh", "voll_e", "float"),
                 ("voll_g_usd_per_skcf", "voll_g", "float"),
                 ("beta_usd_per_kwh", "beta", "float"), ("xi", "xi", "float"),
                 ("pwl_segments", "pwl_segments", "int")],
    PerUnitBase: [("power_kva", "power_kva", "float"), ("pressure_psi", "pressure", "float")],
}
_OPTIONAL = {(AcHub, "is_reference"), (BatteryUnit, "terminal_rule"), (CostParams, "xi"),
             (CostParams, "pwl_segments")}
_LISTS = [("ac_hubs", AcHub), ("dc_hubs", DcHub), ("gas_hubs", GasHub), ("ac_lines", AcLine),
          ("dc_lines", DcLine), ("inverters", Inverter), ("turbines", Microturbine),
          ("renewables", RenewableUnit), ("batteries", BatteryUnit), ("pipes", GasPipe),
          ("suppliers", GasSupplier)]
_TOP = {"schema", "name", "description", "horizon", "base", "costs"} | {k for k, _ in _LISTS}


# -- serialization ------------------------------------------------------------


def _dump_obj(obj) -> dict:
    out = {}
    for jname, attr, kind in _LAYOUT[type(obj)]:
        v = getattr(obj, attr)
        if kind == "profile":
            v = list(v)
        elif kind == "poly":
            v = list(v.coeffs)
        out[jname] = v
    return out


def case_to_dict(case: MicrogridCase) -> dict:
    if case.per_unit:
        raise ValueError("serialize the physical-unit case, not its per-unit form")
    d: dict[str, Any] = {"schema": SCHEMA_VERSION, "name": case.name,
                         "description": case.description, "horizon": case.horizon,
                         "base": _dump_obj(case.base), "costs": _dump_obj(case.costs)}
    for key, _ in _LISTS:
        d[key] = [_dump_obj(o) for o in getattr(case, key)]
    return d


def serialize_case(case: MicrogridCase) -> str:
    return json.dumps(case_to_dict(case), indent=2, ensure_ascii=False) + "\n"


def save_case(case: MicrogridCase, path) -> None:
    atomic_write(path, serialize_case(case))


# -- parsing ------------------------------------------------------------------


def _num(where, v, kind):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise CaseFileError(f"{where}: expected a number, got {v!r}")
    if kind == "int":
        if not float(v).is_integer():
            raise CaseFileError(f"{where}: expected an integer, got {v!r}")
        return int(v)
    if not math.isfinite(v):
        raise CaseFileError(f"{where}: value must be finite")
    return float(v)


def _load_obj(cls, d, where: str, horizon: int | None):
    if not isinstance(d, dict):
        raise CaseFileError(f"{where}: expected an object")
    layout = _LAYOUT[cls]
    known = {j for j, _, _ in layout}
    for k in d:
        if k not in known:
            raise CaseFileError(f"{where}: unknown field {k!r}")
    kw = {}
    for jname, attr, kind in layout:
        w = f"{where}.{jname}"
        if jname not in d:
            if (cls, attr) in _OPTIONAL:
                continue
            raise CaseFileError(f"{where}: missing field {jname!r}")
        v = d[jname]
        if kind == "str":
            if not isinstance(v, (str, int)) or isinstance(v, bool):
                raise CaseFileError(f"{w}: expected a string")
            v = str(v)
        elif kind == "bool":
            if not isinstance(v, bool):
                raise CaseFileError(f"{w}: expected true/false")
        elif kind in ("float", "int"):
            v = _num(w, v, kind)
        elif kind == "profile":
            if not isinstance(v, list):
                raise CaseFileError(f"{w}: expected a list")
            v = tuple(_num(f"{w}[{i}]", x, "float") for i, x in enumerate(v))
            if horizon is not None and len(v) != horizon:
                raise CaseFileError(f"{w}: profile has {len(v)} entries, "
                                    f"expected horizon {horizon}")
        elif kind == "poly":
            if not isinstance(v, list) or not v:
                raise CaseFileError(f"{w}: expected a non-empty coefficient list")
            v = PolyCurve(tuple(_num(f"{w}[{i}]", x, "float") for i, x in enumerate(v)))
        kw[attr] = v
    return cls(**kw)


def case_from_dict(d: dict, source: str = "<case>", validate: bool = True) -> MicrogridCase:
    if not isinstance(d, dict):
        raise CaseFileError(f"{source}: top level must be an object")
    for k in d:
        if k not in _TOP:
            raise CaseFileError(f"{source}: unknown field {k!r}")
    if d.get("schema") != SCHEMA_VERSION:
        raise CaseFileError(f"{source}: unsupported schema {d.get('schema')!r} "
                            f"(expected {SCHEMA_VERSION})")
    horizon = _num(f"{source}: horizon", d.get("horizon", 24), "int")
    kw: dict[str, Any] = {"horizon": horizon, "name": str(d.get("name", "")),
                          "description": str(d.get("description", ""))}
    if "base" in d:
        kw["base"] = _load_obj(PerUnitBase, d["base"], "base", None)
    if "costs" not in d:
        raise CaseFileError(f"{source}: missing field 'costs'")
    kw["costs"] = _load_obj(CostParams, d["costs"], "costs", None)
    for key, cls in _LISTS:
        items = d.get(key, [])
        if not isinstance(items, list):
            raise CaseFileError(f"{key}: expected a list")
        kw[key] = tuple(_load_obj(cls, o, f"{key}[{i}]", horizon) for i, o in enumerate(items))
    case = MicrogridCase(**kw)
    if validate:
        report = validate_case(case)
        if not report.ok:
            raise CaseFileError(f"{source}: invalid case\n{report}", report)
    return case


def parse_case_text(text: str, source: str = "<case>") -> MicrogridCase:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseFileError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return case_from_dict(d, source)


def parse_case(path) -> MicrogridCase:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseFileError(f"{path}: {exc.strerror or exc}") from None
    return parse_case_text(text, str(path))


# -- results ------------------------------------------------------------------


def atomic_write(path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as exc:
        raise OSError(f"cannot write to {path.parent}: {exc.strerror or exc}") from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from None


def fmt(v: float) -> str:
    """Stable text form: 10 significant digits, no negative zero."""
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    if not math.isfinite(v):
        return str(v)
    s = f"{v:.10g}"
    return "0" if s in ("-0", "0") else s


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _unit(qty: str) -> str:
    return {"P_g": "kW", "P_w": "kW", "P_s": "kW", "P_c": "kW", "P_d": "kW", "P_ch": "kW",
            "P_dc": "kW", "P_g_seg": "kW", "PL": "kW", "Q_g": "kvar", "Q_w": "kvar",
            "Q_s": "kvar", "Q_c": "kvar", "Q_d": "kvar", "QL": "kvar", "SL": "kVA",
            "E": "kWh", "V": "pu", "θ": "rad", "I_ch": "-", "I_dc": "-",
            "v_gs": "Skcf/hr", "v_gs_seg": "Skcf/hr", "π": "psi", "f_p": "Skcf/hr",
            "g_d": "Skcf/hr"}.get(qty, "")


def schedule_rows(schedule) -> list[tuple]:
    rows = []
    for key, raw in schedule.values.items():
        element, qty, t = key[0], key[1], key[2]
        label = qty if len(key) == 3 else f"{qty}[{key[3]}]"
        rows.append((t + 1, element, label, raw * schedule.scale.get(qty, 1.0), _unit(qty)))
    rows.sort(key=lambda r: r[0])  # stable: keeps index order within an hour
    return rows


def write_results(case: MicrogridCase, schedule, metrics, out_dir) -> list[Path]:
    """Write schedule.csv, flows.csv, battery.csv, metrics.json and case.json."""
    out = Path(out_dir)
    if not out.is_dir():
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {out}: {exc.strerror or exc}") from None
    written = []

    def emit(name, text):
        p = out / name
        atomic_write(p, text)
        written.append(p)

    emit("schedule.csv", csv_text(["hour", "element", "quantity", "value", "unit"],
                                  schedule_rows(schedule)))
    flows = []
    T = schedule.horizon
    for t in range(T):
        for ln in case.ac_lines:
            for qty, kind in (("PL", "ac_line_p"), ("QL", "ac_line_q"), ("SL", "ac_line_s")):
                flows.append((t + 1, ln.id, kind, float(schedule.get(ln.id, qty)[t]),
                              _unit(qty)))
        for ln in case.dc_lines:
            flows.append((t + 1, ln.id, "dc_line", float(schedule.get(ln.id, "PL")[t]), "kW"))
        for c in case.inverters:
            flows.append((t + 1, c.id, "inverter_p", float(schedule.get(c.id, "P_c")[t]), "kW"))
            flows.append((t + 1, c.id, "inverter_q", float(schedule.get(c.id, "Q_c")[t]),
                          "kvar"))
        for p in case.pipes:
            flows.append((t + 1, p.id, "pipe", float(schedule.get(p.id, "f_p")[t]), "Skcf/hr"))
    emit("flows.csv", csv_text(["hour", "element", "kind", "value", "unit"], flows))
    bat = []
    for b in case.batteries:
        e, pch, pdc = (schedule.get(b.id, q) for q in ("E", "P_ch", "P_dc"))
        for t in range(T):
            bat.append((t + 1, b.id, float(e[t]), float(pch[t]), float(pdc[t])))
    emit("battery.csv", csv_text(["hour", "battery", "e_kwh", "p_ch_kw", "p_dc_kw"], bat))
    emit("metrics.json", metrics_json(metrics))
    emit("case.json", serialize_case(case))
    return written


def _clean(v):
    if isinstance(v, float):
        return float(fmt(v)) if math.isfinite(v) else None
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


def metrics_json(metrics) -> str:
    d = {f.name: getattr(metrics, f.name) for f in fields(metrics)}
    return json.dumps(_clean(d), indent=2, sort_keys=True) + "\n"
