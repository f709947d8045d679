"""Plot-ready tables and a gnuplot script built from a ``plan`` output folder."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

from .builder import ac, dc, gas
from .io import CaseFileError, atomic_write, csv_text, parse_case

# (file stem, title, y label); column 1 is always the hour
FIGURES = [
    ("electricity", "Electricity generation and consumption", "kW"),
    ("battery", "Battery energy and power", "kW / kWh"),
    ("inverters", "Inverter active power (DC to AC positive)", "kW"),
    ("lost_load", "Unserved electric demand", "kW"),
    ("ac_voltage", "AC hub voltage magnitude", "p.u."),
    ("dc_voltage", "DC hub voltage", "p.u."),
    ("gas_supply", "Gas supply, turbine fuel and heat demand", "Skcf/hr"),
    ("pipe_flow", "Pipe flows", "Skcf/hr"),
    ("pressure", "Gas hub pressure", "psi"),
]


class ReportError(RuntimeError):
    pass


def _load_schedule(path: Path) -> dict[tuple[str, str], dict[int, float]]:
    data: dict[tuple[str, str], dict[int, float]] = defaultdict(dict)
    try:
        with path.open(encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                data[(row["element"], row["quantity"])][int(row["hour"])] = float(row["value"])
    except OSError as exc:
        raise ReportError(f"{path}: {exc.strerror or exc}") from None
    except (KeyError, ValueError) as exc:
        raise ReportError(f"{path}: malformed schedule ({exc})") from None
    return data


def build_tables(out_dir) -> dict[str, tuple[list[str], list[list[float]]]]:
    out = Path(out_dir)
    try:
        case = parse_case(out / "case.json")
    except CaseFileError as exc:
        raise ReportError(str(exc)) from None
    sched = _load_schedule(out / "schedule.csv")
    hours = list(range(1, case.horizon + 1))

    def s(element, qty):
        col = sched.get((element, qty), {})
        return [col.get(h, 0.0) for h in hours]

    def table(columns: dict[str, list[float]]):
        names = list(columns)
        rows = [[h] + [columns[n][i] for n in names] for i, h in enumerate(hours)]
        return ["hour"] + names, rows

    def total(series):
        return [sum(v) for v in zip(*series)] if series else [0.0] * len(hours)

    tables = {}
    gen = {g.id: s(g.id, "P_g") for g in case.turbines}
    for r in case.renewables:
        gen[r.id] = s(r.id, "P_w" if r.kind == "wind" else "P_s")
    dis = total([s(b.id, "P_dc") for b in case.batteries])
    chg = total([s(b.id, "P_ch") for b in case.batteries])
    demand = [sum(h.demand_p[i] for h in case.ac_hubs) + sum(h.demand_p[i] for h in case.dc_hubs)
              for i in range(case.horizon)]
    served = total([s(ac(h.id), "P_d") for h in case.ac_hubs]
                   + [s(dc(h.id), "P_d") for h in case.dc_hubs])
    tables["electricity"] = table({**gen, "discharge": dis, "charge": [-x for x in chg],
                                   "demand": demand, "served": served})
    bat = {}
    for b in case.batteries:
        bat[f"{b.id}_e_kwh"] = s(b.id, "E")
        bat[f"{b.id}_p_net_kw"] = [d - c for d, c in zip(s(b.id, "P_dc"), s(b.id, "P_ch"))]
    tables["battery"] = table(bat)
    tables["inverters"] = table({c.id: s(c.id, "P_c") for c in case.inverters})
    tables["lost_load"] = table({"lost_kw": [d - v for d, v in zip(demand, served)]})
    tables["ac_voltage"] = table({h.id: s(ac(h.id), "V") for h in case.ac_hubs})
    tables["dc_voltage"] = table({h.id: s(dc(h.id), "V") for h in case.dc_hubs})
    heat_d = [sum(h.heat_demand[i] for h in case.gas_hubs) for i in range(case.horizon)]
    heat_s = total([s(gas(h.id), "g_d") for h in case.gas_hubs])
    supply = total([s(x.id, "v_gs") for x in case.suppliers])
    tables["gas_supply"] = table({"supply": supply, "heat_demand": heat_d, "heat_served": heat_s,
                                  "turbine_fuel": [a - b for a, b in zip(supply, heat_s)]})
    tables["pipe_flow"] = table({p.id: s(p.id, "f_p") for p in case.pipes})
    tables["pressure"] = table({h.id: s(gas(h.id), "π") for h in case.gas_hubs})
    return tables


def gnuplot_script(tables) -> str:
    lines = ["# gnuplot plots.gp  (run inside the plots directory)",
             "set datafile separator ','",
             "set terminal pngcairo size 900,500",
             "set key outside right",
             "set xlabel 'hour'",
             "set xrange [1:*]",
             "set grid"]
    for stem, title, ylabel in FIGURES:
        header, _ = tables[stem]
        lines.append("")
        lines.append(f"set output '{stem}.png'")
        lines.append(f"set title '{title}'")
        lines.append(f"set ylabel '{ylabel}'")
        if len(header) < 2:
            lines.append("plot 0 notitle")
            continue
        parts = [f"'{stem}.csv' using 1:{k + 1} with linespoints title '{name}'"
                 for k, name in enumerate(header) if k > 0]
        lines.append("plot " + ", \\\n     ".join(parts))
    return "\n".join(lines) + "\n"


def write_report(out_dir) -> list[Path]:
    out = Path(out_dir)
    tables = build_tables(out)
    plots = out / "plots"
    try:
        plots.mkdir(exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create {plots}: {exc.strerror or exc}") from None
    written = []
    for stem, _, _ in FIGURES:
        header, rows = tables[stem]
        p = plots / f"{stem}.csv"
        atomic_write(p, csv_text(header, [[float(x) if i else x for i, x in enumerate(r)]
                                          for r in rows]))
        written.append(p)
    p = plots / "plots.gp"
    atomic_write(p, gnuplot_script(tables))
    written.append(p)
    metrics_path = out / "metrics.json"
    if metrics_path.exists():
        m = json.loads(metrics_path.read_text(encoding="utf-8"))
        keys = ["lost_load_kwh", "heat_served_fraction", "fuel_cost", "degradation_cost",
                "total_cost"]
        p = plots / "summary.csv"
        atomic_write(p, csv_text(["metric", "value"],
                                 [[k, float(m[k])] for k in keys if m.get(k) is not None]))
        written.append(p)
    return written
