"""Bundled example cases.

``case1`` is a six-hub AC / five-hub DC / six-hub gas microgrid with two
gas-fired microturbines (120 and 180 kW), a 100 kW PV plant, a 40 kW wind
turbine, two 120 kW inverters and a five-pipe gas network limited to
75 Skcf/hr.  Only those ratings are fixed inputs; the hourly profiles,
impedances, cost curves and battery data are synthetic (demand peaks near
hour 20, solar is a midday bell, wind is strongest at night).

``case2`` lowers the first inverter to 80 kW and ``case3`` lowers every
pipe limit to 20 Skcf/hr; each differs from ``case1`` in exactly that field.

Run ``python -m mecgrid.fixtures`` to regenerate the JSON files under
``mecgrid/data``.
"""

from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

from .model import (AcHub, AcLine, BatteryUnit, CostParams, DcHub, DcLine, GasHub,
                    GasPipe, GasSupplier, Inverter, MicrogridCase, Microturbine,
                    PerUnitBase, PolyCurve, RenewableUnit)

HOURS = 24

AC_DEMAND_KW = (150, 140, 135, 130, 135, 150, 170, 190, 205, 210, 215, 220,
                220, 215, 210, 215, 225, 235, 250, 262, 265, 245, 215, 175)
DC_DEMAND_KW = (45, 45, 43, 45, 45, 45, 52, 60, 63, 65, 67, 70,
                72, 70, 68, 70, 75, 85, 95, 100.8, 115, 105, 90, 65)
SOLAR_KW = (0, 0, 0, 0, 0, 0, 8, 25, 45, 65, 82, 95,
            100, 96, 85, 68, 47, 25, 8, 0, 0, 0, 0, 0)
WIND_KW = (32, 35, 38, 40, 37, 33, 28, 24, 20, 18, 15, 14,
           12, 13, 15, 18, 22, 25, 28, 31.2, 33, 35, 36, 34)
# fraction of the daily peak; morning and evening heating peaks
HEAT_SHAPE = (0.55, 0.5, 0.48, 0.48, 0.52, 0.65, 0.85, 1.0, 0.9, 0.75, 0.65, 0.6,
              0.58, 0.57, 0.6, 0.68, 0.8, 0.92, 1.0, 0.97, 0.9, 0.8, 0.7, 0.6)

AC_SHARE = {"1": 0.10, "2": 0.20, "3": 0.20, "4": 0.10, "5": 0.20, "6": 0.20}
DC_SHARE = {"1": 0.15, "2": 0.20, "3": 0.25, "4": 0.15, "5": 0.25}
HEAT_PEAK = {"1": 10.0, "2": 8.0, "3": 4.0, "4": 6.0, "5": 5.0, "6": 7.0}
PI0 = {"1": 96.0, "2": 95.0, "3": 100.0, "4": 95.0, "5": 92.0, "6": 92.0}
REACTIVE_RATIO = 0.3


def _profile(total, share):
    return tuple(round(float(x) * share, 6) for x in total)


def build_case1() -> MicrogridCase:
    ac_hubs = tuple(
        AcHub(h, 0.95, 1.05, _profile(AC_DEMAND_KW, s),
              _profile(AC_DEMAND_KW, s * REACTIVE_RATIO), is_reference=(h == "1"))
        for h, s in AC_SHARE.items())
    dc_hubs = tuple(DcHub(h, 0.95, 1.05, _profile(DC_DEMAND_KW, s))
                    for h, s in DC_SHARE.items())
    gas_hubs = tuple(GasHub(h, 80.0, 110.0, _profile(HEAT_SHAPE, peak))
                     for h, peak in HEAT_PEAK.items())
    ring = [("1", "2"), ("2", "3"), ("3", "4"), ("4", "5"), ("5", "6"), ("6", "1"), ("2", "5")]
    ac_lines = tuple(AcLine(f"L{i + 1}", a, b, 5.0, -15.0, 2.5) for i, (a, b) in enumerate(ring))
    dc_ring = [("1", "2"), ("2", "3"), ("3", "4"), ("4", "5"), ("5", "1")]
    dc_lines = tuple(DcLine(f"D{i + 1}", a, b, 0.02, 3.0) for i, (a, b) in enumerate(dc_ring))
    inverters = (
        Inverter("INV1", "1", "1", -120.0, 120.0, -100.0, 100.0),
        Inverter("INV2", "4", "3", -120.0, 120.0, -100.0, 100.0),
    )
    turbines = (
        Microturbine("MT1", "dc", "2", 10.0, 120.0, 0.0, 0.0,
                     PolyCurve((2.0, 0.12, 0.0005)), "2"),
        Microturbine("MT2", "dc", "4", 15.0, 180.0, 0.0, 0.0,
                     PolyCurve((3.0, 0.11, 0.0004)), "5"),
    )
    renewables = (
        RenewableUnit("WT1", "wind", "ac", "3", tuple(float(x) for x in WIND_KW)),
        RenewableUnit("PV1", "solar", "ac", "5", tuple(float(x) for x in SOLAR_KW)),
    )
    batteries = (BatteryUnit("BAT1", "5", 0.0, 60.0, 0.0, 60.0, 0.95, 0.95,
                             20.0, 300.0, 100.0, "at-least-initial"),)
    pipe_ends = [("3", "1"), ("3", "2"), ("3", "4"), ("4", "5"), ("4", "6")]
    pipes = tuple(GasPipe(f"P{i + 1}", a, b, 1.2, PI0[a], PI0[b], 75.0)
                  for i, (a, b) in enumerate(pipe_ends))
    suppliers = (GasSupplier("GS1", "3", 0.0, 150.0, PolyCurve((0.0, 5.0, 0.02))),)
    return MicrogridCase(
        ac_hubs, dc_hubs, gas_hubs, ac_lines, dc_lines, inverters, turbines, renewables,
        batteries, pipes, suppliers, horizon=HOURS, base=PerUnitBase(100.0, 1.0),
        costs=CostParams(voll_e=20.0, voll_g=25.0, beta=1.2, xi=0.2, pwl_segments=4),
        name="case1",
        description="Synthetic day-ahead profiles on fixed network ratings; "
                    "all demand can be met.")


def build_case2() -> MicrogridCase:
    base = build_case1()
    inv = (dataclasses.replace(base.inverters[0], p_max=80.0),) + base.inverters[1:]
    return dataclasses.replace(base, inverters=inv, name="case2",
                               description="case1 with inverter INV1 limited to 80 kW.")


def build_case3() -> MicrogridCase:
    base = build_case1()
    pipes = tuple(dataclasses.replace(p, f_max=20.0) for p in base.pipes)
    return dataclasses.replace(base, pipes=pipes, name="case3",
                               description="case1 with every pipe limited to 20 Skcf/hr.")


BUILDERS = {"case1": build_case1, "case2": build_case2, "case3": build_case3}


def bundled_path(name: str) -> Path:
    if name not in BUILDERS:
        raise KeyError(f"no bundled case {name!r}; choose from {', '.join(BUILDERS)}")
    return Path(str(resources.files("mecgrid") / "data" / f"{name}.json"))


def load_bundled(name: str) -> MicrogridCase:
    from .io import parse_case

    return parse_case(bundled_path(name))


def write_bundled(directory: Path | None = None) -> list[Path]:
    from .io import save_case

    directory = directory or Path(__file__).parent / "data"
    paths = []
    for name, build in BUILDERS.items():
        p = Path(directory) / f"{name}.json"
        save_case(build(), p)
        paths.append(p)
    return paths


if __name__ == "__main__":
    for p in write_bundled():
        print(p)
