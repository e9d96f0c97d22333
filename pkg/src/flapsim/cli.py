"""Command line entry point.

``flapsim run`` executes one scenario file and writes its artifacts into an
output directory:

* telemetry CSV: one row per simulation step (one row per frequency for the
  sweeps), first row is the header, SI units. The column layout version is
  ``TELEMETRY_VERSION`` and is repeated in the summary JSON. Vector signals are
  split into ``name_x``, ``name_y``, ``name_z`` columns, body frame unless the
  README says otherwise.
* summary JSON: task, controller, metrics and run settings.
* wrench-table JSON: written for the ``wrench-table`` task.

``flapsim analyze`` reads a telemetry CSV back and reports MAX/RMS of one
column together with the oscillation statistic of the chosen channels.

Exit status: 0 on success, 2 on bad input, 3 when the simulation diverged
(the message names the step index).
"""

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .analysis import TimeSeries
from .scenarios import BURN_IN, Scenario, run_scenario
from .vehicle import SimulationDiverged

TELEMETRY_VERSION = 1

log = logging.getLogger("flapsim")


def parse_sweep(text):
    """``"a:b:step"`` -> list of frequencies from ``a`` to ``b`` inclusive."""
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a:b:step, got {text!r}") from None
    if step <= 0.0 or b < a:
        raise argparse.ArgumentTypeError("need step > 0 and b >= a")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 10) for i in range(n)]


def _clean(x):
    """Make a structure JSON-safe: arrays to lists, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def write_json(path, data):
    Path(path).write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_telemetry(path, table):
    """Write a column table as CSV with a fixed number format (byte-stable)."""
    names = list(table)
    cols = [np.asarray(table[n], dtype=float) for n in names]
    n = len(cols[0]) if cols else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for k in range(n):
            w.writerow([format(c[k], ".9g") for c in cols])


def read_telemetry(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    head, body = rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))
    return {h: body[:, i] for i, h in enumerate(head)}


def build_parser():
    p = argparse.ArgumentParser(prog="flapsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"flapsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("--scenario", required=True, help="scenario JSON file")
    r.add_argument("--out", required=True, help="output directory (created if missing)")
    r.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    r.add_argument("--controller", choices=("tau1", "tau2", "tau3", "ut1", "ut2", "ut3"), default=None,
                   help="override the scenario controller")
    r.add_argument("--freq-sweep", type=parse_sweep, default=None, metavar="A:B:STEP",
                   help="frequency list (Hz) for the wake-sweep and wrench-table tasks")

    a = sub.add_parser("analyze", help="metrics of a telemetry CSV")
    a.add_argument("--telemetry", required=True)
    a.add_argument("--out", required=True, help="summary JSON path")
    a.add_argument("--column", default="psi", help="error column for MAX/RMS")
    a.add_argument("--channels", default="", help="comma separated columns for the oscillation statistic")
    a.add_argument("--start-fraction", type=float, default=BURN_IN)
    return p


def cmd_run(args):
    sc = Scenario.from_json(Path(args.scenario).read_text())
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.controller is not None:
        sc = replace(sc, controller=args.controller)
    if args.freq_sweep is not None:
        if sc.task not in ("wake-sweep", "wrench-table"):
            raise ValueError("--freq-sweep applies to the wake-sweep and wrench-table tasks only")
        sc = replace(sc, freqs=args.freq_sweep)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s", sc.task)
    res = run_scenario(sc)
    summary = dict(res.summary)
    summary.update(telemetry_version=TELEMETRY_VERSION, seed=sc.seed, flapsim_version=__version__)
    write_telemetry(out / sc.telemetry, res.telemetry)
    if sc.task == "wrench-table":
        write_json(out / sc.wrench, {"telemetry_version": TELEMETRY_VERSION, "rows": summary.pop("rows")})
        summary["wrench_table"] = sc.wrench
    write_json(out / sc.summary, summary)
    return 0


def cmd_analyze(args):
    tab = read_telemetry(args.telemetry)
    if args.column not in tab:
        raise ValueError(f"no column {args.column!r} in {args.telemetry}")
    mx, rms = analysis.metrics(tab[args.column], args.start_fraction)
    res = {"column": args.column, "MAX": mx, "RMS": rms, "start_fraction": args.start_fraction}
    if args.channels:
        t = tab.get("t")
        l = float(t[1] - t[0]) if t is not None and len(t) > 1 else 1e-3
        res["upsilon"] = {c: analysis.oscillation_statistic(TimeSeries(tab[c], l))
                          for c in args.channels.split(",")}
    write_json(args.out, res)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": cmd_run, "analyze": cmd_analyze}[args.command](args)
    except SimulationDiverged as exc:
        print(f"flapsim: simulation diverged at step {exc.step}: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"flapsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
