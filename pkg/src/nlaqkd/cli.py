"""Command-line front end.

Subcommands::

    nlaqkd kgr           one operating point
    nlaqkd sweep         rate versus distance, one row per (distance, protocol)
    nlaqkd mten          maximum tolerable excess noise versus distance
    nlaqkd max-distance  largest distance with a positive rate
    nlaqkd verify-oracle closed-form CMs against the Fock-space simulation

Exit codes: 0 success (an infeasible point is still a success), 1 usage
error, 2 numerical failure, 3 oracle mismatch, 4 Fock cutoff too small.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence

from . import __version__
from .channel import DEFAULT_KAPPA, ChannelParams, channel_from_distance, channel_from_transmissivity, gg02_cm
from .optimize import (
    DEFAULT_V_BOX,
    BracketError,
    DistanceStatus,
    max_distance,
    mten,
    optimize_v,
    optimize_vg,
)
from .protocols import ProtocolKind, ProtocolSpec, kgr, plob_bound

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE_MISMATCH = 3
EXIT_CUTOFF = 4

SIG_DIGITS = 12


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepRow:
    distance_km: float
    protocol: str
    beta: float
    eta: float
    gain: float | str | None
    v_opt: float
    g_opt: float | None
    mutual_info_bits: float
    holevo_bits: float
    p_success: float
    kgr_bits_per_use: float
    plob_bits_per_use: float | None
    feasible: bool


SWEEP_FIELDS = tuple(f.name for f in dataclasses.fields(SweepRow))


# ---------------------------------------------------------------------------
# parsing helpers


def parse_range(text: str) -> list[float]:
    """Distances ``start:stop:step`` with the stop included when it lies on the grid.

    A bare number is a one-point range.
    """
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:stop:step") from None
    if any(not math.isfinite(v) for v in values) or values[0] < 0.0:
        raise UsageError(f"bad range {text!r}; distances must be finite and non-negative")
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise UsageError(f"bad range {text!r}; expected start:stop:step")
    start, stop, step = values
    if not step > 0.0 or stop < start:
        raise UsageError(f"bad range {text!r}; need step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 10) for i in range(n + 1)]


def parse_gain(text: str | None) -> float | None:
    """Numeric gain, or ``None`` for ``opt``."""
    if text is None or text.strip().lower() == "opt":
        return None
    try:
        g = float(text)
    except ValueError:
        raise UsageError(f"gain must be a number or 'opt', got {text!r}") from None
    if not g >= 0.0:
        raise UsageError("gain must be non-negative")
    return g


def parse_protocols(text: str) -> list[ProtocolKind]:
    names = [t for t in (s.strip() for s in text.split(",")) if t]
    if not names:
        raise UsageError("protocol list is empty")
    try:
        kinds = [ProtocolKind.parse(n) for n in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(set(kinds)) != len(kinds):
        raise UsageError("protocol list has duplicates")
    return kinds


def make_spec(kind: ProtocolKind, beta: float, eta: float, gain: float | None) -> ProtocolSpec:
    try:
        return ProtocolSpec(kind, beta, eta, None if kind is ProtocolKind.GG02 else gain)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def make_channel(kappa: float, distance: float, epsilon: float) -> ChannelParams:
    try:
        return channel_from_distance(kappa, distance, epsilon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# formatting


def fmt_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def json_value(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    return x


def use_color(stream) -> bool:
    if "NO_COLOR" in os.environ:
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def paint(text: str, ok: bool, color: bool) -> str:
    if not color:
        return text
    return f"\033[{32 if ok else 31}m{text}\033[0m"


def write_records(records: Sequence[dict], fields: Sequence[str], fmt: str, stream, color: bool = False) -> None:
    if fmt == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(fields)
        for rec in records:
            writer.writerow([fmt_value(rec[f]) for f in fields])
    elif fmt == "json":
        for rec in records:
            stream.write(json.dumps({f: json_value(rec[f]) for f in fields}, allow_nan=False) + "\n")
    else:
        width = max(len(f) for f in fields)
        for i, rec in enumerate(records):
            if i:
                stream.write("\n")
            for f in fields:
                value = fmt_value(rec[f])
                if f in ("feasible", "tolerant") and isinstance(rec[f], bool):
                    value = paint(value, rec[f], color)
                stream.write(f"{f:<{width}}  {value}\n")


# ---------------------------------------------------------------------------
# computations (module level so worker processes can pickle them)


@dataclass(frozen=True)
class PointTask:
    distance: float
    kind: ProtocolKind
    beta: float
    eta: float
    gain: float | None
    epsilon: float
    kappa: float
    v: float | None
    v_box: tuple[float, float]
    plob: bool


def evaluate_point(task: PointTask) -> SweepRow:
    spec = make_spec(task.kind, task.beta, task.eta, task.gain)
    channel = make_channel(task.kappa, task.distance, task.epsilon)
    is_gg02 = task.kind is ProtocolKind.GG02
    gain_label: float | str | None = None if is_gg02 else ("opt" if task.gain is None else task.gain)
    if task.v is not None:
        if spec.gain is None and not is_gg02:
            raise UsageError("--v needs a numeric --gain for amplified protocols")
        V, g = task.v, (None if is_gg02 else spec.gain)
    else:
        res = optimize_vg(spec, channel, task.v_box) if (spec.gain is None and not is_gg02) else optimize_v(spec, channel, task.v_box)
        V, g = res.v_opt, res.g_opt
    if V == V:
        br = kgr(spec if g is None or is_gg02 else spec.with_gain(g), V, channel)
    else:
        br = None
    plob = None
    if task.plob and 0.0 < channel.T < 1.0:
        plob = plob_bound(channel)
    nan = math.nan
    if br is None or not br.feasible:
        return SweepRow(task.distance, task.kind.label, task.beta, task.eta, gain_label, V if V == V else nan,
                        g, nan, nan, nan, nan, plob, False)
    return SweepRow(task.distance, task.kind.label, task.beta, task.eta, gain_label, V, g,
                    br.mutual_info, br.holevo, br.p_success, br.kgr, plob, True)


@dataclass(frozen=True)
class MtenTask:
    distance: float
    kind: ProtocolKind
    beta: float
    eta: float
    gain: float | None
    kappa: float
    eps_hi: float
    width: float
    v_box: tuple[float, float]


def evaluate_mten(task: MtenTask) -> dict:
    spec = make_spec(task.kind, task.beta, task.eta, task.gain)
    res = mten(spec, task.kappa, task.distance, (0.0, task.eps_hi), width=task.width, v_box=task.v_box)
    gain_label = None if task.kind is ProtocolKind.GG02 else ("opt" if task.gain is None else task.gain)
    return {
        "distance_km": task.distance,
        "protocol": task.kind.label,
        "beta": task.beta,
        "eta": task.eta,
        "gain": gain_label,
        "eps_max": res.eps_max,
        "bracket": res.bracket,
        "tolerant": res.tolerant,
    }


MTEN_FIELDS = ("distance_km", "protocol", "beta", "eta", "gain", "eps_max", "bracket", "tolerant")
DMAX_FIELDS = ("protocol", "beta", "eta", "gain", "epsilon", "status", "distance_km")


def run_parallel(fn, tasks: list, jobs: int | None) -> list:
    """Map ``fn`` over ``tasks`` preserving input order."""
    if jobs is None:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(jobs, len(tasks)))
    if jobs == 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# ---------------------------------------------------------------------------
# subcommands


def _v_box(args) -> tuple[float, float]:
    box = (args.v_min, args.v_max)
    if not (1.001 <= box[0] < box[1] <= 1e3):
        raise UsageError("need 1.001 <= --v-min < --v-max <= 1000")
    return box


def _fixed_v(args) -> float | None:
    if args.v is None:
        return None
    if args.optimize == "v":
        raise UsageError("--v and --optimize v are mutually exclusive")
    if args.v < 1.0:
        raise UsageError("--v must be at least 1")
    return args.v


def cmd_kgr(args, out) -> int:
    kinds = parse_protocols(args.protocol)
    if len(kinds) != 1:
        raise UsageError("kgr takes exactly one --protocol")
    task = PointTask(args.distance, kinds[0], args.beta, args.eta, parse_gain(args.gain), args.epsilon,
                     args.kappa, _fixed_v(args), _v_box(args), args.plob)
    row = evaluate_point(task)
    write_records([dataclasses.asdict(row)], SWEEP_FIELDS, args.format, out, use_color(out))
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    kinds = parse_protocols(args.protocols)
    distances = parse_range(args.d)
    gain = parse_gain(args.gain)
    v, box = _fixed_v(args), _v_box(args)
    tasks = [
        PointTask(d, k, args.beta, args.eta, gain, args.epsilon, args.kappa, v, box, args.plob)
        for d in distances
        for k in kinds
    ]
    rows = run_parallel(evaluate_point, tasks, args.jobs)
    write_records([dataclasses.asdict(r) for r in rows], SWEEP_FIELDS, args.format, out, use_color(out))
    return EXIT_OK


def cmd_mten(args, out) -> int:
    kinds = parse_protocols(args.protocols)
    distances = parse_range(args.d)
    gain = parse_gain(args.gain)
    tasks = [
        MtenTask(d, k, args.beta, args.eta, gain, args.kappa, args.eps_max, args.width, _v_box(args))
        for d in distances
        for k in kinds
    ]
    records = run_parallel(evaluate_mten, tasks, args.jobs)
    write_records(records, MTEN_FIELDS, args.format, out, use_color(out))
    return EXIT_OK


def cmd_max_distance(args, out) -> int:
    kinds = parse_protocols(args.protocols)
    gain = parse_gain(args.gain)
    if not 0.0 < args.d_max:
        raise UsageError("--d-max must be positive")
    records = []
    for k in kinds:
        spec = make_spec(k, args.beta, args.eta, gain)
        res = max_distance(spec, args.kappa, args.epsilon, (0.0, args.d_max), step=args.step, tol=args.tol,
                           v_box=_v_box(args))
        if res.status is DistanceStatus.UNBOUNDED:
            value = math.inf
        elif res.status is DistanceStatus.FINITE:
            value = res.distance
        else:
            value = None
        records.append({
            "protocol": k.label,
            "beta": args.beta,
            "eta": args.eta,
            "gain": None if k is ProtocolKind.GG02 else ("opt" if gain is None else gain),
            "epsilon": args.epsilon,
            "status": res.status.value,
            "distance_km": value,
        })
    write_records(records, DMAX_FIELDS, args.format, out, use_color(out))
    return EXIT_OK


def cmd_verify_oracle(args, out) -> int:
    from . import fock
    from .protocols import qs_cm_and_prob, spc_cm_and_prob

    kinds = parse_protocols(args.protocol)
    if any(k not in (ProtocolKind.QS, ProtocolKind.SPC) for k in kinds):
        raise UsageError("verify-oracle handles qs and spc only")
    if args.fock_dim < 2:
        raise UsageError("--fock-dim must be at least 2")
    if args.distance is not None:
        channel = make_channel(args.kappa, args.distance, args.epsilon)
    else:
        try:
            channel = channel_from_transmissivity(args.transmissivity, args.epsilon)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    gain = parse_gain(args.gain)
    if gain is None:
        raise UsageError("verify-oracle needs a numeric --gain")
    color = use_color(out)
    records = []
    ok_all = True
    for kind in kinds:
        sim = fock.simulate_qs if kind is ProtocolKind.QS else fock.simulate_spc
        if args.tau is not None:
            if kind is not ProtocolKind.SPC:
                raise UsageError("--tau applies to the spc identity check only")
            if args.tau != 1.0:
                raise UsageError("--tau is only checked at 1 (identity operation)")
            result = sim(args.v, channel, None, args.eta, args.fock_dim, tau=args.tau)
            ref = gg02_cm(args.v, channel)
            ref_p = args.eta
            checks = {"a": (result.cm.a, ref.a), "b": (result.cm.b, ref.b),
                      "c_abs": (abs(result.cm.c), abs(ref.c)), "p_success": (result.p_success, ref_p)}
        else:
            result = sim(args.v, channel, gain, args.eta, args.fock_dim)
            closed = qs_cm_and_prob if kind is ProtocolKind.QS else spc_cm_and_prob
            cm, p = closed(args.v, channel, gain, args.eta)
            checks = {"a": (result.cm.a, cm.a), "b": (result.cm.b, cm.b),
                      "c_abs": (abs(result.cm.c), abs(cm.c)), "p_success": (result.p_success, p)}
        for name, (oracle, closed_value) in checks.items():
            rel = abs(oracle - closed_value) / max(abs(closed_value), 1e-300)
            ok = rel <= args.tol
            ok_all &= ok
            records.append({"protocol": kind.label, "check": name, "oracle": oracle, "closed_form": closed_value,
                            "rel_error": rel, "pass": ok})
        pattern = result.cm.off_pattern()
        ok = pattern <= 1e-6
        ok_all &= ok
        records.append({"protocol": kind.label, "check": "off_pattern", "oracle": pattern, "closed_form": 0.0,
                        "rel_error": pattern, "pass": ok})
    fields = ("protocol", "check", "oracle", "closed_form", "rel_error", "pass")
    if args.format == "text":
        for rec in records:
            status = paint("PASS" if rec["pass"] else "FAIL", rec["pass"], color)
            out.write(f"{status} {rec['protocol']:<4} {rec['check']:<11} oracle={fmt_value(rec['oracle'])} "
                      f"closed={fmt_value(rec['closed_form'])} rel={fmt_value(rec['rel_error'])}\n")
    else:
        write_records(records, fields, args.format, out)
    return EXIT_OK if ok_all else EXIT_ORACLE_MISMATCH


# ---------------------------------------------------------------------------
# argument parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, *, plural: bool, fmt_default: str) -> None:
    if plural:
        p.add_argument("--protocols", "--protocol", dest="protocols", required=True,
                       help="comma-separated list of gg02, ideal, qs, spc")
    else:
        p.add_argument("--protocol", required=True, help="one of gg02, ideal, qs, spc")
    p.add_argument("--beta", type=float, default=0.95, help="reconciliation efficiency (default 0.95)")
    p.add_argument("--eta", type=float, default=1.0, help="detector efficiency (default 1)")
    p.add_argument("--gain", default="opt", help="amplitude gain or 'opt' (default opt)")
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA, help="fibre loss in dB/km (default 0.2)")
    p.add_argument("--v-min", type=float, default=DEFAULT_V_BOX[0], help="lower end of the modulation box")
    p.add_argument("--v-max", type=float, default=DEFAULT_V_BOX[1], help="upper end of the modulation box")
    p.add_argument("--format", choices=("text", "csv", "json"), default=fmt_default)
    p.add_argument("--output", help="write to this file instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlaqkd", description="Key rates of NLA-assisted CV-QKD.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kgr", help="key rate at one operating point")
    _common(p, plural=False, fmt_default="text")
    p.add_argument("--distance", type=float, required=True, help="fibre length in km")
    p.add_argument("--epsilon", type=float, default=0.0, help="excess noise (SNU)")
    p.add_argument("--v", type=float, help="modulation variance; optimized when omitted")
    p.add_argument("--optimize", choices=("v",), help="optimize the modulation (default when --v is absent)")
    p.add_argument("--plob", action="store_true", help="include the repeaterless bound")
    p.set_defaults(func=cmd_kgr)

    p = sub.add_parser("sweep", help="key rate versus distance")
    _common(p, plural=True, fmt_default="csv")
    p.add_argument("--d", required=True, help="distances start:stop:step in km")
    p.add_argument("--epsilon", type=float, default=0.0, help="excess noise (SNU)")
    p.add_argument("--v", type=float, help="fixed modulation variance; optimized when omitted")
    p.add_argument("--optimize", choices=("v",), help="optimize the modulation (default when --v is absent)")
    p.add_argument("--plob", action="store_true", help="include the repeaterless bound column values")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mten", help="maximum tolerable excess noise versus distance")
    _common(p, plural=True, fmt_default="csv")
    p.add_argument("--d", required=True, help="distances start:stop:step in km")
    p.add_argument("--eps-max", type=float, default=0.5, help="top of the excess-noise bracket")
    p.add_argument("--width", type=float, default=1e-4, help="final bisection width")
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_mten)

    p = sub.add_parser("max-distance", help="largest distance with a positive key rate")
    _common(p, plural=True, fmt_default="csv")
    p.add_argument("--epsilon", type=float, default=0.0, help="excess noise (SNU)")
    p.add_argument("--d-max", type=float, default=1000.0, help="far end of the search (km)")
    p.add_argument("--step", type=float, default=10.0, help="coarse scan spacing (km)")
    p.add_argument("--tol", type=float, default=0.1, help="bisection tolerance (km)")
    p.set_defaults(func=cmd_max_distance)

    p = sub.add_parser("verify-oracle", help="check closed-form CMs against the Fock simulation")
    p.add_argument("--protocol", default="qs,spc", help="qs, spc or both (default both)")
    p.add_argument("--v", type=float, default=1.5, help="modulation variance (default 1.5)")
    p.add_argument("--transmissivity", "-T", type=float, default=0.5, help="channel transmissivity (default 0.5)")
    p.add_argument("--distance", type=float, help="fibre length in km (overrides --transmissivity)")
    p.add_argument("--kappa", type=float, default=DEFAULT_KAPPA)
    p.add_argument("--epsilon", type=float, default=0.02, help="excess noise (default 0.02)")
    p.add_argument("--eta", type=float, default=0.8, help="detector efficiency (default 0.8)")
    p.add_argument("--gain", default="1.5", help="amplitude gain (default 1.5)")
    p.add_argument("--fock-dim", type=int, default=20, help="signal-mode cutoff (default 20)")
    p.add_argument("--tau", type=float, help="direct transmissivity; 1 runs the spc identity check")
    p.add_argument("--tol", type=float, default=1e-3, help="relative tolerance (default 1e-3)")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--output")
    p.set_defaults(func=cmd_verify_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        buf = io.StringIO()
        code = args.func(args, buf)
    except UsageError as exc:
        sys.stderr.write(f"nlaqkd: error: {exc}\n")
        return EXIT_USAGE
    except BracketError as exc:
        sys.stderr.write(f"nlaqkd: bracket error: {exc}\n")
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        from .fock import CutoffError

        if isinstance(exc, CutoffError):
            sys.stderr.write(f"nlaqkd: cutoff error: {exc}\n")
            return EXIT_CUTOFF
        if isinstance(exc, (ArithmeticError, ValueError)):
            sys.stderr.write(f"nlaqkd: numerical failure: {exc}\n")
            return EXIT_NUMERICAL
        raise
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
