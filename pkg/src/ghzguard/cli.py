"""Command-line harness: ``ghzguard {teleport,dense,sweep,optimal-n,mc}``.

Data goes to stdout (or ``--out``); diagnostics go to stderr. Any usage or
domain error exits with status 2.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import qcore, report
from .bases import parse_label
from .montecarlo import PROTOCOLS, RNG_ALGORITHM, TrajectoryConfig, analytic_result, compare_to_analytic, run_trajectories
from .noise import NoiseDomainError, NoiseMode, NoiseSpec
from .protocols import (
    MAX_SIMULATED_N,
    ProtocolResult,
    TeleportInput,
    compare_nghz,
    dense_epr,
    dense_ghz,
    nghz_closed_form,
    optimal_n,
    teleport_epr,
    teleport_ghz,
)

log = logging.getLogger("ghzguard")

PROTOCOL_COLUMNS = [
    "protocol", "variant", "p", "mode", "postselect", "fidelity",
    "desired_component_weight", "acceptance_rate", "detected_probability",
    "outcome_distribution",
]
EXACT_COLUMNS = PROTOCOL_COLUMNS + ["trace_distance_first_order"]
NGHZ_COLUMNS = ["protocol", "n", "p", "closed_form", "simulated", "acceptance_rate", "agrees", "epr_baseline"]
OPTIMAL_COLUMNS = ["n", "p", "efficiency", "epr_baseline", "is_argmax"]
MC_COLUMNS = ["protocol", "p", "mode", "postselect", "shots", "seed", "label", "count",
              "frequency", "analytic", "stderr", "z", "flagged"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepConfig:
    protocol: str
    p_values: tuple[float, ...]
    mode: NoiseMode = NoiseMode.FIRST_ORDER
    postselect: bool = False
    variants: tuple[str, ...] = ("epr", "ghz")
    n_max: int = 6
    psi: tuple[complex, complex] = (1.0, 0.0)
    message: tuple[int, int] = (0, 0)
    fmt: str = "csv"
    out: Path | None = None

    def __post_init__(self):
        if not self.p_values:
            raise UsageError("empty p grid")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")


# -- argument parsing helpers ---------------------------------------------------


def parse_p_range(text: str) -> tuple[float, ...]:
    """``start:stop:step``, stop included when it lies on the grid."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--p-range expects start:stop:step, got {text!r}") from None
    if step <= 0:
        raise UsageError("--p-range step must be positive")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(report.fmt_float(start + i * step)) for i in range(max(count, 0)))


def parse_psi(text: str) -> tuple[complex, complex]:
    try:
        a0, a1 = (complex(x.strip().replace(" ", "")) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--psi expects 'a0,a1' complex amplitudes, got {text!r}") from None
    try:
        qcore.as_state([a0, a1])
    except qcore.QuantumStateError as exc:
        raise UsageError(f"--psi: {exc}") from None
    return a0, a1


def parse_message(text: str) -> tuple[int, int]:
    try:
        bits = parse_label(text)
    except ValueError as exc:
        raise UsageError(f"--message: {exc}") from None
    if len(bits) != 2:
        raise UsageError("--message must be two bits, e.g. 10")
    return bits  # type: ignore[return-value]


def _p_values(args) -> tuple[float, ...]:
    if args.p is not None and args.p_range is not None:
        raise UsageError("give either --p or --p-range, not both")
    if args.p is not None:
        return (args.p,)
    if args.p_range is not None:
        values = parse_p_range(args.p_range)
        if not values:
            raise UsageError(f"--p-range {args.p_range!r} is empty")
        return values
    raise UsageError("one of --p or --p-range is required")


def _variants(args) -> tuple[str, ...]:
    variants = ("epr", "ghz") if args.variant is None else (args.variant,)
    if args.postselect and variants == ("epr",):
        raise UsageError("--postselect needs the ghz variant; EPR outcomes cannot be flagged")
    return variants


# -- row builders ------------------------------------------------------------


def _run_protocol(protocol, variant, p, mode, postselect, psi, message) -> ProtocolResult:
    noise = NoiseSpec(p, frozenset(), mode)
    if protocol == "teleport":
        inp = TeleportInput(psi[0], psi[1], noise)
        return teleport_epr(inp) if variant == "epr" else teleport_ghz(inp, postselect)
    return dense_epr(message, noise) if variant == "epr" else dense_ghz(message, noise, postselect)


def protocol_row(protocol, variant, p, mode, postselect, psi=(1.0, 0.0), message=(0, 0)) -> dict:
    mode = NoiseMode.parse(mode)
    postselect = postselect and variant == "ghz"
    res = _run_protocol(protocol, variant, p, mode, postselect, psi, message)
    row = {
        "protocol": protocol,
        "variant": variant,
        "p": p,
        "mode": mode.value,
        "postselect": postselect,
        "fidelity": res.fidelity_to_target,
        "desired_component_weight": res.desired_component_weight,
        "acceptance_rate": res.acceptance_rate,
        "detected_probability": res.detected_probability,
        "outcome_distribution": res.outcome_distribution,
        "output_state": res.output_state,
    }
    if mode is NoiseMode.EXACT:
        try:
            approx = _run_protocol(protocol, variant, p, NoiseMode.FIRST_ORDER, postselect, psi, message)
            row["trace_distance_first_order"] = qcore.trace_distance(res.output_state, approx.output_state)
        except NoiseDomainError:
            row["trace_distance_first_order"] = None
    return row


def protocol_rows(cfg: SweepConfig, protocols: Sequence[str]) -> list[dict]:
    rows = [
        protocol_row(proto, variant, p, cfg.mode, cfg.postselect, cfg.psi, cfg.message)
        for proto in protocols for p in cfg.p_values for variant in cfg.variants
    ]
    order = {v: i for i, v in enumerate(("epr", "ghz"))}
    return sorted(rows, key=lambda r: (r["protocol"], r["p"], order[r["variant"]]))


def nghz_rows(cfg: SweepConfig) -> list[dict]:
    rows = []
    for p in sorted(cfg.p_values):
        for n in range(2, cfg.n_max + 1):
            closed = nghz_closed_form(n, p)
            row = {"protocol": "nghz", "n": n, "p": p, "closed_form": closed,
                   "simulated": None, "acceptance_rate": None, "agrees": None,
                   "epr_baseline": 1 - 2 * p}
            if n <= MAX_SIMULATED_N:
                check = compare_nghz(n, p)
                row.update(simulated=check.simulated, acceptance_rate=check.acceptance_rate,
                           agrees=check.agrees)
                if not check.agrees:
                    log.warning("N=%d p=%s: closed form %.12g differs from simulated %.12g",
                                n, p, closed, check.simulated)
            rows.append(row)
    return rows


def optimal_rows(p: float, n_max: int) -> tuple[int, list[dict]]:
    best = optimal_n(p, n_max)
    rows = [
        {"n": n, "p": p, "efficiency": nghz_closed_form(n, p), "epr_baseline": 1 - 2 * p,
         "is_argmax": n == best}
        for n in range(3, n_max + 1)
    ]
    return best, rows


# -- output ------------------------------------------------------------------


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc}") from None


def _render(command, fmt, meta, rows, columns) -> str:
    if fmt == "json":
        return report.to_json(command, meta, rows)
    return report.to_csv(rows, columns)


# -- subcommands -------------------------------------------------------------


def _config_from(args, protocol) -> SweepConfig:
    return SweepConfig(
        protocol=protocol,
        p_values=_p_values(args),
        mode=NoiseMode.parse(args.mode),
        postselect=args.postselect,
        variants=_variants(args) if protocol in ("teleport", "dense") else ("ghz",),
        n_max=getattr(args, "n_max", None) or 6,
        psi=parse_psi(args.psi) if getattr(args, "psi", None) else (1.0, 0.0),
        message=parse_message(args.message) if getattr(args, "message", None) else (0, 0),
        fmt=args.format,
        out=Path(args.out) if args.out else None,
    )


def _protocol_meta(cfg: SweepConfig) -> dict:
    return {"protocol": cfg.protocol, "mode": cfg.mode.value, "postselect": cfg.postselect,
            "psi": list(cfg.psi), "message": "".join(map(str, cfg.message)),
            "p_values": list(cfg.p_values)}


def cmd_single(args) -> None:
    cfg = _config_from(args, args.command)
    rows = protocol_rows(cfg, [cfg.protocol])
    columns = EXACT_COLUMNS if cfg.mode is NoiseMode.EXACT else PROTOCOL_COLUMNS
    _emit(_render(args.command, cfg.fmt, _protocol_meta(cfg), rows, columns), cfg.out)


def cmd_sweep(args) -> None:
    cfg = _config_from(args, args.protocol)
    if cfg.protocol == "nghz":
        if cfg.mode is not NoiseMode.FIRST_ORDER:
            raise UsageError("the nghz sweep uses the first-order model only")
        rows = nghz_rows(cfg)
        meta = {"protocol": "nghz", "n_max": cfg.n_max, "p_values": list(cfg.p_values)}
        text = _render("sweep", cfg.fmt, meta, rows, NGHZ_COLUMNS)
    else:
        rows = protocol_rows(cfg, [cfg.protocol])
        columns = EXACT_COLUMNS if cfg.mode is NoiseMode.EXACT else PROTOCOL_COLUMNS
        text = _render("sweep", cfg.fmt, _protocol_meta(cfg), rows, columns)
    _emit(text, cfg.out)


def cmd_optimal_n(args) -> None:
    try:
        best, rows = optimal_rows(args.p, args.n_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    degenerate = args.p == 0
    if degenerate:
        log.info("p = 0: every N has efficiency 1; tie broken towards N = 3")
    meta = {"p": args.p, "n_max": args.n_max, "argmax": best, "degenerate": degenerate,
            "epr_baseline": 1 - 2 * args.p}
    _emit(_render("optimal-n", args.format, meta, rows, OPTIMAL_COLUMNS),
          Path(args.out) if args.out else None)


def cmd_mc(args) -> None:
    if args.p is None:
        raise UsageError("--p is required")
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    try:
        config = TrajectoryConfig(
            protocol=args.protocol, p=args.p, shots=args.shots, seed=args.seed,
            mode=NoiseMode.parse(args.mode), postselect=args.postselect,
            psi=parse_psi(args.psi) if args.psi else (1.0, 0.0),
            message=parse_message(args.message) if args.message else (0, 0),
            partitions=args.partitions,
        )
    except (ValueError, qcore.QuantumStateError) as exc:
        raise UsageError(str(exc)) from None
    stats = run_trajectories(config, workers=args.workers)
    analytic = analytic_result(config)
    comparison = compare_to_analytic(stats, analytic)
    rows = [
        {"protocol": config.protocol, "p": config.p, "mode": config.mode.value,
         "postselect": config.postselect, "shots": config.shots, "seed": config.seed,
         "label": r.label, "count": r.count, "frequency": r.frequency,
         "analytic": r.analytic, "stderr": r.stderr, "z": r.z, "flagged": r.flagged}
        for r in comparison.rows
    ]
    meta = {
        "protocol": config.protocol, "p": config.p, "mode": config.mode.value,
        "postselect": config.postselect, "shots": config.shots, "seed": config.seed,
        "partitions": config.partitions, "rng": RNG_ALGORITHM,
        "acceptance_rate": stats.acceptance_rate, "acceptance_analytic": analytic.acceptance_rate,
        "acceptance_z": comparison.acceptance_z,
        "success_estimate": stats.success_estimate, "success_stderr": stats.success_stderr,
        "success_analytic": analytic.fidelity_to_target, "success_z": comparison.success_z,
        "flip_counts": {str(k): v for k, v in stats.flip_counts.items()},
        "flagged_labels": comparison.flagged, "max_abs_z": comparison.max_abs_z,
    }
    if comparison.flagged:
        log.warning("labels with |z| > 4: %s", ", ".join(comparison.flagged))
    _emit(_render("mc", args.format, meta, rows, MC_COLUMNS), Path(args.out) if args.out else None)


# -- parser ------------------------------------------------------------------


def _common(sub: argparse.ArgumentParser, grid: bool = True) -> None:
    if grid:
        sub.add_argument("--p", type=float, help="single noise probability")
        sub.add_argument("--p-range", help="grid start:stop:step (inclusive)")
    sub.add_argument("--mode", choices=["exact", "first-order"], default="first-order")
    sub.add_argument("--postselect", action="store_true", help="discard flagged GHZ outcomes")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghzguard",
        description="Bit-flip detection with GHZ resources in teleportation and dense coding.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (("teleport", "teleport a qubit state"), ("dense", "superdense coding")):
        sub = subs.add_parser(name, help=help_)
        sub.add_argument("--variant", choices=["epr", "ghz"])
        _common(sub)
        if name == "teleport":
            sub.add_argument("--psi", help="amplitudes 'a0,a1', e.g. '0.6,0.8j' (default 1,0)")
        else:
            sub.add_argument("--message", help="two-bit message, e.g. 10 (default 00)")
        sub.set_defaults(func=cmd_single)

    sweep = subs.add_parser("sweep", help="parameter sweep written as CSV/JSON")
    sweep.add_argument("--protocol", choices=["teleport", "dense", "nghz"], required=True)
    sweep.add_argument("--variant", choices=["epr", "ghz"])
    sweep.add_argument("--n-max", type=int, default=6, help="largest N for the nghz sweep")
    sweep.add_argument("--psi")
    sweep.add_argument("--message")
    _common(sweep)
    sweep.set_defaults(func=cmd_sweep)

    opt = subs.add_parser("optimal-n", help="efficiency against GHZ size N")
    opt.add_argument("--p", type=float, required=True)
    opt.add_argument("--n-max", type=int, required=True)
    opt.add_argument("--format", choices=["csv", "json"], default="csv")
    opt.add_argument("--out")
    opt.set_defaults(func=cmd_optimal_n)

    mc = subs.add_parser("mc", help="Monte Carlo trajectories against the analytic result")
    mc.add_argument("--protocol", choices=PROTOCOLS, required=True)
    mc.add_argument("--p", type=float)
    mc.add_argument("--shots", type=int, default=100_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--partitions", type=int, default=1)
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--psi")
    mc.add_argument("--message")
    _common(mc, grid=False)
    mc.set_defaults(func=cmd_mc)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (UsageError, NoiseDomainError, qcore.QuantumStateError) as exc:
        print(f"ghzguard {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
