import math
import sys
from pathlib import Path

from load_shaper.bench.experiments import METHODS, ExperimentSpec, run_matrix
from load_shaper.bench.profiles import export_load_profile, profile_sparsity
from load_shaper.bench.tightness import wm_tightness_report
from load_shaper.community.generator import generate_community
from load_shaper.community.sampling import GenConfig
from load_shaper.core.errors import AuditError, InstanceFormatError, SolverError
from load_shaper.core.instance_io import (
    read_instance,
    read_schedule_csv,
    read_target_csv,
    write_instance,
    write_schedule_csv,
)
from load_shaper.core.model import CANONICAL_APPLIANCES, objective_value
from load_shaper.core.settings import BENCH_CONFIG, GEN_CONFIG
from load_shaper.kernel.lp_model import dump_lp_text
from load_shaper.solvers.centralized import build_centralized_ip, solve_centralized
from load_shaper.solvers.restricted_master import run_restricted_master_heuristic, write_trace_csv


USAGE = """
Usage:
  python -m load_shaper.cli gen --homes <N> --out <instance.json>
        [--seed <s>] [--intervals <K>] [--appliances hvac,ewh,...]
        [--weather <temps.csv>] [--target-csv <profile.csv>]

  python -m load_shaper.cli solve-central <instance.json>
        [--gap <rel>] [--budget-s <sec>] [--out <schedule.csv>]
        [--dump-lp <model.lp>] [--profile <profile.csv>]

  python -m load_shaper.cli solve-dw <instance.json>
        [--eps <rel>] [--kappa <k|inf>] [--budget-s <sec>] [--out <schedule.csv>]
        [--trace <trace.csv>] [--profile <profile.csv>] [--verbose]

  python -m load_shaper.cli bench --homes <N,N,...> --seeds <s,s,...>
        [--methods central@1e-4,dw@5,...] [--budget-s <sec>] [--intervals <K>]
        [--eps <rel>] [--appliances hvac,ewh,...] [--out <dir>] [--profiles] [--traces]

  python -m load_shaper.cli enumerate-wm

  python -m load_shaper.cli export-profile <instance.json> --schedule <schedule.csv> --out <profile.csv>
"""

SWITCHES = {"--verbose", "--profiles", "--traces"}

OBJ_TOL = 1e-6


def _flags(args: list[str]) -> tuple[list[str], dict[str, str]]:
    """Split argv into positionals and --key value pairs (switches map to "1")."""
    positional: list[str] = []
    flags: dict[str, str] = {}
    k = 0

    while k < len(args):
        arg = args[k]

        if arg in SWITCHES:
            flags[arg] = "1"
            k += 1
        elif arg.startswith("--"):
            if k + 1 >= len(args):
                raise ValueError(f"flag {arg} needs a value")

            flags[arg] = args[k + 1]
            k += 2
        else:
            positional.append(arg)
            k += 1

    return positional, flags


def _csv_list(value: str) -> list[str]:
    return [x.strip() for x in value.split(",") if x.strip()]


def _int_list(value: str) -> tuple[int, ...]:
    return tuple(int(x) for x in _csv_list(value))


def _float_or_none(flags: dict[str, str], key: str):
    return float(flags[key]) if key in flags else None


def _check_reported(instance, reported: float, path: str) -> None:
    """The saved schedule must reproduce the reported objective."""
    again = objective_value(instance, read_schedule_csv(instance, path))

    if abs(again - reported) > OBJ_TOL * max(1.0, abs(reported)):
        raise AuditError(f"objective from {path} is {again:.9g}, solver reported {reported:.9g}")


def _write_outputs(instance, schedule, obj: float, flags: dict[str, str]) -> None:
    if "--out" in flags:
        write_schedule_csv(instance, schedule, flags["--out"])
        _check_reported(instance, obj, flags["--out"])
        print(f"[cli] schedule={flags['--out']}")

    if "--profile" in flags:
        export_load_profile(instance, schedule, flags["--profile"])
        stats = profile_sparsity(instance, schedule)
        print(
            f"[cli] profile={flags['--profile']} zero_fraction={stats['zero_fraction']:.3f} "
            f"abs_dev_optimal={stats['abs_dev_optimal']:.6g} "
            f"abs_dev_desirable={stats['abs_dev_desirable']:.6g}"
        )


# =========================================================
# Subcommands
# =========================================================

def cmd_gen(args: list[str]) -> int:
    _, flags = _flags(args)

    if "--homes" not in flags or "--out" not in flags:
        print(USAGE)
        return 1

    appliances = tuple(_csv_list(flags["--appliances"])) if "--appliances" in flags else CANONICAL_APPLIANCES
    config = GenConfig(
        N=int(flags["--homes"]),
        seed=int(flags.get("--seed", "0")),
        intervals=int(flags.get("--intervals", str(GEN_CONFIG["intervals"]))),
        appliances=appliances,
        weather_csv=flags.get("--weather"),
    )

    target = read_target_csv(flags["--target-csv"], config.intervals) if "--target-csv" in flags else None
    instance = generate_community(config, target=target)
    path = write_instance(instance, flags["--out"])

    print(f"[cli] gen done. instance={path}")
    return 0


def cmd_solve_central(args: list[str]) -> int:
    positional, flags = _flags(args)

    if len(positional) != 1:
        print(USAGE)
        return 1

    instance = read_instance(positional[0])

    if "--dump-lp" in flags:
        path = Path(flags["--dump-lp"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dump_lp_text(build_centralized_ip(instance).model), encoding="utf-8")
        print(f"[cli] lp={path}")

    res = solve_centralized(
        instance,
        rel_gap=float(flags.get("--gap", "1e-4")),
        time_limit=_float_or_none(flags, "--budget-s"),
    )

    if res.schedule is None:
        raise SolverError(f"centralized solve returned no schedule (status={res.status})")

    _write_outputs(instance, res.schedule, res.obj, flags)
    print(f"[cli] solve-central done. obj={res.obj:.6g} gap={res.rel_gap:.2e}")
    return 0


def cmd_solve_dw(args: list[str]) -> int:
    positional, flags = _flags(args)

    if len(positional) != 1:
        print(USAGE)
        return 1

    instance = read_instance(positional[0])
    res = run_restricted_master_heuristic(
        instance,
        eps=_float_or_none(flags, "--eps"),
        kappa=_float_or_none(flags, "--kappa"),
        time_limit=_float_or_none(flags, "--budget-s"),
        verbose=True if "--verbose" in flags else None,
    )

    if "--trace" in flags:
        write_trace_csv(res.history, flags["--trace"])
        print(f"[cli] trace={flags['--trace']}")

    _write_outputs(instance, res.schedule, res.obj, flags)
    print(f"[cli] solve-dw done. obj={res.obj:.6g} xi={res.xi:.6g} iters={res.iterations}")
    return 0


def cmd_bench(args: list[str]) -> int:
    _, flags = _flags(args)

    if "--homes" not in flags or "--seeds" not in flags:
        print(USAGE)
        return 1

    methods = tuple(_csv_list(flags["--methods"])) if "--methods" in flags else METHODS
    extra = {}

    if "--eps" in flags:
        extra["eps"] = float(flags["--eps"])
    if "--appliances" in flags:
        extra["appliances"] = tuple(_csv_list(flags["--appliances"]))

    spec = ExperimentSpec(
        homes=_int_list(flags["--homes"]),
        seeds=_int_list(flags["--seeds"]),
        methods=methods,
        time_budget_s=float(flags.get("--budget-s", str(BENCH_CONFIG["time_budget_s"]))),
        output_dir=flags.get("--out", BENCH_CONFIG["output_dir"]),
        intervals=int(flags.get("--intervals", str(GEN_CONFIG["intervals"]))),
        export_profiles="--profiles" in flags,
        export_traces="--traces" in flags,
        **extra,
    )

    try:
        result = run_matrix(spec)
    except AuditError as exc:
        print(f"[cli] error=audit home={exc.home} tags={exc.tags} detail={exc}")
        return 2

    print(f"[cli] bench done. runs={result.paths['runs']} summary={result.paths['summary']}")
    return 0


def cmd_enumerate_wm(args: list[str]) -> int:
    report = wm_tightness_report()

    print(f"[cli] wm points={report['points']} starts={report['starts']}")

    for k, loads in enumerate(report["loads"]):
        print(f"[cli] wm point={'AB'[k] if k < 2 else k} p={loads}")

    print(
        f"[cli] wm fractional relaxed_violations={report['fractional_relaxed_violations']} "
        f"violations={report['fractional_violations']}"
    )
    print(
        f"[cli] wm mix alpha_status={report['alpha_status']} alpha={report['alpha']} "
        f"wall_s={report['wall_s']:.3f}"
    )

    tight = (
        report["points"] == 2
        and not report["fractional_relaxed_violations"]
        and report["integrality_tag"] in report["fractional_violations"]
        and math.isnan(report["alpha"])
    )
    return 0 if tight else 1


def cmd_export_profile(args: list[str]) -> int:
    positional, flags = _flags(args)

    if len(positional) != 1 or "--schedule" not in flags or "--out" not in flags:
        print(USAGE)
        return 1

    instance = read_instance(positional[0])
    schedule = read_schedule_csv(instance, flags["--schedule"])
    export_load_profile(instance, schedule, flags["--out"])
    stats = profile_sparsity(instance, schedule)

    print(
        f"[cli] export-profile done. out={flags['--out']} obj={objective_value(instance, schedule):.6g} "
        f"zero_fraction={stats['zero_fraction']:.3f}"
    )
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "solve-central": cmd_solve_central,
    "solve-dw": cmd_solve_dw,
    "bench": cmd_bench,
    "enumerate-wm": cmd_enumerate_wm,
    "export-profile": cmd_export_profile,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv

    if not argv or argv[0] not in COMMANDS:
        print(USAGE)
        return 1

    try:
        return COMMANDS[argv[0]](argv[1:])
    except InstanceFormatError as exc:
        print(f"[cli] error=instance_format path={'.'.join(map(str, exc.path))} detail={exc}")
    except AuditError as exc:
        print(f"[cli] error=audit home={exc.home} tags={exc.tags} detail={exc}")
    except SolverError as exc:
        print(f"[cli] error=solver detail={exc}")
    except ValueError as exc:
        print(f"[cli] error=usage detail={exc}")
        print(USAGE)

    return 1


if __name__ == "__main__":
    sys.exit(main())
