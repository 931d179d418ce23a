import argparse

import pandas as pd

from tollsub.cli.deps import add_common, add_sensitivity, emit, load_config, load_instances, sweep_header
from tollsub.core.errors import UsageError
from tollsub.usecase.certificate import EquilibriumResult
from tollsub.usecase.experiments import solve_instance
from tollsub.usecase.incentives import parse_mechanism


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="optimal and Nash flows of one instance")
    parser.add_argument("--instance", action="append", help="instance file")
    parser.add_argument("--mech", help="mechanism string, e.g. none, mc, toll:β=0.5")
    add_sensitivity(parser)
    add_common(parser)
    parser.set_defaults(handler=run)


def _format_flow(result: EquilibriumResult) -> str:
    return " ".join(f"{pid}={mass:.9f}" for pid, mass in result.flow.as_dict().items())


def run(args: argparse.Namespace) -> int:
    config = load_config(args, "solve")
    instances = load_instances(config)
    if len(instances) != 1:
        raise UsageError("solve takes exactly one --instance; use `poa` for families")
    mechanism = parse_mechanism(config.MECH) if config.MECH else None
    outcome = solve_instance(instances[0], mechanism, config.RESTARTS, config.SEED)
    report, nash, optimal = outcome.report, outcome.nash, outcome.optimal

    print(f"instance: {report.instance_id}")
    print(f"mechanism: {report.mechanism}")
    print(f"optimal flow: {_format_flow(optimal)}")
    print(f"optimal latency: {optimal.total_latency:.9f} (gap {optimal.vi_gap:.3e})")
    print(f"nash flow: {_format_flow(nash)}")
    if len(nash.class_flows) > 1:
        for cls, cf in zip(outcome.instance.sensitivity.classes, nash.class_flows):
            shares = " ".join(f"{pid}={m:.9f}" for pid, m in cf.as_dict().items())
            print(f"  class s={cls.s:g} mass={cls.mass:g}: {shares}")
    print(f"nash latency: {nash.total_latency:.9f} (gap {nash.vi_gap:.3e})")
    print(f"PoA: {report.poa:.9f}")
    print(f"certified: {report.certified} lower_bound: {report.lower_bound} fully_utilized: {report.fully_utilized}")
    if nash.negative_cost:
        print("note: some equilibrium path costs are negative")

    if config.OUT:
        row = report.row()
        row.update({f"nash[{k}]": v for k, v in nash.flow.as_dict().items()})
        row.update({f"opt[{k}]": v for k, v in optimal.flow.as_dict().items()})
        emit(pd.DataFrame([row]), config, sweep_header(config, "solve"))
    return 0
