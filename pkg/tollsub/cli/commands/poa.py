import argparse

import pandas as pd

from tollsub.cli.deps import add_common, add_sensitivity, emit, load_config, load_instances, sweep_header
from tollsub.usecase.incentives import parse_mechanism
from tollsub.usecase.poa import poa_family


def register(subparsers) -> None:
    parser = subparsers.add_parser("poa", help="price of anarchy of an instance or a family of instances")
    parser.add_argument("--instance", action="append", help="instance file; repeat for a family")
    parser.add_argument("--mech", help="mechanism applied to every member; omitted keeps file incentives")
    add_sensitivity(parser)
    add_common(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_config(args, "poa")
    instances = load_instances(config)
    mechanism = parse_mechanism(config.MECH) if config.MECH else None
    report = poa_family(instances, mechanism, config.RESTARTS, config.SEED, workers=config.WORKERS)

    print(f"PoA: {report.poa:.9f}")
    print(f"argmax: {report.instance_id} ({report.family_size} members, {report.excluded} excluded)")
    print(f"nash latency: {report.nash_latency:.9f} optimal latency: {report.opt_latency:.9f}")
    print(f"vi gap: {report.vi_gap:.3e} certified: {report.certified} lower_bound: {report.lower_bound}")

    if config.OUT:
        row = report.row()
        row.update({"family_size": report.family_size, "excluded": report.excluded})
        emit(pd.DataFrame([row]), config, sweep_header(config, "poa"))
    return 0
