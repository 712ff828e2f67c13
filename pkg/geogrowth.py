import logging
import sys

from rich.table import Table

from data.run_config import COMMANDS, AccountingConfig, BootstrapConfig, EstimationConfig, InputConfig, \
    MeasureConfig, SimulationConfig
from pipeline.manifest import FileManifestLogger
from pipeline.runner import GeoGrowthRunner
from util.errors import GeoGrowthError
from util.hf_argparser import HfArgumentParser
from util.rich_console import console, setup_logging
from util.time_measure import TimeMeasure

_logger = logging.getLogger("geogrowth")


def create_parser() -> HfArgumentParser:
    return HfArgumentParser(
        (InputConfig, MeasureConfig, EstimationConfig, BootstrapConfig, AccountingConfig, SimulationConfig),
        commands=COMMANDS, prog="geogrowth",
        description="geopolitical relation measures and their growth effects")


def seed_for(command: str, boot_conf: BootstrapConfig, sim_conf: SimulationConfig):
    if command == "bootstrap":
        return boot_conf.seed
    if command == "simulate":
        return sim_conf.sim_seed
    return None


def print_outputs(paths):
    table = Table(title="written files")
    table.add_column("#", justify="right")
    table.add_column("path")
    for i, path in enumerate(paths, start=1):
        table.add_row(str(i), path)
    console.print(table)


def main(argv=None) -> int:
    setup_logging("INFO")
    try:
        parser = create_parser()
        input_conf: InputConfig
        measure_conf: MeasureConfig
        est_conf: EstimationConfig
        boot_conf: BootstrapConfig
        acc_conf: AccountingConfig
        sim_conf: SimulationConfig
        input_conf, measure_conf, est_conf, boot_conf, acc_conf, sim_conf, args = \
            parser.parse_args_into_dataclasses(argv)
        setup_logging(input_conf.log_level)

        configs = [input_conf, measure_conf, est_conf, boot_conf, acc_conf, sim_conf]
        manifest = FileManifestLogger(input_conf.output_dir, args.command, configs,
                                      seed=seed_for(args.command, boot_conf, sim_conf))
        runner = GeoGrowthRunner(input_conf, measure_conf, est_conf, boot_conf, acc_conf, sim_conf, manifest)

        tm = TimeMeasure.default()
        written = runner.run(args.command)
    except GeoGrowthError as e:
        _logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code

    print_outputs(written)
    if input_conf.show_timing:
        for line in tm.report():
            console.print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
