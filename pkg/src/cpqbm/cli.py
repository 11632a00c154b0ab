# -*- coding: utf-8 -*-
"""Console script for cpqbm."""
import os.path

import click
import fs.path
from fs.osfs import OSFS

from . import __version__
from .config import parse_config
from .run import EXIT_ERROR, RunOptions, check_compatible, compare_mode, run_all


# These functions exist so that we can patch them out when testing.
def get_config_fs(path):
    return OSFS(path)


def get_output_fs(path):
    return OSFS(path)


def scenario_options(func):
    options = [
        click.argument("config"),
        click.option("--jobs", default=1, type=click.IntRange(min=1),
                     help="Number of scenarios to run at the same time"),
        click.option("--override-brownian-limit", "override_brownian_limit", is_flag=True,
                     help="Run scenarios even when m/M is outside the Brownian limit"),
        click.option("--out-dir", default=".", envvar="CPQBM_OUT_DIR", show_envvar=True,
                     help="Directory for CSV and JSON output"),
        click.option("--verbose/--quiet", default=False, help="More verbose output"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


class ScenarioGroup(click.Group):
    """
    Command line usage errors exit with EXIT_ERROR. Status 2 is kept for runs
    aborted by truncation overflow.
    """
    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super(ScenarioGroup, self).make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as e:
            e.exit_code = EXIT_ERROR
            raise

    def invoke(self, ctx):
        try:
            return super(ScenarioGroup, self).invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_ERROR
            raise


@click.group(cls=ScenarioGroup, invoke_without_command=True)
@click.option("--version", "version", flag_value=True, help="Print version and exit")
@click.pass_context
def main(ctx, version):
    if version:
        click.echo("cpqbm {0}".format(__version__))
        return
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@main.command()
@scenario_options
def run(config, jobs, override_brownian_limit, out_dir, verbose):
    """
    Run every scenario in CONFIG.
    """
    scenarios, options = load(config, jobs, override_brownian_limit, out_dir, verbose)
    finish(run_all(scenarios, options))


@main.command()
@scenario_options
def compare(config, jobs, override_brownian_limit, out_dir, verbose):
    """
    Run the scenarios in CONFIG side by side and tabulate them.
    """
    scenarios, options = load(config, jobs, override_brownian_limit, out_dir, verbose)
    errors = check_compatible(scenarios)
    if errors:
        print_config_errors(errors)
        finish(EXIT_ERROR)
    finish(compare_mode(scenarios, options))


def load(config, jobs, override_brownian_limit, out_dir, verbose):
    config_fs = get_config_fs("/" if os.path.isabs(config) else ".")
    output_fs = get_output_fs("/" if os.path.isabs(out_dir) else ".")

    if not config_fs.exists(config) or not config_fs.isfile(config):
        fail("Config file '{0}' does not exist".format(config))
    if output_fs.exists(out_dir) and not output_fs.isdir(out_dir):
        fail("Output path '{0}' exists and is not a directory".format(out_dir))

    # Tabulated T-matrix files are looked up relative to the config file.
    config_dir = fs.path.dirname(config)
    data_fs = config_fs.opendir(config_dir) if config_dir else config_fs

    try:
        text = config_fs.readtext(config, encoding="utf-8")
    except UnicodeDecodeError:
        fail("Config file '{0}' is not valid UTF-8".format(config))
    scenarios, errors = parse_config(text, filename=config, fs=data_fs)
    if errors:
        print_config_errors(errors)
        finish(EXIT_ERROR)

    if not output_fs.exists(out_dir):
        output_fs.makedirs(out_dir)
    options = RunOptions(
        output_fs=output_fs,
        out_dir=out_dir,
        jobs=jobs,
        override_brownian_limit=override_brownian_limit,
        verbose=verbose,
    )
    return scenarios, options


def print_config_errors(errors):
    click.secho("Errors:\n", fg="red", bold=True)
    for err in errors:
        click.echo(err.display())


def fail(message):
    click.secho("Errors:\n", fg="red", bold=True)
    click.echo(message)
    finish(EXIT_ERROR)


def finish(status):
    click.get_current_context().exit(status)
