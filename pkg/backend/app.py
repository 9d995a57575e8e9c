"""
Synthetic Control Toolkit - Command-Line Entry Point
"""

import sys

import click

from shared.middleware.errors import handle_command_errors
from shared.middleware.logging import setup_logging
from shared.utils.config import load_command_config, load_settings

# Import service commands
from services.estimators.commands import estimate_command, robust_command
from services.inference.commands import placebo_command
from services.hull.commands import hull_command
from services.simulation.commands import simulate_command

COMMANDS = [
    estimate_command,
    placebo_command,
    hull_command,
    simulate_command,
    robust_command,
]


def create_cli():
    """
    Factory building the command group with every service command registered
    """

    @click.group(name="synthctl")
    @click.option("--config", "config_path", type=str, default=None, help="JSON file of per-command defaults")
    @click.option("--log-level", "log_level", type=str, default=None, help="Override LOG_LEVEL")
    @click.pass_context
    @handle_command_errors
    def cli(ctx, config_path, log_level):
        """Synthetic control estimation, inference and diagnostics"""
        settings = load_settings()
        if log_level:
            settings = settings.model_copy(update={"log_level": log_level.upper()})
        setup_logging(settings.log_level)

        if config_path:
            # flags given on the command line still win over these defaults
            ctx.default_map = load_command_config(config_path).default_map()
        ctx.obj = settings

    for command in COMMANDS:
        cli.add_command(command)
    return cli


def main():
    create_cli()(prog_name="synthctl")


if __name__ == "__main__":
    sys.exit(main())
