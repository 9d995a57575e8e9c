"""
Command Error Handling Middleware
"""

import logging
from functools import wraps

import click

from shared.models.errors import SynthControlError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _fail(code: int, code_name: str, message: str):
    # one line, machine-parseable
    click.echo(f"error: {code_name}: {' '.join(str(message).split())}", err=True)
    raise SystemExit(code)


def handle_command_errors(f):
    """
    Decorator mapping toolkit exceptions to exit codes
    """

    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except SynthControlError as e:
            logger.debug(f"{f.__name__} failed: {e}")
            _fail(e.exit_code, e.code_name, str(e))
        except OSError as e:
            logger.debug(f"{f.__name__} I/O error: {e}")
            _fail(EXIT_IO, "io", str(e))
        except ValueError as e:
            logger.debug(f"{f.__name__} invalid input: {e}")
            _fail(EXIT_VALIDATION, "validation", str(e))

    return decorated_function
