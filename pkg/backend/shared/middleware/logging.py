"""
Logging Configuration
"""

import logging
import time


def setup_logging(level: str = "WARNING"):
    """
    Configure toolkit logging; records go to stderr so stdout stays a one-line summary
    """
    log_level = getattr(logging, level.upper(), logging.WARNING)

    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        force=True,
    )

    # Suppress verbose logs from libraries
    logging.getLogger("joblib").setLevel(logging.WARNING)


class StructuredLogger:
    """
    Structured logger for consistent log formatting
    """

    def __init__(self, name):
        self.logger = logging.getLogger(name)

    def log_event(self, level, event_type, message, **kwargs):
        """
        Log structured event with additional context
        """
        log_data = {
            "event_type": event_type,
            "message": message,
            "timestamp": time.time(),
            **kwargs,
        }

        self.logger.log(level, log_data)

    def log_solver_run(self, method, n_donors, iterations, objective, unique):
        """
        Log one weight solve
        """
        self.log_event(
            logging.DEBUG,
            "solver_run",
            f"{method} weights solved",
            n_donors=n_donors,
            iterations=iterations,
            objective=objective,
            unique=unique,
        )

    def log_study_progress(self, setting, param_set, completed, failed=0):
        """
        Log Monte Carlo progress for one parameter set
        """
        self.log_event(
            logging.INFO,
            "study_progress",
            f"setting {setting}: parameter set {param_set} done",
            completed=completed,
            failed=failed,
        )
