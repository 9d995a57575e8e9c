"""
Shared Command-Line Options and Output Helpers
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import click
import pandas as pd

logger = logging.getLogger(__name__)

METHOD_CHOICES = ["osc", "esc", "psc", "nsc"]


def panel_options(f):
    """--data, --treated, --t0, --predictors, --match, --standardize"""
    options = [
        click.option("--data", "data", type=str, help="Wide outcome CSV (unit,<t1>,...,<tT>)"),
        click.option("--treated", type=str, help="Treated unit label"),
        click.option(
            "--t0",
            "t0",
            type=str,
            help="First treated period label, or pretreatment count when no label matches",
        ),
        click.option("--predictors", type=str, default=None, help="Wide predictor CSV"),
        click.option(
            "--match",
            type=click.Choice(["outcomes", "predictors", "both"]),
            default="outcomes",
            show_default=True,
            help="Matching variables",
        ),
        click.option("--standardize", is_flag=True, default=False, help="Scale matching columns"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def method_options(f):
    """--method, --a-star, --b-star, --cv"""
    options = [
        click.option(
            "--method",
            type=click.Choice(METHOD_CHOICES, case_sensitive=False),
            default="nsc",
            show_default=True,
        ),
        click.option("--a-star", "a_star", type=str, default="auto", show_default=True),
        click.option("--b-star", "b_star", type=str, default="auto", show_default=True),
        click.option(
            "--cv",
            type=click.Choice(["controls", "pretreat"]),
            default="controls",
            show_default=True,
            help="Cross-validation scheme for auto tuning",
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def parse_star(value) -> Optional[float]:
    """'auto' -> None, otherwise a float"""
    if value is None or str(value).strip().lower() == "auto":
        return None
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"tuning value must be a number in [0, 1] or 'auto', got {value!r}") from None


def require(**values):
    """Fail when an option that is optional at parse time is missing"""
    missing = [name for name, value in values.items() if value in (None, "")]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        raise ValueError(f"missing required option(s): {flags}")


def ensure_out_dir(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


def write_json(path: str, payload: Dict[str, Any]):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    logger.info(f"Wrote {path}")


def write_csv(path: str, frame: pd.DataFrame):
    frame.to_csv(path, index=False, float_format="%.10g", na_rep="")
    logger.info(f"Wrote {path}")
