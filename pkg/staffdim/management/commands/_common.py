from __future__ import annotations

from contextlib import contextmanager

from django.core.management.base import CommandError
from pydantic import ValidationError

from staffdim.exceptions import StaffdimError


@contextmanager
def reported_errors():
    """Turn library errors into command errors (exit status 1, message on stderr)."""
    try:
        yield
    except StaffdimError as exc:
        raise CommandError(str(exc)) from exc
    except ValidationError as exc:
        raise CommandError(f"invalid arguments: {exc}") from exc


def add_instance_arguments(parser, scenarios: bool = True) -> None:
    parser.add_argument("--instance", required=True, help="Instance JSON file.")
    if scenarios:
        parser.add_argument("--scenarios", required=True, help="Scenario bundle JSON file.")


def add_solver_arguments(parser, time_limit: float, threads: int) -> None:
    parser.add_argument(
        "--time-limit",
        type=float,
        default=time_limit,
        help="Seconds per slave call; 0 or less disables the limit.",
    )
    parser.add_argument("--threads", type=int, default=threads, help="Worker processes for the requirement matrix.")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar.")
