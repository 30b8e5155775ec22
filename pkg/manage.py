#!/usr/bin/env python
"""Command-line entry point for the staffing solver (gen, solve, report, ...)."""
import os
import sys


def main():
    """Run a management command."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'hhc_staffing.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the requirements "
            "(pip install -r requirements.txt) inside an activated virtual environment."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
