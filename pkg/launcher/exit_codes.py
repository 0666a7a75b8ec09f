"""Map outcomes to process exit codes

    0  ok
    1  parse error, bad value or failed study assertion
    2  infeasible parameters
    3  truncation budget exceeded
    4  linear solver did not converge
    5  invalid domain specification
"""

import functools
import sys

from heatlab.errors import HeatlabError


def exits_with_status(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            command(*args, **kwargs)
        except HeatlabError as e:
            print(f"[✗] {type(e).__name__}: {e}", file=sys.stderr)
            sys.exit(e.exit_code)
        except ValueError as e:
            print(f"[✗] {e}", file=sys.stderr)
            sys.exit(1)
        sys.exit(0)

    return wrapper
