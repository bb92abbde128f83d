"""Collects one verdict per acceptance criterion for the terminal summary."""

import contextlib
import time

RESULTS = {}


@contextlib.contextmanager
def criterion(number, title, max_seconds=None):
    """Run the body as acceptance criterion ``number``; record PASS or FAIL.

    The runtime bound, when given, is part of the criterion.
    """
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if max_seconds is not None:
            assert elapsed < max_seconds, f"took {elapsed:.2f} s, bound is {max_seconds} s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        RESULTS[number] = ("FAIL", title, elapsed, f"{type(exc).__name__}: {exc}".splitlines()[0])
        raise
    RESULTS[number] = ("PASS", title, elapsed, "")


def summary_lines():
    lines = []
    for number in sorted(RESULTS):
        status, title, elapsed, why = RESULTS[number]
        line = f"criterion {number:2d}: {status}  {title}  ({elapsed:.2f} s)"
        if why:
            line += f"  [{why[:160]}]"
        lines.append(line)
    return lines
