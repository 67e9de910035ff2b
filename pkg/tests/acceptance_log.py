"""Per-criterion pass/fail bookkeeping for the acceptance suite."""
import contextlib
import time

RESULTS = {}


@contextlib.contextmanager
def criterion(number, title):
    start = time.monotonic()
    try:
        yield
    except BaseException as exc:
        detail = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        RESULTS.setdefault(number, []).append((False, title, detail, time.monotonic() - start))
        raise
    RESULTS.setdefault(number, []).append((True, title, "", time.monotonic() - start))


def lines():
    out = []
    for n in sorted(RESULTS):
        parts = RESULTS[n]
        ok = all(p[0] for p in parts)
        title = "; ".join(p[1] for p in parts)
        why = "; ".join(p[2] for p in parts if not p[0])
        secs = sum(p[3] for p in parts)
        out.append(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title} ({secs:.1f}s)"
                   + (f"  -- {why}" if why else ""))
    return out
