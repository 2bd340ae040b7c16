"""Criterion outcomes collected during a run, printed by the conftest hook."""
RESULTS: dict = {}


def record(number: int, ok: bool, detail: str) -> None:
    RESULTS[number] = (ok, detail)


def lines() -> list:
    return [f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
            for n, (ok, detail) in sorted(RESULTS.items())]
