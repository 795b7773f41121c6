"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

from __future__ import annotations

LINES: list[str] = []


def report(number: int, ok: bool, title: str, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    LINES.append(line)
    print(line)
