"""Batch processing of independent solves (battery types, IGDT points)."""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Sequence
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any

import typer
from rich.progress import track

logger = logging.getLogger(__name__)

ENV_THREADS_VAR = "GRIDVEST_THREADS"


@dataclass
class BatchItem:
    key: str
    status: str  # "success" or "failed"
    value: Any = None
    error: str | None = None


@dataclass
class BatchResult:
    """Results from batch processing operations, in submission order."""

    processed: int
    successful: int
    failed: int
    details: list[BatchItem]


def resolve_workers(requested: int | None, items: int) -> int:
    """Worker count: the request (or CPU count), capped by ``GRIDVEST_THREADS`` and the item count."""
    workers = requested or os.cpu_count() or 1
    env_value = os.environ.get(ENV_THREADS_VAR)
    if env_value:
        try:
            cap = int(env_value)
        except ValueError:
            raise typer.BadParameter(f"{ENV_THREADS_VAR} must be an integer, got '{env_value}'") from None
        if cap < 1:
            raise typer.BadParameter(f"{ENV_THREADS_VAR} must be at least 1, got {cap}")
        workers = min(workers, cap)
    return max(1, min(workers, items))


def _run_item(func: Callable[..., Any], args: tuple[Any, ...]) -> tuple[str, Any]:
    # Exceptions are flattened to text: custom error types don't survive pickling.
    try:
        return "success", func(*args)
    except Exception as e:
        message = getattr(e, "message", None) or str(e)
        details = getattr(e, "details", None)
        text = f"{type(e).__name__}: {message}"
        return "failed", f"{text} ({details})" if details else text


def process_batch(
    func: Callable[..., Any],
    items: Sequence[tuple[str, tuple[Any, ...]]],
    description: str = "Processing...",
    max_workers: int | None = None,
) -> BatchResult:
    """Run ``func(*args)`` for every ``(key, args)`` item, capturing failures per item.

    Results keep submission order whatever the worker count.
    """
    workers = resolve_workers(max_workers, len(items))
    outcomes: list[tuple[str, Any]] = []

    if workers == 1:
        for _, args in track(items, description=description, transient=True):
            outcomes.append(_run_item(func, args))
    else:
        logger.info("Running %d items on %d worker processes", len(items), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures: list[Future[tuple[str, Any]]] = [pool.submit(_run_item, func, args) for _, args in items]
            for future in track(futures, description=description, transient=True):
                outcomes.append(future.result())

    details = [
        BatchItem(key, status, value=payload if status == "success" else None, error=None if status == "success" else payload)
        for (key, _), (status, payload) in zip(items, outcomes, strict=True)
    ]
    successful = sum(1 for d in details if d.status == "success")
    return BatchResult(
        processed=len(details), successful=successful, failed=len(details) - successful, details=details
    )
