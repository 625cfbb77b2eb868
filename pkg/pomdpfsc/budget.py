"""Wall-clock deadlines and cooperative cancellation.

Long-running phases poll a :class:`Deadline` between atomic work units; a
phase may therefore overrun its allotment by one unit.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Optional


class CancellationToken:
    """Thread-safe flag that makes every deadline sharing it expire."""

    def __init__(self) -> None:
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()


@dataclass(frozen=True)
class Deadline:
    """Absolute monotonic-clock deadline; ``expires_at=None`` never expires."""

    expires_at: Optional[float] = None
    token: Optional[CancellationToken] = field(default=None, compare=False)

    @staticmethod
    def after(seconds: Optional[float], token: Optional[CancellationToken] = None) -> "Deadline":
        if seconds is None:
            return Deadline(None, token)
        return Deadline(time.monotonic() + max(0.0, float(seconds)), token)

    @staticmethod
    def never() -> "Deadline":
        return Deadline(None)

    def expired(self) -> bool:
        if self.token is not None and self.token.cancelled:
            return True
        return self.expires_at is not None and time.monotonic() >= self.expires_at

    def remaining(self) -> float:
        if self.token is not None and self.token.cancelled:
            return 0.0
        if self.expires_at is None:
            return float("inf")
        return max(0.0, self.expires_at - time.monotonic())

    def sooner(self, seconds: Optional[float]) -> "Deadline":
        """The earlier of this deadline and ``seconds`` from now, sharing the token."""
        other = Deadline.after(seconds, self.token)
        if other.expires_at is None:
            return self
        if self.expires_at is None or other.expires_at < self.expires_at:
            return other
        return self


class Stopwatch:
    def __init__(self) -> None:
        self._start = time.monotonic()

    def elapsed_ms(self) -> float:
        return (time.monotonic() - self._start) * 1000.0
