from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BcpEstimate:
    value: float
    method: str
    stderr: float | None = None


@dataclass(frozen=True)
class ArlEstimate:
    """Expected index of the first standardized sum at or above the threshold."""

    value: float
    method: str
    stderr: float | None = None
    # half-width of a 95% interval over independent seed groups (glaz only)
    half_width: float | None = None
