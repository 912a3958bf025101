"""Experiment orchestration: metrics, CSV output, figure reproduction, CLI."""

from . import metrics, reproduce, snapshots

__all__ = ["metrics", "reproduce", "snapshots"]
