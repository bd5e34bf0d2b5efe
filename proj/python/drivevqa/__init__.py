"""Driving VQA prompting pipeline (C++ core)."""

from ._drivevqa import Error, context, ego_status, route, run, token_f1, vote

__all__ = ["Error", "context", "ego_status", "route", "run", "token_f1", "vote"]
