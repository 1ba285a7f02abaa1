"""Headless multi-client test rig: scripted clients, network shaping,
scenario assertions, and event-log replay."""

from .client import SyntheticClient
from .replay import CorruptLog, load_event_log, replay
from .scenario import (
    AssertionFailed,
    ScenarioReport,
    ScenarioTimeout,
    avatar_error,
    bundled_scenario_path,
    load_scenario,
    parse_metrics,
    quat_distance,
    run_scenario,
    transform_error,
)
from .shaper import NetworkShaper

__all__ = [
    "AssertionFailed", "CorruptLog", "NetworkShaper", "ScenarioReport",
    "ScenarioTimeout", "SyntheticClient", "avatar_error", "bundled_scenario_path",
    "load_event_log", "load_scenario", "parse_metrics", "quat_distance",
    "replay", "run_scenario", "transform_error",
]
