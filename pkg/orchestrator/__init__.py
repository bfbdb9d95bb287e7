"""Orchestrator module."""
from .config import RunManifest, Settings, load_config
from .orchestrator import Orchestrator

__all__ = ["Orchestrator", "RunManifest", "Settings", "load_config"]
