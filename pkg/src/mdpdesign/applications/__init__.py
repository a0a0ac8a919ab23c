"""Builders turning application configs into :class:`DesignMdpInstance` objects."""

from .common import DEFAULT_STATE_CAP, SizeError, load_config
from .inventory import build_inventory_instance
from .queueing import build_queue_instance, server_counts
from .reliability import build_reliability_instance

BUILDERS = {
    "reliability": build_reliability_instance,
    "inventory": build_inventory_instance,
    "queue": build_queue_instance,
}

__all__ = [
    "BUILDERS", "DEFAULT_STATE_CAP", "SizeError", "build_inventory_instance", "build_queue_instance",
    "build_reliability_instance", "load_config", "server_counts",
]
