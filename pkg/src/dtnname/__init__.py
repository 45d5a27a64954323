"""Attribute-value naming and STEM/FLOOD geographic routing for delay-tolerant networks."""

from .bundle import (
    Bundle,
    MetadataExtensionBlock,
    RoutingState,
    decode,
    encapsulate,
    encode,
    extract_predicate,
    is_expired,
)
from .geo import GeoPoint, WithinPredicate, distance, within
from .nametree import NameRecord, NameTree
from .node import Action, NodeState, RoutingDecision
from .scenario import Scenario, load_scenario, parse_scenario
from .simulator import Metrics, World
from .specifier import AvPair, NameSpecifier, matches, parse, serialize

__version__ = "0.1.0"

__all__ = [
    "Action", "AvPair", "Bundle", "GeoPoint", "MetadataExtensionBlock", "Metrics",
    "NameRecord", "NameSpecifier", "NameTree", "NodeState", "RoutingDecision",
    "RoutingState", "Scenario", "WithinPredicate", "World", "decode", "distance",
    "encapsulate", "encode", "extract_predicate", "is_expired", "load_scenario",
    "matches", "parse", "parse_scenario", "serialize", "within",
]
