"""Lock-free concurrent sets with linearizable snapshot iteration."""
from snapiter.core import ContractViolation, NodeHandle, mark_node, sequential_cursor
from snapiter.framework import ConcurrentSet, contains, delete, insert, iterate, try_report
from snapiter.hashset import HashSet
from snapiter.snapcollector import Registry, SnapCollector
from snapiter.ubst import UBST

__all__ = [
    "ConcurrentSet",
    "ContractViolation",
    "HashSet",
    "NodeHandle",
    "Registry",
    "SnapCollector",
    "UBST",
    "contains",
    "delete",
    "insert",
    "iterate",
    "mark_node",
    "sequential_cursor",
    "try_report",
]
