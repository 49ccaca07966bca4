from .cms import CmsDecision, cms_handle_command
from .ecosystem import Ecosystem, Notice
from .evcs import EvcsCommand, EvcsOutcome, evcs_apply_command, evcs_expire_grace, evcs_plug, evcs_unplug
from .explore import enumerate_reachable
from .model import (
    Classification, EcosystemTuple, LifecycleState, Occupancy, PolicyConfig, ProtocolMessage, Registry,
    SessionRecord, StationRecord, UserAccount, classify_tuple, register_entities,
)
from .world import AUDIT_HEADER, World

__all__ = [
    "CmsDecision", "cms_handle_command", "Ecosystem", "Notice", "EvcsCommand", "EvcsOutcome",
    "evcs_apply_command", "evcs_expire_grace", "evcs_plug", "evcs_unplug", "enumerate_reachable",
    "Classification", "EcosystemTuple", "LifecycleState", "Occupancy", "PolicyConfig", "ProtocolMessage",
    "Registry", "SessionRecord", "StationRecord", "UserAccount", "classify_tuple", "register_entities",
    "AUDIT_HEADER", "World",
]
