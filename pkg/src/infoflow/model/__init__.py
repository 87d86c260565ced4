from infoflow.model.definitions import (
    AccessControlList,
    ElementMapping,
    HttpXmlRuleDecl,
    KeyParam,
    PresentationColumn,
    Principal,
    RelationalRuleDecl,
    ResourceDescriptor,
    ServiceDefinition,
    Transform,
    UpdateSpec,
    Violation,
    check_access,
    validate_service_definition,
)
from infoflow.model.registry import Registry, load_registry
from infoflow.model.values import NULL, Column, Table, Value, decode_value, encode_value

__all__ = [
    "NULL",
    "AccessControlList",
    "Column",
    "ElementMapping",
    "HttpXmlRuleDecl",
    "KeyParam",
    "PresentationColumn",
    "Principal",
    "Registry",
    "RelationalRuleDecl",
    "ResourceDescriptor",
    "ServiceDefinition",
    "Table",
    "Transform",
    "UpdateSpec",
    "Value",
    "Violation",
    "check_access",
    "decode_value",
    "encode_value",
    "load_registry",
    "validate_service_definition",
]
