from infoflow.connectors.httpxml import fetch_http
from infoflow.connectors.relational import fetch_relational
from infoflow.connectors.rules import HttpXmlRule, RelationalRule, TabularRule, UpdateRow
from infoflow.connectors.tabular import fetch_tabular
from infoflow.connectors.update import apply_update

__all__ = [
    "HttpXmlRule",
    "RelationalRule",
    "TabularRule",
    "UpdateRow",
    "apply_update",
    "fetch_http",
    "fetch_relational",
    "fetch_tabular",
]
