"""Extraction rules (one grammar per resource kind) and update rows.

Rules carry typed output columns so every connector can hand back a fully
typed Table regardless of how the source represents values.
"""

from __future__ import annotations

from dataclasses import dataclass

from infoflow.model.values import Column, Value


@dataclass(frozen=True)
class TabularRule:
    """CSV projection plus column == :param equality filters."""

    projection: tuple[Column, ...]
    filter: tuple[tuple[str, str], ...] = ()  # (source column, param name)


@dataclass(frozen=True)
class RelationalRule:
    """SQL template with named :param placeholders and expected output columns."""

    template: str
    columns: tuple[Column, ...]


@dataclass(frozen=True)
class HttpXmlRule:
    """URL template with {param} slots; row-path selects repeated row elements."""

    url_template: str
    row_path: str
    fields: tuple[tuple[str, str, str], ...]  # (output column, child element, type)


@dataclass
class UpdateRow:
    key_values: dict[str, Value]
    new_values: dict[str, Value]

    def __post_init__(self):
        overlap = set(self.key_values) & set(self.new_values)
        if overlap:
            raise ValueError(f"key and new-value columns overlap: {sorted(overlap)}")
