"""Key-parameterized information services over XML/HTTP, with a workbook
engine that binds spreadsheet cells to them."""

__version__ = "0.1.0"
