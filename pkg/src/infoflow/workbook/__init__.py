from infoflow.workbook.address import CellAddress
from infoflow.workbook.engine import Workbook

__all__ = ["CellAddress", "Workbook"]
