"""
Ratio Report Module
Named tables of exact counts and diagnostic ratios with CSV, JSON and Excel export
"""
import io
import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional

import pandas as pd

from . import __version__
from .errors import InvalidArgumentError

_INT_PATTERN = re.compile(r'^[+-]?\d+$')
_NON_FINITE = {'nan': math.nan, 'inf': math.inf, '-inf': -math.inf}

SUPPORTED_FORMATS = ('csv', 'json', 'xlsx')


def _cell_to_text(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _text_to_cell(text: str) -> Any:
    if _INT_PATTERN.match(text):
        return int(text)
    if text in ('true', 'false'):
        return text == 'true'
    try:
        return float(text)
    except ValueError:
        return text


def _cell_to_json(value: Any) -> Any:
    # exact integers travel as decimal strings; non-finite floats as their text form
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def _json_to_cell(value: Any) -> Any:
    if isinstance(value, str):
        if _INT_PATTERN.match(value):
            return int(value)
        if value in _NON_FINITE:
            return _NON_FINITE[value]
    return value


def atomic_write(path: str, writer: Callable[[str], None]) -> str:
    """Call writer(temp_path) in the target directory, then rename over path"""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    # keep the extension; the Excel writer validates it
    handle, temp_name = tempfile.mkstemp(dir=directory, suffix='.tmp' + os.path.splitext(path)[1])
    os.close(handle)
    try:
        writer(temp_name)
        os.replace(temp_name, path)
    except Exception:
        if os.path.exists(temp_name):
            os.remove(temp_name)
        raise
    return path


def atomic_write_text(path: str, text: str) -> str:
    """UTF-8 text with LF line endings, written atomically"""
    def write_text(temp_name: str) -> None:
        with open(temp_name, 'w', encoding='utf-8', newline='') as out:
            out.write(text)
    return atomic_write(path, write_text)


def default_metadata(**extra: Any) -> Dict[str, Any]:
    """Metadata block every report starts from"""
    metadata = {
        'generated_at': datetime.now(timezone.utc).isoformat(timespec='seconds'),
        'tool_version': __version__,
    }
    metadata.update(extra)
    return metadata


@dataclass
class RatioReport:
    """A named table whose rows carry a value for every column"""

    name: str
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=default_metadata)

    def add_row(self, **values: Any) -> None:
        """Append a row; every column must be present and no others"""
        missing = [column for column in self.columns if column not in values]
        extra = [key for key in values if key not in self.columns]
        if missing or extra:
            raise InvalidArgumentError(
                f"Row for report '{self.name}' does not match its columns "
                f"(missing: {missing}, unexpected: {extra})"
            )
        self.rows.append({column: values[column] for column in self.columns})

    def column(self, name: str) -> List[Any]:
        """Values of one column in row order"""
        return [row[name] for row in self.rows]

    def to_frame(self) -> pd.DataFrame:
        """Text-valued DataFrame; exact integers and float reprs survive unchanged"""
        data = [[_cell_to_text(row[column]) for column in self.columns] for row in self.rows]
        return pd.DataFrame(data, columns=self.columns, dtype=object)

    def to_csv(self) -> str:
        """Header row, UTF-8, LF line endings, '.' decimal separator"""
        return self.to_frame().to_csv(index=False, lineterminator='\n')

    def to_json(self) -> str:
        return json.dumps({
            'name': self.name,
            'columns': self.columns,
            'metadata': {key: _cell_to_json(value) for key, value in self.metadata.items()},
            'rows': [{column: _cell_to_json(row[column]) for column in self.columns} for row in self.rows],
        }, indent=2)

    def to_xlsx(self, path: str) -> None:
        """Excel export through pandas/openpyxl; cells are written as text to keep big integers exact"""
        with pd.ExcelWriter(path, engine='openpyxl') as writer:
            self.to_frame().to_excel(writer, sheet_name=self.name[:31] or 'report', index=False)

    def render(self, format_type: str) -> str:
        """
        Serialize to text in the given format

        Args:
            format_type: One of 'csv', 'json'

        Returns:
            Serialized report
        """
        format_map = {
            'csv': self.to_csv,
            'json': self.to_json,
        }
        formatter = format_map.get(format_type.lower())
        if not formatter:
            raise InvalidArgumentError(
                f"Unsupported format: {format_type}. Supported formats: {', '.join(format_map.keys())}")
        return formatter()

    def write(self, path: str, format_type: Optional[str] = None) -> str:
        """
        Write the report atomically (temp file in the target directory, then rename)

        Args:
            path: Destination file
            format_type: 'csv', 'json' or 'xlsx'; inferred from the extension when omitted

        Returns:
            The path written
        """
        format_type = (format_type or os.path.splitext(path)[1].lstrip('.') or 'csv').lower()
        if format_type not in SUPPORTED_FORMATS:
            raise InvalidArgumentError(
                f"Unsupported format: {format_type}. Supported formats: {', '.join(SUPPORTED_FORMATS)}")
        if format_type == 'xlsx':
            return atomic_write(path, self.to_xlsx)
        text = self.render(format_type)
        return atomic_write_text(path, text)

    @classmethod
    def from_csv(cls, text: str, name: str, metadata: Optional[Dict[str, Any]] = None) -> 'RatioReport':
        """Parse CSV written by to_csv(); CSV carries no metadata, so it may be supplied"""
        frame = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        columns = list(frame.columns)
        rows = [{column: _text_to_cell(record[column]) for column in columns}
                for record in frame.to_dict('records')]
        return cls(name=name, columns=columns, rows=rows, metadata=dict(metadata or {}))

    @classmethod
    def from_json(cls, text: str) -> 'RatioReport':
        payload = json.loads(text)
        columns = payload['columns']
        rows = [{column: _json_to_cell(record[column]) for column in columns} for record in payload['rows']]
        metadata = {key: _json_to_cell(value) for key, value in payload.get('metadata', {}).items()}
        return cls(name=payload['name'], columns=columns, rows=rows, metadata=metadata)
