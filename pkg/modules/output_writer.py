"""
Result files: comma-separated numeric tables with a '#'-prefixed comment header,
plus one JSON manifest per run.
"""

import io
import os
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from modules.checksum_utils import file_digest
from modules.core import TOOL_VERSION

logger = logging.getLogger(__name__)

DELIMITER = ','
FLOAT_FORMAT = '%.17g'


@dataclass
class Table:
    """Columns of one data file; every cell is numeric (NaN marks a missing value)."""
    name: str
    columns: List[str]
    rows: np.ndarray
    comments: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_records(cls, name: str, columns: Sequence[str], records: Sequence[Sequence[float]],
                     comments: Dict[str, str] = None) -> 'Table':
        rows = np.asarray(records, dtype=float).reshape(-1, len(columns))
        return cls(name, list(columns), rows, dict(comments or {}))

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def write_table(table: Table, output_dir: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, f"{table.name}.csv")
    with open(path, 'w', newline='\n') as f:
        for key, value in table.comments.items():
            f.write(f"# {key}: {value}\n")
        f.write(DELIMITER.join(table.columns) + '\n')
        if table.rows.size:
            np.savetxt(f, table.rows, fmt=FLOAT_FORMAT, delimiter=DELIMITER)
    logger.info(f"Wrote {table.rows.shape[0]} rows to {path}")
    return path


def read_table(path: str) -> Table:
    """Parse a file written by write_table."""
    comments, body = {}, []
    with open(path, 'r') as f:
        for line in f:
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition(':')
                comments[key.strip()] = value.strip()
            elif line.strip():
                body.append(line)
    columns = body[0].strip().split(DELIMITER)
    if len(body) > 1:
        rows = np.loadtxt(io.StringIO(''.join(body[1:])), delimiter=DELIMITER, ndmin=2)
    else:
        rows = np.empty((0, len(columns)))
    name = os.path.splitext(os.path.basename(path))[0]
    return Table(name, columns, rows, comments)


def write_manifest(output_dir: str, name: str, command: str, config: Dict,
                   data_files: List[str], tables: List[Table], results: Dict) -> str:
    """Sidecar JSON describing inputs, outputs and their digests."""
    files = []
    for path, table in zip(data_files, tables):
        entry = file_digest(path)
        entry['rows'] = int(table.rows.shape[0])
        entry['columns'] = table.columns
        files.append(entry)
    manifest = {
        'tool': 'seqcrypt',
        'version': TOOL_VERSION,
        'command': command,
        'config': config,
        'files': files,
        'results': results,
    }
    path = os.path.join(output_dir, f"{name}.manifest.json")
    with open(path, 'w') as f:
        json.dump(manifest, f, indent=4, sort_keys=True)
        f.write('\n')
    return path


def load_manifest(path: str) -> Dict:
    with open(path, 'r') as f:
        return json.load(f)


def emit_run(output_dir: str, name: str, command: str, config: Dict,
             tables: List[Table], results: Dict):
    """Write every table of a run, then its manifest. Returns (data paths, manifest path)."""
    paths = [write_table(table, output_dir) for table in tables]
    manifest = write_manifest(output_dir, name, command, config, paths, tables, results)
    return paths, manifest
