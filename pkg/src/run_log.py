"""Line-delimited JSON records for training and evolution logs."""

import json
import math
from typing import Dict, List, Optional


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if hasattr(value, 'item'):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def encode_record(record: Dict) -> str:
    return json.dumps(_plain(record), sort_keys=True)


class JsonLinesWriter:
    """Append records to a file (one JSON object per line) and keep them in memory."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.records: List[Dict] = []
        if path is not None:
            open(path, 'w', encoding='utf-8').close()

    def write(self, record: Dict) -> None:
        self.records.append(record)
        if self.path is None:
            return
        with open(self.path, 'a', encoding='utf-8') as handle:
            handle.write(encode_record(record) + '\n')

    def lines(self) -> List[str]:
        return [encode_record(record) for record in self.records]


def read_records(path: str) -> List[Dict]:
    with open(path, 'r', encoding='utf-8') as handle:
        return [json.loads(line) for line in handle if line.strip()]
