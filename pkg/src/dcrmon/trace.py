"""Transaction records and ordered replay of JSON-lines trace files.

A trace stands in for a live block subscription: one transaction object per
line, in (block_number, tx_index) order, each carrying its block timestamp.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional

from .abi import hex_to_bytes
from .errors import OrderingError, TraceParseError


class Status(str, Enum):
    SUCCESS = "success"
    REVERTED = "reverted"


@dataclass(frozen=True)
class Transaction:
    block_number: int
    tx_index: int
    hash: str
    sender: str
    to: Optional[str]
    input: bytes
    value: int
    status: Status
    timestamp: int

    @property
    def position(self):
        return (self.block_number, self.tx_index)

    @classmethod
    def from_dict(cls, d: dict) -> Transaction:
        return cls(
            block_number=_nonneg_int(d["block_number"], "block_number"),
            tx_index=_nonneg_int(d["tx_index"], "tx_index"),
            hash=_hex(d["hash"], "hash", 32),
            sender=_hex(d["from"], "from", 20),
            to=None if d.get("to") is None else _hex(d["to"], "to", 20),
            input=hex_to_bytes(d.get("input", "0x")),
            value=_wei(d.get("value", 0)),
            status=Status(d["status"]),
            timestamp=_nonneg_int(d["timestamp"], "timestamp"),
        )

    def to_dict(self) -> dict:
        return {
            "block_number": self.block_number,
            "tx_index": self.tx_index,
            "hash": self.hash,
            "from": self.sender,
            "to": self.to,
            "input": "0x" + self.input.hex(),
            "value": self.value,
            "status": self.status.value,
            "timestamp": self.timestamp,
        }


def _nonneg_int(v, name):
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
    return v


def _wei(v):
    if isinstance(v, str):
        v = int(v, 16) if v.startswith("0x") else int(v)
    return _nonneg_int(v, "value")


def _hex(v, name, size):
    raw = hex_to_bytes(v)
    if len(raw) != size:
        raise ValueError(f"{name} must be {size} bytes, got {len(raw)}")
    return v.lower()


class TraceSource:
    """Pull-based, single-reader stream of transactions."""

    def __init__(self, transactions: Iterable[Transaction]):
        self._it = iter(transactions)

    def __iter__(self) -> Iterator[Transaction]:
        return self

    def __next__(self) -> Transaction:
        return next(self._it)


def parse_trace_lines(lines: Iterable[str]) -> list[Transaction]:
    txs = []
    prev = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            tx = Transaction.from_dict(json.loads(line))
        except (ValueError, KeyError, TypeError) as exc:
            detail = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
            raise TraceParseError(lineno, detail) from None
        if prev is not None:
            if tx.position <= prev.position:
                raise OrderingError(lineno, f"block {tx.block_number} tx {tx.tx_index} does not follow "
                                            f"block {prev.block_number} tx {prev.tx_index}")
            if tx.timestamp < prev.timestamp:
                raise OrderingError(lineno, f"timestamp {tx.timestamp} goes back from {prev.timestamp}")
            if tx.block_number == prev.block_number and tx.timestamp != prev.timestamp:
                raise OrderingError(lineno, "transactions of one block carry different timestamps")
        txs.append(tx)
        prev = tx
    return txs


def read_trace(path) -> TraceSource:
    """Open a JSON-lines trace. The whole file is checked before the first record is yielded."""
    with open(path, encoding="utf-8") as fh:
        return TraceSource(parse_trace_lines(fh))


def write_trace(path, transactions: Iterable[Transaction]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tx in transactions:
            fh.write(json.dumps(tx.to_dict()) + "\n")


def filter_to_contract(source: Iterable[Transaction], address: str) -> TraceSource:
    address = address.lower()
    return TraceSource(tx for tx in source if tx.to is not None and tx.to == address)
