"""Keccak-256, function selectors and static-type calldata decoding.

Only the static ABI types ``uint256``, ``address``, ``bool`` and ``bytes32``
are supported: every argument is exactly one 32-byte word.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .errors import LengthMismatch, MalformedWord, SelectorMismatch, UnsupportedType

_MASK = (1 << 64) - 1


def _round_constants():
    # LFSR x^8 + x^6 + x^5 + x^4 + 1 from the Keccak reference
    out, r = [], 1
    for _ in range(24):
        rc = 0
        for j in range(7):
            if r & 1:
                rc |= 1 << ((1 << j) - 1)
            r = ((r << 1) ^ 0x71) & 0xFF if r & 0x80 else r << 1
        out.append(rc)
    return out


def _rotation_offsets():
    rot = [[0] * 5 for _ in range(5)]
    x, y = 1, 0
    for t in range(24):
        rot[x][y] = ((t + 1) * (t + 2) // 2) % 64
        x, y = y, (2 * x + 3 * y) % 5
    return rot


_RC = _round_constants()
_ROT = _rotation_offsets()
# flattened pi/rho schedule: lane (x, y) moves to (y, 2x + 3y) rotated by _ROT[x][y]
_PI = [(x + 5 * y, y + 5 * ((2 * x + 3 * y) % 5), _ROT[x][y]) for x in range(5) for y in range(5)]


def _keccak_f(a):
    for rc in _RC:
        c = [a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20] for x in range(5)]
        d = [c[(x - 1) % 5] ^ (((c[(x + 1) % 5] << 1) | (c[(x + 1) % 5] >> 63)) & _MASK)
             for x in range(5)]
        for i in range(25):
            a[i] ^= d[i % 5]
        b = [0] * 25
        for src, dst, r in _PI:
            v = a[src]
            b[dst] = ((v << r) | (v >> (64 - r))) & _MASK if r else v
        for y in range(0, 25, 5):
            row = b[y:y + 5]
            for x in range(5):
                a[y + x] = row[x] ^ ((~row[(x + 1) % 5]) & row[(x + 2) % 5])
        a[0] ^= rc
    return a


def keccak(data: bytes, *, rate: int = 136, out_len: int = 32, pad: int = 0x01) -> bytes:
    """Keccak sponge over Keccak-f[1600].

    ``pad=0x01`` is the original Keccak padding used by Ethereum; ``pad=0x06``
    gives FIPS-202 SHA-3 with the same permutation.
    """
    data = bytes(data)
    msg = bytearray(data)
    pad_len = rate - len(msg) % rate
    msg += b"\x00" * pad_len
    msg[len(data)] ^= pad
    msg[-1] ^= 0x80
    state = [0] * 25
    lanes = rate // 8
    for off in range(0, len(msg), rate):
        block = msg[off:off + rate]
        for i in range(lanes):
            state[i] ^= int.from_bytes(block[8 * i:8 * i + 8], "little")
        _keccak_f(state)
    out = b"".join(lane.to_bytes(8, "little") for lane in state[:lanes])
    return out[:out_len]


def keccak256(data: bytes) -> bytes:
    return keccak(data)


STATIC_TYPES = ("uint256", "address", "bool", "bytes32")
_ALIASES = {"uint": "uint256"}
_SIG = re.compile(r"^([A-Za-z_$][A-Za-z0-9_$]*)\((.*)\)$")


@dataclass(frozen=True)
class FunctionSig:
    name: str
    params: tuple = ()

    def __post_init__(self):
        params = tuple(_ALIASES.get(p, p) for p in self.params)
        for p in params:
            if p not in STATIC_TYPES:
                raise UnsupportedType(f"unsupported ABI type {p!r}; only {', '.join(STATIC_TYPES)}")
        object.__setattr__(self, "params", params)

    @classmethod
    def parse(cls, text: str) -> FunctionSig:
        m = _SIG.match(text.replace(" ", ""))
        if m is None:
            raise ValueError(f"not a function signature: {text!r}")
        name, args = m.groups()
        return cls(name, tuple(a for a in args.split(",") if a))

    @property
    def canonical(self) -> str:
        return f"{self.name}({','.join(self.params)})"

    def __str__(self):
        return self.canonical


def selector(sig: Union[FunctionSig, str]) -> bytes:
    if isinstance(sig, str):
        sig = FunctionSig.parse(sig)
    return _selector(sig.canonical)


@lru_cache(maxsize=1024)
def _selector(canonical: str) -> bytes:
    return keccak256(canonical.encode("ascii"))[:4]


ArgValue = Union[int, bool, str]


@dataclass(frozen=True)
class CallData:
    selector: bytes
    arguments: tuple


def _decode_word(word: bytes, typ: str, index: int) -> ArgValue:
    if typ == "uint256":
        return int.from_bytes(word, "big")
    if typ == "address":
        if any(word[:12]):
            raise MalformedWord(f"argument {index}: address word has nonzero padding")
        return "0x" + word[12:].hex()
    if typ == "bool":
        n = int.from_bytes(word, "big")
        if n > 1:
            raise MalformedWord(f"argument {index}: bool word is {n}, not 0 or 1")
        return n == 1
    return "0x" + word.hex()


def decode_calldata(raw: bytes, sig: FunctionSig) -> CallData:
    if len(raw) < 4:
        raise LengthMismatch(f"calldata is {len(raw)} bytes, shorter than a selector")
    expected = selector(sig)
    if raw[:4] != expected:
        raise SelectorMismatch(f"selector 0x{raw[:4].hex()} does not match {sig} (0x{expected.hex()})")
    want = 4 + 32 * len(sig.params)
    if len(raw) != want:
        raise LengthMismatch(f"{sig} takes {want} bytes of calldata, got {len(raw)}")
    args = tuple(_decode_word(raw[4 + 32 * i:36 + 32 * i], typ, i) for i, typ in enumerate(sig.params))
    return CallData(raw[:4], args)


def _encode_word(value: ArgValue, typ: str) -> bytes:
    if typ == "uint256":
        if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 1 << 256:
            raise ValueError(f"uint256 out of range: {value!r}")
        return value.to_bytes(32, "big")
    if typ == "address":
        raw = bytes.fromhex(value[2:] if value.startswith("0x") else value)
        if len(raw) != 20:
            raise ValueError(f"address must be 20 bytes: {value!r}")
        return raw.rjust(32, b"\x00")
    if typ == "bool":
        return (1 if value else 0).to_bytes(32, "big")
    raw = bytes.fromhex(value[2:] if value.startswith("0x") else value)
    if len(raw) != 32:
        raise ValueError(f"bytes32 must be 32 bytes: {value!r}")
    return raw


def encode_call(sig: Union[FunctionSig, str], *args: ArgValue) -> bytes:
    """Build calldata for ``sig``; used to author trace fixtures."""
    if isinstance(sig, str):
        sig = FunctionSig.parse(sig)
    if len(args) != len(sig.params):
        raise ValueError(f"{sig} takes {len(sig.params)} arguments, got {len(args)}")
    return selector(sig) + b"".join(_encode_word(v, t) for v, t in zip(args, sig.params))


def hex_to_bytes(text: str) -> bytes:
    if not isinstance(text, str) or not text.startswith("0x"):
        raise ValueError(f"expected 0x-prefixed hex, got {text!r}")
    return bytes.fromhex(text[2:])
