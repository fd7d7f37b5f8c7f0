"""Regenerate the mapping configs and JSON-lines traces under src/dcrmon/fixtures.

Calldata is built with the in-repo ABI encoder; no EVM is involved.
Run from the repository root: ``python scripts/build_traces.py``.
"""
import json
from pathlib import Path

from dcrmon.abi import encode_call, keccak256
from dcrmon.trace import Status, Transaction, write_trace

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "dcrmon" / "fixtures"

ESCROW = "0x5fbdb2315678afecb367f032d93f642f64180aa3"
SENDER = "0x70997970c51812dc3a010c7d01b50e0d17dc79c8"
RECEIVER = "0x3c44cdddb6a900fa2b585dd299e03d12fa4293bc"
STRANGER = "0x90f79bf6eb2c4f870365e785982e1f101e93b906"
OTHER_CONTRACT = "0xe7f1725e7734ce288f8367e1bb143e90bb3f0512"

CASINO = "0x9fe46736679d2d9a65f0992f2272de9f3c7fa6e0"
OPERATOR = "0x15d34aaf54267db7d7c367839aaf71a00a2c6a65"
PLAYER = "0x9965507d1a55bcc2695c58ba16fb37d819b0a4dc"

GENESIS = 1_700_000_000
ETHER = 10**18


def tx(block, index, sender, to, calldata, value=0, status=Status.SUCCESS, timestamp=None):
    return Transaction(
        block_number=block,
        tx_index=index,
        hash="0x" + keccak256(f"{block}:{index}:{sender}".encode()).hex(),
        sender=sender,
        to=to,
        input=calldata,
        value=value,
        status=status,
        timestamp=GENESIS + 12 * block if timestamp is None else timestamp,
    )


def dump(path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")


def escrow():
    d = FIXTURES / "escrow"
    dump(d / "mapping.json", {
        "contract": ESCROW,
        "functions": [
            {"signature": "placeInEscrow()", "event": "placeInEscrow", "bind": "msg.value"},
            {"signature": "releaseBySender()", "event": "releaseBySender"},
            {"signature": "releaseByReceiver()", "event": "releaseByReceiver"},
            {"signature": "withdrawFromEscrow()", "event": "withdrawFromEscrow"},
        ],
        "roles": {SENDER: "sender", RECEIVER: "receiver"},
        "unknown_sender": "reject",
        "time": "timestamps",
        "strict_unmapped": False,
    })
    place = encode_call("placeInEscrow()")
    rel_s = encode_call("releaseBySender()")
    rel_r = encode_call("releaseByReceiver()")
    withdraw = encode_call("withdrawFromEscrow()")
    happy = [
        tx(101, 0, SENDER, ESCROW, place, value=ETHER),
        tx(102, 0, SENDER, ESCROW, rel_s),
        tx(103, 0, RECEIVER, ESCROW, rel_r),
        tx(104, 0, RECEIVER, ESCROW, withdraw),
    ]
    write_trace(d / "trace-happy.jsonl", happy)
    # the faulty contract lets the receiver withdraw without the sender's release
    write_trace(d / "trace-faulty.jsonl", [
        tx(201, 0, SENDER, ESCROW, place, value=ETHER),
        tx(202, 0, RECEIVER, ESCROW, rel_r),
        tx(203, 0, RECEIVER, ESCROW, withdraw),
    ])
    # the same happy path interleaved with six transactions to other addresses
    noise = [
        tx(101, 1, STRANGER, OTHER_CONTRACT, encode_call("transfer(address,uint256)", SENDER, 5)),
        tx(102, 1, RECEIVER, STRANGER, b"", value=3),
        tx(102, 2, STRANGER, OTHER_CONTRACT, encode_call("approve(address,uint256)", ESCROW, 7)),
        tx(103, 1, SENDER, None, b"\x60\x80\x60\x40"),
        tx(103, 2, STRANGER, OTHER_CONTRACT, encode_call("transfer(address,uint256)", RECEIVER, 9)),
        tx(104, 1, SENDER, OTHER_CONTRACT, encode_call("balanceOf(address)", SENDER)),
    ]
    write_trace(d / "trace-mixed.jsonl", sorted(happy + noise, key=lambda t: t.position))
    # reverted calls, an unmapped selector and a stranger around a clean happy path
    write_trace(d / "trace-noisy.jsonl", [
        tx(301, 0, RECEIVER, ESCROW, withdraw, status=Status.REVERTED),
        tx(301, 1, SENDER, ESCROW, place, value=ETHER),
        tx(302, 0, SENDER, ESCROW, encode_call("state()")),
        tx(302, 1, RECEIVER, ESCROW, withdraw, status=Status.REVERTED),
        tx(303, 0, SENDER, ESCROW, rel_s),
        tx(304, 0, RECEIVER, ESCROW, rel_r),
        tx(305, 0, STRANGER, ESCROW, rel_r),
        tx(306, 0, RECEIVER, ESCROW, withdraw),
    ])
    write_trace(d / "trace-empty.jsonl", [])


def casino():
    d = FIXTURES / "casino"
    dump(d / "mapping.json", {
        "contract": CASINO,
        "functions": [
            {"signature": "createGame(bytes32)", "event": "createGame", "bind": "arg:0"},
            {"signature": "addToPot()", "event": "addToPot", "bind": "msg.value"},
            {"signature": "removeFromPot(uint256)", "event": "removeFromPot", "bind": "arg:0"},
            {"signature": "placeBet(bool)", "event": "placeBet", "bind": "arg:0"},
            {"signature": "decideBet(uint256)", "event": "decideBet", "bind": "arg:0"},
            {"signature": "timeoutBet()", "event": "timeoutBet"},
            {"signature": "closeCasino()", "event": "closeCasino"},
        ],
        "roles": {OPERATOR: "operator"},
        "unknown_sender": {"default_role": "player"},
        "time": "timestamps",
    })
    commitment = "0x" + keccak256((42).to_bytes(32, "big")).hex()
    t0 = GENESIS
    day = 86400
    # the player times out exactly one day after the bet; one second earlier is a violation
    write_trace(d / "trace-timeout.jsonl", [
        tx(10, 0, OPERATOR, CASINO, encode_call("addToPot()"), value=5 * ETHER, timestamp=t0),
        tx(11, 0, OPERATOR, CASINO, encode_call("createGame(bytes32)", commitment), timestamp=t0 + 12),
        tx(12, 0, PLAYER, CASINO, encode_call("placeBet(bool)", True), value=ETHER, timestamp=t0 + 24),
        tx(13, 0, PLAYER, CASINO, encode_call("timeoutBet()"), timestamp=t0 + 24 + day - 1),
        tx(14, 0, PLAYER, CASINO, encode_call("timeoutBet()"), timestamp=t0 + 24 + day),
        tx(15, 0, OPERATOR, CASINO, encode_call("decideBet(uint256)", 42), timestamp=t0 + 24 + day + 12),
    ])


if __name__ == "__main__":
    escrow()
    casino()
