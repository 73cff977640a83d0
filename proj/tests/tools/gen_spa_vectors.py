#!/usr/bin/env python3
"""Regenerates testdata/spa_vectors.txt with Python's hashlib/hmac.

Line format: key_hex,packet_hex,expected
  key_hex   32-byte key registered for the packet's client, or '-' when the
            client has no credential
  expected  accept | reject:<reason>

Vectors are checked in file order against one replay window, with the clock
set to each packet's own timestamp (malformed packets use 0).
"""

import hashlib
import hmac
import struct
import sys
from pathlib import Path


def host_id(name: str) -> bytes:
    raw = name.encode()
    assert 1 <= len(raw) <= 16
    return raw + b"\0" * (16 - len(raw))


def key_for(i: int) -> bytes:
    return hashlib.sha256(b"spa-vector-key-%d" % i).digest()


def packet(key: bytes, client: str, ts: int, nonce: bytes, service: str, version: int = 1) -> bytes:
    body = bytes([version]) + host_id(client) + struct.pack(">Q", ts) + nonce + host_id(service)
    assert len(body) == 57
    return body + hmac.new(key, body, hashlib.sha256).digest()


def nonce_for(i: int) -> bytes:
    return hashlib.sha256(b"spa-vector-nonce-%d" % i).digest()[:16]


def main() -> None:
    services = ["amf_smf", "upf"]
    rows = []
    accepted = []
    for i in range(12):
        key = key_for(i)
        client = "client%02d" % i
        ts = 1000 + 250 * i
        pkt = packet(key, client, ts, nonce_for(i), services[i % 2])
        rows.append((key.hex(), pkt.hex(), "accept"))
        accepted.append((key, pkt))

    # re-sent copies of earlier packets
    for j in (0, 5, 11):
        key, pkt = accepted[j]
        rows.append((key.hex(), pkt.hex(), "reject:replay"))

    # single-bit flips in the MAC, the timestamp and the nonce
    for j, bit in ((1, 57 * 8), (2, 17 * 8 + 63), (3, 25 * 8 + 5)):
        key, pkt = accepted[j]
        b = bytearray(pkt)
        b[bit // 8] ^= 0x80 >> (bit % 8)
        rows.append((key.hex(), bytes(b).hex(), "reject:bad_mac"))

    # signed with the wrong key
    rows.append((key_for(4).hex(), packet(key_for(99), "client04", 5000, nonce_for(40), "upf").hex(),
                 "reject:bad_mac"))

    # nobody registered this client
    rows.append(("-", packet(key_for(50), "stranger", 6000, nonce_for(50), "upf").hex(), "reject:unknown_client"))

    # wrong version, truncated, overlong
    rows.append((key_for(6).hex(), packet(key_for(6), "client06", 7000, nonce_for(60), "upf", version=2).hex(),
                 "reject:malformed"))
    rows.append((key_for(7).hex(), accepted[7][1][:88].hex(), "reject:malformed"))
    rows.append((key_for(8).hex(), (accepted[8][1] + b"\0").hex(), "reject:malformed"))

    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "testdata" / "spa_vectors.txt"
    with out.open("w") as f:
        f.write("# key_hex,packet_hex,expected (generated by tests/tools/gen_spa_vectors.py)\n")
        for r in rows:
            f.write(",".join(r) + "\n")
    print(f"wrote {len(rows)} vectors to {out}")


if __name__ == "__main__":
    main()
