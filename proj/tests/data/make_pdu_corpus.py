#!/usr/bin/env python3
"""Writes pdu_corpus.txt from a Python model of the output frame layout."""
import hashlib
import hmac
import random
import sys


def crc16(data: bytes) -> int:
    crc = 0xFFFF
    for byte in data:
        crc ^= byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
    return crc


def frame(key, ctl, mcnt, track, slot, payload, mac_key=None):
    body = bytes([(ctl << 4) | (mcnt >> 8), mcnt & 0xFF, track, slot]) + payload
    tag = hmac.new(mac_key or key, body, hashlib.sha256).digest()[:4]
    sealed = body + tag
    return sealed + crc16(sealed).to_bytes(2, "big")


def reseal_crc(f: bytes) -> bytes:
    sealed = f[:-2]
    return sealed + crc16(sealed).to_bytes(2, "big")


def main(path):
    rnd = random.Random(20240601)
    key = bytes(rnd.randrange(256) for _ in range(16))
    other = bytes(rnd.randrange(256) for _ in range(16))
    lines = ["# Output frames with expected verification outcome.",
             "# Regenerate with: python3 make_pdu_corpus.py pdu_corpus.txt",
             f"# key={key.hex()} expect=1/0 last=none"]
    for n in (1, 2, 7, 12, 22):
        payload = bytes(rnd.randrange(256) for _ in range(n))
        lines.append(f"{frame(key, 1, rnd.randrange(4096), 1, 0, payload).hex()} OK")

    good = frame(key, 1, 100, 1, 0, b"\x11\x22\x33\x44")
    for bit in (0, 13, 40, len(good) * 8 - 1):
        flipped = bytearray(good)
        flipped[bit // 8] ^= 0x80 >> (bit % 8)
        lines.append(f"{bytes(flipped).hex()} CRC_FAIL")

    lines.append(f"{frame(key, 1, 100, 2, 0, b'ab').hex()} AUTH_MISMATCH")
    lines.append(f"{frame(key, 1, 100, 1, 3, b'ab').hex()} AUTH_MISMATCH")
    lines.append(f"{frame(key, 1, 100, 1, 0, b'ab', mac_key=other).hex()} MAC_FAIL")
    tampered = bytearray(good)
    tampered[5] ^= 0x01
    lines.append(f"{reseal_crc(bytes(tampered)).hex()} MAC_FAIL")

    lines.append("# last=100")
    lines.append(f"{frame(key, 1, 100, 1, 0, b'x').hex()} STALE_COUNTER")
    lines.append(f"{frame(key, 1, 99, 1, 0, b'x').hex()} STALE_COUNTER")
    lines.append(f"{frame(key, 1, 101, 1, 0, b'x').hex()} OK")
    lines.append(f"{frame(key, 1, 116, 1, 0, b'x').hex()} OK")
    lines.append(f"{frame(key, 1, 117, 1, 0, b'x').hex()} STALE_COUNTER")
    lines.append("# last=4095")
    lines.append(f"{frame(key, 1, 0, 1, 0, b'x').hex()} OK")
    lines.append(f"{frame(key, 5, 15, 1, 0, b'x').hex()} OK")
    lines.append(f"{frame(key, 1, 4095, 1, 0, b'x').hex()} STALE_COUNTER")

    with open(path, "w") as out:
        out.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "pdu_corpus.txt")
