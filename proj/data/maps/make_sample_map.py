#!/usr/bin/env python3
"""Regenerates sample_map.png: a 240x180 RGB floor plan with two doorway walls,
a few blocks and small dark speckles on a noisy light background."""

import random
import struct
import sys
import zlib
from pathlib import Path

W, H = 240, 180


def chunk(tag, data):
    body = tag + data
    return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def write_png(path, pixels):
    raw = b"".join(b"\x00" + bytes(v for px in row for v in px) for row in pixels)
    png = b"\x89PNG\r\n\x1a\n"
    png += chunk(b"IHDR", struct.pack(">IIBBBBB", W, H, 8, 2, 0, 0, 0))
    png += chunk(b"IDAT", zlib.compress(raw, 9))
    png += chunk(b"IEND", b"")
    Path(path).write_bytes(png)


def main(out):
    rng = random.Random(7)
    img = []
    for _ in range(H):
        row = []
        for _ in range(W):
            g = 224 + rng.randint(-8, 8)
            row.append((g, g - 3, g - 10))
        img.append(row)

    def dark(x0, y0, x1, y1):
        for y in range(max(0, y0), min(H, y1)):
            for x in range(max(0, x0), min(W, x1)):
                g = 38 + rng.randint(-6, 6)
                img[y][x] = (g, g + 2, g + 6)

    dark(0, 0, W, 4)
    dark(0, H - 4, W, H)
    dark(0, 0, 4, H)
    dark(W - 4, 0, W, H)
    # Wall with a doorway near the top.
    dark(80, 0, 86, 28)
    dark(80, 62, 86, H)
    # Wall with a doorway near the bottom.
    dark(160, 0, 166, 118)
    dark(160, 152, 166, H)
    dark(30, 40, 55, 70)
    dark(108, 78, 136, 110)
    dark(190, 70, 214, 92)

    for _ in range(70):
        x, y = rng.randrange(6, W - 8), rng.randrange(6, H - 8)
        s = rng.choice((1, 1, 2))
        dark(x, y, x + s, y + s)

    write_png(out, img)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).with_name("sample_map.png"))
