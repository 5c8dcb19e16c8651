#!/usr/bin/env python3
"""Write trajectory fixtures in the versioned trajectory JSON schema.

squash_wave.json is a non-rigid driving motion (horizontal squash plus a
vertical bend) used by the optimizer ablation fixtures. It stands in for a
trajectory produced by an external keypoint detector and enters the
pipeline through the import path.
"""
import json
import math
import sys

N_COLS = 5
FRAMES = 12


def squash_wave():
    base = []
    for row, y in enumerate((0.38, 0.62)):
        for c in range(N_COLS):
            x = 0.12 + 0.76 * c / (N_COLS - 1)
            base.append((x, y, row * N_COLS + c))
    positions = []
    for x0, y0, i in base:
        phase = 0.7 * i
        track = []
        for f in range(FRAMES):
            t = 2.0 * math.pi * f / FRAMES
            squash = 0.10 * math.sin(t) * (x0 - 0.5)
            bend = 0.06 * math.sin(t) * math.cos(math.pi * (x0 - 0.5))
            wobble = 0.015 * (math.sin(t + phase) - math.sin(phase))
            x = x0 - squash + wobble
            y = y0 - bend + 0.5 * wobble
            track.append([round(x, 12), round(y, 12)])
        positions.append(track)
    return {
        "version": 1,
        "n": len(positions),
        "f": FRAMES,
        "source": "imported",
        "positions": positions,
    }


def wordcloud12():
    words = [
        ("happy", 0.50, 0.50, 0.16), ("smile", 0.24, 0.30, 0.10),
        ("bounce", 0.76, 0.30, 0.10), ("joy", 0.22, 0.70, 0.09),
        ("fun", 0.78, 0.70, 0.09), ("play", 0.50, 0.22, 0.08),
        ("wiggle", 0.50, 0.80, 0.08), ("sun", 0.10, 0.50, 0.06),
        ("hop", 0.90, 0.50, 0.06), ("yay", 0.36, 0.62, 0.05),
        ("woo", 0.66, 0.40, 0.05), ("grin", 0.68, 0.60, 0.05),
    ]
    return {
        "version": 1,
        "words": [{"text": w, "x": x, "y": y, "size": s} for w, x, y, s in words],
    }


def main(outdir):
    with open(f"{outdir}/squash_wave.json", "w") as fh:
        json.dump(squash_wave(), fh)
        fh.write("\n")
    with open(f"{outdir}/wordcloud12.json", "w") as fh:
        json.dump(wordcloud12(), fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures")
