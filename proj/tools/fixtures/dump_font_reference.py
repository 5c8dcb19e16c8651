#!/usr/bin/env python3
"""Dump per-glyph outline counts from a TrueType font using fontTools.

The output is the independent reference the glyph-outline tests compare
against. Composite glyphs are flattened through fontTools' own pen API.
"""
import json
import sys

from fontTools.pens.recordingPen import DecomposingRecordingPen
from fontTools.ttLib import TTFont


def explicit_count(coords_flags):
    # Points after inserting an on-curve midpoint between every pair of
    # consecutive (cyclic) off-curve points.
    n = len(coords_flags)
    extra = 0
    for i in range(n):
        if not coords_flags[i] and not coords_flags[(i + 1) % n]:
            extra += 1
    return n + extra


def glyph_record(font, ch):
    cmap = font.getBestCmap()
    name = cmap.get(ord(ch), ".notdef")
    glyf = font["glyf"]
    g = glyf[name]
    coords, ends, flags = g.getCoordinates(glyf)
    contours = []
    start = 0
    for end in ends:
        on = [bool(flags[k] & 1) for k in range(start, end + 1)]
        contours.append({"points": len(on), "explicit_points": explicit_count(on)})
        start = end + 1
    advance, lsb = font["hmtx"][name]
    return {
        "char": ch,
        "glyph": name,
        "composite": bool(g.isComposite()),
        "contours": len(contours),
        "points": sum(c["points"] for c in contours),
        "explicit_points": sum(c["explicit_points"] for c in contours),
        "contour_points": [c["points"] for c in contours],
        "advance": advance,
    }


def main():
    path = sys.argv[1]
    chars = sys.argv[2]
    words = sys.argv[3:] if len(sys.argv) > 3 else []
    font = TTFont(path)
    out = {
        "font": path.rsplit("/", 1)[-1],
        "units_per_em": font["head"].unitsPerEm,
        "glyphs": [glyph_record(font, ch) for ch in chars],
        "words": {},
    }
    for w in words:
        recs = [glyph_record(font, ch) for ch in w]
        out["words"][w] = {
            "points": sum(r["points"] for r in recs),
            "explicit_points": sum(r["explicit_points"] for r in recs),
        }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
