#!/usr/bin/env python3
"""Generate the synthetic driving GIFs and their analytic ground truth.

Frames are rasterized independently of the project code and written with
Pillow, so the decoder tests do not depend on the project's own encoder.
A pixel (px, py) belongs to the disk when its center lies within the
radius: (px + 0.5 - cx)^2 + (py + 0.5 - cy)^2 <= r^2.
"""
import json
import math
import sys

from PIL import Image

W = H = 256
FRAMES = 16
RADIUS = 28
DELAY_CS = 8
DISK = (200, 30, 30)
BACKGROUND = (255, 255, 255)


def center(f):
    # 4 px/frame horizontally, bouncing vertically.
    return (60.0 + 4.0 * f, 150.0 - 40.0 * abs(math.sin(math.pi * f / 8.0)))


def draw(cx, cy):
    img = Image.new("RGB", (W, H), BACKGROUND)
    px = img.load()
    for y in range(H):
        for x in range(W):
            dx = x + 0.5 - cx
            dy = y + 0.5 - cy
            if dx * dx + dy * dy <= RADIUS * RADIUS:
                px[x, y] = DISK
    return img


def main(outdir):
    centers = [center(f) for f in range(FRAMES)]
    frames = [draw(cx, cy) for cx, cy in centers]
    frames[0].save(
        f"{outdir}/bouncing_disk.gif",
        save_all=True,
        append_images=frames[1:],
        duration=DELAY_CS * 10,
        loop=0,
    )
    # Same motion, written with "restore to background" disposal so the
    # decoder's disposal handling is exercised on sub-rectangle frames.
    frames[0].save(
        f"{outdir}/bouncing_disk_dispose.gif",
        save_all=True,
        append_images=frames[1:],
        duration=DELAY_CS * 10,
        loop=0,
        disposal=2,
    )
    truth = {
        "width": W,
        "height": H,
        "frames": FRAMES,
        "delay_cs": DELAY_CS,
        "radius": RADIUS,
        "disk_rgb": list(DISK),
        "background_rgb": list(BACKGROUND),
        "centers_px": [[cx, cy] for cx, cy in centers],
    }
    with open(f"{outdir}/bouncing_disk.json", "w") as fh:
        json.dump(truth, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures")
