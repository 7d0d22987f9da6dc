#!/usr/bin/env python3
"""Regenerate the small image corpus under data/.

Content photos come from the scikit-image sample data. Style images are
procedural paintings (stroke fields, mosaics, tinted textures) so the
corpus carries no third-party artwork.
"""
import argparse
import os

import numpy as np
from PIL import Image, ImageDraw, ImageFilter
from skimage import data

CONTENT = ["astronaut", "chelsea", "coffee", "rocket", "hubble_deep_field",
           "immunohistochemistry", "retina", "motorcycle_left", "camera", "moon"]


def fit(img, max_side):
    w, h = img.size
    s = max_side / max(w, h)
    if s < 1.0:
        img = img.resize((max(1, round(w * s)), max(1, round(h * s))), Image.BICUBIC)
    return img


def load_content(name):
    if name == "motorcycle_left":
        arr = data.stereo_motorcycle()[0]
    else:
        arr = getattr(data, name)()
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    return Image.fromarray(arr[..., :3].astype(np.uint8))


def strokes(rng, size, palette, n, width):
    img = Image.new("RGB", (size, size), tuple(palette[0]))
    draw = ImageDraw.Draw(img)
    for _ in range(n):
        x, y = rng.uniform(0, size, 2)
        ang = rng.normal(0.6, 0.5)
        length = rng.uniform(8, 40)
        c = palette[rng.integers(len(palette))] + rng.integers(-20, 20, 3)
        dx, dy = np.cos(ang) * length, np.sin(ang) * length
        draw.line([(x - dx, y - dy), (x + dx, y + dy)],
                  fill=tuple(np.clip(c, 0, 255).astype(int)), width=int(rng.integers(2, width)))
    return img.filter(ImageFilter.SMOOTH)


def mosaic(rng, size, palette, cells):
    pts = rng.uniform(0, size, (cells, 2))
    cols = palette[rng.integers(len(palette), size=cells)] + rng.integers(-30, 30, (cells, 3))
    yy, xx = np.mgrid[0:size, 0:size]
    d = (xx[..., None] - pts[:, 0]) ** 2 + (yy[..., None] - pts[:, 1]) ** 2
    idx = np.argmin(d, axis=-1)
    srt = np.sort(d, axis=-1)
    edge = (np.sqrt(srt[..., 1]) - np.sqrt(srt[..., 0])) < 1.5
    out = np.clip(cols[idx], 0, 255)
    out[edge] = 20
    return Image.fromarray(out.astype(np.uint8))


def tinted(tex, lo, hi):
    t = tex.astype(np.float64)[..., None] / 255.0
    out = np.array(lo) * (1 - t) + np.array(hi) * t
    return Image.fromarray(np.clip(out, 0, 255).astype(np.uint8))


def train_set(rng, root, count, side):
    photo_dir = os.path.join(root, "train", "photo")
    art_dir = os.path.join(root, "train", "art")
    os.makedirs(photo_dir, exist_ok=True)
    os.makedirs(art_dir, exist_ok=True)
    photos = [load_content(n) for n in CONTENT]
    for i in range(count):
        img = photos[i % len(photos)]
        w, h = img.size
        c = int(rng.uniform(0.3, 0.8) * min(w, h))
        x, y = rng.integers(0, w - c + 1), rng.integers(0, h - c + 1)
        crop = img.crop((x, y, x + c, y + c)).resize((side, side), Image.BICUBIC)
        if rng.random() < 0.5:
            crop = crop.transpose(Image.FLIP_LEFT_RIGHT)
        crop.save(os.path.join(photo_dir, f"photo_{i:03d}.png"))
    for i in range(count):
        palette = rng.integers(0, 256, (int(rng.integers(3, 7)), 3))
        if i % 2 == 0:
            img = strokes(rng, side, palette, int(rng.integers(300, 900)), int(rng.integers(3, 8)))
        else:
            img = mosaic(rng, side, palette, int(rng.integers(20, 80)))
        img.save(os.path.join(art_dir, f"art_{i:03d}.png"))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--content-side", type=int, default=384)
    ap.add_argument("--style-side", type=int, default=256)
    ap.add_argument("--train-count", type=int, default=100, help="photos and paintings each under train/")
    ap.add_argument("--train-side", type=int, default=96)
    args = ap.parse_args()
    rng = np.random.default_rng(7)
    os.makedirs(os.path.join(args.root, "content"), exist_ok=True)
    os.makedirs(os.path.join(args.root, "style"), exist_ok=True)
    for i, name in enumerate(CONTENT):
        img = fit(load_content(name), args.content_side)
        img.save(os.path.join(args.root, "content", f"{i:02d}_{name}.png"))

    s = args.style_side
    warm = np.array([[40, 30, 60], [220, 160, 40], [200, 60, 40], [250, 220, 150], [30, 80, 150]])
    cool = np.array([[10, 20, 50], [40, 90, 170], [230, 230, 120], [120, 180, 220], [250, 250, 250]])
    earth = np.array([[60, 40, 20], [140, 100, 60], [90, 130, 60], [200, 180, 120]])
    styles = {
        "strokes_warm": strokes(rng, s, warm, 2500, 7),
        "strokes_night": strokes(rng, s, cool, 3000, 6),
        "mosaic_earth": mosaic(rng, s, earth, 140),
        "mosaic_cool": mosaic(rng, s, cool, 90),
        "brick_tint": tinted(np.array(fit(Image.fromarray(data.brick()), s)), (90, 20, 10), (250, 200, 150)),
        "gravel_tint": tinted(np.array(fit(Image.fromarray(data.gravel()), s)), (20, 30, 70), (210, 230, 200)),
    }
    for i, (name, img) in enumerate(styles.items()):
        img.save(os.path.join(args.root, "style", f"{i:02d}_{name}.png"))

    if args.train_count > 0:
        train_set(rng, args.root, args.train_count, args.train_side)


if __name__ == "__main__":
    main()
