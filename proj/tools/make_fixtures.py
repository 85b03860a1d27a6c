"""Regenerates tests/data/stereo from scikit-image's bundled sample photos.

Each photo is downscaled and cut into a rectified pair with a constant
horizontal disparity: right(x) = left(x + DISPARITY).
"""
import pathlib

import numpy as np
import skimage.data
from PIL import Image
from skimage.transform import resize

NAMES = ["astronaut", "coffee", "chelsea", "rocket"]
HEIGHT, WIDTH, DISPARITY = 96, 128, 6

out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "stereo"
for side in ("left", "right"):
    (out / side).mkdir(parents=True, exist_ok=True)

for name in NAMES:
    img = getattr(skimage.data, name)()
    h, w = img.shape[:2]
    scale = max(HEIGHT / h, (WIDTH + DISPARITY) / w)
    small = resize(img, (round(h * scale) + 1, round(w * scale) + 1), anti_aliasing=True)
    small = (np.clip(small, 0, 1) * 255 + 0.5).astype(np.uint8)
    top = (small.shape[0] - HEIGHT) // 2
    left0 = (small.shape[1] - WIDTH - DISPARITY) // 2
    band = small[top:top + HEIGHT, left0:left0 + WIDTH + DISPARITY]
    Image.fromarray(band[:, :WIDTH]).save(out / "left" / f"{name}.png")
    Image.fromarray(band[:, DISPARITY:]).save(out / "right" / f"{name}.png")
