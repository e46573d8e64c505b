# Copyright 2026 The bcnet Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the image fixtures used by the C++ tests.

preprocess_input.png      160x320 RGB pattern defined by integer formulae
preprocess_expected.f32   66x200x3 float32 little-endian, computed here with
                          numpy as an independent reference of the pipeline
solid_16x8.jpg            uniform (200, 40, 90) JPEG, quality 95
"""

import pathlib

import numpy as np
from PIL import Image

HERE = pathlib.Path(__file__).resolve().parent


def pattern(h=160, w=320):
    y, x = np.mgrid[0:h, 0:w]
    r = (x * 7 + y * 3) % 256
    g = (x * y) % 256
    b = (255 - x + 2 * y) % 256
    return np.stack([r, g, b], axis=-1).astype(np.uint8)


def reference(rgb, top_fraction=0.35, out_h=66, out_w=200):
    removed = int(np.floor(top_fraction * rgb.shape[0] + 1e-9))
    rgb = rgb[removed:].astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    yy = 0.299 * r + 0.587 * g + 0.114 * b
    u = 0.5 - 0.168736 * r - 0.331264 * g + 0.5 * b
    v = 0.5 + 0.5 * r - 0.418688 * g - 0.081312 * b
    yuv = np.clip(np.stack([yy, u, v], axis=-1), 0.0, 1.0).astype(np.float32)
    yuv = yuv.astype(np.float64)
    h, w = yuv.shape[:2]
    sy = np.arange(out_h, dtype=np.float64) * (h - 1) / (out_h - 1)
    sx = np.arange(out_w, dtype=np.float64) * (w - 1) / (out_w - 1)
    y0 = np.minimum(sy.astype(np.int64), h - 1)
    x0 = np.minimum(sx.astype(np.int64), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    top = (1.0 - fx) * yuv[y0][:, x0] + fx * yuv[y0][:, x1]
    bottom = (1.0 - fx) * yuv[y1][:, x0] + fx * yuv[y1][:, x1]
    return ((1.0 - fy) * top + fy * bottom).astype(np.float32)


def main():
    rgb = pattern()
    Image.fromarray(rgb, "RGB").save(HERE / "preprocess_input.png")
    reference(rgb).astype("<f4").tofile(HERE / "preprocess_expected.f32")
    solid = np.zeros((8, 16, 3), np.uint8)
    solid[...] = (200, 40, 90)
    Image.fromarray(solid, "RGB").save(HERE / "solid_16x8.jpg", quality=95)


if __name__ == "__main__":
    main()
