#!/usr/bin/env python3
# Copyright 2026 The VBDA Authors.
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
"""Write the digits source/target pair as IDX files.

The source is MNIST at 28x28. Real USPS is not redistributable offline, so the
target is a USPS-style rendering of a disjoint set of MNIST digits: each digit
is cropped to its bounding box, rescaled with its aspect ratio kept so the
longest side spans --box pixels, and centred in a 16x16 frame. Both halves
come from the 5000-digit MNIST sample bundled with mlxtend.

Pass --source-images/--source-labels/--target-images/--target-labels pointing
at real IDX files to copy genuine MNIST/USPS data instead.
"""

import argparse
import pathlib
import shutil
import struct
import sys

import numpy as np
from PIL import Image


def write_idx_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def usps_style(image28, box):
    ys, xs = np.nonzero(image28)
    if len(ys) == 0:
        return np.zeros((16, 16), dtype=np.uint8)
    crop = image28[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
    h, w = crop.shape
    scale = box / max(h, w)
    nh, nw = max(1, round(h * scale)), max(1, round(w * scale))
    small = Image.fromarray(crop.astype(np.uint8)).resize((nw, nh), Image.BILINEAR)
    frame = np.zeros((16, 16), dtype=np.float64)
    top, left = (16 - nh) // 2, (16 - nw) // 2
    frame[top:top + nh, left:left + nw] = np.asarray(small, dtype=np.float64)
    arr = frame
    peak = arr.max()
    if peak > 0:
        arr = arr * (255.0 / peak)
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--per-domain", type=int, default=2500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--box", type=int, default=12,
                    help="longest side of the target digit in the 16x16 frame")
    for name in ("source-images", "source-labels", "target-images", "target-labels"):
        ap.add_argument("--" + name, type=pathlib.Path)
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    names = {
        "source_images": "mnist-images-idx3-ubyte",
        "source_labels": "mnist-labels-idx1-ubyte",
        "target_images": "usps-proxy-images-idx3-ubyte",
        "target_labels": "usps-proxy-labels-idx1-ubyte",
    }
    given = {k: getattr(args, k) for k in names}
    if all(given.values()):
        for key, src in given.items():
            shutil.copyfile(src, args.out_dir / names[key])
        return 0
    if any(given.values()):
        ap.error("pass all four IDX paths or none")

    from mlxtend.data import mnist_data

    x, y = mnist_data()
    x = x.reshape(-1, 28, 28)
    order = np.random.default_rng(args.seed).permutation(len(y))
    if 2 * args.per_domain > len(order):
        ap.error("per-domain count exceeds half of the available digits")
    src = order[:args.per_domain]
    tgt = order[args.per_domain:2 * args.per_domain]

    write_idx_images(args.out_dir / names["source_images"], x[src])
    write_idx_labels(args.out_dir / names["source_labels"], y[src])
    write_idx_images(args.out_dir / names["target_images"],
                     np.stack([usps_style(img, args.box) for img in x[tgt]]))
    write_idx_labels(args.out_dir / names["target_labels"], y[tgt])
    return 0


if __name__ == "__main__":
    sys.exit(main())
