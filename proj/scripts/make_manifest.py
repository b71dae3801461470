#!/usr/bin/env python3
"""Writes manifest.json for a dataset laid out as root/<identity>/<image>.

Independent of the C++ ingestion code; the test suite checks that both
agree on the bundled sample.
"""
import json
import os
import sys

IMAGE_EXTS = {".png", ".jpg", ".jpeg"}


def walk(root):
    images = []
    for identity in sorted(os.listdir(root)):
        d = os.path.join(root, identity)
        if not os.path.isdir(d):
            continue
        for name in sorted(os.listdir(d)):
            stem, ext = os.path.splitext(name)
            if ext.lower() not in IMAGE_EXTS:
                continue
            sidecar = os.path.join(identity, stem + ".landmarks.json")
            images.append({
                "identity": identity,
                "image": os.path.join(identity, name),
                "landmarks": sidecar if os.path.isfile(os.path.join(root, sidecar)) else None,
            })
    return images


def main():
    if len(sys.argv) != 2:
        sys.exit("usage: make_manifest.py <dataset root>")
    root = sys.argv[1]
    with open(os.path.join(root, "manifest.json"), "w") as f:
        json.dump({"images": walk(root)}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
