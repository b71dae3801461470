#!/usr/bin/env python3
"""Counts perturbable pixels (value >= 128) in a mask template PNG."""
import sys

import numpy as np
from PIL import Image

px = np.asarray(Image.open(sys.argv[1]).convert("L"))
h, w = px.shape
ones = int((px >= 128).sum())
print(f"{w}x{h} ones={ones} fill={ones / (w * h):.10f}")
