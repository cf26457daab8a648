"""Trainable parameters of the Laplacian learning network.

All parameters live in one flat float64 vector with named views, so the
optimizer, the serializer, and finite-difference probes all act on the
same memory.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

ENC_HIDDEN = 64
HEAD_HIDDEN = (128, 256)


def _layer_shapes(d, head_hidden):
    """Ordered (name, shape) pairs defining the flat parameter layout."""
    pair_in = 3 + d
    shapes = [
        ("enc_w1", (ENC_HIDDEN, 3)),
        ("enc_b1", (ENC_HIDDEN,)),
        ("enc_w2", (ENC_HIDDEN, ENC_HIDDEN)),
        ("enc_b2", (ENC_HIDDEN,)),
        ("enc_w3", (d, 2 * ENC_HIDDEN)),
        ("enc_b3", (d,)),
    ]
    h1, h2 = head_hidden
    for head in ("alpha", "phi", "omega"):
        shapes += [
            (f"{head}_w1", (h1, pair_in)),
            (f"{head}_b1", (h1,)),
            (f"{head}_w2", (h2, h1)),
            (f"{head}_b2", (h2,)),
            (f"{head}_w3", (1, h2)),
            (f"{head}_b3", (1,)),
        ]
    return shapes


class LapNetParams:
    """Flat parameter vector with named matrix views.

    The per-point encoder is a 3->64->64 MLP whose outputs are concatenated
    with their mean-pooled k-neighborhood and projected 128->d. The three
    heads (gate, value, inverse mass) are three fully-connected layers with
    output widths 128, 256, and 1.
    """

    def __init__(self, d=64, head_hidden=HEAD_HIDDEN, flat=None, seed=0):
        self.d = int(d)
        self.head_hidden = tuple(int(h) for h in head_hidden)
        self.shapes = _layer_shapes(self.d, self.head_hidden)
        total = sum(int(np.prod(s)) for _, s in self.shapes)
        if flat is None:
            flat = self._init_flat(total, seed)
        else:
            flat = np.ascontiguousarray(flat, dtype=np.float64)
            if flat.shape != (total,):
                raise ShapeMismatch(f"expected {total} parameters, got {flat.shape}")
        self.flat = flat
        self.views = {}
        offset = 0
        for name, shape in self.shapes:
            size = int(np.prod(shape))
            self.views[name] = self.flat[offset : offset + size].reshape(shape)
            offset += size

    def _init_flat(self, total, seed):
        # He initialization: keeps activation variance alive through the
        # LeakyReLU stacks, which matters here since there is no batch norm
        rng = np.random.default_rng(seed)
        flat = np.empty(total)
        offset = 0
        for name, shape in self.shapes:
            size = int(np.prod(shape))
            if name.endswith(("b1", "b2", "b3")):
                flat[offset : offset + size] = 0.0
            else:
                std = np.sqrt(2.0 / shape[1])
                flat[offset : offset + size] = rng.normal(0.0, std, size)
            offset += size
        return flat

    def __getitem__(self, name):
        return self.views[name]

    @property
    def size(self):
        return self.flat.size

    def copy(self):
        return LapNetParams(self.d, self.head_hidden, flat=self.flat.copy())

    def zeros_like_flat(self):
        return np.zeros_like(self.flat)
