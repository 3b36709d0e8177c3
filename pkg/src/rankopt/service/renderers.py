"""Pure renderers that turn a parameter vector into something a human can judge.

Both renderers are deterministic functions of the vector alone: identical
inputs produce byte-identical payloads, which the session log relies on
(payloads are never persisted, only re-rendered).

* ``color-swatch`` squashes a 3-vector through a sigmoid into an RGB color
  and emits a small PNG square. The origin renders as mid gray.
* ``fourier-curve`` reads an even-length vector as interleaved cosine/sine
  coefficients of a radial wobble r(t) = 1 + sum_j (a_j cos(jt) + b_j sin(jt))
  and emits the closed curve as SVG text. The all-zero vector is the unit
  circle.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

__all__ = ["RENDERER_IDS", "Payload", "RendererSpec", "render"]

RENDERER_IDS = ("color-swatch", "fourier-curve")

_SWATCH_SIDE = 64
_CURVE_POINTS = 256


@dataclass(frozen=True)
class Payload:
    """A rendered candidate: media type plus data in the declared encoding."""

    media_type: str
    encoding: str  # "base64" for binary media, "utf-8" for text media
    data: str

    def to_dict(self) -> dict:
        return {"media_type": self.media_type, "encoding": self.encoding, "data": self.data}


@dataclass(frozen=True)
class RendererSpec:
    """Which renderer to use and the parameter dimension it must be fed."""

    id: str
    dim: int

    def __post_init__(self) -> None:
        if self.id not in RENDERER_IDS:
            raise ValueError(f"unknown renderer {self.id!r}; choose from {RENDERER_IDS}")
        dim = int(self.dim)
        if self.id == "color-swatch" and dim != 3:
            raise ValueError(f"color-swatch renders 3-vectors, got dim {dim}")
        if self.id == "fourier-curve" and (dim < 2 or dim % 2 != 0):
            raise ValueError(f"fourier-curve needs an even dim >= 2, got {dim}")
        object.__setattr__(self, "dim", dim)


def render(spec: RendererSpec, x) -> Payload:
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (spec.dim,):
        raise ValueError(f"renderer {spec.id} expects shape ({spec.dim},), got {point.shape}")
    if not np.all(np.isfinite(point)):
        raise ValueError("cannot render a non-finite vector")
    if spec.id == "color-swatch":
        return _color_swatch(point)
    return _fourier_curve(point)


def _color_swatch(x: np.ndarray) -> Payload:
    channels = 1.0 / (1.0 + np.exp(-x))
    rgb = tuple(int(c * 255.0 + 0.5) for c in channels)
    image = Image.new("RGB", (_SWATCH_SIDE, _SWATCH_SIDE), rgb)
    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    return Payload(
        media_type="image/png",
        encoding="base64",
        data=base64.b64encode(buffer.getvalue()).decode("ascii"),
    )


def _fourier_curve(x: np.ndarray) -> Payload:
    harmonics = np.arange(1, x.size // 2 + 1)
    cos_coef = x[0::2]
    sin_coef = x[1::2]
    theta = np.linspace(0.0, 2.0 * np.pi, _CURVE_POINTS, endpoint=False)
    angles = np.outer(theta, harmonics)
    radius = 1.0 + np.cos(angles) @ cos_coef + np.sin(angles) @ sin_coef
    xs = radius * np.cos(theta)
    ys = radius * np.sin(theta)
    # Fixed-precision formatting keeps the text a pure function of the input.
    steps = " L ".join(f"{px:.4f} {py:.4f}" for px, py in zip(xs, ys))
    extent = 1.0 + float(np.abs(x).sum())
    view = f"{-extent:.4f} {-extent:.4f} {2 * extent:.4f} {2 * extent:.4f}"
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{view}">'
        f'<path d="M {steps} Z" fill="none" stroke="black" '
        f'stroke-width="{extent / 50.0:.4f}"/></svg>'
    )
    return Payload(media_type="image/svg+xml", encoding="utf-8", data=svg)
