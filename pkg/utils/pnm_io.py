# utils/pnm_io.py

import logging
import os

import numpy as np
from PIL import Image, ImageDraw


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def write_pgm(gray: np.ndarray, path):
    """
    Write an 8-bit graymap (P5).
    """
    _ensure_parent(path)
    Image.fromarray(np.asarray(gray, dtype=np.uint8)).save(path, format="PPM")


def read_pgm(path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "L":
            raise ValueError(f"{path} is not an 8-bit graymap (mode {img.mode}).")
        return np.array(img, dtype=np.uint8)


def write_ppm(rgb: np.ndarray, path):
    """
    Write an 8-bit RGB pixmap (P6).
    """
    _ensure_parent(path)
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path, format="PPM")


def write_pbm(bits: np.ndarray, path, grid=None):
    """
    Write a bitmap (P4); white marks excitation. With `grid` (a GridGeometry)
    the cell outlines are drawn in white for visual inspection. The outline
    only ever goes to the file.
    """
    _ensure_parent(path)
    white = np.asarray(bits, dtype=bool).astype(np.uint8) * 255
    img = Image.fromarray(white).convert("1", dither=Image.Dither.NONE)
    if grid is not None:
        draw = ImageDraw.Draw(img)
        x0, y0 = grid.origin_x, grid.origin_y
        x1 = x0 + grid.cols * grid.cell_w - 1
        y1 = y0 + grid.rows * grid.cell_h - 1
        for c in range(grid.cols + 1):
            x = min(x0 + c * grid.cell_w, x1)
            draw.line([(x, y0), (x, y1)], fill=255)
        for r in range(grid.rows + 1):
            y = min(y0 + r * grid.cell_h, y1)
            draw.line([(x0, y), (x1, y)], fill=255)
    img.save(path, format="PPM")


def scale_field(field: np.ndarray, lo: float = None, hi: float = None) -> np.ndarray:
    """Linear map of a real field onto 0..255 (bounds default to the field's range)."""
    field = np.asarray(field, dtype=np.float64)
    lo = float(field.min()) if lo is None else lo
    hi = float(field.max()) if hi is None else hi
    if hi <= lo:
        logging.warning(f"Flat field (lo={lo}, hi={hi}); writing zeros.")
        return np.zeros(field.shape, dtype=np.uint8)
    return np.clip(np.floor((field - lo) / (hi - lo) * 255.0 + 0.5), 0, 255).astype(np.uint8)


def export_fields(state, directory, prefix="medium", lo=None, hi=None) -> list:
    """
    Write u, v and phi of a medium state as three graymaps.
    """
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in ("u", "v", "phi"):
        path = os.path.join(directory, f"{prefix}_{name}.pgm")
        write_pgm(scale_field(getattr(state, name), lo, hi), path)
        paths.append(path)
    return paths
