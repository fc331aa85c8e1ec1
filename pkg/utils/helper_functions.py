# utils/helper_functions.py

import json
import math
import os

MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(x: int) -> int:
    """
    One round of the SplitMix64 finalizer on a 64-bit integer.
    """
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def sub_seed(seed: int, run_index: int) -> int:
    """
    Seed of run `run_index` in a batch. Depends only on (seed, run_index),
    so adding runs never changes the seeds of earlier ones.
    """
    return splitmix64((seed & MASK64) ^ splitmix64(run_index & MASK64))


def format_metric(value, unit=None):
    """
    Format a numeric value plus optional unit. Returns 'N/A' if None or NaN.
    """
    if value is None or (isinstance(value, (int, float)) and math.isnan(value)):
        return "N/A"
    try:
        s = f"{value:.2f}" if isinstance(value, float) else f"{value}"
        if unit:
            s += f" {unit}"
        return s
    except Exception:
        return "N/A"


def write_json(record, path):
    """Deterministic JSON text (sorted keys, fixed indent, trailing newline)."""
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(record, f, sort_keys=True, indent=2)
        f.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def write_text(text: str, path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
