"""Seed splitting.

Every random draw in the package descends from one integer seed. A named
sub-stream is ``SeedSequence([seed, crc32(label)])``; per-agent noise streams
append the agent index, ``SeedSequence([seed, crc32(label), i])``, and use the
counter-based Philox bit generator so that agent ``i`` sees the same noise no
matter how many agents are simulated or in what order. Segment ``j > 0`` of a
multi-target run uses the first word of ``SeedSequence([seed, crc32("segment"), j])``.
"""

import os
import zlib

import numpy as np


def _key(seed, label):
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(label.encode())]


def derive_rng(seed, label: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_key(seed, label))))


def agent_rng(seed, label: str, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_key(seed, label) + [int(index)])))


def thread_cap(default: int | None = None) -> int:
    """Worker cap from ``MFG_CTT_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("MFG_CTT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return default or os.cpu_count() or 1


def segment_seed(seed, j: int) -> int:
    """Seed for segment ``j`` of a multi-target run (segment 0 keeps ``seed``)."""
    if j == 0:
        return int(seed)
    return int(np.random.SeedSequence(_key(seed, "segment") + [int(j)]).generate_state(2, np.uint64)[0])
