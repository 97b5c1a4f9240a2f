"""Counter-based random streams for reproducible parallel Monte Carlo.

Stream split: under master seed ``s`` a purpose tag ``u`` (one per
experiment kind) and a resampling attempt ``a`` select a Philox4x64-10 key

    K(s, u, a) = SeedSequence(s, spawn_key=(u, a)).generate_state(2, uint64)

and trial ``i`` owns the counter blocks ``[i*B, (i+1)*B)`` with
``B = ceil(words_per_trial / 4)`` (each block yields four 64-bit words).
Trial i's words therefore depend only on (s, u, a, i), never on how trials
are chunked or which worker draws them.
"""

from __future__ import annotations

import functools
import secrets

import numpy as np


@functools.lru_cache(maxsize=4096)
def stream_key(master_seed: int, purpose: int = 0, attempt: int = 0) -> tuple[int, int]:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(purpose), int(attempt)))
    k = ss.generate_state(2, dtype=np.uint64)
    return int(k[0]), int(k[1])


def _blocks(words_per_trial: int) -> int:
    return -(-int(words_per_trial) // 4)


def trial_words(master_seed: int, start: int, count: int, words_per_trial: int,
                purpose: int = 0, attempt: int = 0) -> np.ndarray:
    """Raw words for trials start..start+count-1, shape (count, words_per_trial)."""
    blocks = _blocks(words_per_trial)
    if count <= 0 or words_per_trial <= 0:
        return np.zeros((max(count, 0), max(words_per_trial, 0)), dtype=np.uint64)
    key = np.array(stream_key(master_seed, purpose, attempt), dtype=np.uint64)
    bg = np.random.Philox(key=key, counter=int(start) * blocks)
    raw = bg.random_raw(count * blocks * 4).reshape(count, blocks * 4)
    return raw[:, :words_per_trial]


def trial_words_at(master_seed: int, indices, words_per_trial: int,
                   purpose: int = 0, attempt: int = 0) -> np.ndarray:
    """Same words as :func:`trial_words` for an arbitrary set of trial indices."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((len(indices), words_per_trial), dtype=np.uint64)
    if len(indices) == 0:
        return out
    # Contiguous runs share one generator.
    breaks = np.flatnonzero(np.diff(indices) != 1) + 1
    for run in np.split(np.arange(len(indices)), breaks):
        first = int(indices[run[0]])
        out[run] = trial_words(master_seed, first, len(run), words_per_trial, purpose, attempt)
    return out


class TrialStream:
    """The word stream of a single trial, consumed front to back."""

    def __init__(self, master_seed: int, index: int, words_per_trial: int,
                 purpose: int = 0, attempt: int = 0):
        self.master_seed = master_seed
        self.index = index
        self.words_per_trial = words_per_trial
        self._words = trial_words(master_seed, index, 1, words_per_trial, purpose, attempt)[0]
        self._pos = 0

    def take(self, k: int) -> np.ndarray:
        if self._pos + k > self.words_per_trial:
            raise IndexError("trial stream exhausted")
        out = self._words[self._pos:self._pos + k]
        self._pos += k
        return out


def uniforms(words: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to doubles in [0, 1)."""
    return (np.asarray(words, dtype=np.uint64) >> np.uint64(11)) * (1.0 / (1 << 53))


def make_generator(seed: int) -> np.random.Generator:
    """Generator for test-data construction (random measures, subspaces)."""
    return np.random.Generator(np.random.Philox(seed))


def fresh_seed() -> int:
    return secrets.randbits(63)
