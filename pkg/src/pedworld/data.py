"""Episode recordings, the latent-pair training corpus, and dataset splits.

File formats (little-endian):
  episode  magic "PWM1", u16 version, u16 H, u16 W, u16 C, u32 N, u64 seed,
           N frames of H*W u8 category indices, N action records of 3 f32
  psi      magic "PSI1", u16 L, u32 row count, rows of (4L+3) f32
  manifest UTF-8 JSON

Ground truth is stored as one byte per pixel; one-hot tensors are
materialised on load.  Actions are (moved, body yaw / pi, head yaw / (pi/2)),
all in [-1, 1].
"""
from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pedworld.rng import stream

EPISODE_MAGIC = b"PWM1"
PSI_MAGIC = b"PSI1"
FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def action_vector(moved: bool, body_yaw: float, head_yaw: float) -> np.ndarray:
    """Normalised 3-vector (moved flag, body yaw, head yaw), each in [-1, 1]."""
    wrapped = math.remainder(body_yaw, 2.0 * math.pi)
    return np.array([1.0 if moved else 0.0,
                     wrapped / math.pi,
                     head_yaw / (math.pi / 2.0)], dtype=np.float32)


@dataclass
class EpisodeLog:
    seed: int
    frames: np.ndarray            # uint8 [N, H, W]
    actions: np.ndarray           # float32 [N, 3]
    body_states: list[str] | None = None   # in-memory trace, not serialised
    truncated: bool = False

    def __len__(self) -> int:
        return int(self.frames.shape[0])


def write_episode(log: EpisodeLog, path) -> Path:
    n, h, w = log.frames.shape
    if log.actions.shape != (n, 3):
        raise FormatError(f"actions shape {log.actions.shape} does not match {n} frames")
    c = int(log.frames.max(initial=0)) + 1  # stored channel count, see manifest for the real C
    raise_if = log.frames.dtype != np.uint8
    if raise_if:
        raise FormatError(f"frames must be uint8, got {log.frames.dtype}")
    header = EPISODE_MAGIC + struct.pack("<HHHHIQ", FORMAT_VERSION, h, w, c, n, log.seed)
    body = log.frames.tobytes() + log.actions.astype("<f4").tobytes()
    path = Path(path)
    path.write_bytes(header + body)
    return path


def read_episode(path) -> EpisodeLog:
    blob = Path(path).read_bytes()
    if blob[:4] != EPISODE_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {EPISODE_MAGIC!r}")
    version, h, w, _c, n, seed = struct.unpack_from("<HHHHIQ", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = 4 + struct.calcsize("<HHHHIQ")
    frame_bytes = n * h * w
    frames = np.frombuffer(blob, np.uint8, count=frame_bytes, offset=offset).reshape(n, h, w)
    offset += frame_bytes
    actions = np.frombuffer(blob, "<f4", count=n * 3, offset=offset).reshape(n, 3).astype(np.float32)
    if offset + n * 12 != len(blob):
        raise FormatError(f"{path}: trailing bytes")
    return EpisodeLog(seed=int(seed), frames=frames.copy(), actions=actions)


# ---------------------------------------------------------------------------
# psi corpus: rows [mu_t | logvar_t | a_t | mu_{t+1} | logvar_{t+1}]


def psi_row_width(latent_dim: int) -> int:
    return 4 * latent_dim + 3


def assemble_psi(episodes) -> tuple[np.ndarray, list[int]]:
    """Pair consecutive steps within each encoded episode.

    ``episodes`` yields (mus [N,L], logvars [N,L], actions [N,3]).  Returns
    the stacked rows (episode-ordered, never pairing across boundaries) and
    the per-episode row counts.
    """
    blocks: list[np.ndarray] = []
    counts: list[int] = []
    width = None
    for idx, (mus, logvars, actions) in enumerate(episodes):
        n, latent = mus.shape
        if width is None:
            width = psi_row_width(latent)
        if n < 2:
            warnings.warn(f"episode {idx} has {n} frames; needs at least 2, skipped")
            continue
        rows = np.concatenate([mus[:-1], logvars[:-1], actions[:-1],
                               mus[1:], logvars[1:]], axis=1).astype(np.float32)
        blocks.append(rows)
        counts.append(n - 1)
    if not blocks:
        return np.zeros((0, width or 3), np.float32), counts
    return np.concatenate(blocks, axis=0), counts


def write_psi(path, rows: np.ndarray) -> Path:
    latent = (rows.shape[1] - 3) // 4
    if psi_row_width(latent) != rows.shape[1]:
        raise FormatError(f"psi row width {rows.shape[1]} is not 4L+3")
    header = PSI_MAGIC + struct.pack("<HI", latent, rows.shape[0])
    path = Path(path)
    path.write_bytes(header + rows.astype("<f4").tobytes())
    return path


def read_psi(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if blob[:4] != PSI_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {PSI_MAGIC!r}")
    latent, count = struct.unpack_from("<HI", blob, 4)
    width = psi_row_width(latent)
    rows = np.frombuffer(blob, "<f4", count=count * width, offset=10).reshape(count, width)
    return rows.astype(np.float32)


def split_psi_row(row: np.ndarray, latent_dim: int):
    l = latent_dim
    return row[:l], row[l:2 * l], row[2 * l:2 * l + 3], row[2 * l + 3:3 * l + 3], row[3 * l + 3:]


# ---------------------------------------------------------------------------
# splits and manifest


def split_dataset(n_episodes: int, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Whole-episode train/val assignment, deterministic under ``seed``."""
    if n_episodes < 2:
        raise ValueError(f"need at least 2 episodes to split, got {n_episodes}")
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"split ratio {ratio} outside (0, 1)")
    order = stream(seed, "split").permutation(n_episodes).tolist()
    n_train = min(max(int(round(ratio * n_episodes)), 1), n_episodes - 1)
    return sorted(order[:n_train]), sorted(order[n_train:])


@dataclass
class DatasetManifest:
    height: int
    width: int
    categories: int
    latent_dim: int
    episodes: list[dict] = field(default_factory=list)  # {"file", "seed", "frames"}
    splits: dict = field(default_factory=dict)          # name -> {"train": [...], "val": [...]}
    palette: list[str] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    @property
    def episode_count(self) -> int:
        return len(self.episodes)

    @property
    def frame_count(self) -> int:
        return sum(e["frames"] for e in self.episodes)

    def to_json(self) -> str:
        doc = {
            "height": self.height, "width": self.width,
            "categories": self.categories, "latent_dim": self.latent_dim,
            "episode_count": self.episode_count, "frame_count": self.frame_count,
            "episodes": self.episodes, "splits": self.splits,
            "palette": self.palette, "format_version": self.format_version,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(height=raw["height"], width=raw["width"], categories=raw["categories"],
                   latent_dim=raw["latent_dim"], episodes=raw["episodes"],
                   splits=raw["splits"], palette=raw["palette"],
                   format_version=raw["format_version"])
