"""Shared domain types for the short-video preloading simulator.

Unit conventions, used everywhere in this package:
  bitrates      kbps
  chunk sizes   kilobits (bitrate * chunk duration)
  times         seconds

Videos are indexed 0-based by their position in the recommendation list;
chunks are indexed 1-based within a video.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class BitrateLadder:
    """The discrete set of encoding bitrates a video is available at."""

    levels: tuple[int, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValueError("bitrate ladder must not be empty")
        if any(lv <= 0 for lv in levels):
            raise ValueError("bitrate ladder levels must be positive")
        if any(a >= b for a, b in zip(levels, levels[1:])):
            raise ValueError("bitrate ladder levels must be strictly ascending")

    @property
    def lowest(self) -> int:
        return self.levels[0]

    @property
    def highest(self) -> int:
        return self.levels[-1]

    def __contains__(self, bitrate) -> bool:
        return bitrate in self.levels

    def match(self, throughput_kbps) -> int:
        """Highest level not exceeding the throughput; lowest if none fits."""
        pick = self.levels[0]
        for lv in self.levels:
            if lv <= throughput_kbps:
                pick = lv
            else:
                break
        return pick

    def step_down(self, bitrate) -> int:
        """Highest level strictly below ``bitrate``, or the lowest level."""
        below = [lv for lv in self.levels if lv < bitrate]
        return below[-1] if below else self.levels[0]

    def step_up(self, bitrate) -> int:
        """Lowest level strictly above ``bitrate``, or the highest level."""
        for lv in self.levels:
            if lv > bitrate:
                return lv
        return self.levels[-1]


@dataclass(frozen=True)
class VideoSpec:
    """One recommended video, cut into equal-duration chunks."""

    id: str
    category: str
    chunk_count: int
    chunk_duration_s: float
    ladder: BitrateLadder

    def __post_init__(self):
        if self.chunk_count < 1:
            raise ValueError(f"video {self.id}: chunk_count must be >= 1")
        if self.chunk_duration_s <= 0:
            raise ValueError(f"video {self.id}: chunk_duration_s must be > 0")

    def chunk_size_kbit(self, bitrate_kbps):
        size = bitrate_kbps * self.chunk_duration_s
        isize = int(size)
        return isize if size == isize else size


@dataclass(frozen=True, slots=True)
class ChunkRef:
    """A single downloadable chunk: video position, chunk number, bitrate.

    Build through :meth:`create` so the reference is validated against the
    video it points into.
    """

    video_index: int
    chunk_index: int
    bitrate_kbps: int

    @classmethod
    def create(cls, video_index: int, chunk_index: int, bitrate_kbps: int,
               spec: VideoSpec) -> "ChunkRef":
        if video_index < 0:
            raise ValueError("video_index must be >= 0")
        if not 1 <= chunk_index <= spec.chunk_count:
            raise ValueError(
                f"chunk {chunk_index} out of range 1..{spec.chunk_count} "
                f"for video {spec.id}")
        if bitrate_kbps not in spec.ladder:
            raise ValueError(
                f"bitrate {bitrate_kbps} not in ladder {spec.ladder.levels} "
                f"of video {spec.id}")
        return cls(video_index, chunk_index, bitrate_kbps)


class PlayerBuffer:
    """Downloaded-chunk record of one player.

    Chunks are always downloaded in order, so the record is a contiguous
    prefix of the video: chunk k is present iff k <= downloaded_count.
    """

    __slots__ = ("video_index", "spec", "bitrates")

    def __init__(self, video_index: int, spec: VideoSpec):
        self.video_index = video_index
        self.spec = spec
        self.bitrates: list[int] = []

    @property
    def downloaded_count(self) -> int:
        return len(self.bitrates)

    @property
    def next_needed(self) -> int:
        return len(self.bitrates) + 1

    @property
    def is_complete(self) -> bool:
        return len(self.bitrates) >= self.spec.chunk_count

    def record_download(self, chunk_index: int, bitrate_kbps: int) -> None:
        if chunk_index != self.next_needed:
            raise ValueError(
                f"video {self.spec.id}: chunk {chunk_index} downloaded out of "
                f"order (next needed is {self.next_needed})")
        if chunk_index > self.spec.chunk_count:
            raise ValueError(
                f"video {self.spec.id}: chunk {chunk_index} beyond video end")
        if bitrate_kbps not in self.spec.ladder:
            raise ValueError(
                f"video {self.spec.id}: bitrate {bitrate_kbps} not in ladder")
        self.bitrates.append(bitrate_kbps)

    def validate(self) -> None:
        """Check the contiguous-prefix property; usable from tests."""
        if len(self.bitrates) > self.spec.chunk_count:
            raise AssertionError("more chunks recorded than the video has")
        for r in self.bitrates:
            if r not in self.spec.ladder:
                raise AssertionError(f"recorded bitrate {r} not in ladder")


@dataclass
class SessionConfig:
    """Tunable parameters of one viewing session.

    Weights w1..w3 score per-video QoE (quality, variation, rebuffering),
    w4 prices bandwidth cost against QoE in the session utility.
    """

    w1: float = 1.0
    w2: float = 1.0
    w3: float = 1.85
    w4: float = 0.5
    alpha1: float = 0.5
    alpha2: float = 0.5
    gamma1: float = 0.5
    gamma2: float = 0.8
    p_th_early: float = 0.3
    p_th_long: float = 0.1
    b0_startup_chunks: int = 1
    t_sleep_s: float = 0.5
    n_pred: int = 5
    window_chunks: int = 5
    quality_metric: str = "linear"

    def __post_init__(self):
        for name in ("w1", "w2", "w3", "w4", "alpha1", "alpha2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 < self.gamma1 < self.gamma2 <= 1:
            raise ValueError("need 0 < gamma1 < gamma2 <= 1")
        for name in ("p_th_early", "p_th_long"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.b0_startup_chunks < 1:
            raise ValueError("b0_startup_chunks must be >= 1")
        if self.t_sleep_s <= 0:
            raise ValueError("t_sleep_s must be > 0")
        if self.n_pred < 2:
            raise ValueError("n_pred must be >= 2")
        if self.window_chunks < 1:
            raise ValueError("window_chunks must be >= 1")
        if self.quality_metric not in ("linear", "log"):
            raise ValueError("quality_metric must be 'linear' or 'log'")


@dataclass
class SessionState:
    """Mutable state of one simulated session.

    ``players`` holds one PlayerBuffer per script video that has entered the
    recommendation window so far; the live window is the slice starting at
    ``current_index``. Confined to a single simulation instance.
    """

    players: list[PlayerBuffer] = field(default_factory=list)
    current_index: int = 0
    wall_clock_s: float = 0.0
    playback_started: bool = False
    play_chunk: int = 1
    chunk_begin_s: float = 0.0
    rebuffering: dict[tuple[int, int], float] = field(default_factory=dict)
    throughput_history: Optional[object] = None

    @property
    def playback_position_s(self) -> float:
        if not self.playback_started:
            return 0.0
        spec = self.players[self.current_index].spec
        t0 = spec.chunk_duration_s
        offset = min(max(self.wall_clock_s - self.chunk_begin_s, 0.0), t0)
        return (self.play_chunk - 1) * t0 + offset

    def validate(self) -> None:
        if not 0 <= self.current_index < len(self.players):
            raise AssertionError("current_index out of range")
        if self.playback_position_s < 0:
            raise AssertionError("negative playback position")
        for (v, k), s in self.rebuffering.items():
            if s < 0:
                raise AssertionError(f"negative rebuffer at video {v} chunk {k}")
        for p in self.players:
            p.validate()
