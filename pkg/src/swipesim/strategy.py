"""Preload decision strategies.

Every strategy answers one question whenever the downloader is idle: which
player's next contiguous chunk to fetch at which bitrate, or sleep. The
context passed in is a read-only snapshot of the player window (players[0]
is the one on screen) plus throughput estimates.

Buffer depth targets of the adaptive (dtaap) strategy, per video length K
and behavior thresholds k_min / k_early / k_long (while the channel cannot
sustain the lowest rung the current video is instead fed without a depth
cap and preloading drops to startup insurance):

  current video, compared against chunks buffered ahead of the playhead,
  driven by the predicted throughput c:
      c >= c_min:            1 + ceil(k_long / K)
      r_last < c <= c_min:   2 + ceil(k_long / K) - ceil(k_early / K)
      c <= r_last:           3 + ceil(k_long / K) - ceil(k_early / K)

  recommended videos, compared against total chunks downloaded, driven by
  the windowed average throughput c:
      c >= c_min:            1 + k_min
      r_last < c <= c_min:   2 + k_min - floor(k_early / (2 + k_min))
      c <= r_last:           3 + k_min - floor(k_early / (3 + k_min))

Bitrate rules: the current video steps at most one ladder level per
decision (down when starved for buffer, up when comfortably ahead and the
higher level fits the predicted throughput) and drops below the last
bitrate after a rebuffering event. Recommended videos ladder-match the
average throughput: startup chunks match whatever remains after the
current video's live chunk demand, and later chunks reserve the startup
floor of any window player still waiting for its first chunks. This
budget split keeps the worst-case swipe transition rebuffer-free whenever
the channel covers the smooth-playback bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from .core import BitrateLadder, ChunkRef, SessionConfig, VideoSpec
from .retention import RetentionThresholds
from .throughput import Regime, classify_regime

STRATEGY_NAMES = ("dtaap", "fixb", "nextone", "network", "pdas_lite")

NETWORK_REGIME_THRESHOLDS = {
    Regime.AMPLE: (2, 1),
    Regime.CONSTRAINED: (4, 2),
    Regime.STARVED: (6, 3),
}

PDAS_RETENTION_CUTOFF = 0.5

# margin over the lowest rung before the channel counts as able to sustain
# playback; guards the regime test against window-estimate noise. Must stay
# below 2.0 so a channel at the smooth-playback bound never reads as starved.
STARVED_EXIT_MARGIN = 1.9

# headroom required of the windowed average before stepping the current
# video up one rung
STEP_UP_HEADROOM = 1.2

# chunks of playhead cushion served first while starved
STARVED_PLAYHEAD_CUSHION = 3

# conditional swipe probability above which a swipe counts as imminent:
# the majority-outcome cutoff
IMMINENT_HAZARD = 0.5


@dataclass(frozen=True, slots=True)
class Download:
    """Fetch one chunk; buffered/threshold record the test that issued it."""

    chunk: ChunkRef
    buffered: Optional[int] = None
    threshold: Optional[float] = None


@dataclass(frozen=True, slots=True)
class Sleep:
    duration_s: float


Action = Union[Download, Sleep]


@dataclass(slots=True)
class PlayerView:
    """Read-only snapshot of one player for strategy decisions.

    ``buffered`` counts whole chunks not yet played out (total downloads
    for a recommended player) and drives the prefetch-depth thresholds.
    ``lead`` is the same quantity minus the consumed fraction of the
    on-screen chunk; the bitrate controller's occupancy tests use it.
    """

    spec: VideoSpec
    video_index: int
    downloaded: int
    buffered: int
    is_current: bool
    thresholds: RetentionThresholds
    swipe_cdf: tuple[float, ...]
    last_bitrate: Optional[int] = None
    lead: float = 0.0

    @property
    def chunk_count(self) -> int:
        return self.spec.chunk_count

    @property
    def ladder(self) -> BitrateLadder:
        return self.spec.ladder

    @property
    def next_needed(self) -> int:
        return self.downloaded + 1

    @property
    def complete(self) -> bool:
        return self.downloaded >= self.spec.chunk_count


@dataclass(slots=True)
class StrategyContext:
    """Snapshot handed to a strategy at each decision point.

    c_pred and c_ave are None until the first download completes; r_last is
    the bitrate of the last downloaded chunk.
    """

    players: list[PlayerView]
    c_pred: Optional[float]
    c_ave: Optional[float]
    c_min: float
    r_last: Optional[int]
    rebuffer_flag: bool
    config: SessionConfig


def _download(player: PlayerView, bitrate: int,
              threshold: Optional[float] = None) -> Download:
    ref = ChunkRef.create(player.video_index, player.next_needed, bitrate,
                          player.spec)
    return Download(ref, buffered=player.buffered, threshold=threshold)


def _warmup_action(ctx: StrategyContext) -> Optional[Action]:
    """Before any download has completed there is no throughput estimate;
    fetch the first missing chunk at the lowest rung."""
    if ctx.c_ave is not None:
        return None
    for p in ctx.players:
        if not p.complete:
            return _download(p, p.ladder.lowest, threshold=1)
    return Sleep(ctx.config.t_sleep_s)


def buffer_threshold_current(ctx: StrategyContext) -> int:
    """Chunks to keep buffered ahead of the playhead on the current video."""
    cur = ctx.players[0]
    k = cur.chunk_count
    th = cur.thresholds
    ceil_long = -(-th.k_long // k)
    ceil_early = -(-th.k_early // k)
    c = ctx.c_pred
    r_last = ctx.r_last if ctx.r_last is not None else 0
    if c >= ctx.c_min:
        return 1 + ceil_long
    if c > r_last:
        return 2 + ceil_long - ceil_early
    return 3 + ceil_long - ceil_early


def buffer_threshold_next(ctx: StrategyContext, player_index: int = 1) -> int:
    """Chunks to keep downloaded for a recommended player."""
    th = ctx.players[player_index].thresholds
    c = ctx.c_ave
    r_last = ctx.r_last if ctx.r_last is not None else 0
    if c >= ctx.c_min:
        return 1 + th.k_min
    if c > r_last:
        return 2 + th.k_min - th.k_early // (2 + th.k_min)
    return 3 + th.k_min - th.k_early // (3 + th.k_min)


def _startup_reserve(ctx: StrategyContext) -> float:
    """Bandwidth to set aside while any recommended player still lacks its
    startup chunks."""
    b0 = ctx.config.b0_startup_chunks
    for p in ctx.players[1:]:
        if not p.complete and p.downloaded < min(b0, p.chunk_count):
            return b0 * p.ladder.lowest
    return 0.0


def _current_demand(ctx: StrategyContext) -> float:
    """Per-chunk bandwidth the on-screen video keeps claiming."""
    cur = ctx.players[0]
    if cur.complete:
        return 0.0
    if cur.last_bitrate is not None:
        return cur.last_bitrate
    return cur.ladder.lowest


def _swipe_imminent(ctx: StrategyContext) -> bool:
    """Whether a swipe off the current video is the likely next event.

    The conditional swipe hazard at the playhead chunk, from the retention
    model, compared against the majority-outcome cutoff. While the hazard
    is high the bandwidth reserves that protect the swipe transition stay
    engaged; once the viewer is in a committed stretch they are released.
    """
    cur = ctx.players[0]
    k = min(max(cur.downloaded - cur.buffered + 1, 1), cur.chunk_count)
    cdf = cur.swipe_cdf
    before = cdf[k - 2] if k >= 2 else 0.0
    remaining = 1.0 - before
    if remaining <= 0.0:
        return True
    hazard = (cdf[k - 1] - before) / remaining
    return hazard > IMMINENT_HAZARD


def dtaap_bitrate(ctx: StrategyContext, player_index: int = 0) -> int:
    """Bitrate for the next chunk of the given player."""
    p = ctx.players[player_index]
    ladder = p.ladder
    cfg = ctx.config
    if p.is_current:
        # the video's own trajectory anchors hold and step decisions;
        # fall back to the globally last downloaded chunk before chunk one
        anchor = p.last_bitrate
        if anchor is None:
            anchor = ctx.r_last if ctx.r_last is not None else ladder.lowest
        if ctx.rebuffer_flag:
            pick = ladder.match(ctx.c_pred)
            if pick >= anchor:
                pick = ladder.step_down(anchor)
            return pick
        b_th = buffer_threshold_current(ctx)
        if ctx.c_pred < anchor and p.lead < cfg.gamma1 * b_th:
            return ladder.step_down(anchor)
        # step up when the buffer will sit comfortably once this chunk
        # lands, the prediction covers the higher rung, and the windowed
        # average covers it with headroom
        if ctx.c_pred > anchor and p.lead + 1.0 > cfg.gamma2 * b_th:
            target = ladder.step_up(anchor)
            reserve = _startup_reserve(ctx) if _swipe_imminent(ctx) else 0.0
            if (target <= ctx.c_pred - reserve
                    and STEP_UP_HEADROOM * target <= ctx.c_ave):
                return target
        return anchor if anchor in ladder else ladder.match(anchor)
    imminent = _swipe_imminent(ctx)
    if p.next_needed <= cfg.b0_startup_chunks:
        budget = ctx.c_ave - (_current_demand(ctx) if imminent else 0.0)
        return ladder.match(budget / cfg.b0_startup_chunks)
    reserve = _startup_reserve(ctx) if imminent else 0.0
    return ladder.match(ctx.c_ave - reserve)


def _starved(ctx: StrategyContext) -> bool:
    """True while the channel cannot sustain even the lowest rung, with a
    noise margin. In that regime depth thresholds are pointless: playback
    is download-limited, so the window is simply filled in order and no
    channel time is left idle."""
    floor = STARVED_EXIT_MARGIN * ctx.players[0].ladder.lowest
    return not (ctx.c_pred > floor and ctx.c_ave > floor)


def dtaap_decide(ctx: StrategyContext) -> Action:
    warm = _warmup_action(ctx)
    if warm is not None:
        return warm
    if _starved(ctx):
        # playhead cushion first, then startup insurance for every window
        # player, then bank the window in order; never leave channel idle
        cur = ctx.players[0]
        cushion = min(STARVED_PLAYHEAD_CUSHION, cur.chunk_count)
        if not cur.complete and cur.buffered < cushion:
            return _download(cur, dtaap_bitrate(ctx, 0), threshold=cushion)
        b0 = ctx.config.b0_startup_chunks
        for j in range(1, len(ctx.players)):
            p = ctx.players[j]
            need = min(b0, p.chunk_count)
            if not p.complete and p.downloaded < need:
                return _download(p, dtaap_bitrate(ctx, j), threshold=need)
        for j, p in enumerate(ctx.players):
            if not p.complete:
                return _download(p, dtaap_bitrate(ctx, j),
                                 threshold=p.chunk_count)
        return Sleep(ctx.config.t_sleep_s)
    cur = ctx.players[0]
    if not cur.complete:
        b_th = buffer_threshold_current(ctx)
        if cur.buffered < b_th:
            return _download(cur, dtaap_bitrate(ctx, 0), threshold=b_th)
    for j in range(1, len(ctx.players)):
        p = ctx.players[j]
        if p.complete:
            continue
        b_th = buffer_threshold_next(ctx, j)
        if p.buffered < b_th:
            return _download(p, dtaap_bitrate(ctx, j), threshold=b_th)
    return Sleep(ctx.config.t_sleep_s)


def _scan_fixed(ctx: StrategyContext, b_current: int, b_next: int) -> Action:
    """Shared scan order of the fixed-threshold baselines."""
    cur = ctx.players[0]
    if not cur.complete and cur.buffered < b_current:
        return _download(cur, cur.ladder.match(ctx.c_ave), threshold=b_current)
    for p in ctx.players[1:]:
        if not p.complete and p.buffered < b_next:
            return _download(p, p.ladder.match(ctx.c_ave), threshold=b_next)
    return Sleep(ctx.config.t_sleep_s)


def fixb_decide(ctx: StrategyContext, b_current: int = 4, b_next: int = 2) -> Action:
    if b_current < 1 or b_next < 1:
        raise ValueError("fixed buffer thresholds must be >= 1")
    warm = _warmup_action(ctx)
    if warm is not None:
        return warm
    return _scan_fixed(ctx, b_current, b_next)


def nextone_decide(ctx: StrategyContext) -> Action:
    """Finish the current video, then fill each recommended player fully."""
    warm = _warmup_action(ctx)
    if warm is not None:
        return warm
    for p in ctx.players:
        if not p.complete:
            return _download(p, p.ladder.match(ctx.c_ave),
                             threshold=p.chunk_count)
    return Sleep(ctx.config.t_sleep_s)


def networkbased_decide(ctx: StrategyContext) -> Action:
    """Fixed-style scan with thresholds scaled by the throughput regime."""
    warm = _warmup_action(ctx)
    if warm is not None:
        return warm
    regime = classify_regime(ctx.c_pred, ctx.players[0].ladder.lowest, ctx.c_min)
    b_current, b_next = NETWORK_REGIME_THRESHOLDS[regime]
    return _scan_fixed(ctx, b_current, b_next)


@lru_cache(maxsize=4096)
def _cdf_cap(swipe_cdf: tuple) -> int:
    cap = 1
    for k, mass in enumerate(swipe_cdf, start=1):
        if 1.0 - mass > PDAS_RETENTION_CUTOFF:
            cap = k
    return cap


def _retention_cap(p: PlayerView) -> int:
    """Largest chunk index the user survives past with probability > 0.5."""
    return _cdf_cap(p.swipe_cdf)


def _reach_probability(p: PlayerView, k: int) -> float:
    return 1.0 if k <= 1 else 1.0 - p.swipe_cdf[k - 2]


def pdas_lite_decide(ctx: StrategyContext) -> Action:
    """Retention-capped preloading with retention-weighted bitrates.

    Each player's buffer is capped at the last chunk the user is more
    likely than not to reach; for the current player the cap slides with
    the playhead so playback always progresses.
    """
    warm = _warmup_action(ctx)
    if warm is not None:
        return warm
    for p in ctx.players:
        if p.complete:
            continue
        cap = _retention_cap(p)
        if p.is_current:
            play_need = p.downloaded - p.buffered + 1
            cap = max(cap, play_need)
        if p.downloaded < cap:
            weighted = ctx.c_ave * _reach_probability(p, p.next_needed)
            return _download(p, p.ladder.match(weighted), threshold=cap)
    return Sleep(ctx.config.t_sleep_s)


class DtaapStrategy:
    name = "dtaap"

    def decide(self, ctx: StrategyContext) -> Action:
        return dtaap_decide(ctx)


@dataclass
class FixBStrategy:
    current_chunks: int = 4
    next_chunks: int = 2
    name: str = "fixb"

    def decide(self, ctx: StrategyContext) -> Action:
        return fixb_decide(ctx, self.current_chunks, self.next_chunks)


class NextOneStrategy:
    name = "nextone"

    def decide(self, ctx: StrategyContext) -> Action:
        return nextone_decide(ctx)


class NetworkBasedStrategy:
    name = "network"

    def decide(self, ctx: StrategyContext) -> Action:
        return networkbased_decide(ctx)


class PdasLiteStrategy:
    name = "pdas_lite"

    def decide(self, ctx: StrategyContext) -> Action:
        return pdas_lite_decide(ctx)


def make_strategy(name: str, fixb_current: int = 4, fixb_next: int = 2):
    """Build a strategy by its public name."""
    if name == "dtaap":
        return DtaapStrategy()
    if name == "fixb":
        return FixBStrategy(fixb_current, fixb_next)
    if name == "nextone":
        return NextOneStrategy()
    if name == "network":
        return NetworkBasedStrategy()
    if name == "pdas_lite":
        return PdasLiteStrategy()
    raise ValueError(f"unknown strategy {name!r}; valid names: {', '.join(STRATEGY_NAMES)}")
