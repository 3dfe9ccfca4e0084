"""Deterministic discrete-event simulation of short-video viewing sessions.

Event semantics of one session:

* Playback of a video starts once its first b0 chunks are buffered; each
  chunk then plays for its full duration in real time.
* The playhead stalls when it reaches an undownloaded chunk. Stall time is
  charged to the chunk being waited on; the wait for a freshly swiped-to
  video is charged to its first chunk. The wait before the very first
  video starts playing is startup delay, not rebuffering.
* The user swipes the instant playback of the scripted swipe chunk
  completes. The window then slides: the next video becomes current and a
  new one enters the tail. Whatever the departed video had downloaded
  stays frozen for waste accounting.
* Downloads are non-preemptive and single-channel. A swipe never cancels
  the chunk in flight; its bits count toward cost (and waste when the
  video has departed). A chunk still in flight when the session closes is
  dropped entirely.
* The strategy is consulted whenever the downloader is idle. Sleeping
  wakes at the sleep interval or the next chunk-playback boundary,
  whichever comes first.
* The session ends when the last scripted video's swipe chunk finishes
  playing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Sequence, Union

from . import metrics
from .core import PlayerBuffer, SessionConfig, SessionState, VideoSpec
from .retention import RetentionModel, derive_thresholds, swipe_cdf
from .strategy import Download, PlayerView, Sleep, StrategyContext
from .throughput import ThroughputHistory
from .trace_io import ThroughputTrace, download_finish_time


class StarvationError(RuntimeError):
    """The channel can never deliver a chunk the session still needs."""

    def __init__(self, video_index: int, chunk_index: int, wall_clock_s: float):
        self.video_index = video_index
        self.chunk_index = chunk_index
        self.wall_clock_s = wall_clock_s
        super().__init__(
            f"starved at t={wall_clock_s:.3f}s waiting for video "
            f"{video_index} chunk {chunk_index}: no bandwidth left in trace")


class SimulationError(RuntimeError):
    """A strategy or the engine violated a simulation invariant."""


@dataclass(frozen=True)
class SessionScript:
    """The scripted ground truth of one session: the ordered videos and the
    chunk at which the user swipes each one."""

    script_id: str
    videos: tuple[VideoSpec, ...]
    swipe_points: tuple[int, ...]

    def __post_init__(self):
        if not self.videos:
            raise ValueError("script must contain at least one video")
        if len(self.videos) != len(self.swipe_points):
            raise ValueError("one swipe point per video required")
        for spec, sp in zip(self.videos, self.swipe_points):
            if not 1 <= sp <= spec.chunk_count:
                raise ValueError(
                    f"swipe point {sp} out of range 1..{spec.chunk_count} "
                    f"for video {spec.id}")


@dataclass(frozen=True)
class TraceRef:
    trace_id: str
    scenario: str
    trace: ThroughputTrace


@dataclass(frozen=True)
class VideoResult:
    video_id: str
    video_index: int
    category: str
    chunk_count: int
    watched_chunks: int
    downloaded_chunks: int
    bitrates: tuple[int, ...]
    rebuffer_s: tuple[float, ...]
    qoe: float
    cost_mbit: float
    waste_mbit: float
    watched_kbit: Union[int, float]
    waste_kbit: Union[int, float]
    cost_kbit: Union[int, float]

    @property
    def rebuffer_total_s(self) -> float:
        return sum(self.rebuffer_s)


@dataclass(frozen=True)
class SessionResult:
    videos: tuple[VideoResult, ...]
    qoe_total: float
    cost_mbit_total: float
    waste_mbit_total: float
    utility: float
    wall_time_s: float
    rebuffer_total_s: float
    timeline: Optional[tuple] = None


def sample_swipe_point(behavior_traces: Sequence, chunk_count: int, rng) -> int:
    """Map a sampled observed swipe onto a video of the given length by
    percentile position."""
    tr = behavior_traces[rng.randrange(len(behavior_traces))]
    k = -(-tr.swipe_chunk * chunk_count // tr.total_chunks)
    return min(max(k, 1), chunk_count)


def sample_script(script_id: str, videos: Sequence[VideoSpec],
                  behavior_by_category: Mapping[str, Sequence], rng) -> SessionScript:
    """Draw a swipe point for every video from its category's behavior."""
    swipes = []
    for spec in videos:
        traces = behavior_by_category.get(spec.category)
        if not traces:
            raise ValueError(f"no behavior traces for category {spec.category!r}")
        swipes.append(sample_swipe_point(traces, spec.chunk_count, rng))
    return SessionScript(script_id, tuple(videos), tuple(swipes))


@lru_cache(maxsize=4096)
def _video_profile(model: RetentionModel, chunk_count: int,
                   p_th_early: float, p_th_long: float):
    thresholds = derive_thresholds(model, chunk_count, p_th_early, p_th_long)
    cdf = swipe_cdf(model, chunk_count)
    return thresholds, cdf


def _model_for(model, category: str) -> RetentionModel:
    if isinstance(model, RetentionModel):
        return model
    try:
        return model[category]
    except KeyError:
        raise ValueError(f"no retention model for category {category!r}") from None


class _Simulation:
    def __init__(self, script: SessionScript, trace: ThroughputTrace,
                 strategy, config: SessionConfig, model,
                 record_timeline: bool = False):
        self.script = script
        self.trace = trace
        self.strategy = strategy
        self.config = config
        self.n_videos = len(script.videos)
        self.state = SessionState(throughput_history=ThroughputHistory(config.window_chunks))
        self.views: list[PlayerView] = []
        for i, spec in enumerate(script.videos):
            self.state.players.append(PlayerBuffer(i, spec))
            thresholds, cdf = _video_profile(
                _model_for(model, spec.category), spec.chunk_count,
                config.p_th_early, config.p_th_long)
            self.views.append(PlayerView(
                spec=spec, video_index=i, downloaded=0, buffered=0,
                is_current=False, thresholds=thresholds, swipe_cdf=cdf))
        self.r_last: Optional[int] = None
        self.total_rebuffer = 0.0
        self.rebuffer_marker = 0.0
        self.done = False
        self.end_t = 0.0
        self.timeline: Optional[list] = [] if record_timeline else None
        self._played: set = set()
        self._win_lo = 0
        self._win_hi = 0
        self._ctx = StrategyContext(
            players=[], c_pred=None, c_ave=None, c_min=0.0, r_last=None,
            rebuffer_flag=False, config=config)
        self._rebuild_window()

    # -- window helpers --------------------------------------------------

    def _rebuild_window(self):
        st = self.state
        self._win_lo = st.current_index
        self._win_hi = min(st.current_index + self.config.n_pred, self.n_videos)
        window = []
        for i in range(self._win_lo, self._win_hi):
            view = self.views[i]
            buf = st.players[i]
            n = buf.downloaded_count
            view.downloaded = n
            view.is_current = i == st.current_index
            view.last_bitrate = buf.bitrates[-1] if n else None
            view.buffered = n
            view.lead = float(n)
            window.append(view)
        self._ctx.players = window
        # worst-case smooth-playback bound, taken at the conservative
        # lowest rung for both the current chunk and the startup chunks
        cur_ladder = window[0].ladder
        next_ladder = window[1].ladder if len(window) > 1 else cur_ladder
        self._ctx.c_min = (cur_ladder.lowest
                           + self.config.b0_startup_chunks * next_ladder.lowest)

    def _emit(self, event):
        if self.timeline is not None:
            self.timeline.append(event)

    def _emit_play(self):
        key = (self.state.current_index, self.state.play_chunk)
        if key not in self._played:
            self._played.add(key)
            self._emit(("play", self.state.wall_clock_s) + key)

    # -- decision points --------------------------------------------------

    def _build_ctx(self) -> StrategyContext:
        st = self.state
        view = self._ctx.players[0]
        n = view.downloaded
        if st.playback_started:
            view.buffered = n - (st.play_chunk - 1)
            offset = 0.0
            if st.play_chunk <= n:
                t0 = view.spec.chunk_duration_s
                offset = (st.wall_clock_s - st.chunk_begin_s) / t0
            view.lead = view.buffered - offset
        else:
            view.buffered = n
            view.lead = float(n)
        ctx = self._ctx
        history = st.throughput_history
        if history.window:
            c_ave = history.window_mean()
            ctx.c_ave = c_ave
            ctx.c_pred = (self.config.alpha1 * c_ave
                          + self.config.alpha2 * history.last_sample_kbps)
        else:
            ctx.c_ave = ctx.c_pred = None
        ctx.r_last = self.r_last
        ctx.rebuffer_flag = self.total_rebuffer > self.rebuffer_marker
        return ctx

    def _validate_download(self, action: Download):
        ref = action.chunk
        if not self._win_lo <= ref.video_index < self._win_hi:
            raise SimulationError(
                f"strategy targeted video {ref.video_index} outside the window")
        buf = self.state.players[ref.video_index]
        if buf.is_complete:
            raise SimulationError(
                f"strategy targeted completed video {ref.video_index}")
        if ref.chunk_index != buf.next_needed:
            raise SimulationError(
                f"strategy requested chunk {ref.chunk_index} of video "
                f"{ref.video_index}, next needed is {buf.next_needed}")
        if ref.bitrate_kbps not in buf.spec.ladder:
            raise SimulationError(
                f"strategy picked off-ladder bitrate {ref.bitrate_kbps}")

    # -- playback ----------------------------------------------------------

    def _stall(self, chunk: int, dt: float):
        if dt <= 0:
            return
        key = (self.state.current_index, chunk)
        st = self.state
        st.rebuffering[key] = st.rebuffering.get(key, 0.0) + dt
        self.total_rebuffer += dt

    def _advance(self, until: float):
        """Run playback forward to ``until`` against the frozen buffers."""
        st = self.state
        while st.wall_clock_s < until and not self.done:
            buf = st.players[st.current_index]
            spec = buf.spec
            n = buf.downloaded_count
            if not st.playback_started:
                if n >= min(self.config.b0_startup_chunks, spec.chunk_count):
                    st.playback_started = True
                    st.play_chunk = 1
                    st.chunk_begin_s = st.wall_clock_s
                    self._emit_play()
                    continue
                if st.current_index > 0:
                    self._stall(1, until - st.wall_clock_s)
                st.wall_clock_s = until
                return
            if st.play_chunk > n:
                self._stall(st.play_chunk, until - st.wall_clock_s)
                st.wall_clock_s = until
                return
            end_t = st.chunk_begin_s + spec.chunk_duration_s
            if end_t > until:
                st.wall_clock_s = until
                return
            st.wall_clock_s = end_t
            if st.play_chunk == self.script.swipe_points[st.current_index]:
                self._swipe()
            else:
                st.play_chunk += 1
                st.chunk_begin_s = end_t
                if st.play_chunk <= n:
                    self._emit_play()

    def _swipe(self):
        st = self.state
        self._emit(("swipe", st.wall_clock_s, st.current_index))
        st.current_index += 1
        if st.current_index >= self.n_videos:
            self.done = True
            self.end_t = st.wall_clock_s
            self._emit(("end", st.wall_clock_s))
            return
        st.playback_started = False
        st.play_chunk = 1
        self._rebuild_window()

    def _next_play_event(self) -> float:
        st = self.state
        if not st.playback_started:
            return math.inf
        if st.play_chunk > st.players[st.current_index].downloaded_count:
            return math.inf
        return st.chunk_begin_s + st.players[st.current_index].spec.chunk_duration_s

    def _apply_download(self, ref, size_kbit, elapsed_s):
        st = self.state
        buf = st.players[ref.video_index]
        buf.record_download(ref.chunk_index, ref.bitrate_kbps)
        st.throughput_history.record_download(size_kbit, elapsed_s)
        self.r_last = ref.bitrate_kbps
        if self._win_lo <= ref.video_index < self._win_hi:
            view = self.views[ref.video_index]
            n = buf.downloaded_count
            view.downloaded = n
            view.last_bitrate = ref.bitrate_kbps
            if not view.is_current:
                view.buffered = n
                view.lead = float(n)
        self._emit(("dl_done", st.wall_clock_s, ref.video_index, ref.chunk_index))
        if (st.playback_started and ref.video_index == st.current_index
                and ref.chunk_index == st.play_chunk):
            st.chunk_begin_s = st.wall_clock_s
            self._emit_play()

    # -- main loop ---------------------------------------------------------

    def run(self) -> SessionResult:
        st = self.state
        in_flight = None
        while not self.done:
            if in_flight is None:
                ctx = self._build_ctx()
                action = self.strategy.decide(ctx)
                self.rebuffer_marker = self.total_rebuffer
                if isinstance(action, Download):
                    self._validate_download(action)
                    ref = action.chunk
                    spec = st.players[ref.video_index].spec
                    size = spec.chunk_size_kbit(ref.bitrate_kbps)
                    finish = download_finish_time(self.trace, st.wall_clock_s, size)
                    if math.isinf(finish):
                        raise StarvationError(ref.video_index, ref.chunk_index,
                                              st.wall_clock_s)
                    self._emit(("dl_start", st.wall_clock_s, ref.video_index,
                                ref.chunk_index, ref.bitrate_kbps,
                                action.buffered, action.threshold))
                    in_flight = (ref, size, st.wall_clock_s, finish)
                    continue
                if not isinstance(action, Sleep) or action.duration_s <= 0:
                    raise SimulationError(f"invalid strategy action {action!r}")
                wake = st.wall_clock_s + action.duration_s
                nxt = self._next_play_event()
                if nxt < wake:
                    wake = nxt
                self._emit(("sleep", st.wall_clock_s, wake))
                self._advance(wake)
                continue
            ref, size, t0, finish = in_flight
            self._advance(finish)
            if self.done:
                break
            self._apply_download(ref, size, finish - t0)
            in_flight = None
        return self._result()

    def _result(self) -> SessionResult:
        cfg = self.config
        weights = metrics.QoEWeights(cfg.w1, cfg.w2, cfg.w3)
        videos = []
        qoes = []
        costs = []
        for i, buf in enumerate(self.state.players):
            spec = buf.spec
            watched = self.script.swipe_points[i]
            bitrates = tuple(buf.bitrates)
            rebuf = tuple(self.state.rebuffering.get((i, k), 0.0)
                          for k in range(1, watched + 1))
            qoe = metrics.qoe_video(bitrates[:watched], rebuf, weights,
                                    cfg.quality_metric)
            watched_kbit = metrics.total_kilobits(bitrates[:watched],
                                                  spec.chunk_duration_s)
            waste_kbit = metrics.total_kilobits(bitrates[watched:],
                                                spec.chunk_duration_s)
            cost_kbit = watched_kbit + waste_kbit
            videos.append(VideoResult(
                video_id=spec.id, video_index=i, category=spec.category,
                chunk_count=spec.chunk_count, watched_chunks=watched,
                downloaded_chunks=len(bitrates), bitrates=bitrates,
                rebuffer_s=rebuf, qoe=qoe,
                cost_mbit=cost_kbit / 1000.0, waste_mbit=waste_kbit / 1000.0,
                watched_kbit=watched_kbit, waste_kbit=waste_kbit,
                cost_kbit=cost_kbit))
            qoes.append(qoe)
            costs.append(cost_kbit / 1000.0)
        return SessionResult(
            videos=tuple(videos),
            qoe_total=sum(qoes),
            cost_mbit_total=sum(costs),
            waste_mbit_total=sum(v.waste_mbit for v in videos),
            utility=metrics.utility(qoes, costs, cfg.w4),
            wall_time_s=self.end_t,
            rebuffer_total_s=self.total_rebuffer,
            timeline=tuple(self.timeline) if self.timeline is not None else None)


def run_session(script: SessionScript, trace: ThroughputTrace, strategy,
                config: SessionConfig, model,
                record_timeline: bool = False) -> SessionResult:
    """Simulate one viewing session and score it."""
    return _Simulation(script, trace, strategy, config, model,
                       record_timeline).run()


@dataclass(frozen=True)
class SessionRow:
    strategy: str
    scenario: str
    script_id: str
    trace_id: str
    status: str
    qoe: Optional[float]
    cost_mbit: Optional[float]
    waste_mbit: Optional[float]
    utility: Optional[float]
    rebuffer_s: Optional[float]


@dataclass(frozen=True)
class AggregateRow:
    strategy: str
    scenario: str
    sessions: int
    starved: int
    mean_qoe: Optional[float]
    mean_cost_mbit: Optional[float]
    mean_waste_mbit: Optional[float]
    mean_utility: Optional[float]
    mean_rebuffer_s: Optional[float]
    p50_utility: Optional[float]
    p90_utility: Optional[float]


SESSION_CSV_HEADER = ("strategy,scenario,script_id,trace_id,qoe,cost_mbit,"
                      "waste_mbit,utility,rebuffer_s")
AGGREGATE_CSV_HEADER = ("strategy,scenario,sessions,starved,mean_qoe,"
                        "mean_cost_mbit,mean_waste_mbit,mean_utility,"
                        "mean_rebuffer_s,p50_utility,p90_utility")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".9g")
    return str(x)


def _percentile(sorted_vals: Sequence[float], q: float) -> float:
    n = len(sorted_vals)
    rank = max(1, math.ceil(q * n))
    return sorted_vals[rank - 1]


@dataclass(frozen=True)
class BatchReport:
    rows: tuple[SessionRow, ...]
    aggregates: tuple[AggregateRow, ...]
    seed: int

    def sessions_csv(self) -> str:
        lines = [SESSION_CSV_HEADER]
        for r in self.rows:
            lines.append(",".join([
                r.strategy, r.scenario, r.script_id, r.trace_id,
                _fmt(r.qoe), _fmt(r.cost_mbit), _fmt(r.waste_mbit),
                _fmt(r.utility), _fmt(r.rebuffer_s)]))
        return "\n".join(lines) + "\n"

    def aggregates_csv(self) -> str:
        lines = [AGGREGATE_CSV_HEADER]
        for a in self.aggregates:
            lines.append(",".join([
                a.strategy, a.scenario, str(a.sessions), str(a.starved),
                _fmt(a.mean_qoe), _fmt(a.mean_cost_mbit), _fmt(a.mean_waste_mbit),
                _fmt(a.mean_utility), _fmt(a.mean_rebuffer_s),
                _fmt(a.p50_utility), _fmt(a.p90_utility)]))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "aggregates": [vars(a).copy() for a in self.aggregates],
            "sessions": [vars(r).copy() for r in self.rows],
        }


def run_batch(scripts: Sequence[SessionScript], traces: Sequence[TraceRef],
              strategies: Sequence, config: SessionConfig, model,
              seed: int = 0) -> BatchReport:
    """Run every strategy over the scripts x traces matrix.

    Starved sessions become flagged rows with empty metrics rather than
    failing the batch. Output order is fixed by input order, so repeated
    runs are byte-identical.
    """
    if not scripts or not traces or not strategies:
        raise ValueError("scripts, traces, and strategies must be non-empty")
    rows = []
    for strat in strategies:
        for script in scripts:
            for tr in traces:
                try:
                    res = run_session(script, tr.trace, strat, config, model)
                    rows.append(SessionRow(
                        strategy=strat.name, scenario=tr.scenario,
                        script_id=script.script_id, trace_id=tr.trace_id,
                        status="ok", qoe=res.qoe_total,
                        cost_mbit=res.cost_mbit_total,
                        waste_mbit=res.waste_mbit_total,
                        utility=res.utility, rebuffer_s=res.rebuffer_total_s))
                except StarvationError:
                    rows.append(SessionRow(
                        strategy=strat.name, scenario=tr.scenario,
                        script_id=script.script_id, trace_id=tr.trace_id,
                        status="starved", qoe=None, cost_mbit=None,
                        waste_mbit=None, utility=None, rebuffer_s=None))
    scenario_order = []
    for tr in traces:
        if tr.scenario not in scenario_order:
            scenario_order.append(tr.scenario)
    aggregates = []
    for strat in strategies:
        for scenario in scenario_order:
            cell = [r for r in rows
                    if r.strategy == strat.name and r.scenario == scenario]
            ok = [r for r in cell if r.status == "ok"]
            if ok:
                utils = sorted(r.utility for r in ok)
                agg = AggregateRow(
                    strategy=strat.name, scenario=scenario,
                    sessions=len(cell), starved=len(cell) - len(ok),
                    mean_qoe=sum(r.qoe for r in ok) / len(ok),
                    mean_cost_mbit=sum(r.cost_mbit for r in ok) / len(ok),
                    mean_waste_mbit=sum(r.waste_mbit for r in ok) / len(ok),
                    mean_utility=sum(r.utility for r in ok) / len(ok),
                    mean_rebuffer_s=sum(r.rebuffer_s for r in ok) / len(ok),
                    p50_utility=_percentile(utils, 0.5),
                    p90_utility=_percentile(utils, 0.9))
            else:
                agg = AggregateRow(
                    strategy=strat.name, scenario=scenario,
                    sessions=len(cell), starved=len(cell),
                    mean_qoe=None, mean_cost_mbit=None, mean_waste_mbit=None,
                    mean_utility=None, mean_rebuffer_s=None,
                    p50_utility=None, p90_utility=None)
            aggregates.append(agg)
    return BatchReport(rows=tuple(rows), aggregates=tuple(aggregates), seed=seed)
