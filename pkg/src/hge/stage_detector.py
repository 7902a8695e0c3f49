"""Finite-state detection of the palm-to-palm rub stage.

A detection run walks one frame stream through the phase sequence

    AwaitingTwoHands -> PalmsFacing -> Approaching -> ContactOccluded
        -> Rubbing -> Completed

with Failed reachable from every phase. Contact is inferred from the hand
count dropping from two to one while the palms were close, because trackers
lose one hand to occlusion the moment the hands touch. Rotation of the
surviving hand's velocity direction, then a sustained in-band rub
oscillation, complete the stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .config import DEFAULT_CONFIG, EngineConfig
from .errors import OutOfOrderFrame, TooFewSamples
from .features import estimate_frequency, inter_palm_distance, palm_opposition
from .frame_model import Frame, FrameStream, Handedness


class Phase(str, Enum):
    AWAITING_TWO_HANDS = "AwaitingTwoHands"
    PALMS_FACING = "PalmsFacing"
    APPROACHING = "Approaching"
    CONTACT_OCCLUDED = "ContactOccluded"
    RUBBING = "Rubbing"
    COMPLETED = "Completed"
    FAILED = "Failed"


WORKING_PHASES = (
    Phase.AWAITING_TWO_HANDS,
    Phase.PALMS_FACING,
    Phase.APPROACHING,
    Phase.CONTACT_OCCLUDED,
    Phase.RUBBING,
)


class AlertKind(str, Enum):
    PALMS_NOT_FACING = "PalmsNotFacing"


class Verdict(str, Enum):
    COMPLETED = "Completed"
    NOT_COMPLETED = "NotCompleted"


@dataclass(frozen=True)
class Event:
    """One machine-readable detector event (phase entry, alert, or outcome)."""

    timestamp_ms: int
    name: str
    detail: str = ""

    def to_line(self) -> str:
        return f"{self.timestamp_ms} {self.name} {self.detail}".rstrip()


@dataclass
class DetectorState:
    phase: Phase = Phase.AWAITING_TWO_HANDS
    phase_entry_time: int = 0
    last_inter_palm_distance: Optional[float] = None
    accumulated_rotation: float = 0.0      # degrees of net velocity-direction sweep
    rub_start_time: Optional[int] = None
    alert_log: list = field(default_factory=list)


@dataclass(frozen=True)
class StageReport:
    verdict: Verdict
    phase_timeline: tuple            # (phase, start_ms, end_ms) entries
    stage_duration_s: Optional[float]
    alerts: tuple                    # (timestamp_ms, AlertKind) entries

    def to_text(self) -> str:
        lines = [f"verdict {self.verdict.value}"]
        if self.stage_duration_s is not None:
            lines.append(f"stage_duration_s {self.stage_duration_s:.3f}")
        for phase, start, end in self.phase_timeline:
            lines.append(f"phase {phase.value} {start} {end}")
        for ts, kind in self.alerts:
            lines.append(f"alert {ts} {kind.value}")
        return "\n".join(lines) + "\n"


class Stage2Detector:
    """Sequential detector; feed frames in timestamp order via step()."""

    def __init__(self, config: EngineConfig = DEFAULT_CONFIG):
        self.config = config
        self.state = DetectorState()
        self.events: list[Event] = []
        self._entries: list = []            # (phase, entry_ts)
        self._first_ts: Optional[int] = None
        self._last_ts: Optional[int] = None
        self._terminal = False
        self._completed_ts: Optional[int] = None
        self._finished = False

        self._seen_hand = False
        self._zero_since: Optional[int] = None
        self._prev_hand_count = 0

        self._facing_since: Optional[int] = None
        self._not_facing_since: Optional[int] = None
        self._alert_armed = True

        self._dist_buf: list = []           # (ts, distance) over two-hand frames
        self._last_two_hand: Optional[tuple] = None

        self._contact_ts: Optional[int] = None
        self._surviving: Optional[Handedness] = None
        self._vel_samples: list = []
        self._net_sweep_deg = 0.0

        self._pos_buf: list = []            # (ts, palm position) of the surviving hand
        self._rub_evals = 0
        self._rub_ok = 0
        self._rub_armed = False
        self._rub_none_streak = 0

    # -- event plumbing ---------------------------------------------------

    def _emit(self, ts: int, name: str, detail: str = "") -> Event:
        ev = Event(ts, name, detail)
        self.events.append(ev)
        return ev

    def _enter(self, phase: Phase, ts: int, detail: str = ""):
        self.state.phase = phase
        self.state.phase_entry_time = ts
        self._entries.append((phase, ts))
        self._emit(ts, phase.value, detail)

    def _fail(self, ts: int, reason: str):
        self._terminal = True
        self.state.phase = Phase.FAILED
        self.state.phase_entry_time = ts
        self._emit(ts, Phase.FAILED.value, reason)

    def _complete(self, ts: int):
        self._terminal = True
        self._completed_ts = ts
        self.state.phase = Phase.COMPLETED
        self.state.phase_entry_time = ts
        duration = (ts - self._contact_ts) / 1000.0
        self._emit(ts, Phase.COMPLETED.value, f"stage_duration_s={duration:.3f}")

    # -- per-phase helpers ------------------------------------------------

    def _update_two_hand_tracking(self, frame: Frame):
        left, right = frame.hand(Handedness.LEFT), frame.hand(Handedness.RIGHT)
        if left is None or right is None:
            return None
        d = inter_palm_distance(left.palm_position, right.palm_position)
        self.state.last_inter_palm_distance = d
        self._last_two_hand = (frame.timestamp, d)
        self._dist_buf.append((frame.timestamp, d))
        horizon = frame.timestamp - self.config.approach_window_s * 1000.0
        while self._dist_buf and self._dist_buf[0][0] < horizon:
            self._dist_buf.pop(0)
        return palm_opposition(left.palm_normal, right.palm_normal, self.config)

    def _approach_slope(self) -> Optional[float]:
        if len(self._dist_buf) < 5:
            return None
        ts = np.array([t for t, _ in self._dist_buf], float) / 1000.0
        if ts[-1] - ts[0] < 0.9 * self.config.approach_window_s:
            return None
        dist = np.array([d for _, d in self._dist_buf], float)
        return float(np.polyfit(ts, dist, 1)[0])

    def _update_sweep(self, frame: Frame):
        """Net sweep of the surviving hand's velocity direction in its dominant plane.

        The plane and the whole angle history are recomputed from every
        post-contact velocity sample, so early non-rotational samples (the
        approach tail) cannot lock in a bad plane estimate.
        """
        obs = frame.hand(self._surviving) if self._surviving else None
        if obs is None:
            return
        v = np.asarray(obs.palm_velocity, float)
        if float(np.linalg.norm(v)) < self.config.sweep_min_speed_mm_s:
            return
        self._vel_samples.append(v)
        if len(self._vel_samples) < 10:
            return
        sample = np.asarray(self._vel_samples)
        _, evecs = np.linalg.eigh(sample.T @ sample)
        angles = np.degrees(np.arctan2(sample @ evecs[:, 1], sample @ evecs[:, 2]))
        deltas = np.diff(angles)
        deltas = (deltas + 180.0) % 360.0 - 180.0
        # direction reversals show as near-180 jumps; only smooth rotation counts
        smooth = np.abs(deltas) <= self.config.sweep_max_step_deg
        self._net_sweep_deg = float(deltas[smooth].sum())
        self.state.accumulated_rotation = abs(self._net_sweep_deg)

    def _rub_frequency(self) -> Optional[float]:
        cfg = self.config
        if not self._pos_buf:
            return None
        horizon = self._pos_buf[-1][0] - cfg.rub_freq_window_s * 1000.0
        recent = [(t, p) for t, p in self._pos_buf if t >= horizon]
        if len(recent) < 2:
            return None
        span_s = (recent[-1][0] - recent[0][0]) / 1000.0
        # wait for a full-length window; short windows miscount crossings
        if span_s < 0.95 * cfg.rub_freq_window_s:
            return None
        try:
            return estimate_frequency(
                np.asarray([p for _, p in recent]), [t for t, _ in recent], cfg
            )
        except TooFewSamples:
            return None

    def _evaluate_completion(self, ts: int, why: str):
        cfg = self.config
        elapsed = (ts - self._contact_ts) / 1000.0
        ok_fraction = self._rub_ok / self._rub_evals if self._rub_evals else 0.0
        sustained = self._rub_evals > 0 and ok_fraction >= cfg.rub_sustain_fraction
        in_window = cfg.stage_min_s <= elapsed <= cfg.stage_max_s + cfg.stage_max_slack_s
        if sustained and in_window:
            self._complete(ts)
        else:
            self._fail(ts, f"{why}_elapsed={elapsed:.2f}s_ok={ok_fraction:.2f}")

    # -- main state machine -----------------------------------------------

    def step(self, frame: Frame) -> list:
        """Advance the detector by one frame; returns the events it produced."""
        if self._last_ts is not None and frame.timestamp <= self._last_ts:
            raise OutOfOrderFrame(
                f"timestamp {frame.timestamp} not after previous {self._last_ts}"
            )
        if self._first_ts is None:
            self._first_ts = frame.timestamp
            if not self._terminal:
                self._enter(Phase.AWAITING_TWO_HANDS, frame.timestamp)
        self._last_ts = frame.timestamp
        if self._terminal:
            return []

        produced = len(self.events)
        ts = frame.timestamp
        cfg = self.config
        hc = frame.hand_count
        if hc:
            self._seen_hand = True

        phase = self.state.phase
        if phase in (Phase.AWAITING_TWO_HANDS, Phase.PALMS_FACING, Phase.APPROACHING):
            if hc == 0 and self._seen_hand:
                if self._zero_since is None:
                    self._zero_since = ts
                elif (ts - self._zero_since) / 1000.0 > cfg.lost_hands_timeout_s:
                    self._fail(ts, "hands_lost")
                    self._prev_hand_count = hc
                    return self.events[produced:]
            else:
                self._zero_since = None

        if phase == Phase.AWAITING_TWO_HANDS:
            opposition = self._update_two_hand_tracking(frame) if hc == 2 else None
            if opposition is None:
                self._facing_since = None
                self._not_facing_since = None
                self._alert_armed = True
            elif opposition.facing:
                self._not_facing_since = None
                self._alert_armed = True
                if self._facing_since is None:
                    self._facing_since = ts
                elif (ts - self._facing_since) / 1000.0 >= cfg.facing_dwell_s:
                    self._enter(Phase.PALMS_FACING, ts, f"facing_held={cfg.facing_dwell_s:.2f}s")
            else:
                self._facing_since = None
                if self._not_facing_since is None:
                    self._not_facing_since = ts
                elif self._alert_armed and (ts - self._not_facing_since) / 1000.0 >= cfg.not_facing_alert_s:
                    self.state.alert_log.append((ts, AlertKind.PALMS_NOT_FACING))
                    self._emit(ts, AlertKind.PALMS_NOT_FACING.value, "two_hands_not_facing")
                    self._alert_armed = False

        elif phase == Phase.PALMS_FACING:
            if hc == 2:
                self._update_two_hand_tracking(frame)
                slope = self._approach_slope()
                if slope is not None and slope <= cfg.approach_slope_mm_s:
                    self._enter(Phase.APPROACHING, ts, f"slope_mm_s={slope:.1f}")

        elif phase == Phase.APPROACHING:
            if hc == 2:
                self._update_two_hand_tracking(frame)
            elif hc == 1 and self._prev_hand_count == 2 and self._last_two_hand is not None:
                last_d = self._last_two_hand[1]
                if last_d < cfg.contact_distance_mm + cfg.contact_margin_mm:
                    self._surviving = frame.hands[0].handedness
                    self._contact_ts = ts
                    self._enter(Phase.CONTACT_OCCLUDED, ts, f"distance_mm={last_d:.1f}")
                    self._collect_contact_frame(frame)
                    self._update_sweep(frame)

        elif phase == Phase.CONTACT_OCCLUDED:
            self._collect_contact_frame(frame)
            self._update_sweep(frame)
            if self.state.accumulated_rotation >= cfg.rotation_sweep_deg:
                self.state.rub_start_time = ts
                self._enter(Phase.RUBBING, ts, f"sweep_deg={self.state.accumulated_rotation:.0f}")

        elif phase == Phase.RUBBING:
            self._collect_contact_frame(frame)
            if hc == 2:
                self._evaluate_completion(ts, "hands_reappeared")
            else:
                freq = self._rub_frequency()
                if freq is not None:
                    self._rub_none_streak = 0
                    self._rub_evals += 1
                    lo = cfg.rub_freq_min_hz - cfg.rub_freq_tolerance_hz
                    hi = cfg.rub_freq_max_hz + cfg.rub_freq_tolerance_hz
                    if lo <= freq <= hi:
                        self._rub_ok += 1
                        self._rub_armed = True
                elif self._rub_armed:
                    self._rub_none_streak += 1
                    if self._rub_none_streak >= 3:
                        self._evaluate_completion(ts, "oscillation_stopped")

        self._prev_hand_count = hc
        return self.events[produced:]

    def _collect_contact_frame(self, frame: Frame):
        obs = frame.hand(self._surviving) if self._surviving else None
        if obs is not None:
            self._pos_buf.append((frame.timestamp, np.asarray(obs.palm_position, float)))

    def finish(self) -> list:
        """Signal end of stream; evaluates the final phase. Idempotent."""
        if self._finished:
            return []
        self._finished = True
        if self._terminal or self._last_ts is None:
            return []
        produced = len(self.events)
        if self.state.phase == Phase.RUBBING:
            self._evaluate_completion(self._last_ts, "stream_ended")
        else:
            self._fail(self._last_ts, f"stream_ended_in_{self.state.phase.value}")
        return self.events[produced:]

    def report(self) -> StageReport:
        self.finish()
        end_ts = self._completed_ts if self._completed_ts is not None else self._last_ts
        timeline = []
        for k, (phase, start) in enumerate(self._entries):
            stop = self._entries[k + 1][1] if k + 1 < len(self._entries) else end_ts
            timeline.append((phase, start, stop))
        completed = self._completed_ts is not None
        duration = (self._completed_ts - self._contact_ts) / 1000.0 if completed else None
        return StageReport(
            verdict=Verdict.COMPLETED if completed else Verdict.NOT_COMPLETED,
            phase_timeline=tuple(timeline),
            stage_duration_s=duration,
            alerts=tuple(self.state.alert_log),
        )


def detect_stage2(stream: FrameStream, config: EngineConfig = DEFAULT_CONFIG) -> StageReport:
    """Run the full detection pass over a stream and return the report."""
    detector = Stage2Detector(config)
    for index, frame in enumerate(stream.frames):
        try:
            detector.step(frame)
        except OutOfOrderFrame as exc:
            raise OutOfOrderFrame(f"frame {index}: {exc}") from None
    return detector.report()


def events_to_text(events) -> str:
    return "\n".join(ev.to_line() for ev in events) + ("\n" if events else "")
