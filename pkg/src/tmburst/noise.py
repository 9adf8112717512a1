"""Fault schedules and the noisy run loop.

A burst replaces the transition's output for up to beta consecutive
steps: at each burst step the adversary supplies (cell written, next
head state, move) computed from the full current configuration. The
head cannot teleport and only the cell under it can be written, so a
burst touches at most beta cells (the island).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from . import cells as C
from .cells import BLANK, MODE, SW, ZD, DRIFT, REC
from .params import Params
from .recovery import recovery_stage
from .transition import M1Program

ADVERSARIES = ("random-garbage", "mode-flip", "sweep-flip", "edge-marker")


class ScheduleInvalid(ValueError):
    pass


@dataclass(frozen=True)
class Burst:
    t0: int
    length: int
    adversary: str = "random-garbage"
    seed: int = 0

    def to_dict(self):
        return {"t0": self.t0, "len": self.length,
                "adversary": self.adversary, "seed": self.seed}


@dataclass(frozen=True)
class FaultSchedule:
    bursts: tuple[Burst, ...]
    V: int
    seed: int | None = None

    def to_dict(self):
        return {"V": self.V, "seed": self.seed,
                "bursts": [b.to_dict() for b in self.bursts]}


def schedule_from_dict(d: dict) -> FaultSchedule:
    bursts = tuple(
        Burst(b["t0"], b["len"], b.get("adversary", "random-garbage"),
              b.get("seed", 0))
        for b in d.get("bursts", [])
    )
    return FaultSchedule(bursts=bursts, V=d.get("V", 0), seed=d.get("seed"))


def load_schedule(path) -> FaultSchedule:
    with open(path) as f:
        return schedule_from_dict(json.load(f))


def save_schedule(s: FaultSchedule, path) -> None:
    with open(path, "w") as f:
        json.dump(s.to_dict(), f, indent=1, sort_keys=True)


def validate_schedule(s: FaultSchedule, p: Params) -> bool:
    prev_end = None
    for b in s.bursts:
        if b.length < 1 or b.length > p.beta or b.t0 < 0:
            return False
        if b.adversary not in ADVERSARIES:
            return False
        if prev_end is not None and b.t0 < prev_end + s.V:
            return False
        prev_end = b.t0 + b.length
    return True


def random_schedule(seed: int, p: Params, horizon: int,
                    adversary: str = "random-garbage",
                    v: int | None = None) -> FaultSchedule:
    """Burst start times uniform subject to the spacing bound."""
    V = p.V if v is None else v
    if V is None:
        raise ScheduleInvalid("params not calibrated and no spacing given")
    rng = random.Random(seed)
    bursts = []
    t = rng.randrange(0, max(1, V))
    while t + p.beta < horizon:
        length = rng.randint(1, p.beta)
        kind = adversary
        if adversary == "mixed":
            kind = rng.choice(ADVERSARIES)
        bursts.append(Burst(t, length, kind, rng.randrange(1 << 30)))
        t = t + length + V + rng.randrange(0, max(1, V))
    return FaultSchedule(bursts=tuple(bursts), V=V, seed=seed)


# ---------------------------------------------------------------------------
# Adversaries
# ---------------------------------------------------------------------------


def _garbage_cell(rng: random.Random, p: Params) -> tuple:
    la = [None] * C.NCELL
    la[C.CA] = rng.randrange(-p.Q, 2 * p.Q)
    la[C.CS] = rng.randint(1, p.TransferLast + 1)
    la[C.CD] = rng.choice((-1, 0, 1, None))
    la[C.CI] = rng.choice((0, 1, None))
    la[C.CT] = rng.choice((0, 1, None))
    for f in (C.H1I, C.H1S, C.H2I, C.H2S, C.H3I, C.H3S):
        la[f] = rng.choice((0, 1, None))
    for f in (C.H1D, C.H2D, C.H3D):
        la[f] = rng.choice((-1, 0, 1, None))
    la[C.CRC] = rng.choice((0, 0, 1))
    la[C.CRA] = rng.randrange(0, 2 * p.E) if la[C.CRC] else None
    la[C.CRS] = rng.randrange(0, 11) if la[C.CRC] else None
    return tuple(la)


def _garbage_normal_state(rng: random.Random, p: Params) -> tuple:
    reg = tuple(rng.choice((0, 1, None)) for _ in range(p.cw_len))
    reg2 = tuple(rng.choice((0, 1, None)) for _ in range(p.cw_len))
    drift = rng.choice((-1, 0, 1))
    sw = rng.randint(1, p.last(drift))
    return (0, rng.randrange(-p.Q, 2 * p.Q), rng.choice((-1, 0, 1)), drift,
            sw, rng.randint(0, p.Z), rng.choice((-1, 1)), reg, reg2,
            rng.randrange(p.n_sym) if rng.random() < 0.5 else None,
            rng.randrange(p.n_state) if rng.random() < 0.5 else None,
            rng.choice((-1, 0, 1, None)), None, None)


def _garbage_rec_state(rng: random.Random, p: Params) -> tuple:
    from . import recovery as R
    phase = rng.choice((R.P_LOCL, R.P_LOCR, R.P_MARKL, R.P_MARKR, R.P_RCHK,
                        R.P_MOP))
    raddr = rng.randrange(0, 2 * p.E)
    if phase == R.P_LOCL:
        raddr = -rng.randrange(0, 7 * p.beta + 1)
        data = (R._S0, R._S0)
    elif phase == R.P_LOCR:
        raddr = rng.randrange(-7 * p.beta + 1, 7 * p.beta + 1)
        data = ((None, None, 0, 0), R._S0, R._S0)
    elif phase == R.P_MARKL:
        data = (rng.randrange(0, 2 * p.E),)
    elif phase == R.P_MARKR:
        data = ()
    elif phase == R.P_RCHK:
        data = ({"hist": (0,) * 18, "n_blank": 0, "n_dorm": 0, "n_bad": 0,
                 "n16m1": 0, "n17p1": 0, "sQ": R._S0},)
    else:
        legs = ((-1, 0, False, 0, 2 * p.E - 1), (1, 2 * p.E - 1, True, 0, 2 * p.E - 1))
        data = (rng.randrange(0, 2), legs)
    delta = None
    if phase == R.P_MOP:
        aq = rng.randrange(0, p.Q)
        segs = ((0, 2 * p.E, "Q", aq, p.TransferLast, -1),)
        delta = (rng.choice((-1, 0, 1)), segs, rng.randrange(0, 2 * p.E),
                 (rng.randint(1, 16), rng.choice((-1, 0, 1)),
                  rng.randrange(0, p.Q), 1, 0), rng.choice((-1, 0, 1)))
    rec = (phase, raddr, rng.randint(0, p.RecZ), rng.choice((-1, 1)), data, delta)
    return (1, 0, 0, 0, 0, 0, 1, C.empty_register(p.cw_len),
            C.empty_register(p.cw_len), None, None, None, None, rec)


def make_override(burst: Burst, prog: M1Program):
    """(step_index, state, pos, cell) -> (cell_write, new_state, move)."""
    p = prog.params
    rng = random.Random(burst.seed)
    kind = burst.adversary

    def override(_k, st, _pos, cell):
        if kind == "random-garbage":
            return (_garbage_cell(rng, p), _garbage_normal_state(rng, p),
                    rng.choice((-1, 0, 1)))
        if kind == "mode-flip":
            return cell, _garbage_rec_state(rng, p), 0
        if kind == "sweep-flip":
            st2 = list(st)
            if st2[MODE] == 0:
                sw = st2[SW] + rng.choice((-1, 1))
                st2[SW] = min(max(sw, 1), p.last(st2[DRIFT] or 0))
            return cell, tuple(st2), 0
        if kind == "edge-marker":
            la = list(cell)
            la[C.CRC] = 1
            la[C.CRA] = rng.randrange(0, 2 * p.E)
            la[C.CRS] = rng.randrange(0, 10)
            return tuple(la), st, rng.choice((-1, 0, 1))
        raise ScheduleInvalid(f"unknown adversary {kind!r}")

    return override


# ---------------------------------------------------------------------------
# The noisy run loop
# ---------------------------------------------------------------------------


@dataclass
class RunOutcome:
    head: tuple
    pos: int
    tape: dict
    steps: int
    islands: list                      # per burst: sorted cell positions
    alarms: list = field(default_factory=list)     # times alarm fired
    period_samples: list = field(default_factory=list)  # (t, head, pos, tape)
    period_times: list = field(default_factory=list)
    sweep_log: list = field(default_factory=list)  # (t, sw, stage) per turn
    origin_trace: list = field(default_factory=list)  # (t, info bit at cell 0)
    episodes: list = field(default_factory=list)
    step_log: list = field(default_factory=list)
    burst_steps: list = field(default_factory=list)


@dataclass
class DistressEpisode:
    start: int
    end: int
    extent_lo: int
    extent_hi: int
    cause: int     # burst index or -1 for a stale island

    @property
    def duration(self) -> int:
        return self.end - self.start

    @property
    def extent(self) -> int:
        return self.extent_hi - self.extent_lo + 1


def run_noisy(prog: M1Program, start, schedule: FaultSchedule | None,
              t_max: int, *, sample_periods: bool = False,
              record_steps: bool = False, check_schedule: bool = True,
              stop_after_periods: int | None = None) -> RunOutcome:
    """Drive the constructed machine under a fault schedule.

    `start` is (head, pos, tape) from coding.encode_input. The tape is
    copied; the caller's configuration is not mutated.
    """
    p = prog.params
    if schedule is None:
        schedule = FaultSchedule(bursts=(), V=p.V or 0)
    if check_schedule and not validate_schedule(schedule, p):
        raise ScheduleInvalid("schedule violates the burst/spacing bounds")
    step = prog.step
    head, pos, tape = start
    tape = dict(tape)
    bursts = sorted(schedule.bursts, key=lambda b: b.t0)
    overrides = [make_override(b, prog) for b in bursts]
    bi = 0
    out = RunOutcome(head=head, pos=pos, tape=tape, steps=0, islands=[])
    islands_uncleared: set[int] = set()
    marked: set[int] = set()
    for q, cell in tape.items():
        if cell[C.CRC] != 0:
            marked.add(q)
    episode = None          # [start, lo, hi, cause]
    periods = 0
    if sample_periods:
        out.period_samples.append((0, head, pos, dict(tape)))
        out.period_times.append(0)
    cell0 = tape.get(0, BLANK)
    out.origin_trace.append((0, cell0[C.CI]))

    CRC = C.CRC
    t = 0
    while t < t_max:
        cell = tape.get(pos, BLANK)
        in_burst = bi < len(bursts) and bursts[bi].t0 <= t < bursts[bi].t0 + bursts[bi].length
        if in_burst:
            b = bursts[bi]
            cell2, head2, move = overrides[bi](t - b.t0, head, pos, cell)
            if t == b.t0:
                out.islands.append(set())
                out.burst_steps.append((b.t0, b.t0 + b.length))
            out.islands[-1].add(pos)
            islands_uncleared.add(pos)
            if move not in (-1, 0, 1):
                move = 0
            if t + 1 == b.t0 + b.length:
                bi += 1
        else:
            cell2, head2, move = step(head, cell)

        if cell2 is not cell:
            if cell2 == BLANK:
                tape.pop(pos, None)
            else:
                tape[pos] = cell2
            if not in_burst:
                islands_uncleared.discard(pos)
            if cell2[CRC] != 0:
                marked.add(pos)
            else:
                marked.discard(pos)
            if pos == 0:
                bit = cell2[C.CI]
                if bit != out.origin_trace[-1][1]:
                    out.origin_trace.append((t + 1, bit))

        if head2[MODE] and not head[MODE]:
            out.alarms.append(t)
        if record_steps:
            out.step_log.append((pos, head[MODE], head[SW], head2[MODE]))

        # distress bookkeeping
        dist_now = (head2[MODE] == 1 or bool(marked)
                    or (pos + move) in islands_uncleared or pos in islands_uncleared)
        if episode is None:
            if dist_now:
                cause = bi if in_burst else -1
                episode = [t, pos, pos, cause]
        if episode is not None:
            if pos < episode[1]:
                episode[1] = pos
            if pos > episode[2]:
                episode[2] = pos
            if marked:
                mn, mx = min(marked), max(marked)
                if mn < episode[1]:
                    episode[1] = mn
                if mx > episode[2]:
                    episode[2] = mx
            if not dist_now:
                out.episodes.append(DistressEpisode(
                    episode[0], t + 1, episode[1], episode[2], episode[3]))
                episode = None

        # work-period boundary: the sweep counter returns to 1
        if (not in_burst and head2[MODE] == 0 and head[MODE] == 0
                and head2[SW] != head[SW]):
            out.sweep_log.append((t + 1, head2[SW],
                                  prog.stage_of(head2[SW], head2[DRIFT])))
            if head2[SW] == 1:
                periods += 1
                if sample_periods:
                    out.period_samples.append((t + 1, head2, pos + move, dict(tape)))
                out.period_times.append(t + 1)
                if stop_after_periods is not None and periods >= stop_after_periods:
                    head, pos = head2, pos + move
                    t += 1
                    break
        head = head2
        pos += move
        t += 1

    if episode is not None:
        out.episodes.append(DistressEpisode(
            episode[0], t, episode[1], episode[2], episode[3]))
    out.head, out.pos, out.tape, out.steps = head, pos, tape, t
    out.islands = [sorted(s) for s in out.islands]
    return out
