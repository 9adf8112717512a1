"""Generic step-function runner shared by the table machine and the
constructed machine.

A run owns (state, pos, tape) where tape maps positions to cell values
and absent positions read as the blank cell. The step function is pure:
step(state, cell) -> (cell', state', move). Faults are applied by the
noise module, which substitutes the step's output at burst steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass
class RunConfig:
    """Mutable run state for a generic step-function machine."""

    state: Any
    pos: int
    tape: dict[int, Any]
    blank: Any

    def read(self, pos: int | None = None):
        return self.tape.get(self.pos if pos is None else pos, self.blank)

    def copy(self) -> "RunConfig":
        return RunConfig(self.state, self.pos, dict(self.tape), self.blank)


@dataclass
class StepRecord:
    """Compact per-step log entry (kept only when recording is on)."""

    pos: int
    mode: int
    sw: int
    zig: int
    stage: Any
    write: tuple | None   # (pos, cell) when the cell changed


@dataclass
class RunResult:
    config: RunConfig
    steps: int
    records: list = field(default_factory=list)
    events: list = field(default_factory=list)   # (t, kind, payload)


def run_plain(step_fn: Callable, cfg: RunConfig, t_max: int,
              on_step: Callable | None = None) -> RunResult:
    """Drive step_fn for t_max steps (no faults)."""
    tape = cfg.tape
    blank = cfg.blank
    state = cfg.state
    pos = cfg.pos
    for t in range(t_max):
        cell = tape.get(pos, blank)
        cell2, state2, move = step_fn(state, cell)
        if cell2 is not cell:
            if cell2 == blank:
                tape.pop(pos, None)
            else:
                tape[pos] = cell2
        if on_step is not None:
            on_step(t, state, pos, cell2, state2, move)
        state = state2
        pos += move
    cfg.state = state
    cfg.pos = pos
    return RunResult(cfg, t_max)
