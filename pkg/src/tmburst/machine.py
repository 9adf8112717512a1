"""Generic Turing machine: explicit transition table, sparse tape, runner.

Machines never halt; runs are bounded by a step count. Symbols and
states are interned to integer ids (side tables keep the names) so that
the encoded-machine construction can treat them as small payloads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

BLANK = "_"


class MachineError(ValueError):
    pass


class UnknownState(MachineError):
    pass


class UnknownSymbol(MachineError):
    pass


class NotFinal(MachineError):
    pass


class MalformedHistory(MachineError):
    pass


@dataclass(frozen=True)
class TuringMachine:
    """Transition table plus state/alphabet sets.

    `delta` maps (symbol_id, state_id) -> (symbol_id, state_id, move) and
    must be total. Final states may move but never change the tape and
    never leave the final set.
    """

    name: str
    symbols: tuple[str, ...]          # index = symbol id; includes "_", "0", "1"
    states: tuple[str, ...]           # index = state id
    delta: dict[tuple[int, int], tuple[int, int, int]]
    start_state: int
    final_states: frozenset[int]

    def __post_init__(self):
        for s in (BLANK, "0", "1"):
            if s not in self.symbols:
                raise MachineError(f"alphabet must contain {s!r}")
        for a in range(len(self.symbols)):
            for q in range(len(self.states)):
                if (a, q) not in self.delta:
                    raise MachineError(
                        f"delta is partial: no rule for symbol "
                        f"{self.symbols[a]!r} in state {self.states[q]!r}"
                    )
        for (a, q), (a2, q2, j) in self.delta.items():
            if not (0 <= a2 < len(self.symbols)):
                raise UnknownSymbol(f"rule writes unknown symbol id {a2}")
            if not (0 <= q2 < len(self.states)):
                raise UnknownState(f"rule enters unknown state id {q2}")
            if j not in (-1, 0, 1):
                raise MachineError(f"rule moves by {j}")
            if q in self.final_states:
                if a2 != a or q2 not in self.final_states:
                    raise MachineError(
                        f"final state {self.states[q]!r} changes the tape "
                        f"or leaves the final set"
                    )

    @property
    def blank(self) -> int:
        return self.symbols.index(BLANK)

    def symbol_id(self, name: str) -> int:
        try:
            return self.symbols.index(name)
        except ValueError:
            raise UnknownSymbol(name) from None

    def state_id(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise UnknownState(name) from None


@dataclass
class Configuration:
    """State, head position, and sparse tape (blank cells are absent)."""

    state: int
    pos: int
    tape: dict[int, int] = field(default_factory=dict)

    def read(self, m: TuringMachine, pos: int | None = None) -> int:
        return self.tape.get(self.pos if pos is None else pos, m.blank)

    def copy(self) -> "Configuration":
        return Configuration(self.state, self.pos, dict(self.tape))

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.state == other.state
            and self.pos == other.pos
            and self.tape == other.tape
        )


History = list  # list[Configuration], index = time


def step(m: TuringMachine, c: Configuration) -> Configuration:
    """Apply delta once. Pure: returns a fresh Configuration."""
    if not (0 <= c.state < len(m.states)):
        raise UnknownState(f"state id {c.state}")
    a = c.tape.get(c.pos, m.blank)
    if not (0 <= a < len(m.symbols)):
        raise UnknownSymbol(f"symbol id {a} at {c.pos}")
    a2, q2, j = m.delta[(a, c.state)]
    tape = dict(c.tape)
    if a2 == m.blank:
        tape.pop(c.pos, None)
    else:
        tape[c.pos] = a2
    return Configuration(q2, c.pos + j, tape)


def initial_configuration(m: TuringMachine, x: str) -> Configuration:
    tape = {}
    for i, ch in enumerate(x):
        sid = m.symbol_id(ch)
        if sid != m.blank:
            tape[i] = sid
    return Configuration(m.start_state, 0, tape)


def run(m: TuringMachine, x: str, t_max: int) -> History:
    """History of length t_max + 1 from input x at positions 0..len(x)-1."""
    c = initial_configuration(m, x)
    h = [c]
    for _ in range(t_max):
        c = step(m, c)
        h.append(c)
    return h


def halt_time(m: TuringMachine, x: str, t_max: int) -> int | None:
    """First time the machine is in a final state, or None within t_max."""
    c = initial_configuration(m, x)
    for t in range(t_max + 1):
        if c.state in m.final_states:
            return t
        c = step(m, c)
    return None


def fault_times(m: TuringMachine, h: History) -> set[int]:
    """Times t where h violates the transition relation between t and t+1."""
    _check_history_shape(h)
    out = set()
    for t in range(len(h) - 1):
        cur, nxt = h[t], h[t + 1]
        a = cur.tape.get(cur.pos, m.blank)
        a2, q2, j = m.delta[(a, cur.state)]
        written = nxt.tape.get(cur.pos, m.blank)
        if written != a2 or nxt.state != q2 or nxt.pos - cur.pos != j:
            out.add(t)
    return out


def _check_history_shape(h: History) -> None:
    for t in range(len(h) - 1):
        cur, nxt = h[t], h[t + 1]
        if abs(nxt.pos - cur.pos) > 1:
            raise MalformedHistory(f"head jumps by {nxt.pos - cur.pos} at t={t}")
        for p in set(cur.tape) | set(nxt.tape):
            if p != cur.pos and cur.tape.get(p) != nxt.tape.get(p):
                raise MalformedHistory(f"cell {p} changes away from the head at t={t}")


def computation_result(m: TuringMachine, c: Configuration) -> str:
    """Longest (possibly empty) run of 0/1 symbols starting at position 0."""
    if c.state not in m.final_states:
        raise NotFinal(m.states[c.state])
    zero, one = m.symbol_id("0"), m.symbol_id("1")
    out = []
    p = 0
    while True:
        a = c.tape.get(p, m.blank)
        if a == zero:
            out.append("0")
        elif a == one:
            out.append("1")
        else:
            break
        p += 1
    return "".join(out)


# ---------------------------------------------------------------------------
# Machine description files
#
# One document per machine:
#     name: <word>
#     states: q0 q1 ...
#     alphabet: _ 0 1 ...
#     start: q0
#     finals: qf ...
#     delta:
#     <a> <q> <a'> <q'> <j>      (one 5-tuple per line, j in {-1, 0, +1})
# ---------------------------------------------------------------------------


def parse_machine(text: str, name: str = "machine") -> TuringMachine:
    symbols: list[str] = []
    states: list[str] = []
    start = None
    finals: list[str] = []
    rules: list[tuple[str, str, str, str, int]] = []
    in_delta = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_delta:
            parts = line.split()
            if len(parts) != 5:
                raise MachineError(f"line {lineno}: expected 5-tuple, got {line!r}")
            a, q, a2, q2, j = parts
            if j not in ("-1", "0", "+1", "1"):
                raise MachineError(f"line {lineno}: bad move {j!r}")
            rules.append((a, q, a2, q2, int(j)))
            continue
        if ":" not in line:
            raise MachineError(f"line {lineno}: expected 'key: value', got {line!r}")
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if key == "name":
            name = value
        elif key == "states":
            states = value.split()
        elif key == "alphabet":
            symbols = value.split()
        elif key == "start":
            start = value
        elif key == "finals":
            finals = value.split()
        elif key == "delta":
            in_delta = True
        else:
            raise MachineError(f"line {lineno}: unknown key {key!r}")
    if start is None or not states or not symbols:
        raise MachineError("missing states, alphabet, or start")
    sym_id = {s: i for i, s in enumerate(symbols)}
    st_id = {s: i for i, s in enumerate(states)}
    delta = {}
    for a, q, a2, q2, j in rules:
        for tok, table, what in ((a, sym_id, "symbol"), (a2, sym_id, "symbol"),
                                 (q, st_id, "state"), (q2, st_id, "state")):
            if tok not in table:
                raise MachineError(f"rule references unknown {what} {tok!r}")
        key = (sym_id[a], st_id[q])
        if key in delta:
            raise MachineError(f"duplicate rule for ({a}, {q})")
        delta[key] = (sym_id[a2], st_id[q2], j)
    return TuringMachine(
        name=name,
        symbols=tuple(symbols),
        states=tuple(states),
        delta=delta,
        start_state=st_id[start],
        final_states=frozenset(st_id[f] for f in finals),
    )


def load_machine(path) -> TuringMachine:
    from pathlib import Path

    p = Path(path)
    return parse_machine(p.read_text(), name=p.stem)


def format_machine(m: TuringMachine) -> str:
    lines = [
        f"name: {m.name}",
        "states: " + " ".join(m.states),
        "alphabet: " + " ".join(m.symbols),
        f"start: {m.states[m.start_state]}",
        "finals: " + " ".join(m.states[q] for q in sorted(m.final_states)),
        "delta:",
    ]
    for (a, q), (a2, q2, j) in sorted(m.delta.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        lines.append(
            f"{m.symbols[a]} {m.states[q]} {m.symbols[a2]} {m.states[q2]} {j:+d}".replace("+0", "0")
        )
    return "\n".join(lines) + "\n"
