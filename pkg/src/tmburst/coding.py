"""Encoding of simulated-machine configurations onto the big machine's
tape, and the inverse decoding used by the oracle-equivalence checks.

Layout per colony of Q cells (addresses 0..Q-1 inside the colony):
  - the info codeword occupies addresses [cw_lo, cw_hi),
  - the state codeword (base colony only) occupies the same window,
  - address 0 additionally carries the first payload bit of the colony's
    symbol so the overall output can be read off the origin cell.
Payloads are little-endian, so that bit equals the symbol id's parity;
the distinguished symbols 0 and 1 get ids 0 and 1.
"""

from __future__ import annotations

from . import cells as C
from .cells import BLANK
from .codes import rep_encode, rep_decode
from .machine import Configuration, TuringMachine
from .params import Params, encode_payload, decode_payload


class EncodingError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class StructureError(ValueError):
    pass


def symbol_codeword(p: Params, value: int) -> tuple[int, ...]:
    return tuple(rep_encode(encode_payload(value, p.ell), p.r))


def _mk_cell(addr, sw, drift, info=None, state=None):
    c = [None] * C.NCELL
    c[C.CA] = addr
    c[C.CS] = sw
    c[C.CD] = drift
    c[C.CI] = info
    c[C.CT] = state
    c[C.CRC] = 0
    return c


def encode_input(x: str, p: Params, m2: TuringMachine):
    """Initial tape of the constructed machine for input x.

    Returns (head_state, pos, tape). The base colony is colony 0; its
    left neighbor mimics a just-abandoned colony of a rightward move and
    the right neighbor a just-abandoned colony of a leftward move, which
    is the posture the first work period expects to resume from.
    """
    if len(m2.symbols) != p.n_sym or len(m2.states) != p.n_state:
        raise EncodingError("params were derived for a different machine")
    if (1 << p.ell) < max(p.n_sym, p.n_state):
        raise EncodingError("payload width too small")
    Q = p.Q
    last_r = p.last(1)            # sweep stamp of left outer cells
    tlast = p.TransferLast        # sweep stamp of the base and right outer cells
    tape: dict[int, tuple] = {}

    def fill(colony: int, sw, drift):
        base = colony * Q
        for a in range(Q):
            tape[base + a] = _mk_cell(a, sw, drift)

    fill(-1, last_r, 1)
    fill(0, tlast, 1)
    fill(1, tlast, -1)
    for h in range(2, len(x)):
        fill(h, None, None)

    for h, ch in enumerate(x):
        sym = m2.symbol_id(ch)
        cw = symbol_codeword(p, sym)
        base = h * Q
        for i, bit in enumerate(cw):
            cell = list(tape[base + p.cw_lo + i])
            cell[C.CI] = bit
            tape[base + p.cw_lo + i] = cell
        cell = list(tape[base])
        cell[C.CI] = sym & 1
        tape[base] = cell

    scw = symbol_codeword(p, m2.start_state)
    for i, bit in enumerate(scw):
        cell = list(tape[p.cw_lo + i])
        cell[C.CT] = bit
        tape[p.cw_lo + i] = cell

    tape = {pos: tuple(cell) for pos, cell in tape.items()}
    return C.initial_head(p.cw_len), 0, tape


def _decode_window(values: list, p: Params, n_values: int) -> int | None:
    """Decode one codeword window; None means an all-empty (blank) slice."""
    if all(v is None for v in values):
        return None
    bits = rep_decode(values, p.r)
    clean = []
    for b in bits:
        if b not in (0, 1):
            raise DecodeError("window does not decode to a payload")
        clean.append(b)
    v = decode_payload(clean, n_values)
    if v is None:
        raise DecodeError("window decodes out of range")
    return v


def decode_config(tape: dict[int, tuple], base: int, p: Params,
                  m2: TuringMachine) -> Configuration:
    """Read the simulated configuration off the tape.

    `base` is the colony index of the base colony (its origin is base*Q).
    """
    Q = p.Q
    if not tape:
        return Configuration(m2.start_state, base, {})
    lo = min(tape) // Q
    hi = max(tape) // Q
    m2_tape: dict[int, int] = {}
    for h in range(lo, hi + 1):
        org = h * Q
        window = [
            tape.get(org + p.cw_lo + i, BLANK)[C.CI] for i in range(p.cw_len)
        ]
        sym = _decode_window(window, p, p.n_sym)
        if sym is not None and sym != m2.blank:
            m2_tape[h] = sym
    org = base * Q
    window = [tape.get(org + p.cw_lo + i, BLANK)[C.CT] for i in range(p.cw_len)]
    state = _decode_window(window, p, p.n_state)
    if state is None:
        raise DecodeError("base colony has no state codeword")
    return Configuration(state, base, m2_tape)


def decode_history(samples: list, p: Params, m2: TuringMachine) -> list:
    """Decode a fault-free run into the simulated machine's history.

    `samples` are (head, pos, tape) triples taken at every step where the
    sweep counter sits at the start of a work period (the runner collects
    them); the first sample is the initial configuration.
    """
    out = []
    for _t, head, pos, tape in samples:
        base_origin = pos - head[C.ADDR]
        if base_origin % p.Q != 0:
            raise StructureError("work-period boundary off colony alignment")
        out.append(decode_config(tape, base_origin // p.Q, p, m2))
    if not out:
        raise StructureError("no work-period boundaries found")
    return out
