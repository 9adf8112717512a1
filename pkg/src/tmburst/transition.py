"""Normal-mode transition rule of the constructed machine.

One simulated step is a work period of sweeps over the base colony (and,
while transferring, its drift-side neighbor):

  1        AddrReduce   rightward, reduce addresses mod Q, stamp sweep 1
  2/4/6    Decode       leftward, load the info/state codewords into head
                        registers; the simulated transition is applied at
                        the left turn
  3/5/7    Encode       rightward, write candidate j of the new state,
                        cell symbol (plus its first bit at address 0) and
                        drift onto the hold tracks
  8/9      HoldMajority per-cell majority over the three candidates,
                        committed to the live tracks, twice
  10       Reposition   leftward no-op; the committed drift track is read
                        back through a plurality stream to pick the phase
  11..16   Transfer     three independent copies of the state codeword
                        into the neighbor colony plus a per-cell majority
                        commit; direction-dependent legs, no-ops if the
                        drift is 0
  17       MoveBase     rightward walk to the new base (right drift only)

Movement goes through the zigzag rule: every zig_block forward cells the
head backtracks Z cells and returns, re-checking coordination of the
recently written region. Any coordination failure raises the alarm and
hands control to the recovery module.
"""

from __future__ import annotations

from . import cells as C
from .cells import (ADDR, DA, DD, DG, DIR, DRIFT, MODE, PS, REC, RI, RS, SW,
                    ZD, ZG, BLANK)
from .coding import symbol_codeword
from .machine import TuringMachine
from .params import Params, decode_payload

# internal stage codes
S_REDUCE, S_DECODE, S_ENCODE, S_HOLDMAJ, S_REPOS = 0, 1, 2, 3, 4
S_TCOPY, S_TRET, S_TAPP, S_TMAJ, S_MOVEBASE = 5, 6, 7, 8, 9

STAGE_NAMES = {
    S_REDUCE: "AddrReduce", S_DECODE: "Decode", S_ENCODE: "Encode",
    S_HOLDMAJ: "HoldMajority", S_REPOS: "Reposition", S_TCOPY: "TransferCopy",
    S_TRET: "TransferCopy", S_TAPP: "TransferCopy", S_TMAJ: "TransferMajority",
    S_MOVEBASE: "MoveBase",
}


def dir_of(sw: int) -> int:
    """Sweep direction: odd sweeps run right."""
    return 1 if sw % 2 == 1 else -1


def _schedule_rows(p: Params, drift: int) -> dict[int, tuple]:
    """sw -> (dir, lo, hi, stage, j) for one drift value."""
    Q = p.Q
    rows: dict[int, tuple] = {}
    for sw, stage, j in (
        (1, S_REDUCE, 0), (2, S_DECODE, 1), (3, S_ENCODE, 1),
        (4, S_DECODE, 2), (5, S_ENCODE, 2), (6, S_DECODE, 3),
        (7, S_ENCODE, 3), (8, S_HOLDMAJ, 1), (9, S_HOLDMAJ, 2),
        (10, S_REPOS, 0),
    ):
        rows[sw] = (dir_of(sw), 0, Q - 1, stage, j)
    if drift == 1:
        for sw, stage, j in ((11, S_TCOPY, 1), (12, S_TRET, 1),
                             (13, S_TCOPY, 2), (14, S_TRET, 2),
                             (15, S_TCOPY, 3), (16, S_TMAJ, 0)):
            rows[sw] = (dir_of(sw), 0, 2 * Q - 1, stage, j)
        rows[17] = (1, 0, Q, S_MOVEBASE, 0)
    elif drift == -1:
        rows[11] = (1, 0, Q - 1, S_TAPP, 1)
        for sw, stage, j in ((12, S_TCOPY, 1), (13, S_TRET, 1),
                             (14, S_TCOPY, 2), (15, S_TRET, 2),
                             (16, S_TMAJ, 3)):
            rows[sw] = (dir_of(sw), -Q, Q - 1, stage, j)
    else:
        for sw, stage, j in ((11, S_TAPP, 1), (12, S_TAPP, 1),
                             (13, S_TAPP, 2), (14, S_TAPP, 2),
                             (15, S_TAPP, 3), (16, S_TAPP, 0)):
            rows[sw] = (dir_of(sw), 0, Q - 1, stage, j)
    return rows


def build_sweep_schedule(p: Params) -> dict[int, list]:
    """Human-facing sweep table per drift: (sw, dir, lo, hi, tag)."""
    out = {}
    for drift in (-1, 0, 1):
        rows = _schedule_rows(p, drift)
        table = []
        for sw in sorted(rows):
            d, lo, hi, stage, j = rows[sw]
            if stage in (S_DECODE, S_ENCODE, S_HOLDMAJ):
                tag = f"{STAGE_NAMES[stage]}({j})"
            elif stage in (S_TCOPY, S_TRET, S_TAPP):
                tag = f"TransferCopy({j})" if sw != 16 else "TransferMajority"
            else:
                tag = STAGE_NAMES[stage]
            table.append((sw, d, lo, hi, tag))
        out[drift] = table
    return out


def maj3(a, b, c):
    if a == b or a == c:
        return a
    if b == c:
        return b
    return a


def ps_update(ps, v):
    """Two-slot plurality stream step over plain tuples."""
    if ps is None:
        ps = (None, 0, None, 0)
    v1, c1, v2, c2 = ps
    if v1 == v and c1 > 0:
        return (v1, c1 + 1, v2, c2)
    if v2 == v and c2 > 0:
        return (v1, c1, v2, c2 + 1)
    if c1 == 0:
        return (v, 1, v2, c2)
    if c2 == 0:
        return (v1, c1, v, 1)
    return (v1, c1 - 1, v2, c2 - 1)


def ps_finalize(ps):
    if ps is None:
        return None
    v1, c1, v2, c2 = ps
    if c1 >= c2:
        return v1 if c1 > 0 else None
    return v2


class M1Program:
    """Everything fixed about one constructed machine: parameters, the
    simulated machine's tables, codeword tables, and the step closure."""

    def __init__(self, params: Params, m2: TuringMachine,
                 mutations: frozenset = frozenset()):
        if (params.n_sym, params.n_state) != (len(m2.symbols), len(m2.states)):
            raise ValueError("params derived for a different machine")
        self.params = params
        self.m2 = m2
        self.mutations = frozenset(mutations)
        self.sym_cw = [symbol_codeword(params, i) for i in range(params.n_sym)]
        self.st_cw = [symbol_codeword(params, i) for i in range(params.n_state)]
        self.delta2 = dict(m2.delta)
        self.blank2 = m2.blank
        self.start2 = m2.start_state
        self.sched = {d: _schedule_rows(params, d) for d in (-1, 0, 1)}
        from .recovery import make_recovery
        self.recovery_step, self.alarm_state = make_recovery(self)
        fns = make_step(self)
        self.step = fns["step"]
        self.coordinated = fns["coordinated"]
        self.decode_window = fns["decode_window"]

    def stage_of(self, sw: int, drift: int) -> str:
        row = self.sched[drift].get(sw)
        if row is None:
            return "?"
        d, lo, hi, stage, j = row
        return STAGE_NAMES[stage]


def sweep_dir(st, a: int, b: int) -> int:
    """Movement sense of the swing rule: 0 exactly at a turn step."""
    if st[ADDR] in (a, b) and st[DIR] != 0 and st[ZD] == 0:
        return 0
    return dir_of(st[SW])


def zigzag(st, d: int, p: Params) -> tuple[int, int, int]:
    """(move, new_depth, new_zigdir) for progress direction d."""
    zd, zg, addr = st[ZD], st[ZG], st[ADDR]
    if zg == -1 and ((zd == 0 and addr % p.zig_block == 0) or 0 < zd < p.Z):
        return -d, zd + 1, (1 if zd == p.Z - 1 else -1)
    if zd > 0:
        return d, zd - 1, zg
    return d, 0, -1


def make_step(prog: M1Program):
    p = prog.params
    Q, Z, beta = p.Q, p.Z, p.beta
    zblock = p.zig_block
    cw_lo, cw_hi = p.cw_lo, p.cw_hi
    TFST, TLAST = p.TfSt, p.TransferLast
    L1 = TLAST + 1
    sched = prog.sched
    sym_cw, st_cw = prog.sym_cw, prog.st_cw
    delta2 = prog.delta2
    nsym, nstate = p.n_sym, p.n_state
    blank2, start2 = prog.blank2, prog.start2
    r = p.r
    ell = p.ell
    EMPTY = C.empty_register(p.cw_len)
    no_zig = "no_zigzag" in prog.mutations
    no_hmaj = "no_hold_majority" in prog.mutations
    no_rec = "no_recovery" in prog.mutations
    recovery_step = prog.recovery_step
    alarm_state = prog.alarm_state
    CA, CS, CD, CI, CT, CRC = C.CA, C.CS, C.CD, C.CI, C.CT, C.CRC
    H_I = (None, C.H1I, C.H2I, C.H3I)
    H_S = (None, C.H1S, C.H2S, C.H3S)
    H_D = (None, C.H1D, C.H2D, C.H3D)

    def decode_window(reg, n_values):
        """Positionwise majority over the r copies, then payload decode.

        Tolerates missing slots; a fully empty window decodes to None.
        Used at the decode turn; a corrupted register yields a garbage
        (but in-range) result at worst, which the hold majority absorbs.
        """
        if len(reg) != r * ell:
            return None
        bits = []
        for i in range(ell):
            votes = [reg[i + k * ell] for k in range(r)]
            votes = [v for v in votes if v in (0, 1)]
            if not votes:
                return None
            ones = sum(votes)
            bits.append(1 if 2 * ones > len(votes) else 0)
        return decode_payload(bits, n_values)

    def apply_transition(ri, rs_):
        a = decode_window(ri, nsym)
        g = decode_window(rs_, nstate)
        if a is None:
            a = blank2
        if g is None:
            g = start2
        return delta2[(a, g)]

    def check_unproc(c, addr, sw, drift, row):
        """Expectations for a cell the front is about to process."""
        blank = c is BLANK or c == BLANK
        if sw == 1:
            if blank or c[CS] != TLAST or c[CD] != drift:
                return False
            ca = c[CA]
            return ca == addr or (drift != 0 and ca == addr + Q * drift)
        if drift != 0 and sw == (TFST if drift == 1 else TFST + 1):
            in_nb = addr >= Q if drift == 1 else addr < 0
            if in_nb:
                if blank:
                    return True
                ca = c[CA]
                if ca is None or (ca - addr) % Q != 0:
                    return False
                cs, cd = c[CS], c[CD]
                if cs is None and cd is None:
                    return True
                if drift == 1:
                    return cs == TLAST and cd == -1
                return cs == L1 and cd == 1
        if blank:
            return False
        if c[CA] != addr or c[CS] != sw - 1:
            return False
        if sw >= TFST and c[CD] != drift:
            return False
        return True

    def check_proc(c, addr, sw, drift, lo, hi, zd):
        """Expectations for re-visited (already processed) cells."""
        if lo <= addr <= hi:
            if c is BLANK or c == BLANK:
                return False
            if c[CA] != addr or c[CS] != sw:
                return False
            if (sw == 1 or sw >= TFST) and c[CD] != drift:
                return False
            return True
        if zd == 0:
            return False
        if c is BLANK or c == BLANK:
            return True
        ca = c[CA]
        if ca is None or (ca - addr) % Q != 0:
            return False
        cs, cd = c[CS], c[CD]
        if cs is None and cd is None:
            return True
        if addr < lo:
            return cs == L1 and cd == 1
        return cs == TLAST and cd == -1

    def apply_stage(c, addr, csw, stage, jj, drift, ri, rs_, ps, da, dg, dd):
        """Process the cell under the front for the current sweep."""
        la = list(c)
        la[CA] = addr
        la[CS] = csw
        if stage == S_DECODE:
            if cw_lo <= addr < cw_hi:
                slot = addr - cw_lo
                ri = ri[:slot] + (c[CI],) + ri[slot + 1:]
                rs_ = rs_[:slot] + (c[CT],) + rs_[slot + 1:]
        elif stage == S_ENCODE:
            if cw_lo <= addr < cw_hi:
                slot = addr - cw_lo
                la[H_I[jj]] = sym_cw[da][slot] if da is not None else None
                la[H_S[jj]] = st_cw[dg][slot] if dg is not None else None
            if addr == 0:
                la[H_I[jj]] = (da & 1) if da is not None else None
            la[H_D[jj]] = dd
        elif stage == S_HOLDMAJ:
            if no_hmaj:
                la[CI], la[CT], la[CD] = c[C.H1I], c[C.H1S], c[C.H1D]
            else:
                la[CI] = maj3(c[C.H1I], c[C.H2I], c[C.H3I])
                la[CT] = maj3(c[C.H1S], c[C.H2S], c[C.H3S])
                la[CD] = maj3(c[C.H1D], c[C.H2D], c[C.H3D])
        elif stage == S_REPOS:
            if c[CD] is not None:
                ps = ps_update(ps, c[CD])
        elif stage == S_TCOPY:
            if drift == 1:
                if addr < Q:
                    if cw_lo <= addr < cw_hi:
                        slot = addr - cw_lo
                        rs_ = rs_[:slot] + (c[CT],) + rs_[slot + 1:]
                else:
                    la[CD] = 1
                    if Q + cw_lo <= addr < Q + cw_hi:
                        la[H_S[jj]] = rs_[addr - Q - cw_lo]
            else:
                if addr >= 0:
                    if cw_lo <= addr < cw_hi:
                        slot = addr - cw_lo
                        rs_ = rs_[:slot] + (c[CT],) + rs_[slot + 1:]
                else:
                    la[CD] = -1
                    if cw_lo <= addr + Q < cw_hi:
                        la[H_S[jj]] = rs_[addr + Q - cw_lo]
        elif stage == S_TMAJ:
            if drift == 1:
                if addr >= Q:
                    la[CD] = 1
                    if Q + cw_lo <= addr < Q + cw_hi:
                        la[CT] = maj3(c[C.H1S], c[C.H2S], c[C.H3S])
            elif drift == -1:
                if addr >= 0:
                    if cw_lo <= addr < cw_hi:
                        slot = addr - cw_lo
                        rs_ = rs_[:slot] + (c[CT],) + rs_[slot + 1:]
                else:
                    la[CD] = -1
                    if cw_lo <= addr + Q < cw_hi:
                        v = rs_[addr + Q - cw_lo]
                        la[C.H3S] = v
                        la[CT] = maj3(c[C.H1S], c[C.H2S], v)
        elif stage == S_TRET:
            if drift == 1 and addr >= Q:
                la[CD] = 1
            elif drift == -1 and addr < 0:
                la[CD] = -1
        return tuple(la), ri, rs_, ps

    def fail(st, c, d_hint):
        if no_rec:
            st2 = (0, st[ADDR] + d_hint, d_hint, st[DRIFT], st[SW], 0, -1,
                   st[RI], st[RS], st[DA], st[DG], st[DD], st[PS], None)
            return c, st2, d_hint
        return c, alarm_state(st), 0

    def step(st, c):
        if st[MODE]:
            return recovery_step(st, c)
        addr = st[ADDR]
        dirn = st[DIR]
        drift = st[DRIFT]
        sw = st[SW]
        zd = st[ZD]
        zg = st[ZG]

        row = None
        if (drift in (-1, 0, 1) and 0 <= zd <= Z and zg in (-1, 1)
                and dirn in (-1, 0, 1) and isinstance(addr, int)):
            row = sched[drift].get(sw)
        if row is None:
            return fail(st, c, 1)
        d, lo, hi, stage, jj = row
        if addr < lo - 4 * beta or addr > hi + 1 + 4 * beta:
            return fail(st, c, d)
        if c[CRC] != 0:
            return fail(st, c, d)

        # ---- turn step ----
        endpoint = hi if d == 1 else lo
        if addr == endpoint and dirn == d and zd == 0:
            if not check_unproc(c, addr, sw, drift, row):
                return fail(st, c, d)
            last = TLAST + (1 if drift == 1 else 0)
            resetting = sw == last
            csw = TLAST if resetting else sw
            newc, ri, rs_, ps = apply_stage(
                c, addr, csw, stage, jj, drift,
                st[RI], st[RS], st[PS], st[DA], st[DG], st[DD])
            if resetting:
                st2 = (0, 0, 0, drift, 1, 0, 1, EMPTY, EMPTY,
                       None, None, None, None, None)
                return newc, st2, 0
            nsw = sw + 1
            ndrift = drift
            da, dg, dd = st[DA], st[DG], st[DD]
            if stage == S_DECODE:
                da, dg, dd = apply_transition(ri, rs_)
            if sw == 10:
                v = ps_finalize(ps)
                if v in (-1, 0, 1):
                    ndrift = v
                ps = None
            if nsw in (2, 4, 6):
                ri = EMPTY
                rs_ = EMPTY
            elif nsw == 10:
                ps = (None, 0, None, 0)
            elif (ndrift == 1 and nsw in (11, 13, 15)) or \
                 (ndrift == -1 and nsw in (12, 14, 16)):
                rs_ = EMPTY
            st2 = (0, addr, 0, ndrift, nsw, 0, 1, ri, rs_, da, dg, dd, ps, None)
            return newc, st2, 0

        # ---- regular step ----
        processed = zd > 0 or (dirn != 0 and zg == 1)
        if processed:
            if not check_proc(c, addr, sw, drift, lo, hi, zd):
                return fail(st, c, d)
            newc = c
            ri, rs_, ps = st[RI], st[RS], st[PS]
        else:
            if not check_unproc(c, addr, sw, drift, row):
                return fail(st, c, d)
            newc, ri, rs_, ps = apply_stage(
                c, addr, sw, stage, jj, drift,
                st[RI], st[RS], st[PS], st[DA], st[DG], st[DD])

        if no_zig:
            move, zd2, zg2 = d, 0, -1
        elif zg == -1 and ((zd == 0 and addr % zblock == 0) or 0 < zd < Z):
            zg2 = 1 if zd == Z - 1 else -1
            zd2 = zd + 1
            move = -d
        else:
            if zd > 0:
                zg2, zd2 = zg, zd - 1
            else:
                zg2, zd2 = -1, 0
            move = d

        st2 = (0, addr + move, move, drift, sw, zd2, zg2, ri, rs_,
               st[DA], st[DG], st[DD], ps, None)
        return newc, st2, move

    def coordinated(st, c):
        """Normal-mode coordination predicate (alarm-worthiness check)."""
        if st[MODE]:
            return True
        addr, dirn, drift, sw = st[ADDR], st[DIR], st[DRIFT], st[SW]
        zd, zg = st[ZD], st[ZG]
        if not (drift in (-1, 0, 1) and 0 <= zd <= Z and zg in (-1, 1)
                and dirn in (-1, 0, 1) and isinstance(addr, int)):
            return False
        row = sched[drift].get(sw)
        if row is None:
            return False
        d, lo, hi, stage, jj = row
        if addr < lo - 4 * beta or addr > hi + 1 + 4 * beta or c[CRC] != 0:
            return False
        if addr == (hi if d == 1 else lo) and dirn == d and zd == 0:
            return check_unproc(c, addr, sw, drift, row)
        if zd > 0 or (dirn != 0 and zg == 1):
            return check_proc(c, addr, sw, drift, lo, hi, zd)
        return check_unproc(c, addr, sw, drift, row)

    return {"step": step, "coordinated": coordinated,
            "decode_window": decode_window}
