"""Recovery mode: alarm, locate, mark, reconstruct, plan, mop.

After an alarm the head knows nothing it can trust except what it can
re-derive from the tape. It measures a 14*beta window around the alarm
cell to find the colony-relative address and the sweep direction, snaps
a 2E recovery interval R onto the E-aligned grid, marks all of R, fits a
structural model to the marked snapshot (bounded aggregates collected in
single passes), double-checks the fitted plan, writes it onto the mark
track, verifies it again, and commits it while unmarking from both ends.

The model is at most four segments: an optional outer/blank prefix, one
or two workspace sweep segments (adjacent sweep numbers, or the pair
{1, TransferLast} at a work-period boundary), and an optional
outer/dormant/blank suffix. Anything that fits nothing re-alarms, which
moves the alarm point and therefore makes progress.

All walking is relative: Rec.Addr measures the offset from the left end
of R (from the alarm cell until R is located). Marked cells carry their
offset and the last pass that touched them; any disagreement re-alarms.
"""

from __future__ import annotations

from . import cells as C
from .cells import (ADDR, DA, DD, DG, DIR, DRIFT, MODE, PS, REC, RI, RS, SW,
                    ZD, ZG, BLANK)

# recovery phases (= Rec.Sw pass stamps)
P_LOCL, P_LOCR = 0, 1
P_MARKL, P_MARKR = 2, 3
P_RCHK, P_SIG, P_ALF, P_BET = 4, 5, 6, 7
P_PLANW, P_PLANV = 8, 9
P_MOP = 10

STAGE_OF_PHASE = {
    P_LOCL: "Marking", P_LOCR: "Marking", P_MARKL: "Marking",
    P_MARKR: "Marking", P_RCHK: "Planning1", P_SIG: "Planning1",
    P_ALF: "Planning1", P_BET: "Planning1", P_PLANW: "Planning1",
    P_PLANV: "Planning2", P_MOP: "Mopping",
}

KEEP = "keep"
_S0 = (None, 0, None, 0, 0)   # plurality stream (v1, c1, v2, c2, seen)


def _ps(st, v):
    v1, c1, v2, c2, seen = st
    seen += 1
    if v1 == v and c1 > 0:
        return (v1, c1 + 1, v2, c2, seen)
    if v2 == v and c2 > 0:
        return (v1, c1, v2, c2 + 1, seen)
    if c1 == 0:
        return (v, 1, v2, c2, seen)
    if c2 == 0:
        return (v1, c1, v, 1, seen)
    return (v1, c1 - 1, v2, c2 - 1, seen)


def _ps_val(st):
    v1, c1, v2, c2, seen = st
    if seen == 0:
        return None
    if c1 >= c2:
        return v1 if c1 > 0 else None
    return v2


def _ps_cands(st):
    """Both surviving candidates, strongest first."""
    v1, c1, v2, c2, seen = st
    out = [(v, c) for v, c in ((v1, c1), (v2, c2)) if c > 0 and v is not None]
    out.sort(key=lambda vc: -vc[1])
    return tuple(out)


def recovery_stage(rec) -> str:
    return STAGE_OF_PHASE.get(rec[0], "Marking") if rec else "Marking"


# ---------------------------------------------------------------------------
# Correction data and per-cell plans
# ---------------------------------------------------------------------------
# delta = (s, segs, front, exit, dstar)
#   s: -1 cut the left 0.4E, +1 cut the right 0.4E, 0 keep all of R
#   segs: tuple of (lo, hi, kind, p1, p2, p3); kind 'C' linear-anchored core,
#         'Q' mod-Q-anchored core, 'B' blank, 'K' keep-marked
#   front: offset of the resumption front (None for walk-out exits)
#   exit: (sw, drift, addr, zigdir, move_off)
#   dstar: drift plurality used for the head


def plan_at(delta, off: int, p) -> object:
    s, segs, front, exit_, dstar = delta
    cut = (4 * p.E) // 10
    if s == 1 and off >= 2 * p.E - cut:
        return 1
    if s == -1 and off < cut:
        return 1
    for lo, hi, kind, p1, p2, p3 in segs:
        if lo <= off < hi:
            if kind == "B":
                return ("B",)
            if kind == "K":
                return 1
            if kind == "Q":
                return ("C", (p1 + off) % p.Q, p2, p3)
            return ("C", p1 + off, p2, p3)
    return 1


def _plan_bad(plan, c) -> int:
    """1 when the cell's structural fields contradict the plan."""
    if plan == 1:
        return 0
    if plan == ("B",):
        if (c[C.CA] is None and c[C.CS] is None and c[C.CD] is None
                and c[C.CI] is None and c[C.CT] is None):
            return 0
        return 1
    _, a, s, d = plan
    if c[C.CA] != a or c[C.CS] != s:
        return 1
    if d != KEEP and c[C.CD] != d:
        return 1
    return 0


def select_model(G: dict, p) -> tuple | None:
    """Fit the segment model to the aggregates gathered over R."""
    E2 = 2 * p.E
    TL = p.TransferLast
    L1 = TL + 1
    Q = p.Q
    slack = p.Z + 6 * p.beta
    hist = G["hist"]
    n_dorm, n_blank, n_bad = G["n_dorm"], G["n_blank"], G["n_bad"]
    aQ = G["aQ"]
    top = G["top"]
    lefts = G["lefts"]
    dstars = G["dstars"]
    pfx_outl, pfx_blank = G["pfx_outl"], G["pfx_blank"]
    sfx_outr, sfx_dorm, sfx_blank = G["sfx_outr"], G["sfx_dorm"], G["sfx_blank"]
    idx = {v: i for i, v in enumerate(top)}

    def pick_dstar(i, j=None):
        d = dstars[i]
        if d is None and j is not None:
            d = dstars[j]
        return d

    def snap_edge(off):
        """Snap a measured workspace/outer boundary to a colony edge."""
        if aQ is None:
            return None
        base = (-aQ) % Q
        k = round((off - base) / Q)
        cand = base + k * Q
        if abs(cand - off) <= 8 * p.beta and 0 <= cand <= E2:
            return cand
        return None

    def unexplained(vals, use_dorm, use_blank):
        u = n_bad
        for v in range(1, 18):
            if v not in vals:
                u += hist[v]
        if not use_dorm:
            u += n_dorm
        if not use_blank:
            u += n_blank
        return u

    # Boundaries between outer/dormant territory and the workspace sit on
    # colony edges; snapping there keeps a misread of a few island cells
    # from repainting live workspace cells (which would seed new alarms).
    # Blank boundaries are free (aborted extensions end anywhere), so only
    # the strictly-blank-observed span is erased and the neighboring
    # segment absorbs the ambiguity window.
    comp_ls = [(None, 0)]
    if aQ is not None and pfx_outl > 3 * p.beta:
        ext = snap_edge(min(pfx_outl, E2))
        if ext is not None and ext > 0:
            comp_ls.append(("outl", ext))
    if pfx_blank > 3 * p.beta and G["fbp"] > 0:
        comp_ls.append(("blank", min(G["fbp"], E2)))
    comp_rs = [(None, 0)]
    if aQ is not None and sfx_outr > 3 * p.beta:
        ext = snap_edge(E2 - min(sfx_outr, E2))
        if ext is not None and ext < E2:
            comp_rs.append(("outr", E2 - ext))
    if aQ is not None and sfx_dorm > 3 * p.beta:
        ext = snap_edge(E2 - min(sfx_dorm, E2))
        if ext is not None and ext < E2:
            comp_rs.append(("dorm", E2 - ext))
    if sfx_blank > 3 * p.beta and G["fbs"] > 0:
        comp_rs.append(("blank", min(G["fbs"], E2)))
    # raw (unsnapped) suffix options for the extension seam, whose boundary
    # is the extension front itself; the resumed sweep re-conquers whatever
    # the tolerance misjudged
    seam_rs = [(k, min(e, E2)) for k, e in
               (("outr", sfx_outr), ("dorm", sfx_dorm), ("blank", sfx_blank))
               if e > 3 * p.beta]
    seam_ls = [(k, min(e, E2)) for k, e in
               (("outl", pfx_outl), ("blank", pfx_blank)) if e > 3 * p.beta]

    def comp_seg(kind, lo, hi):
        if kind == "outl":
            return (lo, hi, "Q", aQ, L1, 1)
        if kind == "outr":
            return (lo, hi, "Q", aQ, TL, -1)
        if kind == "dorm":
            return (lo, hi, "Q", aQ, None, None)
        return (lo, hi, "B", None, None, None)

    best = None

    def consider(priority, unexpl, delta):
        nonlocal best
        key = (priority, unexpl)
        if best is None or key < best[0]:
            best = (key, delta)

    vals = [v for v in top if hist[v] > 0]

    acands = G["acands"]

    def match_anchors(i, j, rel):
        """First candidate pair satisfying the frame relation."""
        for av, _ in acands[i]:
            for bv, _ in acands[j]:
                if rel(av, bv):
                    return av, bv
        return None

    # -- two adjacent workspace segments ------------------------------------
    for x in vals:
        for y in vals:
            if x == y:
                continue
            mx, my = hist[x], hist[y]
            lx, ly = lefts[idx[x]], lefts[idx[y]]
            if lx * my < ly * mx:
                continue          # require x concentrated left of y
            dstar0 = pick_dstar(idx[x], idx[y])
            if x == y + 1 and x % 2 == 1:
                pick = match_anchors(idx[x], idx[y], lambda a, b: a == b)
                if pick is None:
                    continue
                ax, ay = pick
                cur_sw, front_kind, a_cur = x, 0, ax
            elif y == x + 1 and y % 2 == 0:
                pick = match_anchors(idx[x], idx[y], lambda a, b: a == b)
                if pick is None:
                    continue
                ax, ay = pick
                cur_sw, front_kind, a_cur = y, -1, ay
            elif x == 1 and y == TL:
                # ahead cells of sweep 1 keep the previous period's frame,
                # displaced by Q times the previous drift (or already
                # reduced, as in the starting configuration)
                if dstar0 in (-1, 0, 1):
                    rel = lambda a, b: (b - a) in (0, Q * dstar0)
                else:
                    rel = lambda a, b: (b - a) in (-Q, 0, Q)
                pick = match_anchors(idx[x], idx[y], rel)
                if pick is None:
                    continue
                ax, ay = pick
                cur_sw, front_kind, a_cur = 1, 0, ax
            else:
                continue
            for clc, cle in comp_ls:
                for crc, cre in comp_rs:
                    wl, wr = cle, E2 - cre
                    if wr - wl < 8 * p.beta:
                        continue
                    model_vals = {x, y}
                    if clc == "outl":
                        model_vals.add(L1)
                    if crc == "outr":
                        model_vals.add(TL)
                    u = unexplained(model_vals, crc == "dorm",
                                    clc == "blank" or crc == "blank")
                    if u > slack:
                        continue
                    split = min(wl + mx, wr)
                    front = split + front_kind
                    if not (wl <= front < wr):
                        continue
                    dstar = dstar0
                    # drift is committed colony-wide before the transfer
                    # phase, so it is majority-repairable from TfSt-1 on
                    dr = dstar if (max(x, y) >= p.TfSt or 1 in (x, y)) else KEEP
                    segs = []
                    if cle:
                        segs.append(comp_seg(clc, 0, wl))
                    segs.append((wl, split, "C", ax, x, dr))
                    segs.append((split, wr, "C", ay, y, dr))
                    if cre:
                        segs.append(comp_seg(crc, wr, E2))
                    ex_dr = dstar if dstar in (-1, 0, 1) else 0
                    exit_ = (cur_sw, ex_dr, a_cur + front, -1, 0)
                    consider(0, u, (0, tuple(segs), front, exit_, dstar))

    # -- transfer-extension seam: first copy sweep meeting old territory -----
    for x in vals:
        dx = 1 if x % 2 == 1 else -1
        if x != (p.TfSt if dx == 1 else p.TfSt + 1):
            continue
        if not acands[idx[x]]:
            continue
        ax = acands[idx[x]][0][0]
        if dx == 1:
            for crc, cre in seam_rs:
                wl, wr = 0, E2 - cre
                if wr < 8 * p.beta or wr >= E2:
                    continue
                model_vals = {x} | ({TL} if crc == "outr" else set())
                u = unexplained(model_vals, crc == "dorm", crc == "blank")
                if u > slack:
                    continue
                segs = [(wl, wr, "C", ax, x, 1), comp_seg(crc, wr, E2)]
                exit_ = (x, 1, ax + wr, -1, 0)
                consider(0, u, (0, tuple(segs), wr, exit_, 1))
        else:
            for clc, cle in seam_ls:
                wl, wr = cle, E2
                if E2 - wl < 8 * p.beta or wl < 1:
                    continue
                model_vals = {x} | ({L1} if clc == "outl" else set())
                u = unexplained(model_vals, False, clc == "blank")
                if u > slack:
                    continue
                segs = [comp_seg(clc, 0, wl), (wl, wr, "C", ax, x, -1)]
                exit_ = (x, -1, ax + wl - 1, -1, 0)
                consider(0, u, (0, tuple(segs), wl - 1, exit_, -1))

    # -- one uniform workspace segment ---------------------------------------
    for x in vals:
        if not acands[idx[x]]:
            continue
        ax = acands[idx[x]][0][0]
        if x == L1 or (x == TL and 2 * G["n16m1"] > hist[TL]):
            continue              # outer-patterned: the mod-Q models handle it
        for clc, cle in comp_ls:
            for crc, cre in comp_rs:
                wl, wr = cle, E2 - cre
                if wr - wl < 8 * p.beta:
                    continue
                model_vals = {x}
                if clc == "outl":
                    model_vals.add(L1)
                if crc == "outr":
                    model_vals.add(TL)
                u = unexplained(model_vals, crc == "dorm",
                                clc == "blank" or crc == "blank")
                if u > slack:
                    continue
                d = 1 if x % 2 == 1 else -1
                dstar = pick_dstar(idx[x])
                dr = dstar if x >= p.TfSt else KEEP
                segs = []
                if cle:
                    segs.append(comp_seg(clc, 0, wl))
                segs.append((wl, wr, "C", ax, x, dr))
                if cre:
                    segs.append(comp_seg(crc, wr, E2))
                ex_dr = dstar if dstar in (-1, 0, 1) else 0
                if d == 1:
                    exit_ = (x, ex_dr, ax + E2, 1, E2)
                    consider(1, u, (1, tuple(segs), None, exit_, dstar))
                else:
                    exit_ = (x, ex_dr, ax, 1, 0)
                    consider(1, u, (-1, tuple(segs), None, exit_, dstar))

    # -- no workspace at all --------------------------------------------------
    if aQ is not None:
        if pfx_outl >= E2 - slack:
            u = unexplained({L1}, False, False)
            if u <= slack:
                segs = ((0, E2, "Q", aQ, L1, 1),)
                exit_ = (L1, 1, (aQ + E2) % Q, 1, E2)
                consider(2, u, (1, segs, None, exit_, 1))
        if sfx_outr >= E2 - slack:
            u = unexplained({TL}, False, False)
            if u <= slack:
                segs = ((0, E2, "Q", aQ, TL, -1),)
                exit_ = (TL, -1, aQ % Q, 1, 0)
                consider(2, u, (-1, segs, None, exit_, -1))
        if sfx_dorm >= E2 - slack or n_dorm >= E2 - slack:
            u = unexplained(set(), True, False)
            if u <= slack:
                segs = ((0, E2, "Q", aQ, None, None),)
                exit_ = (TL, -1, aQ % Q, 1, 0)
                consider(2, u, (-1, segs, None, exit_, -1))
    if n_blank >= E2 - slack:
        u = unexplained(set(), False, True)
        if u <= slack:
            segs = ((0, E2, "B", None, None, None),)
            exit_ = (TL, -1, (aQ or 0) % Q, 1, 0)
            consider(3, u, (-1, segs, None, exit_, -1))

    return best[1] if best else None


# ---------------------------------------------------------------------------
# The stage machine
# ---------------------------------------------------------------------------


def make_recovery(prog):
    p = prog.params
    Q, E, beta = p.Q, p.E, p.beta
    E2 = 2 * E
    RZ = p.RecZ
    rblock = p.rec_block
    EMPTY = C.empty_register(p.cw_len)
    CA, CS, CD, CI, CT = C.CA, C.CS, C.CD, C.CI, C.CT
    CRC, CRA, CRS = C.CRC, C.CRA, C.CRS
    W = 7 * beta

    def alarm_state(_st):
        rec = (P_LOCL, 0, 0, -1, (_S0, _S0), None)
        return (1, 0, 0, 0, 0, 0, 1, EMPTY, EMPTY, None, None, None, None, rec)

    def head(rec):
        return (1, 0, 0, 0, 0, 0, 1, EMPTY, EMPTY, None, None, None, None, rec)

    def stamp(c, raddr, phase, crc=None):
        la = list(c)
        if crc is not None:
            la[CRC] = crc
        elif la[CRC] == 0:
            la[CRC] = 1
        la[CRA] = raddr
        la[CRS] = phase
        return tuple(la)

    def fresh_alarm(c, move=0):
        return c, alarm_state(None), move

    def locate_finish(rec, c):
        """End of the right locate leg: pick z1, rebase, start marking."""
        raddr = rec[1]
        lamL, sigL, seenAL, seenSL = rec[4][0]
        sA, sS = rec[4][1], rec[4][2]
        lamR = _ps_val(sA) if sA[4] >= 4 * beta else None
        sigR = _ps_val(sS) if sS[4] >= 4 * beta else None
        if lamL is None and lamR is None:
            return fresh_alarm(c, 1)
        if lamL is None:
            lam = lamR
        elif lamR is None:
            lam = lamL
        else:
            lam = lamL if seenAL >= sA[4] else lamR
        if not isinstance(lam, int):
            return fresh_alarm(c, 1)
        lam %= Q
        if sigL is None and sigR is None:
            dlt = 1
        elif sigL is None:
            dlt = -1            # structure only on the right: front is left
        elif sigR is None:
            dlt = 1
        else:
            hi_ = max(sigL, sigR)
            if abs(sigL - sigR) <= 1:
                dlt = 1 if hi_ % 2 == 1 else -1
            elif {sigL, sigR} & {1} and hi_ >= p.TfSt:
                dlt = 1
            else:
                dlt = 1 if hi_ % 2 == 1 else -1
        xmod = lam % E
        fifth = E // 5
        if xmod < fifth:
            z1_off = -xmod
        elif E - xmod < fifth:
            z1_off = E - xmod
        else:
            z1_off = (E - xmod) if dlt == 1 else -xmod
        z0_off = z1_off - E          # offset of z0 from the alarm cell
        new_raddr = raddr - z0_off   # we stand at x + raddr (x-relative)
        if not (0 <= new_raddr < E2):
            return fresh_alarm(c, 1)
        rec2 = (P_MARKL, new_raddr, 0, -1, (new_raddr,), None)
        return stamp(c, new_raddr, P_MARKL), head(rec2), 0

    def build_mop_legs(delta):
        s, segs, front, exit_, dstar = delta
        if s == 1:
            return ((-1, 0, False, 0, E2 - 1), (1, E2 - 1, True, 0, E2 - 1))
        if s == -1:
            return ((-1, 0, True, 0, E2 - 1),)
        d_hat = 1 if exit_[0] % 2 == 1 else -1
        f = front
        if d_hat == 1:
            legs = [(-1, 0, False, 0, E2 - 1)]
            if f > 0:
                legs.append((1, f - 1, True, 0, f - 1))
            legs.append((1, E2 - 1, False, f, E2 - 1))
            legs.append((-1, f, True, f, E2 - 1))
        else:
            legs = []
            if f < E2 - 1:
                legs.append((-1, f + 1, True, f + 1, E2 - 1))
            legs.append((-1, 0, False, 0, f))
            legs.append((1, f, True, 0, f))
        return tuple(legs)

    def exit_head(delta, committed_cell, move_off):
        sw_e, dr_e, addr_e, zg_e, _off = delta[3]
        d = 1 if sw_e % 2 == 1 else -1
        st = (0, addr_e, d, dr_e, sw_e, 0, zg_e, EMPTY, EMPTY,
              None, None, None, None, None)
        return committed_cell, st, move_off

    def commit(c, plan):
        if plan == ("B",):
            return BLANK
        la = list(c)
        if plan != 1:
            _, a, s, d = plan
            la[CA] = a
            la[CS] = s
            if d != KEEP:
                la[CD] = d
        la[CRC] = 0
        la[CRA] = None
        la[CRS] = None
        return tuple(la)

    def zig_move(phase_dir, raddr, rzd, rzg, clamp_lo, clamp_hi):
        """Recovery zigzag, clamped inside the already-walked range."""
        if rzg == -1 and ((rzd == 0 and raddr % rblock == 0) or 0 < rzd < RZ):
            back = raddr - phase_dir
            if clamp_lo <= back <= clamp_hi:
                return -phase_dir, rzd + 1, (1 if rzd == RZ - 1 else -1)
            if rzd > 0:
                return phase_dir, rzd - 1, 1
            return phase_dir, 0, -1
        if rzd > 0:
            return phase_dir, rzd - 1, rzg
        return phase_dir, 0, -1

    def recovery_step(st, c):
        rec = st[REC]
        if not (isinstance(rec, tuple) and len(rec) == 6):
            return fresh_alarm(c)
        phase, raddr, rzd, rzg, data, delta = rec
        if not isinstance(raddr, int) or raddr < -(E2 + 2 * W) or raddr > 2 * E2:
            return fresh_alarm(c)
        if not isinstance(rzd, int) or not (0 <= rzd <= RZ) or rzg not in (-1, 1):
            return fresh_alarm(c)

        # ---- locate ----
        if phase == P_LOCL:
            if not (isinstance(data, tuple) and len(data) == 2):
                return fresh_alarm(c)
            sA, sS = data
            if not (-W <= raddr <= 0):
                return fresh_alarm(c)
            if raddr < 0:
                if c[CA] is not None and isinstance(c[CA], int):
                    sA = _ps(sA, (c[CA] - raddr) % Q)
                if c[CS] is not None and isinstance(c[CS], int):
                    sS = _ps(sS, c[CS])
            newc = stamp(c, raddr, P_LOCL)
            if raddr == -W:
                lamL = _ps_val(sA) if sA[4] >= 4 * beta else None
                sigL = _ps_val(sS) if sS[4] >= 4 * beta else None
                rec2 = (P_LOCR, raddr + 1, 0, -1,
                        ((lamL, sigL, sA[4], sS[4]), _S0, _S0), None)
                return newc, head(rec2), 1
            rec2 = (P_LOCL, raddr - 1, 0, -1, (sA, sS), None)
            return newc, head(rec2), -1

        if phase == P_LOCR:
            if not (isinstance(data, tuple) and len(data) == 3):
                return fresh_alarm(c)
            left, sA, sS = data
            if not (isinstance(left, tuple) and len(left) == 4):
                return fresh_alarm(c)
            if not (-W < raddr <= W):
                return fresh_alarm(c)
            if 0 <= raddr < W:
                if c[CA] is not None and isinstance(c[CA], int):
                    sA = _ps(sA, (c[CA] - raddr) % Q)
                if c[CS] is not None and isinstance(c[CS], int):
                    sS = _ps(sS, c[CS])
            newc = stamp(c, raddr, P_LOCR)
            rec2 = (P_LOCR, raddr, 0, -1, (left, sA, sS), None)
            if raddr == W:
                return locate_finish(rec2, newc)
            rec2 = (P_LOCR, raddr + 1, 0, -1, (left, sA, sS), None)
            return newc, head(rec2), 1

        # ---- from here on raddr is the offset from z0 ----
        if not (0 <= raddr < E2):
            return fresh_alarm(c)

        marked = c[CRC] != 0
        off_ok = marked and c[CRA] == raddr

        if phase in (P_MARKL, P_MARKR):
            if not (isinstance(data, tuple) and len(data) <= 1):
                return fresh_alarm(c)
            pd = -1 if phase == P_MARKL else 1
            start = data[0] if data else 0
            clamp_lo, clamp_hi = (0, start) if phase == P_MARKL else (0, E2 - 1)
            if rzd > 0 or rzg == 1:
                # re-checking freshly marked cells
                if not (off_ok and c[CRS] == phase):
                    return fresh_alarm(c)
                newc = c
            else:
                newc = stamp(c, raddr, phase)
            target = 0 if phase == P_MARKL else E2 - 1
            if raddr == target and rzd == 0 and rzg == -1:
                if phase == P_MARKL:
                    rec2 = (P_MARKR, raddr, 0, -1, (), None)
                else:
                    gather = {
                        "hist": (0,) * 18, "n_blank": 0, "n_dorm": 0,
                        "n_bad": 0, "n16m1": 0, "n17p1": 0, "sQ": _S0,
                    }
                    rec2 = (P_RCHK, raddr, 0, -1, (gather,), None)
                return newc, head(rec2), 0
            mv, rzd2, rzg2 = zig_move(pd, raddr, rzd, rzg, clamp_lo, clamp_hi)
            rec2 = (phase, raddr + mv, rzd2, rzg2, data, None)
            return newc, head(rec2), mv

        # ---- straight aggregate passes ----
        if phase == P_RCHK:
            if not (isinstance(data, tuple) and len(data) == 1
                    and isinstance(data[0], dict)):
                return fresh_alarm(c)
            if not (off_ok and c[CRS] in (P_MARKR, P_MARKL)):
                return fresh_alarm(c)
            g = dict(data[0])
            cs, cd, ca = c[CS], c[CD], c[CA]
            blankish = (ca is None and cs is None and cd is None
                        and c[CI] is None and c[CT] is None)
            if blankish:
                g["n_blank"] += 1
            elif ca is not None and cs is None and cd is None:
                g["n_dorm"] += 1
            if isinstance(cs, int) and 1 <= cs <= 17:
                h = list(g["hist"])
                h[cs] += 1
                g["hist"] = tuple(h)
                if cs == p.TransferLast and cd == -1:
                    g["n16m1"] += 1
                if cs == p.TransferLast + 1 and cd == 1:
                    g["n17p1"] += 1
            elif cs is not None:
                g["n_bad"] += 1
            if isinstance(ca, int):
                g["sQ"] = _ps(g["sQ"], (ca - raddr) % Q)
            newc = stamp(c, raddr, P_RCHK)
            if raddr == 0:
                hist = g["hist"]
                order = sorted(range(1, 18), key=lambda v: (-hist[v], v))
                top = tuple(v for v in order[:3] if hist[v] > 0)
                g["top"] = top
                g["aQ"] = _ps_val(g["sQ"])
                sig = {
                    "g": g, "cum_ol": 0, "cum_bl": 0,
                    "pfx_outl": E2, "pfx_blank": E2, "fbp": E2,
                    "sa": (_S0,) * 3, "lefts": (0, 0, 0), "sd": (_S0,) * 3,
                }
                rec2 = (P_SIG, raddr, 0, -1, (sig,), None)
                return newc, head(rec2), 0
            rec2 = (P_RCHK, raddr - 1, 0, -1, (g,), None)
            return newc, head(rec2), -1

        if phase == P_SIG:
            if not (isinstance(data, tuple) and len(data) == 1
                    and isinstance(data[0], dict)):
                return fresh_alarm(c)
            if not (off_ok and c[CRS] == P_RCHK):
                return fresh_alarm(c)
            s = dict(data[0])
            g = s["g"]
            top = g["top"]
            cs, cd, ca = c[CS], c[CD], c[CA]
            blankish = (ca is None and cs is None and cd is None
                        and c[CI] is None and c[CT] is None)
            outl = (cs == p.TransferLast + 1 and cd == 1)
            if not outl and s["pfx_outl"] == E2:
                s["cum_ol"] += 1
                if s["cum_ol"] > 3 * beta:
                    s["pfx_outl"] = raddr
            if not blankish:
                if s["fbp"] == E2:
                    s["fbp"] = raddr
                if s["pfx_blank"] == E2:
                    s["cum_bl"] += 1
                    if s["cum_bl"] > 3 * beta:
                        s["pfx_blank"] = raddr
            if cs in top:
                i = top.index(cs)
                if isinstance(ca, int):
                    sa = list(s["sa"])
                    sa[i] = _ps(sa[i], ca - raddr)
                    s["sa"] = tuple(sa)
                if raddr < E:
                    lf = list(s["lefts"])
                    lf[i] += 1
                    s["lefts"] = tuple(lf)
                if cd is not None:
                    sd = list(s["sd"])
                    sd[i] = _ps(sd[i], cd)
                    s["sd"] = tuple(sd)
            newc = stamp(c, raddr, P_SIG)
            if raddr == E2 - 1:
                alf = {
                    "s": s, "cum_or": 0, "cum_dm": 0, "cum_bl": 0,
                    "sfx_outr": E2, "sfx_dorm": E2, "sfx_blank": E2, "fbs": E2,
                }
                rec2 = (P_ALF, raddr, 0, -1, (alf,), None)
                return newc, head(rec2), 0
            rec2 = (P_SIG, raddr + 1, 0, -1, (s,), None)
            return newc, head(rec2), 1

        if phase == P_ALF:
            if not (isinstance(data, tuple) and len(data) == 1
                    and isinstance(data[0], dict)):
                return fresh_alarm(c)
            if not (off_ok and c[CRS] == P_SIG):
                return fresh_alarm(c)
            a = dict(data[0])
            s = a["s"]
            g = s["g"]
            cs, cd, ca = c[CS], c[CD], c[CA]
            blankish = (ca is None and cs is None and cd is None
                        and c[CI] is None and c[CT] is None)
            outr = (cs == p.TransferLast and cd == -1)
            dorm = (ca is not None and cs is None and cd is None)
            back = E2 - 1 - raddr
            if not outr and a["sfx_outr"] == E2:
                a["cum_or"] += 1
                if a["cum_or"] > 3 * beta:
                    a["sfx_outr"] = back
            if not dorm and a["sfx_dorm"] == E2:
                a["cum_dm"] += 1
                if a["cum_dm"] > 3 * beta:
                    a["sfx_dorm"] = back
            if not blankish:
                if a["fbs"] == E2:
                    a["fbs"] = back
                if a["sfx_blank"] == E2:
                    a["cum_bl"] += 1
                    if a["cum_bl"] > 3 * beta:
                        a["sfx_blank"] = back
            newc = stamp(c, raddr, P_ALF)
            if raddr == 0:
                G = {
                    "hist": g["hist"], "n_blank": g["n_blank"],
                    "n_dorm": g["n_dorm"], "n_bad": g["n_bad"],
                    "n16m1": g["n16m1"], "n17p1": g["n17p1"],
                    "aQ": g["aQ"], "top": g["top"],
                    "lefts": s["lefts"],
                    "pfx_outl": s["pfx_outl"], "pfx_blank": s["pfx_blank"],
                    "sfx_outr": a["sfx_outr"], "sfx_dorm": a["sfx_dorm"],
                    "sfx_blank": a["sfx_blank"],
                    "fbp": s["fbp"], "fbs": a["fbs"],
                    "dstars": tuple(_ps_val(x) for x in s["sd"]),
                    "acands": tuple(_ps_cands(x) for x in s["sa"]),
                }
                delta2 = select_model(G, p)
                if delta2 is None:
                    return fresh_alarm(newc)
                rec2 = (P_BET, raddr, 0, -1, (0,), delta2)
                return newc, head(rec2), 0
            rec2 = (P_ALF, raddr - 1, 0, -1, (a,), None)
            return newc, head(rec2), -1

        if phase == P_BET:
            if delta is None or not (isinstance(data, tuple) and len(data) == 1):
                return fresh_alarm(c)
            if not (off_ok and c[CRS] == P_ALF):
                return fresh_alarm(c)
            bad = data[0] + _plan_bad(plan_at(delta, raddr, p), c)
            newc = stamp(c, raddr, P_BET)
            if raddr == E2 - 1:
                if bad > p.Z + 6 * beta:
                    return fresh_alarm(newc)
                rec2 = (P_PLANW, raddr, 0, -1, (), delta)
                return newc, head(rec2), 0
            rec2 = (P_BET, raddr + 1, 0, -1, (bad,), delta)
            return newc, head(rec2), 1

        if phase == P_PLANW:
            if delta is None:
                return fresh_alarm(c)
            if not (off_ok and c[CRS] == P_BET):
                return fresh_alarm(c)
            newc = stamp(c, raddr, P_PLANW, crc=plan_at(delta, raddr, p))
            if raddr == 0:
                rec2 = (P_PLANV, raddr, 0, -1, (0,), delta)
                return newc, head(rec2), 0
            rec2 = (P_PLANW, raddr - 1, 0, -1, (), delta)
            return newc, head(rec2), -1

        if phase == P_PLANV:
            if delta is None or not (isinstance(data, tuple) and len(data) == 1):
                return fresh_alarm(c)
            plan = plan_at(delta, raddr, p)
            if not (marked and c[CRA] == raddr and c[CRS] == P_PLANW
                    and c[CRC] == plan):
                return fresh_alarm(c)
            bad = data[0] + _plan_bad(plan, c)
            newc = stamp(c, raddr, P_PLANV, crc=plan)
            if raddr == E2 - 1:
                if bad > p.Z + 6 * beta:
                    return fresh_alarm(newc)
                legs = build_mop_legs(delta)
                rec2 = (P_MOP, raddr, 0, -1, (0, legs), delta)
                return newc, head(rec2), 0
            rec2 = (P_PLANV, raddr + 1, 0, -1, (bad,), delta)
            return newc, head(rec2), 1

        if phase == P_MOP:
            if delta is None or not (isinstance(data, tuple) and len(data) == 2):
                return fresh_alarm(c)
            leg_i, legs = data
            if not (isinstance(leg_i, int) and 0 <= leg_i < len(legs)):
                return fresh_alarm(c)
            pd, target, committing, clamp_lo, clamp_hi = legs[leg_i]
            fresh = rzd == 0 and rzg == -1
            if committing:
                if fresh:
                    if not (marked and c[CRA] == raddr):
                        return fresh_alarm(c)
                    newc = commit(c, c[CRC])
                else:
                    # zig re-check over committed ground
                    plan = plan_at(delta, raddr, p)
                    if c[CRC] != 0 or _plan_bad(plan, c):
                        return fresh_alarm(c)
                    newc = c
            else:
                if fresh:
                    if not (marked and c[CRA] == raddr):
                        return fresh_alarm(c)
                    newc = stamp(c, raddr, P_MOP)
                else:
                    if not (marked and c[CRA] == raddr and c[CRS] == P_MOP):
                        return fresh_alarm(c)
                    newc = c
            if raddr == target and fresh:
                if leg_i + 1 == len(legs):
                    move_off = 1 if delta[0] == 1 else 0
                    return exit_head(delta, newc, move_off)
                # step into the next leg's range if we are outside it
                _, _, _, nlo, nhi = legs[leg_i + 1]
                mv = 1 if raddr < nlo else (-1 if raddr > nhi else 0)
                rec2 = (P_MOP, raddr + mv, 0, -1, (leg_i + 1, legs), delta)
                return newc, head(rec2), mv
            mv, rzd2, rzg2 = zig_move(pd, raddr, rzd, rzg, clamp_lo, clamp_hi)
            rec2 = (P_MOP, raddr + mv, rzd2, rzg2, (leg_i, legs), delta)
            return newc, head(rec2), mv

        return fresh_alarm(c)

    return recovery_step, alarm_state
