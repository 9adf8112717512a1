"""Tuple layouts for tape cells and the head state.

Cells and head states are plain tuples indexed by the constants below;
the step functions are pure over them. A blank cell is represented by
its absence from the tape dict (the BLANK constant below is what a read
of a missing cell yields).
"""

from __future__ import annotations

# -- cell fields -------------------------------------------------------------
CA = 0    # address
CS = 1    # sweep stamp
CD = 2    # drift
CI = 3    # info bit
CT = 4    # state bit
H1I, H1S, H1D = 5, 6, 7
H2I, H2S, H2D = 8, 9, 10
H3I, H3S, H3D = 11, 12, 13
CRC = 14  # recovery mark: 0 | 1 | plan tuple
CRA = 15  # recovery address stamp
CRS = 16  # recovery pass stamp

NCELL = 17
BLANK = (None,) * 14 + (0, None, None)

# -- head-state fields --------------------------------------------------------
MODE = 0   # 0 normal, 1 recovering
ADDR = 1
DIR = 2
DRIFT = 3
SW = 4
ZD = 5     # zig depth
ZG = 6     # zig direction (-1 descending, +1 returning)
RI = 7     # info codeword register (tuple, len cw_len)
RS = 8     # state codeword register
DA = 9     # decoded tape symbol id
DG = 10    # decoded state id
DD = 11    # decoded move
PS = 12    # drift plurality scratch (v1, c1, v2, c2) or None
REC = 13   # recovery substate tuple or None

NHEAD = 14


def blank_cell() -> tuple:
    return BLANK


def is_blank(cell: tuple) -> bool:
    return cell == BLANK


def cell_core(cell: tuple) -> tuple:
    return (cell[CA], cell[CS], cell[CD])


def empty_register(n: int) -> tuple:
    return (None,) * n


def initial_head(cw_len: int) -> tuple:
    """Head state at the start of the first work period."""
    return (
        0,      # MODE normal
        0,      # ADDR
        0,      # DIR: as if just turned
        1,      # DRIFT: the initial configuration mimics a completed right move
        1,      # SW
        0,      # ZD
        1,      # ZG: post-turn posture
        empty_register(cw_len),
        empty_register(cw_len),
        None, None, None,   # DA, DG, DD
        None,               # PS
        None,               # REC
    )
