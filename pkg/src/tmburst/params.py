"""Derived constants of the constructed machine.

All sizes follow from the burst bound beta and the simulated machine's
alphabet/state counts. The strict preset carries the construction's
native constants; the compact preset shrinks everything for fast engine
tests and makes no tolerance claims of its own.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gcd


class ParamError(ValueError):
    pass


class TooLarge(ParamError):
    pass


PRESETS = {
    # Z, E, RecZ as multiples of beta.
    "strict": (22, 660, 11),
    "compact": (6, 60, 5),
}

REPETITIONS = 5          # the code must survive two bursts per codeword
Q_CEILING = 500_000


def _bits(n: int) -> int:
    b = 1
    while (1 << b) < n:
        b += 1
    return b


@dataclass(frozen=True)
class Params:
    preset: str
    beta: int
    Z: int            # zig period
    E: int            # recovery granularity
    RecZ: int         # recovery zig period
    Q: int            # colony size in cells
    ell: int          # payload width in bits (>= beta so one burst stays in one copy)
    r: int            # repetition count
    n_sym: int
    n_state: int
    TfSt: int = 11
    TransferLast: int = 16
    K_R: int | None = None   # measured: max steps of one recovery cycle
    V: int | None = None     # measured: work period bound + 3*K_R margin

    def __post_init__(self):
        b = self.beta
        if self.Z - 4 * b < 1:
            raise ParamError("zig period too small for beta")
        if self.Q % (self.Z - 4 * b) != 0:
            raise ParamError("(Z - 4*beta) must divide Q")
        if self.Q % self.E != 0:
            raise ParamError("E must divide Q")
        if (11 * self.E) % 10 != 0 or (22 * self.E) % 10 != 0:
            raise ParamError("1.1E and 2.2E must be integers")
        if self.r * self.ell > self.Q - (22 * self.E) // 10:
            raise ParamError("codeword does not fit between the margins")
        if self.ell < b:
            raise ParamError("payload width below beta breaks burst correction")

    # -- geometry -----------------------------------------------------------

    @property
    def E11(self) -> int:
        return (11 * self.E) // 10

    @property
    def E22(self) -> int:
        return (22 * self.E) // 10

    @property
    def cw_len(self) -> int:
        return self.r * self.ell

    @property
    def cw_lo(self) -> int:
        """First codeword slot, as an address within the colony."""
        return self.E11

    @property
    def cw_hi(self) -> int:
        return self.E11 + self.cw_len

    @property
    def zig_block(self) -> int:
        return self.Z - 4 * self.beta

    @property
    def rec_block(self) -> int:
        return self.RecZ - 4 * self.beta if self.RecZ > 4 * self.beta else 1

    def last(self, drift: int) -> int:
        return self.TransferLast + max(0, drift)

    def tf_sw(self, drift: int) -> int:
        if drift == 0:
            raise ParamError("no transfer sweep for drift 0")
        return self.TfSt if drift > 0 else self.TfSt + 1

    def with_calibration(self, k_r: int, v: int) -> "Params":
        return replace(self, K_R=k_r, V=v)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset, "beta": self.beta, "Z": self.Z, "E": self.E,
            "RecZ": self.RecZ, "Q": self.Q, "ell": self.ell, "r": self.r,
            "n_sym": self.n_sym, "n_state": self.n_state, "TfSt": self.TfSt,
            "TransferLast": self.TransferLast, "K_R": self.K_R, "V": self.V,
        }


def params_from_dict(d: dict) -> Params:
    return Params(**d)


def derive_params(beta: int, m2_dims: tuple[int, int], preset: str = "strict") -> Params:
    """Smallest admissible colony size for the given burst bound and machine."""
    if beta < 1:
        raise ParamError("beta must be >= 1")
    if preset not in PRESETS:
        raise ParamError(f"unknown preset {preset!r}")
    zf, ef, rf = PRESETS[preset]
    Z, E, RecZ = zf * beta, ef * beta, rf * beta
    n_sym, n_state = m2_dims
    ell = max(_bits(n_sym), _bits(n_state), beta)
    unit = (Z - 4 * beta) * E // gcd(Z - 4 * beta, E)
    need = (22 * E) // 10 + REPETITIONS * ell
    Q = unit * ((need + unit - 1) // unit)
    if Q > Q_CEILING:
        raise TooLarge(f"colony size {Q} exceeds ceiling {Q_CEILING}")
    return Params(
        preset=preset, beta=beta, Z=Z, E=E, RecZ=RecZ, Q=Q,
        ell=ell, r=REPETITIONS, n_sym=n_sym, n_state=n_state,
    )


def encode_payload(value: int, ell: int) -> tuple[int, ...]:
    """ell-bit little-endian payload; bit 0 equals value's parity."""
    return tuple((value >> i) & 1 for i in range(ell))


def decode_payload(bits, n_values: int) -> int | None:
    """Inverse of encode_payload; None when out of range or incomplete."""
    v = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            return None
        v |= b << i
    return v if v < n_values else None
