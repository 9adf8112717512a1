"""Small reference machines used throughout the tests and the CLI.

CONST1 writes 1 at cell 0 and stops. PARITY scans the input, walks back
and writes the parity at cell 0. INC treats the input as a little-endian
binary number and adds one in place. All final states stay put so the
simulation's drift goes quiet once the result is written.
"""

from __future__ import annotations

from importlib import resources

from .machine import TuringMachine, parse_machine

FIXTURE_NAMES = ("CONST1", "PARITY", "INC")


def _build_const1() -> TuringMachine:
    symbols = ("0", "1", "_")
    states = ("start", "done")
    delta = {}
    for a in range(3):
        delta[(a, 0)] = (1, 1, 0)      # write 1, finish
        delta[(a, 1)] = (a, 1, 0)
    return TuringMachine("CONST1", symbols, states, delta, 0, frozenset({1}))


def _build_parity() -> TuringMachine:
    symbols = ("0", "1", "_")
    states = ("s0", "s1", "b0", "b1", "w0", "w1", "done")
    s = {n: i for i, n in enumerate(states)}
    blank = 2
    delta = {}
    for par in (0, 1):
        scan, back, write = s[f"s{par}"], s[f"b{par}"], s[f"w{par}"]
        delta[(0, scan)] = (0, scan, 1)
        delta[(1, scan)] = (1, s[f"s{1 - par}"], 1)
        delta[(blank, scan)] = (blank, back, -1)
        delta[(0, back)] = (0, back, -1)
        delta[(1, back)] = (1, back, -1)
        delta[(blank, back)] = (blank, write, 1)
        for a in range(3):
            delta[(a, write)] = (par, s["done"], 0)
    for a in range(3):
        delta[(a, s["done"])] = (a, s["done"], 0)
    return TuringMachine("PARITY", symbols, states, delta, 0,
                         frozenset({s["done"]}))


def _build_inc() -> TuringMachine:
    symbols = ("0", "1", "_")
    states = ("carry", "fin")
    delta = {
        (1, 0): (0, 0, 1),     # flip trailing ones, keep carrying
        (0, 0): (1, 1, 0),
        (2, 0): (1, 1, 0),
        (0, 1): (0, 1, 0),
        (1, 1): (1, 1, 0),
        (2, 1): (2, 1, 0),
    }
    return TuringMachine("INC", symbols, states, delta, 0, frozenset({1}))


_BUILDERS = {"CONST1": _build_const1, "PARITY": _build_parity,
             "INC": _build_inc}


def fixture(name: str) -> TuringMachine:
    try:
        return _BUILDERS[name.upper()]()
    except KeyError:
        raise KeyError(f"no fixture named {name!r}") from None


def fixture_path(name: str):
    return resources.files("tmburst").joinpath("machines", f"{name.upper()}.tm")
