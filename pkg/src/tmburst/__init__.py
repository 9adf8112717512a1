"""Burst-fault-tolerant Turing machine construction and test harness."""

__version__ = "0.1.0"
