"""Intrinsic efficiency eta = q_s / (q_u + b_t) and the cyclic-QT comparison table."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from fractions import Fraction

# Teleported qubits and channel qubits for this protocol: six two-qubit
# payloads over six GHZ triples.
OUR_QS = 12
OUR_QU = 18
OUR_BT = 18

PRINTED_TOLERANCE_PP = Decimal("0.05")


def efficiency(q_s: int, q_u: int, b_t: int) -> Fraction:
    if min(q_s, q_u, b_t) < 0:
        raise ValueError("resource counts must be nonnegative")
    if q_u + b_t == 0:
        raise ZeroDivisionError("q_u + b_t must be positive")
    return Fraction(q_s, q_u + b_t)


@dataclass(frozen=True)
class EfficiencyRecord:
    name: str
    q_s: int
    q_u: int
    b_t: int
    eta: Fraction
    printed: str | None = None  # percentage as printed in the source table
    config: str = ""

    @classmethod
    def make(cls, name: str, q_s: int, q_u: int, b_t: int, printed: str | None = None, config: str = ""):
        return cls(name, q_s, q_u, b_t, efficiency(q_s, q_u, b_t), printed, config)

    @property
    def percent(self) -> Decimal:
        return Decimal(self.eta.numerator * 100) / Decimal(self.eta.denominator)

    def rendered(self, mode=ROUND_HALF_UP) -> str:
        """Percentage at the printed precision (two decimals when nothing was printed)."""
        places = 2 if self.printed is None else _places(self.printed)
        quantum = Decimal(1).scaleb(-places)
        return str(self.percent.quantize(quantum, rounding=mode))

    def exact_deviation(self) -> Decimal:
        """|exact eta - printed| in percentage points."""
        return abs(self.percent - Decimal(self.printed))

    def printed_deviation(self) -> Decimal:
        """Smallest |rendered - printed| over rounding and truncation at the printed precision."""
        printed = Decimal(self.printed)
        return min(abs(Decimal(self.rendered(m)) - printed) for m in (ROUND_HALF_UP, ROUND_DOWN))

    def matches_printed(self, tol: Decimal = PRINTED_TOLERANCE_PP) -> bool:
        return self.printed_deviation() <= tol


def _places(printed: str) -> int:
    return len(printed.split(".")[1]) if "." in printed else 0


def comparison_table() -> list[EfficiencyRecord]:
    return [
        EfficiencyRecord.make("Y. Li et al.", 6, 10, 9, "31.5", "2-2-2"),
        EfficiencyRecord.make("Z. W. Sang", 3, 7, 7, "21.42", "1-1-1"),
        EfficiencyRecord.make("R. Rahmawati et al.", 3, 9, 9, "16.7", "1-1-1"),
        EfficiencyRecord.make("R. Rahmawati et al.", 6, 12, 9, "28.57", "2-2-2"),
        EfficiencyRecord.make("R. Rahmawati et al.", 6, 11, 9, "30", "1-2-3"),
        EfficiencyRecord.make("Our", OUR_QS, OUR_QU, OUR_BT, "33.33", "2-2-2"),
    ]


def measured_efficiency(transcript, q_s: int = OUR_QS, q_u: int = OUR_QU) -> EfficiencyRecord:
    """Efficiency with b_t taken from the bits a harness run actually sent."""
    if not transcript.complete:
        raise ValueError(
            f"incomplete transcript: {len(transcript.messages)} messages, {transcript.total_bits} bits"
        )
    return EfficiencyRecord.make("measured", q_s, q_u, transcript.total_bits)


def table_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "q_s", "q_u", "b_t", "eta_exact", "eta_printed"])
    for r in records:
        w.writerow([r.name, r.q_s, r.q_u, r.b_t, str(r.eta), r.printed if r.printed is not None else r.rendered()])
    return buf.getvalue()
