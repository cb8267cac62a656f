"""
Pseudo-regret accounting.
"""

from typing import Optional

from icbandit.models.core import RegretLedger


def pseudo_regret(ledger: RegretLedger, t: Optional[int] = None) -> float:
    """
    Expected play loss minus the best arm's cumulative loss after t rounds.

    The comparator minimum is taken over the totals at t, never carried over
    from earlier rounds.

    Args:
        ledger: Ledger that has accumulated at least t rounds
        t: Round to query (defaults to the accumulated rounds)

    Raises:
        OutOfRangeError: If t was not accumulated (or is not retained)
    """
    expected, per_arm, _ = ledger.totals(ledger.rounds if t is None else t)
    return expected - float(per_arm.min())
