"""
Check definitions and validation utilities.

A check inspects a state dictionary and reports (is_satisfied, violation).
The minimizer uses them for its postconditions and the invariance suite for
its gating decisions.
"""

from typing import Dict, Any, Callable, List, Tuple

import numpy as np


EPS_FLOOR = 1e-15


def relative_gap(lhs: float, rhs: float, floor: float = EPS_FLOOR) -> float:
    """|lhs - rhs| / max(|rhs|, floor)."""
    return float(abs(lhs - rhs) / max(abs(rhs), floor))


class ToleranceCheck:
    """Passes when a state value does not exceed a tolerance."""

    def __init__(self, name: str, variable_name: str, tolerance: float,
                 check_type: str = 'hard'):
        self.name = name
        self.variable_name = variable_name
        self.tolerance = tolerance
        self.check_type = check_type

    def evaluate(self, state: Dict[str, Any]) -> Tuple[bool, float]:
        """Check value <= tolerance; NaN never passes."""
        value = float(state.get(self.variable_name, np.inf))
        if np.isnan(value):
            return False, np.inf
        if value > self.tolerance:
            return False, value - self.tolerance
        return True, 0.0


class CustomCheck:
    """Check defined by a custom evaluation function."""

    def __init__(self, name: str,
                 eval_func: Callable[[Dict[str, Any]], Tuple[bool, float]],
                 check_type: str = 'hard'):
        self.name = name
        self.eval_func = eval_func
        self.check_type = check_type

    def evaluate(self, state: Dict[str, Any]) -> Tuple[bool, float]:
        return self.eval_func(state)


class CheckValidator:
    """Utility class for validating multiple checks."""

    @staticmethod
    def validate_all(checks: List[Any],
                     state: Dict[str, Any]) -> Tuple[bool, List[str]]:
        """
        Validate all hard checks against a state.

        Returns:
            (all_satisfied, list_of_violations)
        """
        violations = []
        for check in checks:
            is_satisfied, amount = check.evaluate(state)
            if not is_satisfied and check.check_type == 'hard':
                violations.append(f"{check.name}: violation = {amount:.3e}")
        return len(violations) == 0, violations
