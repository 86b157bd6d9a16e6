"""
Variational problem abstraction shared by the solvers.

A problem owns its postcondition checks, produces a solution from
``solve()``, and can validate and summarize that solution.
"""

from abc import ABC, abstractmethod
from typing import List, Dict, Any, Tuple

from .checks import CheckValidator


class VariationalProblem(ABC):
    """
    Abstract base class for a minimization with verifiable postconditions.

    Subclasses describe:
    - the starting state of the iteration
    - the checks a solution must pass
    - the solver itself
    """

    def __init__(self, name: str):
        self.name = name
        self.checks: List[Any] = []
        self.solution: Any = None

    @abstractmethod
    def define_checks(self) -> List[Any]:
        """Define the postcondition checks for this problem."""

    @abstractmethod
    def initial_state(self) -> Any:
        """Starting point of the iteration."""

    @abstractmethod
    def solve(self) -> Any:
        """Run the solver and return its solution."""

    @abstractmethod
    def solution_state(self, solution: Any) -> Dict[str, Any]:
        """Flatten a solution into the state dictionary the checks read."""

    def validate_solution(self, solution: Any) -> Tuple[bool, List[str]]:
        """
        Validate that a solution satisfies all hard checks.

        Returns:
            (is_valid, list_of_violations)
        """
        if not self.checks:
            self.checks = self.define_checks()
        return CheckValidator.validate_all(self.checks, self.solution_state(solution))

    def get_metrics(self, solution: Any) -> Dict[str, Any]:
        """Key figures of a solution plus its validation result."""
        is_valid, violations = self.validate_solution(solution)
        metrics = dict(self.solution_state(solution))
        metrics.update({
            'is_valid': is_valid,
            'num_violations': len(violations),
            'violations': violations,
        })
        return metrics
