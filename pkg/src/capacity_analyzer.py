"""Capacity Analyzer Module - Maximizes sum-rate expressions and decides capacity status"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.errors import BadParamsError
from src.falsifier import ConditionFalsifier
from src.gaussian import GaussianEvalContext
from src.grid_search import GridResult, SearchCaps, grid_result, grid_values
from src.info_measures import induced_joint
from src.message_plan import ReductionResult, reduce_and_star
from src.network_model import Channel, DiscreteChannel, NetworkTopology, connectivity
from src.ordering import (ConditionVerdict, Status, build_condition_set, check_argmax_conditions,
                          check_query_gaussian, main_argmax_comparisons)
from src.rates import (DiscreteBackend, SumRateExpression, build_achievable_expression,
                       build_outer_expression, eval_expression, input_substitution)

console = Console(stderr=True)

GAUSSIAN_TOLERANCE = 1e-6
GRID_TOLERANCE = 0.02
POINTWISE_SLACK = 1e-9

# condition set -> (outer bound, default scheme)
THEOREMS: Dict[str, Tuple[str, str]] = {
    "T2A": ("T2A", "SUCCESSIVE"),
    "T2B": ("T2B", "SUCCESSIVE_JOINT"),
    "T3": ("T3", "SUCCESSIVE"),
    "T4": ("T4", "SUCCESSIVE_JOINT"),
    "T5": ("T5", "SUCCESSIVE"),
    "T6": ("T6", "SUCCESSIVE"),
    "T7": ("T7", "SUCCESSIVE"),
    "COR2": ("COR2", "SUCCESSIVE"),
    "T8": ("T8", "SUCCESSIVE"),
    "T9": ("T9", "SUCCESSIVE"),
    "M2O": ("M2O", "TIN"),
    "M2O_WEAK": ("M2O", "TIN"),
}


class CapacityStatus(str, Enum):
    CAPACITY = "CAPACITY"
    BOUNDED = "BOUNDED"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class SumRateResult:
    """Maximum of one expression with the branch breakdown at the first optimizer"""

    value: float
    certification: str
    evaluation: Dict = field(default_factory=dict)
    grid: Optional[GridResult] = None

    @property
    def argmax(self) -> List:
        return self.grid.argmax if self.grid else []

    def to_dict(self) -> Dict:
        out = {"value": self.value, "certification": self.certification, **self.evaluation}
        if self.grid is not None:
            out.update({k: v for k, v in self.grid.to_dict().items() if k not in ("value", "certification")})
        return out


def _gaussian_form(expr: SumRateExpression, topology: NetworkTopology) -> Tuple[SumRateExpression, Dict[str, str]]:
    messages = expr.variables() & topology.all_messages
    if not messages:
        return expr, {}
    mapping = input_substitution(topology)
    return expr.substitute(mapping), mapping


def _from_grid(topology: NetworkTopology, channel: DiscreteChannel, expr: SumRateExpression,
               grid: GridResult, caps: SearchCaps) -> SumRateResult:
    first = grid.argmax[0]
    evaluation = eval_expression(expr, DiscreteBackend(induced_joint(topology, channel, first, caps.max_cells)))
    return SumRateResult(grid.value, "grid-certified only", evaluation.to_dict(), grid)


def maximize_expression(topology: NetworkTopology, channel: Channel, expr: SumRateExpression,
                        caps: SearchCaps) -> SumRateResult:
    """
    Maximize an expression over the input family of the channel

    Args:
        topology: Network topology
        channel: Discrete (grid search) or Gaussian (independent full-power inputs)
        expr: Expression over Q, messages, inputs and outputs
        caps: Grid caps; ignored for Gaussian channels

    Returns:
        SumRateResult; discrete values are grid-certified, Gaussian values are
        labelled Gaussian-restricted
    """
    if channel.kind == "gaussian":
        form, _ = _gaussian_form(expr, topology)
        evaluation = eval_expression(form, GaussianEvalContext(channel))
        return SumRateResult(evaluation.value, "Gaussian-restricted optimum", evaluation.to_dict())
    values = grid_values(topology, channel, [expr], caps)[:, 0]
    return _from_grid(topology, channel, expr, grid_result(topology, channel, values, caps), caps)


class CapacityAnalyzer:
    """Runs conditions, both maximizations and the capacity decision for one theorem"""

    def __init__(self, topology: NetworkTopology, channel: Channel, caps: Optional[SearchCaps] = None,
                 seed: int = 0, budget: int = 2000, u_cap: Optional[int] = None,
                 tolerance: Optional[float] = None, quiet: bool = False):
        """
        Initialize capacity analyzer

        Args:
            topology: Network topology, receivers in less-noisy order
            channel: Discrete or Gaussian channel
            caps: Grid caps for discrete maximization
            seed: Falsifier seed
            budget: Falsifier samples per condition
            u_cap: |U| override for the falsifier
            tolerance: Allowed outer/achievable gap; defaults to the grid slack for
                discrete channels and 1e-6 for Gaussian ones
            quiet: Suppress console output
        """
        self.topology = topology
        self.channel = channel
        self.caps = caps or SearchCaps(quiet=quiet)
        self.seed = seed
        self.budget = budget
        self.u_cap = u_cap
        self.quiet = quiet
        self.is_gaussian = channel.kind == "gaussian"
        if tolerance is None:
            tolerance = GAUSSIAN_TOLERANCE if self.is_gaussian else GRID_TOLERANCE
        self.tolerance = tolerance
        self.connectivity = connectivity(topology, channel)
        self.reduction: ReductionResult = reduce_and_star(topology)
        self.verdicts: List[ConditionVerdict] = []

    def check_conditions(self, theorem_id: str, params: Dict) -> List[ConditionVerdict]:
        queries = build_condition_set(self.topology, self.connectivity, self.reduction, theorem_id, params)
        if self.is_gaussian:
            self.verdicts = [check_query_gaussian(self.channel, q) for q in queries]
        else:
            falsifier = ConditionFalsifier(self.channel, self.topology, self.seed, self.budget, self.u_cap,
                                           self.caps.jobs, self.caps.max_cells, quiet=self.quiet)
            self.verdicts = falsifier.check_all(queries)
        return self.verdicts

    def _caps_for(self, params: Dict) -> SearchCaps:
        if not params.get("use_m_star") or self.reduction.m_star is None:
            return self.caps
        cards = dict(self.caps.message_cards)
        for mid in self.topology.all_messages - self.reduction.m_star:
            cards[mid] = 1
        return SearchCaps(**{**self.caps.__dict__, "message_cards": cards})

    def _maximize_pair(self, outer: SumRateExpression, achievable: SumRateExpression,
                       params: Dict) -> Tuple[SumRateResult, SumRateResult, Optional[bool]]:
        if self.is_gaussian:
            return (maximize_expression(self.topology, self.channel, outer, self.caps),
                    maximize_expression(self.topology, self.channel, achievable, self.caps), None)
        caps = self._caps_for(params)
        values = grid_values(self.topology, self.channel, [outer, achievable], caps)
        pointwise = bool(np.all(values[:, 1] <= values[:, 0] + POINTWISE_SLACK))
        results = [
            _from_grid(self.topology, self.channel, expr,
                       grid_result(self.topology, self.channel, values[:, k], caps), caps)
            for k, expr in enumerate((outer, achievable))
        ]
        return results[0], results[1], pointwise

    def _argmax_gate(self, outer: SumRateResult) -> Dict:
        """Extra requirement of the two-receiver successive-joint theorem"""
        shared = self.reduction.m_star_per_receiver[2]
        if len(shared) <= 1:
            return {"passed": True, "reason": "|M*_Y2| <= 1"}
        primary, alternatives = main_argmax_comparisons(self.topology, self.reduction)
        if self.is_gaussian:
            verdict = check_argmax_conditions(primary, [GaussianEvalContext(self.channel)], 1e-9,
                                              alternatives, input_substitution(self.topology))
        else:
            backends = [DiscreteBackend(induced_joint(self.topology, self.channel, spec, self.caps.max_cells))
                        for spec in outer.argmax]
            verdict = check_argmax_conditions(primary, backends, 1e-9, alternatives)
        alt = sorted(name for name, ok in verdict.alternative_holds.items() if ok)
        passed = verdict.status == Status.HOLDS or bool(alt)
        return {"passed": passed, "verdict": verdict.to_dict(),
                "certificate": "primary" if verdict.status == Status.HOLDS else (alt[0] if alt else None)}

    def analyze(self, theorem_id: str, scheme: Optional[str] = None, params: Optional[Dict] = None) -> Dict:
        """
        Capacity report of a theorem

        Returns:
            Report with status, conditions, outer, achievable, gap and tolerances
        """
        params = dict(params or {})
        which = theorem_id.upper()
        if which not in THEOREMS:
            raise BadParamsError(f"'{theorem_id}' has no capacity path (expected one of {', '.join(THEOREMS)})")
        outer_id, default_scheme = THEOREMS[which]
        scheme = (scheme or default_scheme).upper()

        if not self.quiet:
            console.print(Panel.fit(f"[bold]Capacity analysis[/bold]  theorem {which}, scheme {scheme}",
                                    border_style="cyan"))
            console.print("[bold]Step 1:[/bold] Checking conditions...")
        verdicts = self.check_conditions(which, params)
        conditions_hold = all(v.status == Status.HOLDS for v in verdicts)

        if not self.quiet:
            console.print("[bold]Step 2:[/bold] Building expressions...")
        outer_expr = build_outer_expression(self.topology, self.connectivity, self.reduction, outer_id, params)
        achievable_expr = build_achievable_expression(self.topology, self.connectivity, self.reduction,
                                                      scheme, params)

        report = {
            "theorem": which,
            "scheme": scheme,
            "conditions": [v.to_dict() for v in verdicts],
            "expressions": {"outer": str(outer_expr), "achievable": str(achievable_expr)},
            "tolerances": {"gap": self.tolerance, "argmax": self.caps.argmax_tolerance,
                           "pointwise": POINTWISE_SLACK},
            "notes": [],
        }
        if not self.quiet:
            console.print("[bold]Step 3:[/bold] Maximizing...")
        if not conditions_hold:
            achievable = maximize_expression(self.topology, self.channel, achievable_expr, self._caps_for(params))
            report.update({"status": CapacityStatus.INCONCLUSIVE.value, "outer": None,
                           "achievable": achievable.to_dict(), "gap": None})
            report["notes"].append("a required condition is not certified; the outer bound is not asserted")
            self._announce(report)
            return report

        outer, achievable, pointwise = self._maximize_pair(outer_expr, achievable_expr, params)
        gap = outer.value - achievable.value
        status = CapacityStatus.CAPACITY if abs(gap) <= self.tolerance else CapacityStatus.BOUNDED
        if pointwise is not None:
            report["pointwise_achievable_below_outer"] = pointwise
        if which == "T4":
            gate = self._argmax_gate(outer)
            report["argmax_check"] = gate
            if not gate["passed"]:
                status = CapacityStatus.BOUNDED
                report["notes"].append("argmax comparisons fail; outer bound reported without a capacity claim")
        if not self.is_gaussian:
            report["notes"].append("discrete maxima are grid-certified only")
        report.update({"status": status.value, "outer": outer.to_dict(), "achievable": achievable.to_dict(),
                       "gap": gap})
        self._announce(report)
        return report

    def _announce(self, report: Dict) -> None:
        if self.quiet:
            return
        table = Table(title="Capacity Report", show_header=True, header_style="bold magenta")
        table.add_column("Field", style="cyan")
        table.add_column("Value", style="white")
        table.add_row("Status", report["status"])
        table.add_row("Conditions", ", ".join(c["status"] for c in report["conditions"]) or "none")
        table.add_row("Outer", "-" if report["outer"] is None else f"{report['outer']['value']:.6f}")
        table.add_row("Achievable", f"{report['achievable']['value']:.6f}")
        console.print(table)
        if report["status"] == CapacityStatus.CAPACITY.value:
            console.print("[green]✓[/green] Outer bound and achievable rate coincide")
        elif report["status"] == CapacityStatus.INCONCLUSIVE.value:
            console.print("[yellow]⚠[/yellow] Conditions not certified")


def capacity_report(topology: NetworkTopology, channel: Channel, theorem_id: str, scheme: Optional[str] = None,
                    params: Optional[Dict] = None, caps: Optional[SearchCaps] = None, seed: int = 0,
                    budget: int = 2000, u_cap: Optional[int] = None, tolerance: Optional[float] = None,
                    quiet: bool = True) -> Dict:
    analyzer = CapacityAnalyzer(topology, channel, caps, seed, budget, u_cap, tolerance, quiet)
    return analyzer.analyze(theorem_id, scheme, params)
