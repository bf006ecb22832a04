"""Gaussian Module - Log-det mutual information backend and closed-form Gaussian sum-rates"""

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Union

import numpy as np
from rich.console import Console

from src.errors import BadParamsError, DimensionMismatchError, NegativeInputError, SingularCovarianceError
from src.info_measures import Q_NAME
from src.network_model import GaussianChannel

console = Console(stderr=True)

GAIN_TOLERANCE = 1e-9

_INPUT = re.compile(r"^X(\d+)$")
_OUTPUT = re.compile(r"^Y(\d+)$")


def psi(x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Gaussian capacity function 0.5 * log2(1 + x), elementwise on arrays"""
    values = np.asarray(x, dtype=float)
    if np.any(values < 0):
        raise NegativeInputError(f"psi needs a nonnegative argument, got {values.min()}")
    out = 0.5 * np.log2(1.0 + values)
    return float(out) if out.ndim == 0 else out


@dataclass(eq=False)
class GaussianEvalContext:
    """Independent zero-mean Gaussian inputs at full power, unit-variance noise, Q degenerate"""

    channel: GaussianChannel

    def covariance(self) -> np.ndarray:
        return np.diag(self.channel.powers)

    def _indices(self, names: Iterable[str], pattern, kind: str, limit: int) -> List[int]:
        out = []
        for name in names:
            if name == Q_NAME:
                continue
            match = pattern.match(name)
            if not match or not 1 <= int(match.group(1)) <= limit:
                raise BadParamsError(f"unknown {kind} variable '{name}' for the Gaussian backend "
                                     "(messages must be rewritten in input form)")
            out.append(int(match.group(1)) - 1)
        return sorted(out)

    def cmi(self, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> float:
        """I(X_A; Y_B | X_C), inputs outside A and C act as Gaussian noise"""
        ch = self.channel
        a_idx = self._indices(a, _INPUT, "input", ch.k1)
        b_idx = self._indices(b, _OUTPUT, "output", ch.k2)
        c_idx = set(self._indices(c, _INPUT, "input", ch.k1))
        if c_idx & set(a_idx):
            raise BadParamsError("conditioned inputs overlap the measured inputs")
        if not a_idx or not b_idx:
            return 0.0
        noise_idx = [i for i in range(ch.k1) if i not in c_idx and i not in a_idx]
        rows = ch.gains[b_idx, :]
        noise = np.eye(len(b_idx))
        if noise_idx:
            g = rows[:, noise_idx]
            noise = noise + g @ np.diag(ch.powers[noise_idx]) @ g.T
        g = rows[:, a_idx]
        total = noise + g @ np.diag(ch.powers[a_idx]) @ g.T
        sign_t, logdet_t = np.linalg.slogdet(total)
        sign_n, logdet_n = np.linalg.slogdet(noise)
        if sign_t <= 0 or sign_n <= 0:
            raise SingularCovarianceError("output covariance is singular")
        return max(0.5 * (logdet_t - logdet_n) / np.log(2.0), 0.0)

    def atom_value(self, atom) -> float:
        a, b = atom.a, atom.b
        if any(_OUTPUT.match(n) for n in a) and not any(_OUTPUT.match(n) for n in b):
            a, b = b, a
        return gaussian_cmi(self, a, b, atom.c)


def gaussian_cmi(ctx: GaussianEvalContext, a: Iterable[str], b: Iterable[str], c: Iterable[str] = ()) -> float:
    return ctx.cmi(a, b, c)


@dataclass
class MainClosedForm:
    """Two-receiver, four-transmitter MAIN evaluated in closed form"""

    gain_conditions: Dict[str, Dict]
    branches: List[float]
    value: float
    active_branch: int
    argmax_checks: Dict[str, bool]
    certificate: Optional[str]
    capacity: bool = False

    def to_dict(self) -> Dict:
        return {
            "conditions": self.gain_conditions,
            "argmax_checks": self.argmax_checks,
            "certificate": self.certificate,
            "branches": self.branches,
            "value": self.value,
            "active_branch": self.active_branch,
            "capacity": self.capacity,
        }


@dataclass
class CicClosedForm:
    """Three-user CIC evaluated in closed form"""

    gain_conditions: Dict[str, bool]
    power_condition: bool
    relaxation_holds: Dict[str, bool]
    branches: List[float]
    value: float
    active_branch: int
    bound_valid: bool = False
    capacity: bool = False
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "conditions": {"gains": self.gain_conditions, "power": self.power_condition},
            "relaxation": self.relaxation_holds,
            "branches": self.branches,
            "value": self.value,
            "active_branch": self.active_branch,
            "bound_valid": self.bound_valid,
            "capacity": self.capacity,
            "notes": self.notes,
        }


def ratio_certificate(stronger: np.ndarray, weaker: np.ndarray) -> Dict:
    """Single alpha with weaker = alpha * stronger and |alpha| <= 1"""
    alpha = None
    for s, w in zip(stronger, weaker):
        if abs(s) <= GAIN_TOLERANCE and abs(w) <= GAIN_TOLERANCE:
            continue
        if abs(s) <= GAIN_TOLERANCE:
            return {"holds": False, "alpha": None, "reason": "stronger gain is zero where the weaker is not"}
        ratio = w / s
        if alpha is None:
            alpha = ratio
        elif abs(ratio - alpha) > GAIN_TOLERANCE:
            return {"holds": False, "alpha": None, "reason": f"gain ratios {alpha:.6g} and {ratio:.6g} differ"}
    if alpha is None:
        alpha = 0.0
    if abs(alpha) > 1 + GAIN_TOLERANCE:
        return {"holds": False, "alpha": float(alpha), "reason": f"|alpha| = {abs(alpha):.6g} exceeds 1"}
    return {"holds": True, "alpha": float(alpha), "reason": ""}


def _require_shape(channel: GaussianChannel, k2: int, k1: int, model: str) -> None:
    if channel.gains.shape != (k2, k1):
        raise DimensionMismatchError(f"{model} needs a {k2}x{k1} gain matrix, got {channel.gains.shape}")


def closed_form_main4(channel: GaussianChannel) -> MainClosedForm:
    """
    Gaussian MAIN with transmitters X1, X2 serving Y1 and X3, X4 serving Y2

    Args:
        channel: 2x4 gain matrix, row 0 the a-gains seen at Y1, row 1 the b-gains at Y2

    Returns:
        MainClosedForm with the proportional-gain report, the two-branch value and
        which argmax certificate applies at Gaussian inputs
    """
    _require_shape(channel, 2, 4, "main4")
    a, b = channel.gains[0], channel.gains[1]
    p = channel.powers
    conditions = {
        "Y1_group_alpha": ratio_certificate(a[:2], b[:2]),
        "Y2_group_beta": ratio_certificate(a[2:], b[2:]),
    }
    own = float(a[0] ** 2 * p[0] + a[1] ** 2 * p[1])
    branches = [
        psi(own) + psi(float(b[2] ** 2 * p[2] + b[3] ** 2 * p[3]) / float(b[0] ** 2 * p[0] + b[1] ** 2 * p[1] + 1.0)),
        psi(float(np.sum(a ** 2 * p))),
    ]
    active = int(np.argmin(branches))

    ctx = GaussianEvalContext(channel)
    at_y2 = {k: ctx.cmi([f"X{k}"], ["Y2"]) for k in (3, 4)}
    at_y2_given = {3: ctx.cmi(["X3"], ["Y2"], ["X4"]), 4: ctx.cmi(["X4"], ["Y2"], ["X3"])}
    at_y1_given = {3: ctx.cmi(["X3"], ["Y1"], ["X4"]), 4: ctx.cmi(["X4"], ["Y1"], ["X3"])}
    at_y1 = {k: ctx.cmi([f"X{k}"], ["Y1"]) for k in (3, 4)}
    tol = GAIN_TOLERANCE
    checks = {
        "primary": at_y2[3] <= at_y1_given[3] + tol and at_y2[4] <= at_y1_given[4] + tol,
        "both_reversed": at_y2[3] >= at_y1_given[3] - tol and at_y2[4] >= at_y1_given[4] - tol,
        "reversed_4": at_y2[4] >= at_y1_given[4] - tol and at_y2_given[3] >= at_y1[3] - tol,
        "reversed_3": at_y2[3] >= at_y1_given[3] - tol and at_y2_given[4] >= at_y1[4] - tol,
    }
    certificate = next((name for name, ok in checks.items() if ok), None)
    gains_ok = all(c["holds"] for c in conditions.values())
    return MainClosedForm(
        gain_conditions=conditions,
        branches=branches,
        value=branches[active],
        active_branch=active,
        argmax_checks=checks,
        certificate=certificate,
        capacity=gains_ok and certificate is not None,
    )


def closed_form_cic3(channel: GaussianChannel) -> CicClosedForm:
    """
    Three-user Gaussian CIC with unit direct gains

    Gain conditions: |a12| >= 1, |a31| <= 1, |a23| >= 1, a31 = a32/a12, a12 = a13/a23.
    Power condition: P1 + 1 >= a12^2 (a21^2 P1 + 1).
    """
    _require_shape(channel, 3, 3, "cic3")
    g = channel.gains
    if np.any(np.abs(np.diag(g) - 1.0) > GAIN_TOLERANCE):
        raise DimensionMismatchError("cic3 needs unit direct gains")
    a12, a13, a21, a23, a31, a32 = g[0, 1], g[0, 2], g[1, 0], g[1, 2], g[2, 0], g[2, 1]
    p1, p2, p3 = (float(x) for x in channel.powers)
    tol = GAIN_TOLERANCE
    gains = {
        "a12_at_least_1": abs(a12) >= 1 - tol,
        "a31_at_most_1": abs(a31) <= 1 + tol,
        "a23_at_least_1": abs(a23) >= 1 - tol,
        "a31_ratio": abs(a12) > tol and abs(a31 - a32 / a12) <= tol,
        "a12_ratio": abs(a23) > tol and abs(a12 - a13 / a23) <= tol,
    }
    power = p1 + 1 >= a12 ** 2 * (a21 ** 2 * p1 + 1) - tol

    branches = [
        psi(p1 + a12 ** 2 * p2) + psi(p3 / (a31 ** 2 * p1 + a32 ** 2 * p2 + 1)),
        psi(p1 + a12 ** 2 * p2 + a13 ** 2 * p3),
    ]
    active = int(np.argmin(branches))

    ctx = GaussianEvalContext(channel)
    relaxation = {
        "X2_at_Y2_given_X3": ctx.cmi(["X2"], ["Y2"], ["X3"]) >= ctx.cmi(["X2"], ["Y1"], ["X3"]) - tol,
        "X3_at_Y2": ctx.cmi(["X3"], ["Y2"]) >= ctx.cmi(["X3"], ["Y1"]) - tol,
    }
    valid = all(gains.values())
    notes = []
    if not valid:
        notes.append("gain conditions fail; the two-branch value is not a certified bound")
    elif not power:
        notes.append("power condition fails; the two-branch value is an outer bound only")
    return CicClosedForm(
        gain_conditions=gains,
        power_condition=bool(power),
        relaxation_holds=relaxation,
        branches=branches,
        value=branches[active],
        active_branch=active,
        bound_valid=valid,
        capacity=valid and bool(power),
        notes=notes,
    )


def power_sweep(channel: GaussianChannel, factors: Iterable[float], evaluate) -> List[Dict]:
    """Evaluate `evaluate(scaled_channel)` for every power scaling factor"""
    rows = []
    for factor in factors:
        result = evaluate(channel.scaled(factor))
        rows.append({"scale": float(factor), **result})
    return rows

