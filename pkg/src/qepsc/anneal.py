"""Two-mode simulated annealing over accuracy variables.

Mode 1 (solve_min_cost): minimize the cost expression subject to an error
budget.  Mode 2 (solve_min_error): minimize error subject to a cost budget.
Moves perturb one variable at a time in log-space; infeasible points are
explored through a penalty term but only feasible points are ever recorded,
and the returned point is re-checked by direct evaluation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from .errors import ConfigError, Infeasible

DEFAULT_DOMAIN = (1e-18, 0.5)


@dataclass
class AnnealConfig:
    iterations: int = 1000
    restarts: int = 5
    initial_temperature: float | None = None  # None = auto-calibrated
    cooling_factor: float = 0.95              # applied every 20 moves
    move_sigma: float = 0.5                   # log-space step
    seed: int = 0
    domains: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if not (0.0 < self.cooling_factor < 1.0):
            raise ConfigError("coolingFactor must be in (0, 1)")
        for name, (lo, hi) in self.domains.items():
            if not (0.0 < lo <= hi):
                raise ConfigError(f"domain for {name} must be positive")

    @classmethod
    def from_json(cls, text: str) -> "AnnealConfig":
        doc = json.loads(text)
        kw = {}
        for src, dst in (
            ("iterations", "iterations"),
            ("restarts", "restarts"),
            ("initialTemperature", "initial_temperature"),
            ("coolingFactor", "cooling_factor"),
            ("moveSigma", "move_sigma"),
            ("seed", "seed"),
        ):
            if src in doc:
                kw[dst] = doc[src]
        if "domains" in doc:
            kw["domains"] = {k: tuple(v) for k, v in doc["domains"].items()}
        return cls(**kw)


@dataclass
class OptimizationResult:
    assignment: dict
    achieved_cost: float
    achieved_error: float
    feasible: bool
    evaluations: int
    best_per_restart: list

    def to_json(self) -> str:
        return json.dumps(
            {
                "assignment": {k: self.assignment[k] for k in sorted(self.assignment)},
                "achievedCost": self.achieved_cost,
                "achievedError": self.achieved_error,
                "feasible": self.feasible,
                "evaluations": self.evaluations,
                "bestPerRestart": self.best_per_restart,
            },
            indent=2,
        )


class _Counted:
    """Wraps an expression as a positional callable, counting evaluations."""

    def __init__(self, e: E.SymExpr, order: list):
        self.count = 0
        self.order = order
        self.fn = E.compile_expr(e, order)

    def __call__(self, values) -> float:
        self.count += 1
        return self.fn(*values)


def _prepare(target: E.SymExpr, constraint: E.SymExpr, fixed: dict, cfg: AnnealConfig):
    binding = {k: E.Const(float(v)) for k, v in fixed.items()}
    t = E.simplify(E.substitute(target, binding))
    c = E.simplify(E.substitute(constraint, binding))
    names = sorted(E.free_vars(t) | E.free_vars(c))
    # every remaining free name is an optimization variable; domains default
    # to the standard epsilon interval unless the config narrows them
    domains = [cfg.domains.get(q, DEFAULT_DOMAIN) for q in names]
    return t, c, names, domains


def _anneal(objective, constraint, budget, names, domains, init, cfg: AnnealConfig):
    """One full annealing run.  Returns (best_assignment or None,
    best_objective, best_constraint, per_restart)."""
    k = len(names)
    best = None
    best_obj = math.inf
    best_con = math.nan
    per_restart = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, r])
        x = np.array(init, dtype=float)
        obj = objective(x)
        con = constraint(x)
        feasible_phase = con <= budget
        kappa = 10.0 * max(abs(obj), 1.0) if feasible_phase else 0.0

        def penalty(o, c):
            # phase 1 (never yet feasible): chase the constraint alone;
            # phase 2: objective plus weighted violation
            if not feasible_phase:
                return c
            return o + kappa * max(0.0, c - budget) / budget

        cur = penalty(obj, con)
        r_best = None
        r_best_obj = math.inf
        if con <= budget and obj < best_obj:
            r_best, r_best_obj = x.copy(), obj
        temp = cfg.initial_temperature
        deltas = []
        moves = 1  # the initial evaluation consumes one iteration
        while moves < cfg.iterations:
            moves += 1
            i = int(rng.integers(k))
            y = x.copy()
            lo, hi = domains[i]
            y[i] = min(hi, max(lo, y[i] * math.exp(rng.normal(0.0, cfg.move_sigma))))
            o2 = objective(y)
            c2 = constraint(y)
            if not feasible_phase and c2 <= budget:
                # feasibility reached: re-anchor the penalty weight there
                feasible_phase = True
                kappa = 10.0 * max(abs(o2), 1.0)
                x, cur = y.copy(), penalty(o2, c2)
                if o2 < r_best_obj:
                    r_best, r_best_obj = y.copy(), o2
                continue
            cand = penalty(o2, c2)
            # relative delta: the penalty scale varies over many orders of
            # magnitude along a run, so the temperature lives in units of
            # relative change rather than absolute objective units
            delta = (cand - cur) / max(abs(cur), 1e-300)
            if temp is None:
                # auto temperature: greedy warm-up while collecting move
                # magnitudes, then set from their median
                deltas.append(abs(delta))
                if len(deltas) >= 20:
                    temp = max(float(np.median(deltas)), 1e-12)
                accept = delta <= 0
            else:
                accept = delta <= 0 or rng.random() < math.exp(-delta / temp)
                if moves % 20 == 0:
                    temp *= cfg.cooling_factor
            if accept:
                x, cur = y, cand
            if c2 <= budget and o2 < r_best_obj:
                r_best, r_best_obj = y.copy(), o2
        per_restart.append(
            {"restart": r, "best": None if r_best is None else float(r_best_obj)}
        )
        if r_best is not None and r_best_obj < best_obj:
            best = r_best
            best_obj = r_best_obj
            best_con = constraint(best)  # exact re-check, one evaluation
            if best_con > budget * (1.0 + 1e-12):
                best = None
                best_obj = math.inf
    return best, best_obj, best_con, per_restart


def _solve(target, constraint, budget, fixed, cfg, init_fn, flip):
    t, c, names, domains = _prepare(target, constraint, fixed, cfg)
    if budget <= 0 and flip == "cost":
        raise Infeasible("error budget must be positive")
    obj = _Counted(t, names)
    con = _Counted(c, names)
    init = init_fn(names, domains)
    best, best_obj, best_con, per_restart = _anneal(
        obj, con, budget, names, domains, init, cfg
    )
    evaluations = obj.count + con.count
    if best is None:
        raise Infeasible(
            f"no feasible point found within {evaluations} evaluations", per_restart
        )
    assignment = {q: float(v) for q, v in zip(names, best)}
    achieved_t = best_obj if flip == "cost" else best_con
    achieved_e = best_con if flip == "cost" else best_obj
    return OptimizationResult(
        assignment, achieved_t, achieved_e, True, evaluations, per_restart
    )


def solve_min_cost(
    t_expr: E.SymExpr,
    e_expr: E.SymExpr,
    error_budget: float,
    fixed_params: dict | None = None,
    cfg: AnnealConfig | None = None,
) -> OptimizationResult:
    """Minimize cost subject to E <= error_budget."""
    cfg = cfg or AnnealConfig()

    def init(names, domains):
        # total error is approximately additive, so an equal split of half
        # the budget leans feasible
        guess = error_budget / (2 * max(len(names), 1))
        return [min(hi, max(lo, guess)) for lo, hi in domains]

    return _solve(t_expr, e_expr, error_budget, fixed_params or {}, cfg, init, "cost")


def solve_min_error(
    t_expr: E.SymExpr,
    e_expr: E.SymExpr,
    cost_budget: float,
    fixed_params: dict | None = None,
    cfg: AnnealConfig | None = None,
) -> OptimizationResult:
    """Minimize error subject to T <= cost_budget."""
    cfg = cfg or AnnealConfig()

    def init(names, domains):
        return [math.sqrt(lo * hi) for lo, hi in domains]

    return _solve(e_expr, t_expr, cost_budget, fixed_params or {}, cfg, init, "error")
