"""Covariance matrix adaptation evolution strategy for low-dimensional search.

A compact (mu/mu_w, lambda) implementation with the standard strategy
constants: rank-mu and rank-one covariance updates, cumulative step-size
adaptation, and log-linear recombination weights. Suited to the handful of
interpolation weights tuned here, where the objective is a noisy-looking but
deterministic step function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


def default_popsize(dim: int) -> int:
    return 4 + int(3 * math.log(dim)) if dim > 0 else 4


class CmaEs:
    """Ask/tell optimizer. Minimizes."""

    def __init__(
        self,
        x0: Sequence[float],
        sigma0: float,
        popsize: int | None = None,
        rng: np.random.Generator | int | None = None,
    ):
        self.mean = np.array(x0, dtype=float)
        d = self.dim = self.mean.size
        if d < 1:
            raise ValueError("need at least one dimension")
        if sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        self.sigma = float(sigma0)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

        self.lam = int(popsize) if popsize else default_popsize(d)
        if self.lam < 2:
            raise ValueError("population size must be at least 2")
        self.mu = self.lam // 2
        w = np.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mueff = 1.0 / float(np.sum(self.weights**2))

        self.cc = (4 + self.mueff / d) / (d + 4 + 2 * self.mueff / d)
        self.cs = (self.mueff + 2) / (d + self.mueff + 5)
        self.c1 = 2 / ((d + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1, 2 * (self.mueff - 2 + 1 / self.mueff) / ((d + 2) ** 2 + self.mueff)
        )
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (d + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(d) * (1 - 1 / (4 * d) + 1 / (21 * d * d))

        self.pc = np.zeros(d)
        self.ps = np.zeros(d)
        self.cov = np.eye(d)
        self._basis = np.eye(d)
        self._scales = np.ones(d)
        self._stale = False
        self.generation = 0
        self.best_x: np.ndarray | None = None
        self.best_f = math.inf
        self._last_spread = math.inf

    def _decompose(self) -> None:
        if not self._stale:
            return
        cov = (self.cov + self.cov.T) / 2.0
        eigvals, self._basis = np.linalg.eigh(cov)
        self._scales = np.sqrt(np.maximum(eigvals, 1e-30))
        self._stale = False

    def ask(self) -> list[np.ndarray]:
        self._decompose()
        z = self.rng.standard_normal((self.lam, self.dim))
        steps = z * self._scales
        return [self.mean + self.sigma * (self._basis @ s) for s in steps]

    def tell(self, solutions: Sequence[np.ndarray], fitnesses: Sequence[float]) -> None:
        if len(solutions) != self.lam or len(fitnesses) != self.lam:
            raise ValueError(f"expected {self.lam} solutions with fitnesses")
        self.generation += 1
        order = np.argsort(fitnesses)
        fs = np.asarray(fitnesses, dtype=float)[order]
        xs = np.asarray(solutions, dtype=float)[order]
        self._last_spread = float(fs[-1] - fs[0])
        if fs[0] < self.best_f:
            self.best_f = float(fs[0])
            self.best_x = xs[0].copy()

        old_mean = self.mean
        selected = xs[: self.mu]
        self.mean = self.weights @ selected
        shift = (self.mean - old_mean) / self.sigma

        self._decompose()
        whitened = self._basis @ ((self._basis.T @ shift) / self._scales)
        self.ps = (1 - self.cs) * self.ps + math.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * whitened
        norm_ps = float(np.linalg.norm(self.ps))
        hsig = norm_ps / math.sqrt(
            1 - (1 - self.cs) ** (2 * self.generation)
        ) / self.chi_n < 1.4 + 2 / (self.dim + 1)
        self.pc = (1 - self.cc) * self.pc + (
            math.sqrt(self.cc * (2 - self.cc) * self.mueff) * shift if hsig else 0.0
        )

        deviations = (selected - old_mean) / self.sigma
        rank_mu = deviations.T @ (self.weights[:, None] * deviations)
        self.cov = (
            (1 - self.c1 - self.cmu) * self.cov
            + self.c1
            * (np.outer(self.pc, self.pc) + (0.0 if hsig else self.cc * (2 - self.cc)) * self.cov)
            + self.cmu * rank_mu
        )
        self._stale = True
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chi_n - 1))

    def stop(self) -> str | None:
        """Internal convergence signal, or None while still making progress."""
        self._decompose()
        if self.sigma * float(self._scales.max()) < 1e-13:
            return "tolx"
        if float(self._scales.max() / self._scales.min()) > 1e14:
            return "cond"
        if self.generation >= 30 and self._last_spread < 1e-15:
            return "tolfun"
        return None


@dataclass
class CmaResult:
    x: np.ndarray
    f: float
    evaluations: int
    generations: int
    history: list[float] = field(default_factory=list)
    reason: str = "budget"


def minimize(
    fn: Callable[[np.ndarray], float],
    x0: Sequence[float],
    sigma0: float,
    max_evals: int,
    target_f: float | None = None,
    seed: int | np.random.Generator | None = None,
    popsize: int | None = None,
) -> CmaResult:
    """Budgeted minimization with restart-on-stall.

    When a run converges internally without reaching ``target_f`` and budget
    remains, the search restarts from ``x0`` with a doubled population, the
    usual remedy for multimodal or plateaued objectives. ``history`` records
    the best-so-far fitness after each generation, across restarts.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x0 = np.asarray(x0, dtype=float)
    best_x = x0.copy()
    best_f = math.inf
    evaluations = 0
    generations = 0
    history: list[float] = []
    lam = popsize if popsize else default_popsize(x0.size)
    reason = "budget"

    while evaluations + lam <= max_evals:
        es = CmaEs(x0, sigma0, popsize=lam, rng=rng)
        while evaluations + es.lam <= max_evals:
            xs = es.ask()
            fs = [float(fn(x)) for x in xs]
            evaluations += len(xs)
            es.tell(xs, fs)
            generations += 1
            if es.best_f < best_f:
                best_f = es.best_f
                best_x = es.best_x.copy()
            history.append(best_f)
            if target_f is not None and best_f < target_f:
                return CmaResult(best_x, best_f, evaluations, generations, history, "target")
            if es.stop():
                reason = es.stop()
                break
        else:
            break
        lam *= 2

    return CmaResult(best_x, best_f, evaluations, generations, history, reason)
