"""Sequential VAR order identification.

The order is identified by testing p0 = 0, 1, 2, ... against p1 = p0 + 1
and stopping at the first non-rejection.  Every step reuses the same grid
and the same seed, so the step at p0 = 0 reproduces the standalone
white-noise test bit for bit.  Per-step levels are not multiplicity
adjusted; the sequential procedure controls the under-identification
probability at alpha asymptotically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import InputError, NumericalError
from ._rng import derive_seed, fresh_seed
from .gaussian_tests import gaussian_test_order
from .grid import BallGrid, factorize, make_grid
from .rank_tests import TestOutcome, test_order
from .scores import ScoreSpec

__all__ = ["IdentificationTrace", "IdentificationError", "identify_order"]


@dataclass(frozen=True)
class IdentificationTrace:
    """Record of a sequential identification run.

    ``steps`` holds (p0, outcome) pairs for p0 = 0, 1, ... in order;
    ``selected_order`` is the first non-rejected p0, or ``max_order`` with
    ``truncated`` set when every test up to the cap rejected.
    """

    steps: tuple[tuple[int, TestOutcome], ...]
    selected_order: int
    max_order: int
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "selected_order": int(self.selected_order),
            "max_order": int(self.max_order),
            "truncated": bool(self.truncated),
            "steps": [
                {"p0": int(p0), **outcome.to_dict()} for p0, outcome in self.steps
            ],
        }


class IdentificationError(NumericalError):
    """A step failed numerically; carries the partial trace."""

    def __init__(self, message: str, trace: IdentificationTrace):
        super().__init__(message)
        self.trace = trace


def identify_order(
    x,
    spec,
    alpha: float = 0.05,
    max_order: int | None = None,
    M: int | None = None,
    seed: int | None = None,
    grid: BallGrid | None = None,
) -> IdentificationTrace:
    """Identify the VAR order by sequential order tests.

    Parameters
    ----------
    x : (n, d) array
        Observed series.
    spec : ScoreSpec or "gaussian"
        Rank score to use, or the Gaussian benchmark (which admits no
        permutational calibration).
    alpha : float
        Per-step level.
    max_order : int, optional
        Safety cap; defaults to floor(n^(1/3)).
    M : int, optional
        Permutation count for rank scores; asymptotic calibration if None.
    seed : int, optional
        Seed shared by every step (and by the grid construction when no
        grid is supplied); entropy-derived if None.
    grid : BallGrid, optional
        Grid for the rank couplings; built from factorize(n, d) by default.

    Raises
    ------
    IdentificationError
        When a step fails numerically; the partial trace rides along on the
        exception's ``trace`` attribute.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise InputError(f"series must be 2-d, got shape {x.shape}")
    n, d = x.shape
    gaussian = isinstance(spec, str)
    if gaussian:
        if spec != "gaussian":
            raise InputError(f"unknown test family {spec!r}")
        if M is not None:
            raise InputError("the Gaussian test has no permutational variant")
    elif not isinstance(spec, ScoreSpec):
        raise InputError("spec must be a ScoreSpec or 'gaussian'")

    if max_order is None:
        max_order = int(np.floor(n ** (1.0 / 3.0)))
    if max_order < 0:
        raise InputError(f"need max_order >= 0, got {max_order}")
    if n <= d * max_order + 10:
        raise InputError(
            f"need n > d*max_order + 10 = {d * max_order + 10} for the largest "
            f"fit, got n={n}"
        )

    if seed is None:
        seed = fresh_seed()
    if not gaussian and grid is None:
        grid = make_grid(factorize(n, d), d, seed=derive_seed(seed, 3))

    steps: list[tuple[int, TestOutcome]] = []
    for p0 in range(0, max_order + 1):
        try:
            if gaussian:
                outcome = gaussian_test_order(x, p0, p0 + 1, alpha=alpha)
            else:
                outcome = test_order(
                    x, p0, p0 + 1, spec, grid, alpha=alpha, M=M, seed=seed
                )
        except NumericalError as exc:
            partial = IdentificationTrace(
                steps=tuple(steps),
                selected_order=p0,
                max_order=max_order,
                truncated=True,
            )
            raise IdentificationError(
                f"order test at p0={p0} failed: {exc}", partial
            ) from exc
        steps.append((p0, outcome))
        if not outcome.reject:
            return IdentificationTrace(
                steps=tuple(steps),
                selected_order=p0,
                max_order=max_order,
                truncated=False,
            )
    return IdentificationTrace(
        steps=tuple(steps),
        selected_order=max_order,
        max_order=max_order,
        truncated=True,
    )
