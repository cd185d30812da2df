"""Information criteria and model comparison from fitted models."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .estimation import FitResult


def aic(fit: FitResult) -> float:
    """Akaike information criterion ``2k + 2 NLL``."""
    return 2 * fit.k + 2 * fit.nll


def bic(fit: FitResult) -> float:
    """Bayesian information criterion ``k ln M + 2 NLL``."""
    return fit.k * math.log(fit.M) + 2 * fit.nll


@dataclass(frozen=True)
class ModelComparison:
    aic: dict
    bic: dict
    selected: str
    delta_aic: dict
    delta_rss: dict
    reference: str | None = None


def compare(fits: list[FitResult], reference: str = "noise") -> ModelComparison:
    """Select the minimum-AIC model.

    Exact ties go to the smaller parameter count, then to the lexicographically
    first model tag. ``delta_aic`` and ``delta_rss`` are taken against the
    ``reference`` fit (the pure-noise null) when it is present.
    """
    if len(fits) < 2:
        raise ValueError("compare needs at least two fits")
    tags = [ft.model for ft in fits]
    if len(set(tags)) != len(tags):
        raise ValueError(f"duplicate model tags: {tags}")
    aics = {ft.model: aic(ft) for ft in fits}
    bics = {ft.model: bic(ft) for ft in fits}
    selected = min(fits, key=lambda ft: (aics[ft.model], ft.k, ft.model)).model
    d_aic, d_rss = {}, {}
    ref = next((ft for ft in fits if ft.model == reference), None)
    if ref is not None:
        for ft in fits:
            if ft is not ref:
                d_aic[ft.model] = aics[ft.model] - aics[ref.model]
                d_rss[ft.model] = ref.rss - ft.rss
    return ModelComparison(aics, bics, selected, d_aic, d_rss, ref.model if ref else None)


def delta_aic_approx(delta_rss: float, sigma: float, dk: int = 2) -> float:
    """Linearized AIC difference ``2 dk - dRSS / sigma^2`` (candidate minus null)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return 2 * dk - delta_rss / sigma**2


def delta_aic_exact(rss_null: float, rss_candidate: float, M: int, dk: int) -> float:
    """AIC difference of two profiled-variance fits on the same ``M`` samples."""
    return 2 * dk - M * math.log(rss_null / rss_candidate)
