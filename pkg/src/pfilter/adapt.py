"""Weighted null-proportion estimates for adaptive layers."""

from __future__ import annotations

import numpy as np

from .model import Layer


class AdaptivityError(ValueError):
    pass


def _check(layer: Layer, group_p) -> np.ndarray:
    group_p = np.asarray(group_p, dtype=float)
    if group_p.shape != (layer.n_groups,):
        raise ValueError(f"expected {layer.n_groups} group p-values, got shape {group_p.shape}")
    if not 0 < layer.lam < 1:
        raise AdaptivityError(f"adaptive layer needs lambda in (0, 1), got {layer.lam}")
    return group_p


def pi_hat(layer: Layer, group_p) -> float:
    """Weighted null-proportion estimate of a layer; exactly 1 when not adaptive.

    ``(max_g u_g w_g + sum_g u_g w_g 1{P_g > lam}) / (G (1 - lam))``
    """
    if not layer.adaptive:
        return 1.0
    group_p = _check(layer, group_p)
    uw = layer.u_arr * layer.w_arr
    exceed = float(np.sum(uw[group_p > layer.lam]))
    return (layer.max_norm + exceed) / (layer.n_groups * (1.0 - layer.lam))


def pi_hat_loo(layer: Layer, group_p, g: int) -> float:
    """:func:`pi_hat` with group ``g`` left out of the exceedance sum."""
    if not layer.adaptive:
        return 1.0
    group_p = _check(layer, group_p)
    if not 0 <= g < layer.n_groups:
        raise IndexError(f"group index {g} out of range")
    uw = layer.u_arr * layer.w_arr
    mask = group_p > layer.lam
    mask[g] = False
    exceed = float(np.sum(uw[mask]))
    return (layer.max_norm + exceed) / (layer.n_groups * (1.0 - layer.lam))
