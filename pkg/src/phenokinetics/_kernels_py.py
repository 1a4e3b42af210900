"""Pure-NumPy implementations of the hot inner-loop kernels.

Drop-in replacements for the compiled extension; selected automatically when
the extension is unavailable (see :mod:`phenokinetics.backends`).
"""
from __future__ import annotations

import numpy as np


def kernel_apply(band_rev: np.ndarray, offset_lo: int, fw: np.ndarray) -> np.ndarray:
    """Banded Toeplitz apply with the band supplied in reversed order:
    out[k] = sum_m band_rev[nb-1-m] * fw[k - offset_lo - m].

    ``fw`` is the distribution pre-multiplied by the quadrature weights, so
    the result is the discretised integral of the change kernel against f.
    Source indices outside the grid contribute nothing (absorbing truncation).
    """
    corr = np.correlate(fw, band_rev, mode="full")
    n = fw.shape[0]
    out = np.zeros(n)
    idx = np.arange(n) - offset_lo
    valid = (idx >= 0) & (idx < corr.shape[0])
    out[valid] = corr[idx[valid]]
    return out


def pde_step(g: np.ndarray, rvals: np.ndarray, rho: float, alpha: float,
             beta: float, dt: float, dv: float, upwind: bool) -> np.ndarray:
    """One explicit Euler step of the advection-diffusion-reaction stencil.

    End nodes are held at zero (homogeneous Dirichlet).  Returns the
    un-clamped updated array.
    """
    out = np.zeros_like(g)
    adv = np.zeros_like(g)
    if alpha > 0.0 and upwind:
        adv[1:-1] = (g[1:-1] - g[:-2]) / dv
    elif alpha < 0.0 and upwind:
        adv[1:-1] = (g[2:] - g[1:-1]) / dv
    elif alpha != 0.0:
        adv[1:-1] = (g[2:] - g[:-2]) / (2.0 * dv)
    diff = np.zeros_like(g)
    diff[1:-1] = (g[2:] - 2.0 * g[1:-1] + g[:-2]) / (dv * dv)
    out[1:-1] = g[1:-1] + dt * ((rvals[1:-1] - rho) * g[1:-1]
                                - alpha * adv[1:-1] + 0.5 * beta * diff[1:-1])
    return out


def abm_resolve(comp: np.ndarray, phen: np.ndarray, partner: np.ndarray,
                u_prolif: np.ndarray, u_death: np.ndarray, u_mut: np.ndarray,
                z: np.ndarray, p_prolif: float, death_prob: np.ndarray,
                p_mut: float, shift: float, sd: float, v0: float):
    """Resolve one synchronous agent-model step from a pre-step snapshot.

    All event draws are taken against the snapshot arrays ``comp``/``phen``;
    the returned arrays are the committed post-step state.  Death takes
    precedence over a simultaneous phenotype change, matching the grouping of
    higher-order event combinations into the negligible remainder.
    """
    comp_new = comp.copy()
    phen_new = phen.copy()
    reservoir = comp == 0
    living = ~reservoir

    prolif = reservoir & (u_prolif < p_prolif) & (comp[partner] == 1)
    comp_new[prolif] = 1
    phen_new[prolif] = phen[partner[prolif]]

    die = living & (u_death < death_prob)
    comp_new[die] = 0
    phen_new[die] = v0

    mutate = living & ~die & (u_mut < p_mut)
    phen_new[mutate] = phen[mutate] + shift + sd * z[mutate]
    return comp_new, phen_new
