"""Problem parameters and the constants of the auxiliary Gaussian field.

Each input mode carries a squeezed vacuum with amplitude ``alpha`` (the tanh
of the squeezing magnitude).  Loss is modelled by splitting every input
creation operator into a transmitted part with amplitude ``c`` and an
unobserved part with amplitude ``s``, ``c**2 + s**2 == 1``.

Linearising the squeezing operator introduces one pair of real Gaussian
variables ``(xi, xi_tilde)`` per mode with covariance ``sigma``.  That pair
is split into a shared component ``xi0``, which the estimator samples, and
two fluctuation components ``chi``/``chi_tilde``, whose moments are
integrated analytically.  The split is fixed by one free covariance ``h``;
choosing ``h = -var_chi`` minimises the magnitude of the fluctuation
moments and therefore the size of the correction terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ModelParams", "derive_params", "params_from_experiment"]

# Slack for the admissible-interval check on a user-supplied h.
_H_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Squeezing/loss inputs plus every derived distribution constant.

    Attributes
    ----------
    alpha : float
        Squeezing amplitude, ``0 <= alpha < 1``.
    c, s : float
        Amplitude transmission and loss, ``c**2 + s**2 == 1``.
    sigma : (2, 2) ndarray
        Covariance of the per-mode pair ``(xi, xi_tilde)``.
    var_xi0 : float
        Variance of the shared component sampled by Monte Carlo.
    var_chi : float
        Variance of each fluctuation component.
    h : float
        Covariance between the two fluctuation components.
    epsilon : float
        ``c**2 * max(var_chi, |h|)``; the scale that controls how quickly
        successive correction orders shrink.  Values above ~0.25 mean slow
        convergence of the correction series.
    prefactor_per_mode : float
        ``sqrt(det sigma) / alpha = 1 / sqrt(1 - alpha**2 * s**4)``.
    norm_per_mode : float
        ``sqrt(1 - alpha**2)``; state-normalisation correction applied once
        per mode so that probabilities sum to one.
    """

    alpha: float
    c: float
    s: float
    sigma: np.ndarray
    var_xi0: float
    var_chi: float
    h: float
    epsilon: float
    prefactor_per_mode: float
    norm_per_mode: float

    def __post_init__(self):
        self.sigma.setflags(write=False)

    @property
    def loss_s2(self) -> float:
        return self.s * self.s

    @property
    def transmission_c2(self) -> float:
        return self.c * self.c

    def h_interval(self) -> tuple[float, float]:
        """Admissible range for ``h`` (fluctuation covariance non-negativity)."""
        lo = -0.5 * self.alpha / (1.0 + self.alpha * self.loss_s2)
        hi = float(self.sigma[0, 1])
        return lo, hi


def derive_params(alpha: float, loss_s2: float, h: float | None = None) -> ModelParams:
    """Derive every distribution constant from ``alpha`` and the loss level.

    Parameters
    ----------
    alpha : float
        Squeezing amplitude, ``0 <= alpha < 1``.
    loss_s2 : float
        Loss level ``s**2``, in ``[0, 1]``; the transmission is ``1 - loss_s2``.
    h : float, optional
        Override for the fluctuation covariance.  Defaults to the optimum
        ``-0.5 * alpha / (1 + alpha * loss_s2)``, which minimises
        ``max(var_chi, |h|)``.  Overrides must stay inside the admissible
        interval, otherwise the fluctuation covariance matrix would have a
        negative eigenvalue.

    Returns
    -------
    ModelParams

    Raises
    ------
    ValueError
        If ``alpha`` or ``loss_s2`` is out of range, or ``h`` is outside the
        admissible interval.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must satisfy 0 <= alpha < 1, got {alpha}")
    if not 0.0 <= loss_s2 <= 1.0:
        raise ValueError(f"loss_s2 must satisfy 0 <= loss_s2 <= 1, got {loss_s2}")

    c = math.sqrt(1.0 - loss_s2)
    s = math.sqrt(loss_s2)

    # sigma = [[1/alpha, -s^2], [-s^2, 1/alpha]]^-1, written without 1/alpha
    # so that alpha == 0 stays finite (everything degenerates to zero).
    denom = 1.0 - alpha * alpha * loss_s2 * loss_s2
    sig11 = alpha / denom
    sig12 = alpha * alpha * loss_s2 / denom
    sigma = np.array([[sig11, sig12], [sig12, sig11]])

    h_opt = -0.5 * alpha / (1.0 + alpha * loss_s2)
    if h is None:
        h = h_opt
    elif not h_opt - _H_TOL <= h <= sig12 + _H_TOL:
        raise ValueError(
            f"h={h} outside the admissible interval [{h_opt}, {sig12}]"
        )

    var_chi = alpha / (1.0 + alpha * loss_s2) + h
    var_xi0 = sig12 - h
    epsilon = (c * c) * max(var_chi, abs(h))

    return ModelParams(
        alpha=alpha,
        c=c,
        s=s,
        sigma=sigma,
        var_xi0=var_xi0,
        var_chi=var_chi,
        h=h,
        epsilon=epsilon,
        prefactor_per_mode=1.0 / math.sqrt(denom),
        norm_per_mode=math.sqrt(1.0 - alpha * alpha),
    )


def params_from_experiment(
    mean_photons_per_mode: float, transmission_c2: float
) -> tuple[float, float]:
    """Map experiment-level numbers to ``(alpha, epsilon)``.

    The squeezing magnitude follows from the average photon number per mode,
    ``r = arcsinh(sqrt(n_mean))`` and ``alpha = tanh(r)``; epsilon then uses
    the optimal fluctuation split for the given collection efficiency.
    """
    if mean_photons_per_mode < 0.0:
        raise ValueError(
            f"mean_photons_per_mode must be >= 0, got {mean_photons_per_mode}"
        )
    if not 0.0 <= transmission_c2 <= 1.0:
        raise ValueError(
            f"transmission_c2 must be in [0, 1], got {transmission_c2}"
        )
    r = math.asinh(math.sqrt(mean_photons_per_mode))
    alpha = math.tanh(r)
    loss_s2 = 1.0 - transmission_c2
    epsilon = 0.5 * transmission_c2 * alpha / (1.0 + alpha * loss_s2)
    return alpha, epsilon
