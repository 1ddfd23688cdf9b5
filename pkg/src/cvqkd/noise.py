"""Source and channel models for the entangled-beam pipeline.

Four physical imperfections are modeled on top of the ideal
squeezer-plus-beam-splitter source:

* pump-power dependence of the squeezed and anti-squeezed variances of the
  parametric source, with overall efficiency eta, threshold power p_th and
  a detuning-like constant k
* optical loss, the usual vacuum admixture channel, per output mode
* electronic detection noise, additive on each detector's variances
* Gaussian phase noise, a random phase-space rotation per mode with zero
  mean and standard deviation sigma, propagated in closed form on the
  second moments (with a Monte-Carlo oracle for validation)

The closed-form conditional-variance curve epr_theory and the end-to-end
source constructor make_epr_state tie the pieces together.

Loss accounting: detected squeezing is calibrated at a point that already
includes a source-side loss epsilon. When a state is specified by measured
variances, those variances enter the pipeline as-is and each arm picks up
only the incremental loss (loss - epsilon)/(1 - epsilon) after the beam
splitter, so the total per-arm loss equals the configured value. When the
input is given as a pure squeezing parameter r, the full per-arm loss is
applied directly. The two routes agree exactly whenever the measured pair
is consistent with a pure source seen through epsilon, because a loss
channel on the squeezed input commutes with the balanced beam splitter
(its vacuum companion is a fixed point of loss) and losses compose. Both
entry points are exposed through SqueezingSpec.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, OutOfRangeError
from .gaussian import (
    DEFAULT_TOL,
    CovarianceMatrix,
    apply_symplectic,
    balanced_beamsplitter,
    covariance,
    db_to_variance,
    squeezed_vacuum,
    tensor,
    vacuum,
    variance_to_db,
)

#: pump model evaluated only up to this multiple of the threshold power
PUMP_GUARD_FACTOR = 1.05


@dataclass(frozen=True)
class SourceParams:
    """Parametric-source model parameters.

    eta is the overall efficiency in (0, 1], p_mw the pump power and
    p_th_mw the threshold power (both in mW), and k a dimensionless
    detuning-like constant. The defaults are the fitted operating values
    of the modeled source.
    """

    eta: float = 0.941
    p_mw: float | None = None
    p_th_mw: float = 268.0
    k: float = 0.136

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise InvalidArgumentError(f"eta must be in (0, 1], got {self.eta}")
        if not (self.p_th_mw > 0.0):
            raise InvalidArgumentError(f"p_th_mw must be positive, got {self.p_th_mw}")
        if self.p_mw is not None and self.p_mw < 0.0:
            raise InvalidArgumentError(f"p_mw must be non-negative, got {self.p_mw}")
        if self.k < 0.0:
            raise InvalidArgumentError(f"k must be non-negative, got {self.k}")


@dataclass(frozen=True)
class ChannelParams:
    """Per-arm channel imperfections.

    loss_a and loss_b are total optical losses of the two output arms,
    det_noise_a and det_noise_b additive electronic noise variances of the
    two detectors (vacuum units), phase_sigma_a and phase_sigma_b phase
    noise standard deviations in radians, and epsilon the source-side loss
    already contained in a detected squeezing figure. Defaults are the
    fitted operating values.
    """

    epsilon: float = 0.059
    loss_a: float = 0.068
    loss_b: float = 0.068
    det_noise_a: float = 0.0148
    det_noise_b: float = 0.0148
    phase_sigma_a: float = 0.0
    phase_sigma_b: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise InvalidArgumentError(f"epsilon must be in [0, 1), got {self.epsilon}")
        for name in ("loss_a", "loss_b"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidArgumentError(f"{name} must be in [0, 1], got {v}")
        for name in ("det_noise_a", "det_noise_b", "phase_sigma_a", "phase_sigma_b"):
            v = getattr(self, name)
            if v < 0.0:
                raise InvalidArgumentError(f"{name} must be non-negative, got {v}")


@dataclass(frozen=True)
class SqueezingSpec:
    """Input squeezing, either as detected variances or as a pure parameter.

    var_sqz_db and var_asqz_db are detected variances in dB (negative for
    squeezing below vacuum). When var_asqz_db is given the state is built
    from the measured pair; when only var_sqz_db is given the pure
    squeezing parameter r is inferred from it through the source-side loss
    epsilon; r may also be supplied directly.
    """

    var_sqz_db: float | None = None
    var_asqz_db: float | None = None
    r: float | None = None

    def __post_init__(self):
        if self.var_sqz_db is None and self.r is None:
            raise InvalidArgumentError("SqueezingSpec needs var_sqz_db or r")
        if self.var_asqz_db is not None and self.var_sqz_db is None:
            raise InvalidArgumentError("var_asqz_db given without var_sqz_db")
        if self.r is not None and self.r < 0.0:
            warnings.warn(f"negative squeezing parameter r = {self.r}", stacklevel=3)


def pump_to_variances(params: SourceParams) -> tuple[float, float]:
    """Squeezed and anti-squeezed variances of the source at pump power p.

    With x = p/p_th the model reads
    var_sqz  = 1 - eta * 4 sqrt(x) / ((1 + sqrt(x))^2 + 4 k^2)
    var_asqz = 1 + eta * 4 sqrt(x) / ((1 - sqrt(x))^2 + 4 k^2)
    The generated state is mixed (variance product >= 1) for every pump
    power. Evaluation is allowed only up to 1.05 * p_th; a warning is
    issued at or above threshold.
    """
    if params.p_mw is None:
        raise InvalidArgumentError("pump power p_mw is not set")
    x = params.p_mw / params.p_th_mw
    if x > PUMP_GUARD_FACTOR:
        raise InvalidArgumentError(
            f"pump power {params.p_mw} mW exceeds {PUMP_GUARD_FACTOR} * threshold "
            f"({PUMP_GUARD_FACTOR * params.p_th_mw:.6g} mW); the model is not valid there"
        )
    if x >= 1.0:
        warnings.warn(
            f"pump power {params.p_mw} mW is at or above threshold {params.p_th_mw} mW",
            stacklevel=2,
        )
    s = math.sqrt(x)
    k2 = 4.0 * params.k * params.k
    denom_asqz = (1.0 - s) ** 2 + k2
    if denom_asqz == 0.0:
        raise ZeroDivisionError("pump model diverges at threshold when k = 0")
    var_sqz = 1.0 - params.eta * 4.0 * s / ((1.0 + s) ** 2 + k2)
    var_asqz = 1.0 + params.eta * 4.0 * s / denom_asqz
    return var_sqz, var_asqz


def pump_for_target_squeezing(target_db: float, params: SourceParams) -> float:
    """Pump power that produces the requested detected squeezing.

    target_db is the squeezed variance in dB (negative). Solved by
    bisection on the monotone model within the valid power range, to an
    accuracy of 1e-6 dB. An unachievable target raises OutOfRangeError
    reporting the model's best value.
    """
    hi = PUMP_GUARD_FACTOR * params.p_th_mw
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        best_db = variance_to_db(_pump_sqz_variance(params, hi))
    if target_db == 0.0:
        return 0.0
    if target_db > 0.0 or target_db < best_db:
        raise OutOfRangeError(
            f"target squeezing {target_db} dB is outside the model range "
            f"({best_db:.4f} dB at {hi:.6g} mW is the best achievable)",
            best=best_db,
        )
    lo = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(200):
            mid = (lo + hi) / 2.0
            achieved = variance_to_db(_pump_sqz_variance(params, mid))
            if abs(achieved - target_db) < 1e-6:
                return mid
            if achieved > target_db:
                lo = mid
            else:
                hi = mid
    return mid


def _pump_sqz_variance(params: SourceParams, p_mw: float) -> float:
    return pump_to_variances(SourceParams(eta=params.eta, p_mw=p_mw, p_th_mw=params.p_th_mw, k=params.k))[0]


def loss_channel(g: CovarianceMatrix, nu) -> CovarianceMatrix:
    """Optical loss of nu per mode, vacuum admixture.

    nu may be a scalar (uniform loss) or a sequence with one value per
    mode. Uniform loss is exactly the convex combination
    (1 - nu) Gamma + nu Identity; per-mode loss applies
    G Gamma G + (Identity - G^2) with G = diag over modes of
    sqrt(1 - nu_i) on both quadratures, which reduces to the uniform
    formula when all values coincide.
    """
    nus = _per_mode(nu, g.n_modes, "nu")
    if np.any(nus < 0.0) or np.any(nus > 1.0):
        raise InvalidArgumentError(f"loss values must lie in [0, 1], got {list(nus)}")
    if np.all(nus == nus[0]):
        v = float(nus[0])
        return covariance((1.0 - v) * g.entries + v * np.eye(g.dim))
    gdiag = np.repeat(np.sqrt(1.0 - nus), 2)
    scale = np.outer(gdiag, gdiag)
    out = scale * g.entries + np.diag(1.0 - gdiag * gdiag)
    return covariance(out)


def detection_noise(g: CovarianceMatrix, delta) -> CovarianceMatrix:
    """Additive electronic noise of delta per detector on both quadratures."""
    deltas = _per_mode(delta, g.n_modes, "delta")
    if np.any(deltas < 0.0):
        raise InvalidArgumentError(f"detection noise must be non-negative, got {list(deltas)}")
    return covariance(g.entries + np.diag(np.repeat(deltas, 2)))


def phase_noise_channel(g: CovarianceMatrix, sigma) -> CovarianceMatrix:
    """Second moments after independent Gaussian phase jitter per mode.

    Each mode is rotated by an independent zero-mean Gaussian angle with
    standard deviation sigma_i and the resulting moments are averaged in
    closed form: within a mode the traceless part of the 2x2 block scales
    by E[cos 2theta] = exp(-2 sigma_i^2), and every cross-mode block scales
    by exp(-(sigma_i^2 + sigma_j^2)/2). The averaged state is no longer
    Gaussian, but these are its exact second moments, which is what every
    covariance-based quantity downstream consumes.
    """
    sigmas = _per_mode(sigma, g.n_modes, "sigma")
    if np.any(sigmas < 0.0):
        raise InvalidArgumentError(f"phase noise sigma must be non-negative, got {list(sigmas)}")
    if np.all(sigmas == 0.0):
        return g
    n = g.n_modes
    m = g.entries
    out = np.empty_like(m)
    for i in range(n):
        for j in range(n):
            blk = m[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]
            if i == j:
                e2 = math.exp(-2.0 * sigmas[i] * sigmas[i])
                mean = (blk[0, 0] + blk[1, 1]) / 2.0
                dev = (blk[0, 0] - blk[1, 1]) / 2.0
                out[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = np.array(
                    [
                        [mean + e2 * dev, e2 * blk[0, 1]],
                        [e2 * blk[0, 1], mean - e2 * dev],
                    ]
                )
            else:
                f = math.exp(-(sigmas[i] ** 2 + sigmas[j] ** 2) / 2.0)
                out[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = f * blk
    return covariance((out + out.T) / 2.0)


def phase_noise_monte_carlo(
    g: CovarianceMatrix,
    sigma,
    n_samples: int,
    seed: int,
    return_std_errors: bool = False,
):
    """Empirical second moments under sampled phase jitter.

    Validation oracle for phase_noise_channel: draws n_samples phase-space
    points from the input state, rotates each mode by an independent
    Gaussian angle, and returns the raw empirical second-moment matrix.
    Deterministic for a given seed (base samples are drawn first, then the
    angles mode by mode). With return_std_errors=True also returns the
    per-entry standard error matrix estimated from the sample.
    """
    if n_samples < 1:
        raise InvalidArgumentError(f"n_samples must be at least 1, got {n_samples}")
    sigmas = _per_mode(sigma, g.n_modes, "sigma")
    if np.any(sigmas < 0.0):
        raise InvalidArgumentError(f"phase noise sigma must be non-negative, got {list(sigmas)}")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(g.entries)
    z = rng.standard_normal((n_samples, g.dim)) @ chol.T
    x = np.empty_like(z)
    for i in range(g.n_modes):
        theta = rng.normal(0.0, sigmas[i], n_samples)
        c, s = np.cos(theta), np.sin(theta)
        x[:, 2 * i] = c * z[:, 2 * i] + s * z[:, 2 * i + 1]
        x[:, 2 * i + 1] = -s * z[:, 2 * i] + c * z[:, 2 * i + 1]
    moments = x.T @ x / n_samples
    result = covariance((moments + moments.T) / 2.0)
    if not return_std_errors:
        return result
    dim = g.dim
    se = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            prod = x[:, i] * x[:, j]
            se[i, j] = se[j, i] = prod.std(ddof=1) / math.sqrt(n_samples)
    return result, se


def r_from_measured(var_sqz_db: float, epsilon: float) -> float:
    """Pure squeezing parameter inferred from a detected squeezed variance.

    Inverts the source-side loss epsilon out of the measured variance,
    r = -1/2 ln((10^(var_sqz_db/10) - epsilon) / (1 - epsilon)). The
    measured variance must exceed epsilon, otherwise no pure state can
    explain it.
    """
    if not (0.0 <= epsilon < 1.0):
        raise InvalidArgumentError(f"epsilon must be in [0, 1), got {epsilon}")
    v = db_to_variance(var_sqz_db)
    arg = (v - epsilon) / (1.0 - epsilon)
    if arg <= 0.0:
        raise InvalidArgumentError(
            f"measured variance {v:.6g} does not exceed epsilon = {epsilon}; "
            "no pure input state is consistent with it"
        )
    return -0.5 * math.log(arg)


def epr_theory(nu: float, r: float) -> float:
    """Closed-form conditional-variance product of the lossy source.

    For a pure input with squeezing parameter r split on a balanced beam
    splitter and attenuated by uniform loss nu on both arms,
    (1 + 4 (nu - nu^2) sinh^2 r) / (1 + (1 - nu^2) sinh^2 r).
    Matches the direct conditional-variance product of the full covariance
    pipeline; decreasing in r toward the asymptote 4 nu / (1 + nu).
    """
    if not (0.0 <= nu <= 1.0):
        raise InvalidArgumentError(f"nu must be in [0, 1], got {nu}")
    if r < 0.0:
        raise InvalidArgumentError(f"r must be non-negative, got {r}")
    sh2 = math.sinh(r) ** 2
    return (1.0 + 4.0 * (nu - nu * nu) * sh2) / (1.0 + (1.0 - nu * nu) * sh2)


def make_epr_state(spec, channel: ChannelParams | None = None) -> CovarianceMatrix:
    """Two-mode entangled state of the full source-plus-channel pipeline.

    spec is a SqueezingSpec (measured variances or pure r) or SourceParams
    (pump model; its detected variances feed the measured-pair route). The
    pipeline is: single-mode input, tensor with vacuum, balanced beam
    splitter, per-arm optical loss, phase noise, detection noise.

    Per-arm loss is the incremental value (loss - epsilon)/(1 - epsilon)
    for measured inputs (epsilon is already inside the measured figure) and
    the full configured loss for pure-r inputs.
    """
    ch = channel if channel is not None else ChannelParams()
    if isinstance(spec, SourceParams):
        vs, va = pump_to_variances(spec)
        return _pipeline_from_measured(variance_to_db(vs), variance_to_db(va), ch)
    if not isinstance(spec, SqueezingSpec):
        raise InvalidArgumentError(f"spec must be SqueezingSpec or SourceParams, got {type(spec).__name__}")
    if spec.var_asqz_db is not None:
        return _pipeline_from_measured(spec.var_sqz_db, spec.var_asqz_db, ch)
    r = spec.r if spec.r is not None else r_from_measured(spec.var_sqz_db, ch.epsilon)
    return _pipeline(squeezed_vacuum(math.exp(-2.0 * r), math.exp(2.0 * r)), ch.loss_a, ch.loss_b, ch)


def _pipeline_from_measured(vs_db: float, va_db: float, ch: ChannelParams) -> CovarianceMatrix:
    eps = ch.epsilon
    vs = db_to_variance(vs_db)
    va = db_to_variance(va_db)
    if vs <= eps or va <= eps:
        raise InvalidArgumentError(
            f"measured variances ({vs_db} dB, {va_db} dB) do not exceed epsilon = {eps}; "
            "no source state is consistent with them"
        )
    vs_src = (vs - eps) / (1.0 - eps)
    va_src = (va - eps) / (1.0 - eps)
    if vs_src * va_src < 1.0 - DEFAULT_TOL:
        warnings.warn(
            f"measured pair ({vs_db} dB, {va_db} dB) implies a source variance product "
            f"{vs_src * va_src:.6f} < 1 under epsilon = {eps}; the inferred source state "
            "violates the uncertainty relation",
            stacklevel=2,
        )
    nu_a = _incremental_loss(ch.loss_a, eps, "loss_a")
    nu_b = _incremental_loss(ch.loss_b, eps, "loss_b")
    return _pipeline(squeezed_vacuum(vs, va), nu_a, nu_b, ch)


def _incremental_loss(total: float, epsilon: float, name: str) -> float:
    inc = (total - epsilon) / (1.0 - epsilon)
    if inc < 0.0:
        raise InvalidArgumentError(
            f"{name} = {total} is smaller than the source-side epsilon = {epsilon}; "
            "the measured-input route needs at least that much total loss per arm"
        )
    return inc


def _pipeline(single_mode: CovarianceMatrix, nu_a: float, nu_b: float, ch: ChannelParams) -> CovarianceMatrix:
    g = tensor(single_mode, vacuum(1))
    g = apply_symplectic(g, balanced_beamsplitter())
    if nu_a != 0.0 or nu_b != 0.0:
        g = loss_channel(g, [nu_a, nu_b])
    if ch.phase_sigma_a != 0.0 or ch.phase_sigma_b != 0.0:
        g = phase_noise_channel(g, [ch.phase_sigma_a, ch.phase_sigma_b])
    if ch.det_noise_a != 0.0 or ch.det_noise_b != 0.0:
        g = detection_noise(g, [ch.det_noise_a, ch.det_noise_b])
    return g


def _per_mode(value, n_modes: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n_modes, arr[0])
    if arr.shape != (n_modes,):
        raise InvalidArgumentError(f"{name} must be a scalar or a sequence of {n_modes} values, got {value!r}")
    return arr
