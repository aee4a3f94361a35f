"""
Ajuste por mínimos cuadrados no lineales del modelo de eficiencia.

Parámetros libres: eta0, tau_s, tau_bar, t0, A, B. Las frecuencias de batido
quedan fijas. Internamente el tiempo se adimensionaliza con el rango de las
muestras, tau_s y tau_bar se ajustan en escala logarítmica y t0 relativo al
primer instante, de modo que el ajuste es invariante ante traslaciones del eje
temporal.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import least_squares

from .decay import BEAT42_HZ, BEAT43_HZ, DecayModelParams, beat_factor, efficiency_at, s1_exponent
from .exceptions import DatasetError, DomainError, FitError

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ('eta0', 'tau_s', 'tau_bar', 't0', 'A', 'B')

MAX_ITERATIONS = 500
XTOL = 1e-10
FTOL = 1e-12
GTOL = 1e-14
DIFF_STEP = 1e-6
SINGULAR_CONDITION = 1e12

# Ajustes de referencia de las curvas de eficiencia fuera y en resonancia.
REFERENCE_FITS = {
    'off_resonance': DecayModelParams(eta0=0.251, tau_s=86e-9, tau_bar=101e-9, t0=-1.0e-9, A=0.160, B=0.006),
    'on_resonance': DecayModelParams(eta0=0.171, tau_s=82e-9, tau_bar=337e-9, t0=9.2e-9, A=0.032, B=0.007),
}


@dataclass(frozen=True)
class DecaySample:
    t: float
    eta: float
    sigma: float | None = None

    def __post_init__(self):
        if not self.eta >= 0:
            raise DomainError(f"eficiencia negativa o inválida en t={self.t}: {self.eta}")
        if self.sigma is not None and not self.sigma > 0:
            raise DomainError(f"sigma debe ser positivo en t={self.t}")


@dataclass(frozen=True)
class ParameterBounds:
    """Caja de búsqueda por parámetro, en unidades físicas."""
    eta0: tuple[float, float] = (1e-9, 1.0)
    tau_s: tuple[float, float] = (0.0, math.inf)
    tau_bar: tuple[float, float] = (0.0, math.inf)
    t0: tuple[float, float] = (-math.inf, math.inf)
    A: tuple[float, float] = (0.0, 2.0)
    B: tuple[float, float] = (0.0, 2.0)


@dataclass(frozen=True)
class FitResult:
    params: DecayModelParams
    stderr: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    singular: bool = False
    weighted: bool = False
    message: str = ''
    n_samples: int = 0
    evaluations: int = 0
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _arrays(samples):
    t = np.array([s.t for s in samples], dtype=float)
    eta = np.array([s.eta for s in samples], dtype=float)
    sigmas = [s.sigma for s in samples]
    weighted = any(sigma is not None for sigma in sigmas)
    sigma = np.array([1.0 if s is None else s for s in sigmas], dtype=float)
    return t, eta, sigma, weighted


def generate_synthetic(p: DecayModelParams, times, noise_sigma: float, seed: int,
                       attach_sigma: bool = False) -> list[DecaySample]:
    """
    Muestras sintéticas del modelo con ruido gaussiano, deterministas por semilla.

    Los valores negativos se recortan a 0.
    """
    if noise_sigma < 0:
        raise DomainError("noise_sigma no puede ser negativo")
    times = np.asarray(times, dtype=float)
    eta = np.asarray(efficiency_at(p, times), dtype=float)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        eta = eta + rng.normal(0.0, noise_sigma, size=times.shape)
    eta = np.maximum(eta, 0.0)
    sigma = noise_sigma if (attach_sigma and noise_sigma > 0) else None
    return [DecaySample(float(t), float(e), sigma) for t, e in zip(times, eta)]


def residuals(p: DecayModelParams, samples) -> np.ndarray:
    """Residuos ponderados (modelo - dato) / sigma, en el orden de las muestras."""
    t, eta, sigma, _ = _arrays(samples)
    return (np.asarray(efficiency_at(p, t), dtype=float) - eta) / sigma


def initial_guess(samples, beat43_hz=BEAT43_HZ, beat42_hz=BEAT42_HZ) -> DecayModelParams:
    """
    Estimación inicial determinista.

    eta0 = máximo de las muestras, t0 = instante del máximo, tau_s = primer
    cruce de eta0/e de los datos suavizados (media móvil de 3), tau_bar = 2 tau_s,
    A = 0.1, B = 0.01.
    """
    t, eta, _, _ = _arrays(samples)
    order = np.argsort(t, kind='stable')
    t, eta = t[order], eta[order]
    i_max = int(np.argmax(eta))
    eta0 = float(min(max(eta[i_max], 1e-6), 1.0))
    t0 = float(t[i_max])
    smoothed = uniform_filter1d(eta, size=3, mode='nearest')
    below = np.nonzero(smoothed[i_max:] < eta0 / math.e)[0]
    tau_s = float(t[i_max + below[0]] - t0) if below.size else 0.0
    if tau_s <= 0:
        tau_s = float(np.ptp(t)) / 2.0
    return DecayModelParams(
        eta0=eta0, tau_s=tau_s, tau_bar=2.0 * tau_s, t0=t0, A=0.1, B=0.01,
        beat43_hz=beat43_hz, beat42_hz=beat42_hz,
    )


class _Problem:
    """Problema adimensional: u = (t - t_ref) / scale."""

    def __init__(self, t, eta, sigma, beat43_hz, beat42_hz):
        self.t_ref = float(t.min())
        self.scale = float(np.ptp(t))
        self.u = (t - self.t_ref) / self.scale
        self.eta = eta
        self.sigma = sigma
        self.beat43 = beat43_hz * self.scale
        self.beat42 = beat42_hz * self.scale

    def to_internal(self, p: DecayModelParams):
        return np.array([
            p.eta0,
            math.log(p.tau_s / self.scale),
            math.log(p.tau_bar / self.scale),
            (p.t0 - self.t_ref) / self.scale,
            p.A,
            p.B,
        ])

    def bounds(self, box: ParameterBounds):
        def log_bound(value):
            if value <= 0:
                return -np.inf
            return math.log(value / self.scale) if math.isfinite(value) else np.inf

        lower = [box.eta0[0], log_bound(box.tau_s[0]), log_bound(box.tau_bar[0]),
                 (box.t0[0] - self.t_ref) / self.scale, box.A[0], box.B[0]]
        upper = [box.eta0[1], log_bound(box.tau_s[1]), log_bound(box.tau_bar[1]),
                 (box.t0[1] - self.t_ref) / self.scale, box.A[1], box.B[1]]
        return np.array(lower, dtype=float), np.array(upper, dtype=float)

    def model(self, x):
        eta0, log_tau_s, log_tau_bar, u0, a, b = x
        du = self.u - u0
        exponent = s1_exponent(du, math.exp(log_tau_s), math.exp(log_tau_bar))
        return eta0 * np.exp(-exponent) * beat_factor(a, b, self.beat43, self.beat42, du)

    def residuals(self, x):
        return (self.model(x) - self.eta) / self.sigma

    def to_physical(self, x, beat43_hz, beat42_hz):
        eta0, log_tau_s, log_tau_bar, u0, a, b = (float(v) for v in x)
        return DecayModelParams(
            eta0=eta0,
            tau_s=math.exp(log_tau_s) * self.scale,
            tau_bar=math.exp(log_tau_bar) * self.scale,
            t0=self.t_ref + u0 * self.scale,
            A=a,
            B=b,
            beat43_hz=beat43_hz,
            beat42_hz=beat42_hz,
        )


def _covariance(jac):
    """Pseudo-inversa de J^T J vía SVD, con la condición para detectar degeneración."""
    _, s, vt = np.linalg.svd(jac, full_matrices=False)
    threshold = np.finfo(float).eps * max(jac.shape) * s[0] if s.size else 0.0
    keep = s > threshold
    singular = (not keep.all()) or (s[0] / s[-1] > SINGULAR_CONDITION if s[-1] > 0 else True)
    s_kept = s[keep]
    vt_kept = vt[keep]
    cov = (vt_kept.T / s_kept ** 2) @ vt_kept
    return cov, singular


def fit_decay(samples, init: DecayModelParams | None = None, bounds: ParameterBounds | None = None,
              beat43_hz: float = BEAT43_HZ, beat42_hz: float = BEAT42_HZ,
              max_iterations: int = MAX_ITERATIONS, xtol: float = XTOL, ftol: float = FTOL,
              diff_step: float = DIFF_STEP) -> FitResult:
    """
    Ajusta eta0, tau_s, tau_bar, t0, A, B a las muestras.

    Minimiza Σ w_i (eta_modelo(t_i) - eta_i)^2 con w_i = 1/sigma_i^2 (o 1 sin
    sigma) usando región de confianza con jacobiano por diferencias finitas.
    Los errores estándar salen de la curvatura local (J^T W J)^-1; sin sigma
    se escalan con la varianza residual.
    """
    samples = list(samples)
    n_params = len(PARAMETER_NAMES)
    if len(samples) < n_params + 1:
        raise FitError(f"se necesitan al menos {n_params + 1} muestras, hay {len(samples)}")
    t, eta, sigma, weighted = _arrays(samples)
    if np.ptp(t) <= 0:
        raise FitError("todas las muestras tienen el mismo tiempo")

    if init is None:
        init = initial_guess(samples, beat43_hz, beat42_hz)
    else:
        init = replace(init, beat43_hz=beat43_hz, beat42_hz=beat42_hz)
    problem = _Problem(t, eta, sigma, beat43_hz, beat42_hz)
    lower, upper = problem.bounds(bounds or ParameterBounds())
    x0 = np.clip(problem.to_internal(init), lower, upper)

    result = least_squares(
        problem.residuals,
        x0,
        bounds=(lower, upper),
        method='trf',
        jac='2-point',
        diff_step=diff_step,
        x_scale='jac',
        xtol=xtol,
        ftol=ftol,
        gtol=GTOL,
        max_nfev=max_iterations,
    )

    params = problem.to_physical(result.x, beat43_hz, beat42_hz)
    cov, singular = _covariance(result.jac)
    dof = len(samples) - n_params
    if not weighted:
        cov = cov * (2.0 * result.cost / dof)
    internal_err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    # derivadas de la transformación interna -> física
    gradient = np.array([1.0, params.tau_s, params.tau_bar, problem.scale, 1.0, 1.0])
    stderr = {name: float(err * grad) for name, err, grad in zip(PARAMETER_NAMES, internal_err, gradient)}

    converged = bool(result.status > 0)
    notes = []
    if not converged:
        notes.append('max_iterations')
        logger.warning("El ajuste no convergió tras %d evaluaciones: %s", result.nfev, result.message)
    if singular:
        notes.append('singular_curvature')
        logger.warning("Curvatura singular en el óptimo: parámetros degenerados")
    if not params.has_homogeneous_time:
        notes.append('tau_bar_not_above_tau_s')
        logger.warning("tau_bar <= tau_s: tau_gamma no está definido para este ajuste")
    logger.debug("Ajuste terminado: status=%s nfev=%d cost=%.3e", result.status, result.nfev, result.cost)

    return FitResult(
        params=params,
        stderr=stderr,
        residual_norm=float(np.linalg.norm(result.fun)),
        converged=converged,
        iterations=int(result.njev or 0),
        singular=singular,
        weighted=weighted,
        message=str(result.message),
        n_samples=len(samples),
        evaluations=int(result.nfev),
        warnings=tuple(notes),
    )


def _fit_seed(args):
    params, times, noise_sigma, seed, init = args
    samples = generate_synthetic(params, times, noise_sigma, seed)
    return fit_decay(samples, init=init, beat43_hz=params.beat43_hz, beat42_hz=params.beat42_hz)


def fit_seeds(params: DecayModelParams, times, noise_sigma: float, seeds, init=None,
              workers: int = 1) -> list[FitResult]:
    """Ajusta una realización sintética por semilla; el resultado sigue el orden de las semillas."""
    jobs = [(params, np.asarray(times, dtype=float), noise_sigma, int(seed), init) for seed in seeds]
    if workers <= 1:
        return [_fit_seed(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_fit_seed, jobs))


def load_samples(path) -> list[DecaySample]:
    """Lee un CSV con cabecera t_s,eta[,sigma]; sigma vacía equivale a sin peso."""
    try:
        handle = open(path, newline='', encoding='utf-8')
    except OSError as exc:
        raise DatasetError(f"no se pudo abrir: {exc.strerror}", path=path) from exc
    with handle:
        reader = csv.DictReader(handle)
        for column in ('t_s', 'eta'):
            if column not in (reader.fieldnames or ()):
                raise DatasetError("falta la columna", column=column, path=path)
        samples = []
        for row_number, row in enumerate(reader, start=1):
            values = {}
            for column in ('t_s', 'eta', 'sigma'):
                raw = (row.get(column) or '').strip()
                if not raw:
                    values[column] = None
                    continue
                try:
                    values[column] = float(raw)
                except ValueError:
                    raise DatasetError(f"número inválido '{raw}'", row=row_number, column=column, path=path) from None
            if values['t_s'] is None or values['eta'] is None:
                raise DatasetError("valor vacío", row=row_number, column='t_s' if values['t_s'] is None else 'eta',
                                   path=path)
            try:
                samples.append(DecaySample(values['t_s'], values['eta'], values['sigma']))
            except DomainError as exc:
                raise DatasetError(str(exc), row=row_number, path=path) from None
    return samples


def dump_samples(samples, path):
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(['t_s', 'eta', 'sigma'])
        for sample in samples:
            writer.writerow([repr(sample.t), repr(sample.eta), '' if sample.sigma is None else repr(sample.sigma)])
    return path
