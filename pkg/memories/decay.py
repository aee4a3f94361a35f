"""
Modelo de eficiencia de la memoria y figuras de mérito.

Funciones puras sin estado: el decaimiento de la eficiencia con el tiempo de
almacenamiento (envolvente exponencial-gaussiana con batidos hiperfinos), las
relaciones entre parámetros de la envolvente y las estimaciones físicas del
presupuesto de vida media.

Convenciones: tiempos en segundos, frecuencias cíclicas en Hz. El factor 2π
se aplica siempre dentro de las operaciones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .exceptions import DomainError

# Diferencias hiperfinas del nivel 5D5/2 (F=4-F=3 y F=4-F=2). F=1 no se modela.
BEAT43_HZ = 28.82e6
BEAT42_HZ = 51.77e6

RB87_MASS_AMU = 86.909180527


@dataclass(frozen=True)
class DecayModelParams:
    """Parámetros del modelo de eficiencia: envolvente, t0 y amplitudes de batido."""
    eta0: float
    tau_s: float
    tau_bar: float
    t0: float = 0.0
    A: float = 0.0
    B: float = 0.0
    beat43_hz: float = BEAT43_HZ
    beat42_hz: float = BEAT42_HZ

    def __post_init__(self):
        if not 0.0 < self.eta0 <= 1.0:
            raise DomainError(f"eta0 debe estar en (0, 1], se recibió {self.eta0}")
        if self.tau_s <= 0 or self.tau_bar <= 0:
            raise DomainError("tau_s y tau_bar deben ser positivos")
        if self.A < 0 or self.B < 0:
            raise DomainError("las amplitudes de batido A y B no pueden ser negativas")
        if not (math.isfinite(self.t0) and self.beat43_hz > 0 and self.beat42_hz > 0):
            raise DomainError("t0 debe ser finito y las frecuencias de batido positivas")

    @property
    def omega43(self):
        return 2 * math.pi * self.beat43_hz

    @property
    def omega42(self):
        return 2 * math.pi * self.beat42_hz

    @property
    def has_homogeneous_time(self):
        """True si tau_bar > tau_s, es decir si tau_gamma es positivo."""
        return self.tau_bar > self.tau_s


@dataclass(frozen=True)
class EnvelopeTimes:
    """Tiempos de decaimiento homogéneo (tau_gamma) e inhomogéneo (tau_sigma)."""
    tau_gamma: float
    tau_sigma: float

    def __post_init__(self):
        if self.tau_gamma <= 0 or self.tau_sigma <= 0:
            raise DomainError("tau_gamma y tau_sigma deben ser positivos")


@dataclass(frozen=True)
class RateBudget:
    """Tasas de decoherencia por canal, como pares (etiqueta, Hz cíclicos)."""
    components: tuple[tuple[str, float], ...]

    def __post_init__(self):
        components = tuple((str(label), float(rate)) for label, rate in self.components)
        if not components:
            raise DomainError("el presupuesto necesita al menos un componente")
        for label, rate in components:
            if not rate >= 0:
                raise DomainError(f"tasa negativa o inválida en '{label}': {rate}")
        object.__setattr__(self, 'components', components)

    @classmethod
    def from_rates(cls, rates, labels=None):
        labels = labels or [f"rate_{i}" for i in range(len(rates))]
        return cls(tuple(zip(labels, rates)))

    @property
    def total_hz(self):
        return math.fsum(rate for _, rate in self.components)


def derived_times(tau_s: float, tau_bar: float) -> EnvelopeTimes:
    """
    Convierte (tau_s, tau_bar) en los tiempos de la envolvente.

    tau_gamma = tau_s tau_bar / (tau_bar - tau_s), tau_sigma = sqrt(tau_s tau_bar / 2).
    """
    if tau_s <= 0:
        raise DomainError(f"tau_s debe ser positivo, se recibió {tau_s}")
    if tau_bar <= tau_s:
        raise DomainError(
            f"tau_bar ({tau_bar}) debe ser mayor que tau_s ({tau_s}) para un tau_gamma positivo"
        )
    product = tau_s * tau_bar
    return EnvelopeTimes(
        tau_gamma=product / (tau_bar - tau_s),
        tau_sigma=math.sqrt(product / 2.0),
    )


def envelope_parameters(times: EnvelopeTimes) -> tuple[float, float]:
    """Inversa de derived_times: devuelve (tau_s, tau_bar)."""
    product = 2.0 * times.tau_sigma ** 2
    difference = product / times.tau_gamma
    # forma sin cancelación de (-d + sqrt(d^2 + 4P)) / 2
    tau_s = 2.0 * product / (difference + math.sqrt(difference ** 2 + 4.0 * product))
    return tau_s, product / tau_s


def s1_exponent(dt, tau_s, tau_bar):
    """Exponente [(dt - tau_s)(dt + tau_bar)/(tau_s tau_bar) + 1]; vale 0 en dt = 0 y 1 en dt = tau_s."""
    return (dt - tau_s) * (dt + tau_bar) / (tau_s * tau_bar) + 1.0


def beat_factor(A, B, beat43_hz, beat42_hz, dt):
    """|1 + A e^{-i w43 dt} + B e^{-i w42 dt}|^2 / (1 + A + B)^2, igual a 1 en dt = 0."""
    dt = np.asarray(dt, dtype=float)
    phase43 = 2 * np.pi * beat43_hz * dt
    phase42 = 2 * np.pi * beat42_hz * dt
    real = 1.0 + A * np.cos(phase43) + B * np.cos(phase42)
    imag = -(A * np.sin(phase43) + B * np.sin(phase42))
    norm = 1.0 + A + B
    return (real / norm) ** 2 + (imag / norm) ** 2


def envelope_efficiency(p: DecayModelParams, t):
    """Envolvente sin batidos: eta0 e^{-(t-t0)/tau_gamma} e^{-(t-t0)^2/(2 tau_sigma^2)}."""
    times = derived_times(p.tau_s, p.tau_bar)
    dt = np.asarray(t, dtype=float) - p.t0
    value = p.eta0 * np.exp(-dt / times.tau_gamma - dt ** 2 / (2.0 * times.tau_sigma ** 2))
    return value if value.ndim else float(value)


def s1_envelope(p: DecayModelParams, t):
    """Factor exponencial del modelo completo, escrito en términos de tau_s y tau_bar."""
    dt = np.asarray(t, dtype=float) - p.t0
    value = p.eta0 * np.exp(-s1_exponent(dt, p.tau_s, p.tau_bar))
    return value if value.ndim else float(value)


def efficiency_at(p: DecayModelParams, t):
    """
    Eficiencia externa a tiempo de almacenamiento t (escalar o arreglo).

    Envolvente por el factor de batidos normalizado; vale eta0 exactamente en t0.
    """
    dt = np.asarray(t, dtype=float) - p.t0
    value = p.eta0 * np.exp(-s1_exponent(dt, p.tau_s, p.tau_bar)) * beat_factor(
        p.A, p.B, p.beat43_hz, p.beat42_hz, dt
    )
    return value if value.ndim else float(value)


def _check_fraction(name, value):
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} debe estar en [0, 1], se recibió {value}")


def external_efficiency(eta_int: float, t_setup: float) -> float:
    """Eficiencia externa = eficiencia interna x transmisión del montaje."""
    _check_fraction('eta_int', eta_int)
    _check_fraction('t_setup', t_setup)
    return eta_int * t_setup


def setup_transmission(*stages: float) -> float:
    """Transmisión total como producto de las etapas (filtros, fibra, celda...)."""
    for stage in stages:
        _check_fraction('stage', stage)
    return math.prod(stages)


def fractional_delays(eta0: float, tau_s: float, tau_c: float) -> tuple[float, float]:
    """Retardo fraccional f' = tau_s/tau_c y efectivo f'_e = eta0 f'."""
    if tau_c <= 0:
        raise DomainError(f"tau_c debe ser positivo, se recibió {tau_c}")
    f_prime = tau_s / tau_c
    return f_prime, eta0 * f_prime


def noise_to_signal(nu: float, eta0: float) -> float:
    """mu1 = nu / eta0: fotones de ruido por fotón recuperado."""
    if eta0 <= 0:
        raise DomainError("mu1 no está definido para eta0 = 0")
    if nu < 0:
        raise DomainError("nu no puede ser negativo")
    return nu / eta0


def lifetime_budget(budget: RateBudget) -> float:
    """Vida media 1/(2π Σ f_i) a partir de tasas cíclicas."""
    total = budget.total_hz
    if total <= 0:
        raise DomainError("la tasa total del presupuesto es cero")
    return 1.0 / (2 * math.pi * total)


def coherence_rate(radiative_lifetime: float) -> float:
    """Tasa (Hz cíclicos) de decaimiento de la coherencia: la mitad de la poblacional."""
    if radiative_lifetime <= 0:
        raise DomainError("la vida media radiativa debe ser positiva")
    return 1.0 / (4 * math.pi * radiative_lifetime)


def thermal_velocity(temperature: float, mass_amu: float = RB87_MASS_AMU) -> float:
    """Velocidad térmica unidimensional sqrt(kB T / m), en m/s."""
    if temperature <= 0 or mass_amu <= 0:
        raise DomainError("temperatura y masa deben ser positivas")
    return math.sqrt(constants.k * temperature / (mass_amu * constants.atomic_mass))


def motional_budget(temperature, coherence_wavelength, waist, homogeneous_hz=0.0,
                    mass_amu=RB87_MASS_AMU) -> RateBudget:
    """
    Presupuesto de decoherencia por movimiento térmico.

    Doppler residual (Δk v_T = 2π v_T / λ_coh), tiempo de vuelo (v_T / w0) y,
    opcionalmente, la tasa homogénea. Todas en Hz cíclicos.
    """
    if coherence_wavelength <= 0 or waist <= 0:
        raise DomainError("longitud de coherencia y cintura deben ser positivas")
    v_t = thermal_velocity(temperature, mass_amu)
    components = [
        ('residual_doppler', v_t / coherence_wavelength),
        ('transit', v_t / (2 * math.pi * waist)),
    ]
    if homogeneous_hz:
        components.append(('homogeneous', homogeneous_hz))
    return RateBudget(tuple(components))


def coupling_parameter(omega_over_delta: float, tau_p: float, gamma_od_product: float) -> float:
    """
    Parámetro de acoplamiento C = (Ω/Δ) sqrt(tau_p γ OD_stat) / 4.

    gamma_od_product se da en Hz cíclicos y se convierte a angular aquí.
    """
    if omega_over_delta < 0 or tau_p <= 0 or gamma_od_product <= 0:
        raise DomainError("entradas del parámetro de acoplamiento fuera de dominio")
    return omega_over_delta * math.sqrt(tau_p * 2 * math.pi * gamma_od_product) / 4.0


def coupling_projection(omega_over_delta=0.36, gamma_od_product=5e9, tau_p=200e-12,
                        power_gain=30.0, detuning_gain=3.0, od_gain=10.0) -> float:
    """
    Acoplamiento proyectado al escalar potencia de control, desintonía y densidad.

    Ω escala como sqrt(power_gain); con los valores por defecto da C ≈ 1.3.
    """
    scaled_ratio = omega_over_delta * math.sqrt(power_gain) / detuning_gain
    return coupling_parameter(scaled_ratio, tau_p, gamma_od_product * od_gain)


def fluorescence_collection_fraction(na: float, demag: float = 1.0) -> float:
    """Fracción de la fluorescencia isotrópica aceptada por la fibra: (NA/M)^2 / 4."""
    if na <= 0 or demag < 1:
        raise DomainError("se requiere na > 0 y demag >= 1")
    return (na / demag) ** 2 / 4.0
