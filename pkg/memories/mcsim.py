"""
Simulación Monte-Carlo de N unidades fuente-memoria con repetición hasta el éxito.

Orden fijo de eventos en cada ciclo:
  1. cada fotón guardado desde ciclos anteriores se pierde con probabilidad b;
  2. cada unidad vacía recibe un fotón con probabilidad q;
  3. si las N unidades están llenas hay un intento de lectura: cada unidad
     recupera con probabilidad eta0 y el éxito exige las N; después del
     intento todas las unidades se vacían (o sólo las que recuperaron, con
     keep_unretrieved).

La pérdida sólo afecta a fotones de ciclos previos, de modo que con b = 1 la
tasa por ciclo es q^N.

Cada réplica usa su propio flujo Philox derivado de (seed, réplica) y corre
`lanes` cadenas independientes en paralelo vectorial. En cada paso se sortean
siempre los tres uniformes (pérdida, emisión, lectura) de todas las unidades,
así dos configuraciones con la misma semilla comparten números aleatorios.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigMismatchError, DomainError
from .syncrate import RPolicy, SyncParams, loss_prob_b, n_photon_rate

logger = logging.getLogger(__name__)

LANES = 256
BLOCK = 512
Z95 = 1.96


@dataclass(frozen=True)
class SimConfig:
    n_sources: int
    q: float
    b: float
    eta0: float
    n_cycles: int
    seed: int = 0
    replicas: int = 1
    lanes: int = LANES
    keep_unretrieved: bool = False

    def __post_init__(self):
        if int(self.n_sources) != self.n_sources or self.n_sources < 1:
            raise DomainError("n_sources debe ser un entero >= 1")
        for name in ('q', 'b', 'eta0'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} debe estar en [0, 1], se recibió {value}")
        if self.n_cycles < 1:
            raise DomainError("n_cycles debe ser >= 1")
        if self.replicas < 1 or self.lanes < 1:
            raise DomainError("replicas y lanes deben ser >= 1")
        if self.seed < 0:
            raise DomainError("la semilla no puede ser negativa")

    @classmethod
    def from_fractional_delay(cls, n_sources, q, f, eta0, n_cycles, **kwargs):
        """Construye la configuración aplicando b = 1 - e^{-1/f}."""
        return cls(n_sources=n_sources, q=q, b=loss_prob_b(f), eta0=eta0, n_cycles=n_cycles, **kwargs)

    @property
    def fractional_delay(self):
        """f equivalente a b; infinito si b = 0."""
        if self.b >= 1.0:
            return 0.0
        if self.b == 0.0:
            return math.inf
        return -1.0 / math.log1p(-self.b)

    def physics_key(self):
        return (self.n_sources, self.q, self.b, self.eta0, self.lanes, self.keep_unretrieved)


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    n_successes: int
    n_readout_attempts: int
    cycles_elapsed: int
    occupied_unit_cycles: int
    streams: tuple[tuple[int, int], ...] = ()

    @property
    def rate_per_cycle(self):
        return self.n_successes / self.cycles_elapsed

    @property
    def ci95(self):
        """Semiancho del intervalo del 95% con estadística de Poisson sobre los éxitos."""
        return Z95 * math.sqrt(self.n_successes) / self.cycles_elapsed

    @property
    def unit_availability(self):
        """Fracción media de unidades llenas en el punto de decisión de lectura de cada ciclo."""
        return self.occupied_unit_cycles / (self.config.n_sources * self.cycles_elapsed)


def replica_stream(seed: int, replica: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, replica])))


def replica_cycles(n_cycles: int, replicas: int, replica: int) -> int:
    return n_cycles // replicas + (1 if replica < n_cycles % replicas else 0)


def simulate_replica(cfg: SimConfig, replica: int, block: int = BLOCK) -> SimResult:
    """
    Corre la réplica `replica` de cfg con su propio flujo aleatorio.

    Orden de eventos en cada ciclo: pérdida de los fotones guardados (b),
    emisión en las unidades vacías (q) y, si todas están llenas, lectura
    (eta0 por unidad). Con este orden, b = 1 y eta0 = 1 dan exactamente q^N por ciclo.
    La ocupación de unidades se cuenta en todos los ciclos, justo antes
    de la decisión de lectura.
    """
    cycles = replica_cycles(cfg.n_cycles, cfg.replicas, replica)
    local = replace(cfg, n_cycles=max(cycles, 1), replicas=1)
    if cycles == 0:
        return SimResult(local, 0, 0, 0, 0, ((cfg.seed, replica),))

    rng = replica_stream(cfg.seed, replica)
    lanes = min(cfg.lanes, cycles)
    n = cfg.n_sources
    counts = np.full(lanes, cycles // lanes)
    counts[: cycles % lanes] += 1
    steps = int(counts.max())

    full = np.zeros((lanes, n), dtype=bool)
    successes = attempts = occupied = 0
    done = 0
    while done < steps:
        size = min(block, steps - done)
        draws = rng.random((size, 3, lanes, n))
        for k in range(size):
            active = counts > done + k
            u_loss, u_emit, u_read = draws[k]
            full &= u_loss >= cfg.b
            full |= u_emit < cfg.q
            occupied += int(full[active].sum())
            ready = full.all(axis=1) & active
            if not ready.any():
                continue
            retrieved = u_read < cfg.eta0
            attempts += int(ready.sum())
            successes += int((ready & retrieved.all(axis=1)).sum())
            if cfg.keep_unretrieved:
                full[ready] &= ~retrieved[ready]
            else:
                full[ready] = False
        done += size

    logger.debug("Réplica %d: %d ciclos, %d intentos, %d éxitos", replica, cycles, attempts, successes)
    return SimResult(
        config=local,
        n_successes=successes,
        n_readout_attempts=attempts,
        cycles_elapsed=cycles,
        occupied_unit_cycles=occupied,
        streams=((cfg.seed, replica),),
    )


def merge(results) -> SimResult:
    """
    Combina réplicas de la misma configuración física sumando conteos.

    Conmutativa y asociativa: el resultado no depende del orden de entrada.
    """
    results = list(results)
    if not results:
        raise DomainError("no hay resultados que combinar")
    key = results[0].config.physics_key()
    for other in results[1:]:
        if other.config.physics_key() != key:
            raise ConfigMismatchError(
                f"configuraciones distintas: {other.config.physics_key()} != {key}"
            )
    base = min(results, key=lambda r: r.streams)
    streams = tuple(sorted(s for r in results for s in r.streams))
    cycles = sum(r.cycles_elapsed for r in results)
    return SimResult(
        config=replace(base.config, n_cycles=cycles, replicas=len(streams)),
        n_successes=sum(r.n_successes for r in results),
        n_readout_attempts=sum(r.n_readout_attempts for r in results),
        cycles_elapsed=cycles,
        occupied_unit_cycles=sum(r.occupied_unit_cycles for r in results),
        streams=streams,
    )


def _replica_job(args):
    cfg, replica, block = args
    return simulate_replica(cfg, replica, block)


def simulate(cfg: SimConfig, workers: int = 1, block: int = BLOCK) -> SimResult:
    """Corre todas las réplicas (en paralelo si workers > 1) y las combina en orden de réplica."""
    jobs = [(cfg, replica, block) for replica in range(cfg.replicas)]
    if workers > 1 and cfg.replicas > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.replicas)) as pool:
            results = list(pool.map(_replica_job, jobs))
    else:
        results = [_replica_job(job) for job in jobs]
    merged = merge(results)
    logger.info(
        "Simulación N=%d q=%g b=%g eta0=%g: %d éxitos en %d ciclos",
        cfg.n_sources, cfg.q, cfg.b, cfg.eta0, merged.n_successes, merged.cycles_elapsed,
    )
    return replace(merged, config=cfg)


def analytic_rate_per_cycle(cfg: SimConfig, r_policy: RPolicy | None = None) -> float:
    """Tasa analítica por ciclo para la misma (N, q, b, eta0)."""
    f = cfg.fractional_delay
    if not f > 0:
        raise DomainError("la comparación analítica requiere b < 1")
    params = SyncParams(cfg.n_sources, cfg.q, tau_c=1.0, eta0=cfg.eta0, f=f, r_policy=r_policy)
    return n_photon_rate(params).rate


@dataclass(frozen=True)
class AgreementPoint:
    n_sources: int
    q: float
    f: float
    eta0: float
    simulated: float
    simulated_ci95: float
    analytic: float

    @property
    def ratio(self):
        return self.simulated / self.analytic

    @property
    def ratio_ci95(self):
        return self.simulated_ci95 / self.analytic


def agreement(cfg: SimConfig, r_policy: RPolicy | None = None, workers: int = 1) -> AgreementPoint:
    """Cociente simulado/analítico en un punto; su desviación de 1 es un resultado, no un fallo."""
    result = simulate(cfg, workers=workers)
    return AgreementPoint(
        n_sources=cfg.n_sources,
        q=cfg.q,
        f=cfg.fractional_delay,
        eta0=cfg.eta0,
        simulated=result.rate_per_cycle,
        simulated_ci95=result.ci95,
        analytic=analytic_rate_per_cycle(cfg, r_policy),
    )


def agreement_grid(n_cycles: int, seed: int = 0, replicas: int = 1, n_values=(2, 3),
                   q_values=(0.01, 0.05), f_values=(20.0, 100.0), eta0_values=(0.25, 0.5),
                   r_policy: RPolicy | None = None, workers: int = 1, lanes: int = LANES,
                   keep_unretrieved: bool = False) -> list[AgreementPoint]:
    """Recorre la grilla (N, q, f, eta0) en orden lexicográfico."""
    points = []
    for n in n_values:
        for q in q_values:
            for f in f_values:
                for eta0 in eta0_values:
                    cfg = SimConfig.from_fractional_delay(
                        n, q, f, eta0, n_cycles, seed=seed, replicas=replicas, lanes=lanes,
                        keep_unretrieved=keep_unretrieved,
                    )
                    points.append(agreement(cfg, r_policy, workers))
    return points
