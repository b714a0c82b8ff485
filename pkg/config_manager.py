# config_manager.py
"""
Gestionnaire de configuration et de journalisation pour mlab.

Ce module permet de:
- Charger la configuration d'exécution depuis les variables d'environnement
  (aucun fichier de configuration: flags CLI et environnement uniquement)
- Calculer un parallélisme par défaut adapté à la machine (psutil)
- Construire le logger "mlab" (console + fichier optionnel)
"""

import logging
import os
import sys
from dataclasses import asdict, dataclass
from logging import Logger
from typing import Any, Dict, Optional

# Détection CPU/RAM pour le parallélisme par défaut
PSUTIL_AVAILABLE = False
try:
    import psutil
    PSUTIL_AVAILABLE = True
except ImportError:
    psutil = None

logger = logging.getLogger(__name__)


# =============================================================================
#  CONFIGURATION
# =============================================================================

ENV_PARALLELISM = "MLAB_PARALLELISM"
ENV_QUAD_TOL = "MLAB_QUAD_TOL"
ENV_LOG_FILE = "MLAB_LOG_FILE"

DEFAULT_CONFIG: Dict[str, Any] = {
    "parallelism": 0,              # 0 = auto (psutil)
    "quad_tol": 1e-12,             # tolérance absolue par défaut des quadratures
    "quad_max_degree": 7,          # niveau max de raffinement tanh-sinh par panneau
    "quad_max_subdivisions": 4,    # nombre de bissections de tous les panneaux
    "series_terms": 120,           # ordre de troncature des séries exactes
    "mp_dps": 20,                  # précision mpmath (fixée une fois à l'import)
    "log_file": "",                # vide = pas de FileHandler
}


@dataclass
class MlabConfig:
    """Configuration d'exécution."""
    parallelism: int
    quad_tol: float
    quad_max_degree: int
    quad_max_subdivisions: int
    series_terms: int
    mp_dps: int
    log_file: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MlabConfig":
        merged = {**DEFAULT_CONFIG, **{k: v for k, v in data.items() if k in DEFAULT_CONFIG}}
        return cls(
            parallelism=int(merged["parallelism"]),
            quad_tol=float(merged["quad_tol"]),
            quad_max_degree=int(merged["quad_max_degree"]),
            quad_max_subdivisions=int(merged["quad_max_subdivisions"]),
            series_terms=int(merged["series_terms"]),
            mp_dps=int(merged["mp_dps"]),
            log_file=str(merged["log_file"]),
        )

    @property
    def effective_parallelism(self) -> int:
        return self.parallelism if self.parallelism >= 1 else get_optimal_parallelism()


def get_optimal_parallelism(cpu_count: Optional[int] = None, ram_gb: Optional[float] = None) -> int:
    """
    Calcule le nombre de workers par défaut pour verify --all.

    Utilise les coeurs physiques, plafonnés selon la RAM disponible
    (la somme par cubes de F(b,c) alloue ~50 Mo par worker).

    Args:
        cpu_count: nombre de coeurs (si None, détecté)
        ram_gb: RAM disponible en Go (si None, détectée)

    Returns:
        Nombre de workers (>= 1)
    """
    if cpu_count is None:
        if PSUTIL_AVAILABLE:
            cpu_count = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
        else:
            cpu_count = os.cpu_count() or 1
    if ram_gb is None:
        if PSUTIL_AVAILABLE:
            ram_gb = psutil.virtual_memory().available / (1024 ** 3)
        else:
            ram_gb = 4.0  # valeur conservatrice

    # Paliers de RAM
    if ram_gb <= 2:
        cap = 1
    elif ram_gb <= 4:
        cap = 2
    elif ram_gb <= 8:
        cap = 4
    else:
        cap = 8
    return max(1, min(int(cpu_count), cap))


def _env_int(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"[CONFIG] ⚠️ {name}={raw!r} invalide, valeur par défaut {default}")
        return default
    if value < minimum:
        logger.warning(f"[CONFIG] ⚠️ {name}={value} < {minimum}, valeur par défaut {default}")
        return default
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        logger.warning(f"[CONFIG] ⚠️ {name}={raw!r} invalide, valeur par défaut {default}")
        return default
    if not value > 0:
        logger.warning(f"[CONFIG] ⚠️ {name}={value} doit être > 0, valeur par défaut {default}")
        return default
    return value


def load_config() -> MlabConfig:
    """
    Charge la configuration depuis l'environnement.
    Les valeurs absentes ou invalides reprennent DEFAULT_CONFIG.
    """
    data = dict(DEFAULT_CONFIG)
    data["parallelism"] = _env_int(ENV_PARALLELISM, DEFAULT_CONFIG["parallelism"], minimum=1)
    data["quad_tol"] = _env_float(ENV_QUAD_TOL, DEFAULT_CONFIG["quad_tol"])
    data["log_file"] = os.getenv(ENV_LOG_FILE, DEFAULT_CONFIG["log_file"])
    return MlabConfig.from_dict(data)


CONFIG = load_config()


# =============================================================================
#  LOGGING
# =============================================================================

def make_logger(debug: bool, log_file: Optional[str] = None) -> Logger:
    # Handlers sur le logger racine: les modules loggent via getLogger(__name__)
    log = logging.getLogger()

    # Console silencieuse en mode non-debug
    level = logging.DEBUG if debug else logging.WARNING
    log.setLevel(level)

    # Si le logger a déjà des handlers, on met juste à jour leurs niveaux
    if log.handlers:
        for h in log.handlers:
            if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler):
                h.setLevel(level)
        return log

    fmt = logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(message)s", "%Y-%m-%d %H:%M:%S"
    )

    # Console sur stderr: stdout reste réservé aux rapports
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(level)
    ch.setFormatter(fmt)
    log.addHandler(ch)

    log_file = log_file if log_file is not None else CONFIG.log_file
    if log_file:
        # Fichier : on garde tout en DEBUG pour analyse détaillée
        fh = logging.FileHandler(log_file, encoding="utf-8")
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(fmt)
        log.addHandler(fh)
        log.setLevel(logging.DEBUG)

    log.info("=== Configuration mlab ===")
    for key, value in CONFIG.to_dict().items():
        log.info(f"{key:<22} = {value}")
    return log
