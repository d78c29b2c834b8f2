from .config import (A3Config, ConfigError, MaskConfig, RadioConfig,
                     ReservationConfig, RlfConfig, ScenarioConfig, SimConfig,
                     TrafficProfile, UeConfig, config_hash)
from .handover import evaluate_a3
from .kpm import (CELL_DIM, CELL_FEATURES, EDGE_DIM, EDGE_FEATURES, UE_DIM,
                  UE_FEATURES, KpmReport, NormRanges)
from .radio import (RadioEnvironment, RadioSample, ShadowingField, compute_rsrp,
                    cqi_from_sinr, path_loss_db, prb_efficiency)
from .scheduler import schedule_prbs
from .world import (IDLE, INTERRUPTED, PREPARING, IntervalStats, Reservation,
                    ReservationRequest, SimEvent, UeState, WorldState)

__all__ = [
    "A3Config", "ConfigError", "MaskConfig", "RadioConfig", "ReservationConfig",
    "RlfConfig", "ScenarioConfig", "SimConfig", "TrafficProfile", "UeConfig",
    "config_hash", "evaluate_a3",
    "KpmReport", "NormRanges", "EDGE_FEATURES", "UE_FEATURES", "CELL_FEATURES",
    "EDGE_DIM", "UE_DIM", "CELL_DIM",
    "RadioEnvironment", "RadioSample", "ShadowingField", "compute_rsrp",
    "cqi_from_sinr", "path_loss_db", "prb_efficiency", "schedule_prbs",
    "WorldState", "IntervalStats", "SimEvent", "Reservation", "ReservationRequest",
    "UeState", "IDLE", "PREPARING", "INTERRUPTED",
]
