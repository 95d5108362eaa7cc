from .channel import apply_utilization, jakes_correlation, rb_interference
from .config import MODES, SCHEDULERS, ScenarioConfig
from .deployment import NetworkState, antenna_gain_db, deploy, path_loss_db
from .metrics import RunMetrics, ScheduleLog, compute_metrics, percentile5
from .simulator import Allocation, Simulator, run, run_drop, scma_profiles

__all__ = [
    "MODES", "SCHEDULERS", "ScenarioConfig", "NetworkState", "RunMetrics", "ScheduleLog",
    "Allocation", "Simulator", "deploy", "run", "run_drop", "compute_metrics", "percentile5",
    "apply_utilization", "jakes_correlation", "rb_interference", "path_loss_db",
    "antenna_gain_db", "scma_profiles",
]
