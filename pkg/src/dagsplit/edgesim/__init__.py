"""Mobile edge network simulator for comparing splitting strategies."""
from .channel import BANDS, RateTable, path_loss_db, shannon_rate_Bps
from .scenario import DeviceSpec, Scenario, link_rate, load_scenario, rate_trace, scenario_from_dict
from .simulate import (
    STRATEGIES,
    EpochReport,
    compare,
    oss_partition,
    simulate,
    summarize,
    worst_fixed_cut,
)
