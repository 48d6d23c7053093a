"""Two-sample survival testing under proportional and non-proportional
hazards, with scenario generators and a Monte-Carlo benchmark harness.

The test battery: the classical and Peto-Peto weighted log-rank tests, a
multi-weight quadratic-form omnibus test (mdir2/3/4), the MaxCombo
maximum-type test, a two-stage log-rank-then-crossing procedure, tests on
the restricted mean survival time and the area between survival curves,
and a sample-space-partition permutation test (KONP).
"""

from .area import RmstEstimate, abc_statistic, abc_test, rmst, rmst_diff_test
from .core import (
    RiskTable,
    StepFunction,
    SurvivalDataset,
    TestOutcome,
    build_risk_table,
    default_tau,
    kaplan_meier,
    load_csv,
    nelson_aalen,
)
from .errors import (
    CalibrationError,
    DataFormatError,
    DegenerateStatisticError,
    DegenerateVarianceError,
    InvalidDataError,
    NoAdmissiblePairsError,
    NoEventsError,
    NphbenchError,
    Stage2UndefinedError,
)
from .harness import (
    METHOD_NAMES,
    Budgets,
    GridConfig,
    SimulationResult,
    run_cell,
    run_grid,
    run_method,
    summarize,
)
from .konp import konp_statistic, konp_test
from .omnibus import (
    MAXCOMBO_WEIGHTS,
    MDIR2_WEIGHTS,
    MDIR3_WEIGHTS,
    MDIR4_WEIGHTS,
    maxcombo_test,
    mdir_statistic,
    mdir_test,
)
from .scenarios import (
    DEFAULT_GRID_SCENARIOS,
    SCENARIOS,
    ScenarioSpec,
    SettingSpec,
    calibrate_censoring,
    default_settings,
    generate_dataset,
    get_scenario,
    scenario_manifest,
)
from .twostage import TwoStageConfig, stage2_statistic, stage2_weights, two_stage_test
from .wlrt import (
    ConstantWeight,
    CrossingWeight,
    FlemingHarringtonWeight,
    PetoPetoWeight,
    logrank_test,
    peto_peto_test,
    weighted_logrank_z,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "SurvivalDataset", "RiskTable", "StepFunction", "TestOutcome",
    "build_risk_table", "kaplan_meier", "nelson_aalen", "default_tau", "load_csv",
    # weighted log-rank
    "ConstantWeight", "PetoPetoWeight", "FlemingHarringtonWeight", "CrossingWeight",
    "weighted_logrank_z", "logrank_test", "peto_peto_test",
    # omnibus
    "MDIR2_WEIGHTS", "MDIR3_WEIGHTS", "MDIR4_WEIGHTS", "MAXCOMBO_WEIGHTS",
    "mdir_statistic", "mdir_test", "maxcombo_test",
    # two-stage
    "TwoStageConfig", "stage2_weights", "stage2_statistic", "two_stage_test",
    # area
    "RmstEstimate", "rmst", "rmst_diff_test", "abc_statistic", "abc_test",
    # konp
    "konp_statistic", "konp_test",
    # scenarios
    "ScenarioSpec", "SettingSpec", "SCENARIOS", "DEFAULT_GRID_SCENARIOS",
    "get_scenario", "default_settings", "calibrate_censoring",
    "generate_dataset", "scenario_manifest",
    # harness
    "METHOD_NAMES", "Budgets", "GridConfig", "SimulationResult",
    "run_method", "run_cell", "run_grid", "summarize",
    # errors
    "NphbenchError", "DataFormatError", "InvalidDataError", "NoEventsError",
    "DegenerateStatisticError", "DegenerateVarianceError",
    "NoAdmissiblePairsError", "Stage2UndefinedError", "CalibrationError",
]
