"""Tabular RL with one abrupt model change: Q-learning, CUSUM detection, adaptive agents."""

from .agents import (AgentConfig, RunResult, run_ignore, run_oracle, run_staql, run_ttaql,
                     with_reduced_thresholds)
from .detect import (Baseline, CusumDetector, GlrCusum, baseline_stats, check_alarm,
                     cusum_update, estimate_information_number, glr_update)
from .inventory import (DemandModel, InventoryParams, exact_inventory_kernel, full_stock_policy,
                        inventory_next_state, inventory_reward, sample_poisson)
from .mdp import (NonstationaryProcess, RngStream, TabularMDP, discounted_return, env_step,
                  rollout, value_iteration)
from .qlearn import (InitStrategy, LearningSchedule, decay, greedy_policy, init_qtable,
                     q_learning, select_action, td_update)

__version__ = "0.1.0"
