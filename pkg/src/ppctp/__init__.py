"""Policy learning for the stochastic Canadian Traveller Problem by
Metropolis-Hastings inference over probabilistic-program traces."""

from .ctp import CtpSpec, Edge, Instance, Node, diamond, draw_instance, generate_spec, is_connected, total_weight
from .dfs import Policy, WalkResult, admissible_edges, renormalized_selection_logprob, stdfs, uniform_policy
from .evaluation import EvalReport, LearningCurve, evaluate, exact_expected_cost, learning_curve
from .learner import LearnConfig, PolicyPosterior, build_model, extract_policy, learn, score

__version__ = "0.1.0"
