import math

import numpy as np
import pytest

from ppctp.ctp import RngSource, diamond, draw_instance, generate_spec, is_connected, total_weight
from ppctp.dfs import Policy, stdfs, uniform_policy
from ppctp.errors import InfeasibleEvaluationError, OracleTooLargeError, ValidationError
from ppctp.evaluation import LearningCurve, evaluate, exact_expected_cost, learning_curve, rollout
from ppctp.learner import LearnConfig, learn

from conftest import random_small_spec, single_edge


def test_single_edge_report():
    spec = single_edge(3.0)
    rep = evaluate(spec, uniform_policy(spec), 50, master_seed=0)
    assert rep.mean_cost == 3.0 and rep.ci_lo == rep.ci_hi == 3.0
    assert rep.rollouts_used == 50 and rep.rollouts_rejected == 0


def test_diamond_monte_carlo():
    spec = diamond()
    rep = evaluate(spec, uniform_policy(spec), 10_000, master_seed=1)
    assert abs(rep.mean_cost - 6.5) < 3 * rep.stderr
    assert rep.ci_lo <= rep.mean_cost <= rep.ci_hi


def test_oracle_examples():
    assert exact_expected_cost(single_edge(3.0, p_open=0.7), uniform_policy(single_edge())) == 3.0
    assert exact_expected_cost(diamond(), uniform_policy(diamond())) == 6.5
    forced = Policy({0: (1.0, 0.0), 1: (0.5, 0.5), 2: (0.5, 0.5), 3: (0.5, 0.5)})
    assert exact_expected_cost(diamond(), forced) == 2.0


def test_oracle_by_hand_on_half_open_diamond():
    # 9 connected instances out of 16; walks enumerated by hand for each
    spec = diamond(p_open=0.5)
    # states (sa, sb, at, bt): expected cost under the uniform policy
    by_hand = {
        (1, 1, 1, 1): 6.5, (1, 1, 1, 0): 0.5 * 2 + 0.5 * (2 + 2), (1, 1, 0, 1): 0.5 * 11 + 0.5 * (2 + 11),
        (1, 0, 1, 1): 2, (1, 0, 1, 0): 2, (0, 1, 1, 1): 11, (0, 1, 0, 1): 11,
        (1, 1, 0, 0): None, (1, 0, 0, 1): None, (0, 1, 1, 0): None, (0, 0, 1, 1): None,
    }
    connected = {k: v for k, v in by_hand.items() if v is not None}
    assert len(connected) == 7
    exact = sum(connected.values()) / len(connected)
    assert exact_expected_cost(spec, uniform_policy(spec)) == pytest.approx(exact, abs=1e-12)


def test_oracle_size_limit():
    spec = generate_spec(20, 0.9, seed=0)
    with pytest.raises(OracleTooLargeError):
        exact_expected_cost(spec, uniform_policy(spec))


def test_infeasible_evaluation():
    spec = single_edge(p_open=1e-9)
    with pytest.raises(InfeasibleEvaluationError):
        evaluate(spec, uniform_policy(spec), 20, 0)


def test_rollouts_at_least_two():
    with pytest.raises(ValidationError):
        evaluate(diamond(), uniform_policy(diamond()), 1, 0)


def _oracle_case(seed):
    rng = np.random.default_rng(seed)
    spec = random_small_spec(rng, 6, p_open=0.7)
    while len(spec.edges) > 12:
        spec = random_small_spec(rng, 6, p_open=0.7)
    pol = Policy({v: tuple(rng.dirichlet(np.ones(len(inc))).tolist()) if inc else ()
                  for v, inc in spec.incident.items()})
    return spec, pol


def test_monte_carlo_within_three_se_of_oracle():
    checked = 0
    for seed in range(20):
        spec, pol = _oracle_case(seed)
        try:
            exact = exact_expected_cost(spec, pol)
        except InfeasibleEvaluationError:
            continue
        rep = evaluate(spec, pol, 4000, master_seed=1000 + seed)
        assert abs(rep.mean_cost - exact) <= 3 * rep.stderr + 1e-12, seed
        checked += 1
    assert checked >= 15


def test_monte_carlo_oracle_high_precision():
    spec, pol = _oracle_case(1)
    rep = evaluate(spec, pol, 100_000, master_seed=99)
    assert abs(rep.mean_cost - exact_expected_cost(spec, pol)) < 3 * rep.stderr


def test_rollout_bounded_by_twice_total_weight():
    spec = generate_spec(20, 0.6, seed=3)
    pol = uniform_policy(spec)
    bound = 2 * total_weight(spec)
    for i in range(300):
        d = rollout(spec, pol, 5, i)
        assert d is None or d <= bound


def test_rejection_fraction():
    full = evaluate(diamond(), uniform_policy(diamond()), 1000, 0)
    assert full.rollouts_rejected == 0
    n = 20_000
    half = evaluate(diamond(0.5), uniform_policy(diamond()), n, 0)
    frac = half.rollouts_rejected / n
    assert abs(frac - 9 / 16) < 4 * math.sqrt(9 / 16 * 7 / 16 / n)


def test_evaluate_deterministic_across_workers():
    spec = generate_spec(15, 0.7, seed=2)
    pol = uniform_policy(spec)
    a = evaluate(spec, pol, 400, master_seed=8)
    b = evaluate(spec, pol, 400, master_seed=8)
    c = evaluate(spec, pol, 400, master_seed=8, workers=3)
    assert a == b == c


def test_learning_curve_single_checkpoint():
    spec = diamond()
    cfg = LearnConfig(iterations=200, checkpoints=(200,), seed=4)
    curve = learning_curve(spec, cfg, rollouts=500, master_seed=6)
    direct = evaluate(spec, learn(spec, cfg).checkpoints[200], 500, 6)
    assert curve.points == ((200, direct),)


def test_learning_curve_diamond_improves():
    spec = diamond()
    cfg = LearnConfig(iterations=5000, checkpoints=(10, 5000), seed=0)
    (_, early), (_, late) = learning_curve(spec, cfg, rollouts=2000, master_seed=1).points
    assert late.mean_cost <= early.mean_cost


def test_curve_requires_checkpoints():
    with pytest.raises(ValidationError):
        learning_curve(diamond(), LearnConfig(iterations=10), 10, 0)


def test_curve_iterations_increasing():
    rep = evaluate(single_edge(), uniform_policy(single_edge()), 2, 0)
    with pytest.raises(ValidationError):
        LearningCurve(((5, rep), (5, rep)))
