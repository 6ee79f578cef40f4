import json
import math

import numpy as np
import pytest

from ppctp import io
from ppctp.cli import main
from ppctp.ctp import diamond, generate_spec
from ppctp.dfs import Policy, uniform_policy
from ppctp.errors import ValidationError
from ppctp.evaluation import evaluate
from ppctp.learner import LearnConfig, PolicyPosterior, learn

from dot_tokenizer import parse


def run_cli(*argv):
    return main([str(a) for a in argv])


# --- serialization -----------------------------------------------------------

def test_spec_round_trip(tmp_path):
    spec = generate_spec(20, 0.85, seed=1)
    p = tmp_path / "spec.json"
    io.save_spec(spec, p)
    assert io.load_spec(p) == spec
    q = tmp_path / "again.json"
    io.save_spec(io.load_spec(p), q)
    assert p.read_bytes() == q.read_bytes()


def test_spec_unknown_field_rejected(tmp_path):
    d = io.spec_to_dict(diamond())
    d["edges"][1]["colour"] = "red"
    with pytest.raises(ValidationError, match=r"spec.edges\[1\]: unknown field 'colour'"):
        io.spec_from_dict(d)


def test_spec_missing_and_bad_fields():
    d = io.spec_to_dict(diamond())
    del d["t"]
    with pytest.raises(ValidationError, match="'t'"):
        io.spec_from_dict(d)
    d = io.spec_to_dict(diamond())
    d["nodes"][0]["x"] = "zero"
    with pytest.raises(ValidationError, match=r"nodes\[0\].x"):
        io.spec_from_dict(d)


def test_posterior_round_trip():
    spec = generate_spec(10, 0.8, seed=0)
    post = learn(spec, LearnConfig(iterations=300, seed=1)).posterior
    d = io.posterior_to_dict(post, spec, {"seed": 1})
    text = io.dumps(d)
    back = io.posterior_from_dict(json.loads(text), spec)
    assert back.sample_count == post.sample_count
    assert back.best_log_joint == post.best_log_joint
    for v in spec.incident:
        assert np.array_equal(back.mean[v], post.mean[v])
        assert np.array_equal(back.variance[v], post.variance[v])
        assert back.best_policy[v] == post.best_policy[v]
    assert io.dumps(io.posterior_to_dict(back, spec, {"seed": 1})) == text


def test_posterior_hash_mismatch():
    spec = generate_spec(10, 0.8, seed=0)
    post = learn(spec, LearnConfig(iterations=20)).posterior
    d = io.posterior_to_dict(post, spec)
    with pytest.raises(ValidationError, match="spec_hash"):
        io.posterior_from_dict(d, generate_spec(10, 0.8, seed=1))


def test_policy_and_report_round_trip():
    spec = diamond()
    pol = uniform_policy(spec)
    assert io.policy_from_dict(json.loads(io.dumps(io.policy_to_dict(pol, spec))), spec) == pol
    rep = evaluate(spec, pol, 100, 3)
    assert io.report_from_dict(json.loads(io.dumps(io.report_to_dict(rep)))) == rep


def test_spec_hash_ignores_field_order():
    spec = diamond()
    d = io.spec_to_dict(spec)
    shuffled = {k: d[k] for k in reversed(list(d))}
    assert io.spec_hash(io.spec_from_dict(shuffled)) == io.spec_hash(spec)


# --- rendering -----------------------------------------------------------------

def single_sample_posterior(spec, policy):
    post = PolicyPosterior(spec.incident)
    post.update(policy, 0.0)
    return post


def test_single_sample_all_max_width():
    spec = generate_spec(12, 1.0, seed=2)
    style = io.edge_style(spec, single_sample_posterior(spec, uniform_policy(spec)))
    assert all(s["penwidth"] == io.MAX_WIDTH for s in style.values())


def test_symmetric_means_are_green():
    spec = diamond()
    style = io.edge_style(spec, single_sample_posterior(spec, uniform_policy(spec)))
    assert all(s["color"] == "#00ff00" and s["directedness"] == 0 for s in style.values())


def test_fully_directed_edge_is_blue():
    spec = diamond()
    pol = Policy({0: (1.0, 0.0), 1: (0.0, 1.0), 2: (0.5, 0.5), 3: (0.5, 0.5)})
    style = io.edge_style(spec, single_sample_posterior(spec, pol))
    assert style[0]["color"] == "#0000ff"


def test_widths_within_bounds_and_increase_with_precision():
    spec = generate_spec(15, 0.8, seed=3)
    post = learn(spec, LearnConfig(iterations=500, seed=0)).posterior
    style = io.edge_style(spec, post)
    widths = {eid: s["penwidth"] for eid, s in style.items()}
    assert all(io.MIN_WIDTH <= w <= io.MAX_WIDTH for w in widths.values())
    assert min(widths.values()) == pytest.approx(io.MIN_WIDTH)
    assert max(widths.values()) == pytest.approx(io.MAX_WIDTH)
    var = post.variance

    def total_var(e):
        return var[e.u][spec.incident[e.u].index(e.id)] + var[e.v][spec.incident[e.v].index(e.id)]

    ordered = sorted(spec.edges, key=total_var)
    ws = [widths[e.id] for e in ordered]
    assert all(a >= b - 1e-12 for a, b in zip(ws, ws[1:]))


def test_diamond_directedness_follows_posterior_means():
    # at a and b the walk has one admissible edge, so their policies stay at
    # the prior mean 0.5; at s the mean for s-a is near 2/3
    spec = diamond()
    post = learn(spec, LearnConfig(iterations=5000, seed=0)).posterior
    style = io.edge_style(spec, post)
    for eid in (0, 1):
        s = style[eid]
        assert s["directedness"] == pytest.approx(abs(s["m_uv"] - s["m_vu"]) / (s["m_uv"] + s["m_vu"]))
    assert post.mean[0][0] > 0.6
    assert style[1]["directedness"] > style[0]["directedness"]


def test_render_is_valid_dot():
    spec = generate_spec(20, 0.5, seed=4)
    post = learn(spec, LearnConfig(iterations=300, seed=1)).posterior
    text = io.render_policy(spec, post)
    kind, nodes, edges = parse(text)
    assert kind == "graph"
    assert len(nodes) == 20 and len(edges) == len(spec.edges)
    assert nodes[f"n{spec.s}"]["color"] == "red" and nodes[f"n{spec.t}"]["color"] == "red"
    n0 = spec.node_by_id[0]
    x, y = nodes["n0"]["pos"].rstrip("!").split(",")
    assert float(x) == pytest.approx(n0.x * io.DOT_SCALE, abs=1e-6)
    assert [e[2]["id"] for e in edges] == [f"e{e.id}" for e in sorted(spec.edges, key=lambda e: e.id)]
    assert io.render_policy(spec, post) == text


def test_render_hash_mismatch():
    spec = diamond()
    post = single_sample_posterior(spec, uniform_policy(spec))
    with pytest.raises(ValidationError):
        io.render_policy(spec, post, expected_hash="0" * 64)


# --- CLI -----------------------------------------------------------------------

def test_gen_and_oracle_single_path(tmp_path, capsys):
    sp = tmp_path / "spec.json"
    assert run_cli("gen", "--nodes", 3, "--p-open", 1.0, "--seed", 7, "-o", sp) == 0
    spec = io.load_spec(sp)
    direct = next(e for e in spec.edges if {e.u, e.v} == {spec.s, spec.t})
    probs = {v: tuple(1.0 if eid == direct.id else 0.0 for eid in inc) if v == spec.s
             else (0.5, 0.5) for v, inc in spec.incident.items()}
    pol = tmp_path / "policy.json"
    pol.write_text(io.dumps(io.policy_to_dict(Policy(probs), spec)))
    capsys.readouterr()
    assert run_cli("oracle", "--spec", sp, "--policy", pol) == 0
    out, err = capsys.readouterr()
    assert float(out) == direct.weight
    assert "repro" in err and io.spec_hash(spec) in err


def test_gen_round_trip_bytes(tmp_path):
    sp = tmp_path / "spec.json"
    run_cli("gen", "--nodes", 20, "--p-open", 0.85, "--seed", 1, "-o", sp)
    again = tmp_path / "again.json"
    io.save_spec(io.load_spec(sp), again)
    assert sp.read_bytes() == again.read_bytes()


def test_pipeline_is_byte_reproducible(tmp_path):
    sp = tmp_path / "spec.json"
    run_cli("gen", "--nodes", 12, "--p-open", 0.7, "--seed", 3, "-o", sp)
    outputs = []
    for run in range(2):
        d = tmp_path / f"run{run}"
        d.mkdir()
        assert run_cli("learn", "--spec", sp, "--iters", 300, "--checkpoints", "100,300",
                       "--seed", 5, "-o", d / "post.json") == 0
        assert run_cli("eval", "--spec", sp, "--policy", d / "post.json", "--rollouts", 200,
                       "--seed", 2, "--workers", 1 + run, "-o", d / "rep.json") == 0
        assert run_cli("curve", "--spec", sp, "--iters", 200, "--checkpoints", "50,200",
                       "--rollouts", 100, "--seed", 4, "-o", d / "curve.csv") == 0
        assert run_cli("render", "--spec", sp, "--posterior", d / "post.json", "-o", d / "p.dot") == 0
        outputs.append([(d / f).read_bytes() for f in ("post.json", "rep.json", "curve.csv", "p.dot")])
    assert outputs[0] == outputs[1]
    header = outputs[0][2].decode().splitlines()[0]
    assert header == "iteration,mean_cost,ci_lo,ci_hi,rollouts_used,rollouts_rejected"


def test_curve_on_diamond_improves(tmp_path):
    sp = tmp_path / "d.json"
    io.save_spec(diamond(), sp)
    out = tmp_path / "c.csv"
    assert run_cli("curve", "--spec", sp, "--iters", 5000, "--checkpoints", "10,5000",
                   "--rollouts", 2000, "--seed", 1, "-o", out) == 0
    rows = io.curve_from_csv(out.read_text())
    assert [r[0] for r in rows] == [10, 5000]
    assert rows[1][1].mean_cost <= rows[0][1].mean_cost


def test_eval_uniform_and_methods(tmp_path):
    sp = tmp_path / "d.json"
    io.save_spec(diamond(), sp)
    rep = tmp_path / "r.json"
    assert run_cli("eval", "--spec", sp, "--policy", "uniform", "--rollouts", 100, "-o", rep) == 0
    assert json.loads(rep.read_text())["mean_cost"] > 2


def test_exit_codes(tmp_path, capsys):
    assert run_cli("gen", "--nodes", 5, "--bogus", "-o", tmp_path / "x.json") == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [], "edges": [], "s": 0, "t": 1, "extra": 1}')
    assert run_cli("oracle", "--spec", bad, "--policy", "uniform") == 1
    assert "extra" in capsys.readouterr().err
    assert run_cli("oracle", "--spec", tmp_path / "missing.json", "--policy", "uniform") == 1
    # an edge that is practically never open: infeasible evaluation
    d = io.spec_to_dict(diamond())
    for e in d["edges"]:
        e["p_open"] = 1e-12
    sp = tmp_path / "closed.json"
    sp.write_text(json.dumps(d))
    assert run_cli("eval", "--spec", sp, "--policy", "uniform", "--rollouts", 10,
                   "-o", tmp_path / "r.json") == 2


def test_render_rejects_other_spec(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli("gen", "--nodes", 8, "--p-open", 1.0, "--seed", 1, "-o", a)
    run_cli("gen", "--nodes", 8, "--p-open", 1.0, "--seed", 2, "-o", b)
    post = tmp_path / "p.json"
    run_cli("learn", "--spec", a, "--iters", 20, "-o", post)
    assert run_cli("render", "--spec", b, "--posterior", post, "-o", tmp_path / "x.dot") == 1
