"""JSON/CSV/DOT serialization for specs, posteriors, policies and reports."""

from __future__ import annotations

import colorsys
import hashlib
import json
import math
from typing import Any, Dict, Optional

import numpy as np

from .ctp import CtpSpec, Edge, Node
from .dfs import Policy
from .errors import ValidationError
from .evaluation import EvalReport
from .learner import PolicyPosterior

MIN_WIDTH, MAX_WIDTH = 0.5, 4.0
GREEN_HUE, BLUE_HUE = 120.0, 240.0
DOT_SCALE = 10.0  # inches per unit of the square


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require(d: dict, keys, where: str) -> None:
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ValidationError(f"{where}: missing field {missing[0]!r}")
    extra = sorted(set(d) - set(keys))
    if extra:
        raise ValidationError(f"{where}: unknown field {extra[0]!r}")


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(f"{where}: expected an integer, got {x!r}")
    return x


# ---------------------------------------------------------------------------
# specs


def spec_to_dict(spec: CtpSpec) -> dict:
    return {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y} for n in spec.nodes],
        "edges": [{"id": e.id, "u": e.u, "v": e.v, "weight": e.weight, "p_open": e.p_open}
                  for e in spec.edges],
        "s": spec.s,
        "t": spec.t,
    }


def spec_from_dict(d: dict) -> CtpSpec:
    _require(d, ("nodes", "edges", "s", "t"), "spec")
    nodes, edges = [], []
    for i, n in enumerate(d["nodes"]):
        where = f"spec.nodes[{i}]"
        _require(n, ("id", "x", "y"), where)
        nodes.append(Node(_int(n["id"], where + ".id"), _num(n["x"], where + ".x"),
                          _num(n["y"], where + ".y")))
    for i, e in enumerate(d["edges"]):
        where = f"spec.edges[{i}]"
        _require(e, ("id", "u", "v", "weight", "p_open"), where)
        edges.append(Edge(_int(e["id"], where + ".id"), _int(e["u"], where + ".u"),
                          _int(e["v"], where + ".v"), _num(e["weight"], where + ".weight"),
                          _num(e["p_open"], where + ".p_open")))
    return CtpSpec(tuple(nodes), tuple(edges), _int(d["s"], "spec.s"), _int(d["t"], "spec.t"))


def spec_hash(spec: CtpSpec) -> str:
    canon = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def save_spec(spec: CtpSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(spec_to_dict(spec)))


def load_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}") from None


def load_spec(path) -> CtpSpec:
    return spec_from_dict(load_json(path))


# ---------------------------------------------------------------------------
# posteriors and policies


def posterior_to_dict(post: PolicyPosterior, spec: CtpSpec, header: Optional[dict] = None) -> dict:
    var = post.variance
    nodes = []
    for v in sorted(post.incident):
        nodes.append({
            "id": v,
            "edges": list(post.incident[v]),
            "mean": post.mean[v].tolist(),
            "variance": var[v].tolist(),
            "best": list(post.best_policy[v]) if post.best_policy is not None else None,
        })
    return {
        "kind": "posterior",
        "spec_hash": spec_hash(spec),
        "header": header or {},
        "sample_count": post.sample_count,
        "best_log_joint": post.best_log_joint if post.sample_count else None,
        "nodes": nodes,
    }


def posterior_from_dict(d: dict, spec: Optional[CtpSpec] = None) -> PolicyPosterior:
    _require(d, ("kind", "spec_hash", "header", "sample_count", "best_log_joint", "nodes"),
             "posterior")
    if spec is not None:
        _check_hash(d, spec)
    incident, mean, variance, best = {}, {}, {}, {}
    for i, n in enumerate(d["nodes"]):
        where = f"posterior.nodes[{i}]"
        _require(n, ("id", "edges", "mean", "variance", "best"), where)
        v = _int(n["id"], where + ".id")
        incident[v] = tuple(n["edges"])
        mean[v] = [_num(x, where + ".mean") for x in n["mean"]]
        variance[v] = [_num(x, where + ".variance") for x in n["variance"]]
        if n["best"] is not None:
            best[v] = [_num(x, where + ".best") for x in n["best"]]
        for key in ("mean", "variance"):
            if len(n[key]) != len(incident[v]):
                raise ValidationError(f"{where}.{key}: length differs from edges")
    if spec is not None and incident != spec.incident:
        raise ValidationError("posterior: edge lists do not match the CTP spec")
    blj = d["best_log_joint"]
    return PolicyPosterior.from_arrays(incident, mean, variance, best or None,
                                       -math.inf if blj is None else _num(blj, "best_log_joint"),
                                       _int(d["sample_count"], "posterior.sample_count"))


def policy_to_dict(policy: Policy, spec: CtpSpec) -> dict:
    return {
        "kind": "policy",
        "spec_hash": spec_hash(spec),
        "nodes": [{"id": v, "edges": list(spec.incident[v]), "probs": list(policy[v])}
                  for v in sorted(spec.incident)],
    }


def policy_from_dict(d: dict, spec: Optional[CtpSpec] = None) -> Policy:
    _require(d, ("kind", "spec_hash", "nodes"), "policy")
    if spec is not None:
        _check_hash(d, spec)
    probs = {}
    for i, n in enumerate(d["nodes"]):
        where = f"policy.nodes[{i}]"
        _require(n, ("id", "edges", "probs"), where)
        probs[_int(n["id"], where + ".id")] = tuple(_num(x, where + ".probs") for x in n["probs"])
    pol = Policy(probs)
    if spec is not None:
        pol.validate(spec)
    return pol


def _check_hash(d: dict, spec: CtpSpec) -> None:
    if d["spec_hash"] != spec_hash(spec):
        raise ValidationError("spec_hash: file was produced for a different spec")


def report_to_dict(report: EvalReport, header: Optional[dict] = None) -> dict:
    return {"kind": "report", "header": header or {}, **report.to_dict()}


def report_from_dict(d: dict) -> EvalReport:
    fields = ("mean_cost", "ci_lo", "ci_hi", "rollouts_used", "rollouts_rejected", "sd",
              "master_seed")
    _require(d, ("kind", "header") + fields, "report")
    return EvalReport(**{k: d[k] for k in fields})


# ---------------------------------------------------------------------------
# rendering


def edge_style(spec: CtpSpec, post: PolicyPosterior) -> Dict[int, dict]:
    """Pen width from precision and hue from directedness, per edge id.

    Precision is the inverse of the edge coordinate's variance summed over both
    endpoints. Widths map affinely from [min, max] finite precision onto
    [0.5, 4.0]; zero variance is clamped to the maximum width. Directedness is
    |m_uv - m_vu| / (m_uv + m_vu) with m_uv the posterior-mean selection
    probability of the edge at u.
    """
    var = post.variance
    raw = {}
    for e in spec.edges:
        iu = spec.incident[e.u].index(e.id)
        iv = spec.incident[e.v].index(e.id)
        total_var = float(var[e.u][iu] + var[e.v][iv])
        prec = math.inf if total_var <= 0 else 1.0 / total_var
        m_uv, m_vu = float(post.mean[e.u][iu]), float(post.mean[e.v][iv])
        denom = m_uv + m_vu
        ratio = abs(m_uv - m_vu) / denom if denom > 0 else 0.0
        raw[e.id] = (prec, min(max(ratio, 0.0), 1.0), m_uv, m_vu)
    finite = [p for p, *_ in raw.values() if math.isfinite(p)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 0.0)
    out = {}
    for eid, (prec, ratio, m_uv, m_vu) in raw.items():
        if not math.isfinite(prec) or hi <= lo:
            width = MAX_WIDTH
        else:
            width = MIN_WIDTH + (MAX_WIDTH - MIN_WIDTH) * (prec - lo) / (hi - lo)
        hue = GREEN_HUE + (BLUE_HUE - GREEN_HUE) * ratio
        r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 1.0, 1.0)
        color = "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))
        out[eid] = {"penwidth": width, "color": color, "directedness": ratio,
                    "m_uv": m_uv, "m_vu": m_vu}
    return out


def render_policy(spec: CtpSpec, post: PolicyPosterior, expected_hash: Optional[str] = None) -> str:
    """Undirected DOT graph with pinned node positions."""
    if expected_hash is not None and expected_hash != spec_hash(spec):
        raise ValidationError("spec_hash: posterior was produced for a different spec")
    style = edge_style(spec, post)
    lines = [
        "graph policy {",
        '  graph [splines=false, comment="width: precision = 1/(var_u + var_v); '
        'color: green (symmetric) to blue (directed)"];',
        "  node [shape=circle, width=0.15, fixedsize=true, fontsize=8, label=\"\"];",
    ]
    for n in sorted(spec.nodes, key=lambda n: n.id):
        attrs = [f'pos="{n.x * DOT_SCALE:.6f},{n.y * DOT_SCALE:.6f}!"', f'xlabel="{n.id}"']
        if n.id in (spec.s, spec.t):
            attrs += ["color=red", "penwidth=2"]
        lines.append(f"  n{n.id} [{', '.join(attrs)}];")
    for e in sorted(spec.edges, key=lambda e: e.id):
        st = style[e.id]
        lines.append(f'  n{e.u} -- n{e.v} [id="e{e.id}", penwidth={st["penwidth"]:.6f}, '
                     f'color="{st["color"]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def curve_from_csv(text: str):
    """Parse the curve CSV back into ``(iteration, EvalReport)`` pairs."""
    import csv
    import io as _io

    rows = list(csv.DictReader(_io.StringIO(text)))
    out = []
    for r in rows:
        out.append((int(r["iteration"]), EvalReport(
            float(r["mean_cost"]), float(r["ci_lo"]), float(r["ci_hi"]),
            int(r["rollouts_used"]), int(r["rollouts_rejected"]))))
    return out


def as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)
