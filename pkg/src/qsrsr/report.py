"""JSON and text renderings of solver output.  Rationals are always "p/q" strings."""

from __future__ import annotations

import json
from fractions import Fraction

from .data import PartitionedDataSet, SubspaceTuple
from .linalg import SubspaceBasis
from .quiver import Subrepresentation
from .recovery import RecoveryReport
from .wong import NotContained, ShrunkCertificate

SCHEMA = "qsrsr/1"


def frac(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def basis(space: SubspaceBasis) -> list[list[str]]:
    return [[frac(x) for x in v] for v in space.vectors]


def tuple_to_obj(T: SubspaceTuple) -> list[dict]:
    return [{"block": j + 1, "dim": s.dim, "basis": basis(s)} for j, s in enumerate(T.spaces)]


def subrep_to_obj(W: Subrepresentation, order=None) -> dict:
    keys = order or list(W.spaces)
    return {z: {"dim": W.spaces[z].dim, "basis": basis(W.spaces[z])} for z in keys if z in W.spaces}


def input_summary(obj, path: str, fixture: str | None) -> dict:
    out = {"path": path}
    if fixture:
        out["fixture"] = fixture
    if isinstance(obj, PartitionedDataSet):
        out.update({"kind": "partitioned", "n": obj.n, "m": obj.m, "blocks": list(obj.blocks)})
    else:
        out.update({"kind": "quiver", "vertices": len(obj.quiver.vertices), "arrows": len(obj.quiver.arrows)})
    return out


def report_to_obj(r: RecoveryReport, command: str, inp: dict | None = None, timings: bool = True) -> dict:
    out: dict = {"schema": SCHEMA, "command": command}
    if inp is not None:
        out["input"] = inp
    out.update({"verdict": r.verdict, "method": r.method, "pairing_value": r.pairing_value})
    if r.margin is not None:
        out["margin"] = frac(r.margin)
    out["discrepancy"] = {"value": r.discrepancy, "exact": r.exact}
    if "upper_bound" in r.certificate and not r.exact:
        out["discrepancy"]["upper_bound"] = r.certificate["upper_bound"]
    if r.solution is not None:
        out["solution"] = {"index_set": [i + 1 for i in r.index_set], "subspaces": tuple_to_obj(r.solution)}
    elif r.subrep is not None:
        out["subrepresentation"] = subrep_to_obj(r.subrep, r.vertices)
    out["certificate"] = r.certificate
    out["scaling"] = r.scaling.to_dict() if r.scaling is not None else None
    out["anomalies"] = list(r.anomalies)
    out["notes"] = list(r.notes)
    out["config"] = r.config
    if timings:
        out["timings"] = {k: round(v, 6) for k, v in r.timings.items()}
    return out


def shrunk_to_obj(res: ShrunkCertificate | NotContained) -> dict:
    B = res.B
    out = {"seed": B.seed, "retry": B.retry, "s": B.s, "epsilon": frac(B.epsilon), "alpha": list(B.alpha),
           "corank_B": res.corank_B, "wong_dims": res.wong.dims, "stabilized_at": res.wong.stabilized_at}
    if isinstance(res, ShrunkCertificate):
        out.update({"status": "Certificate", "c": res.c, "dim_U": res.U.dim, "dim_image": res.image_dim,
                    "U": basis(res.U)})
    else:
        out.update({"status": "NotContained", "shrink_value": res.shrink_value})
    return out


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def render_text(r: RecoveryReport) -> str:
    lines = [f"verdict: {r.verdict}", f"method: {r.method}"]
    d = f"discrepancy: {r.discrepancy} ({'exact' if r.exact else 'lower bound'})"
    lines.append(d)
    lines.append(f"pairing value: {r.pairing_value}")
    if r.margin is not None:
        lines.append(f"margin: {frac(r.margin)}")
    if r.solution is not None:
        lines.append("index set: " + " ".join(str(i + 1) for i in r.index_set))
        for j, s in enumerate(r.solution.spaces):
            vecs = "; ".join("(" + ", ".join(frac(x) for x in v) + ")" for v in s.vectors) or "0"
            lines.append(f"T_{j + 1} (dim {s.dim}): {vecs}")
    elif r.subrep is not None:
        for z in r.vertices:
            if z in r.subrep.spaces:
                lines.append(f"W({z}) dim {r.subrep.spaces[z].dim}")
    c = r.certificate
    if "seed" in c:
        lines.append(f"seed: {c['seed']}  retry: {c['retry']}  s: {c['s']}  corank(B): {c['corank_B']}")
    if "wong_dims" in c:
        lines.append("wong chain dims: " + " ".join(map(str, c["wong_dims"])))
    if "ranks" in c:
        k = c["ranks"]
        lines.append(f"witness: rank Y = {k['rank_Y']}, rank T(Y) = {k['rank_TY']}")
    if r.scaling is not None:
        t = r.scaling
        lines.append(f"scaling: {t.verdict} ({t.reason}) after {t.iterations} steps, "
                     f"threshold {t.threshold:.3e}, budget {t.budget}")
    for a in r.anomalies:
        lines.append(f"ANOMALY: {a}")
    for n in r.notes:
        lines.append(f"note: {n}")
    lines.append("config: " + json.dumps(r.config, sort_keys=True))
    return "\n".join(lines) + "\n"
