"""Rank-decreasing witnesses, what can be recovered from them, and the
end-to-end SRSR solver built on top.

The chain used throughout: a c-shrunk subspace U gives the witness Y = P_U
(projection onto U) with rank Y - rank T(Y) >= c; a witness Y gives a
subrepresentation W with sigma . dim W >= rank Y - rank T(Y); and for any
B in the Kraus span, sigma . dim W <= disc <= corank(B).  When the Wong limit
lies in Im B the two ends meet, so the recovered W is optimal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .blops import BlockPSD, KrausSet, apply, build_kraus, sink_images
from .data import (PartitionedDataSet, SubspaceTuple, brute_force_discrepancy, canonical_subrep, evaluate,
                   span_tuple, to_representation)
from .linalg import RationalMatrix, SubspaceBasis, projector, projector_diagonal_blocks
from .quiver import QuiverDatum, Subrepresentation, bipartize, ensure_valid, weight_pairing
from .scaling import ScalingBreakdown, ScalingConfig, ScalingTrace, capacity_positive
from .wong import RandomCombination, RetriesExhausted, ShrunkCertificate, preimage_of, random_b, shrunk_from_wong

SEMISTABLE = "SemiStable"
UNSTABLE = "Unstable"


class NotRankDecreasing(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    Y: BlockPSD
    rank_Y: int
    rank_TY: int

    @property
    def gap(self) -> int:
        return self.rank_Y - self.rank_TY

    @classmethod
    def of(cls, K: KrausSet, Y: BlockPSD) -> Witness:
        return cls(Y, Y.rank(), apply(K, Y).rank())


def witness_from_shrunk(K: KrausSet, cert: ShrunkCertificate) -> Witness:
    """Y = projection onto U; only its diagonal blocks enter T(Y)."""
    if cert.c < 1 or cert.U.dim == 0:
        raise ValueError("a shrunk certificate needs c >= 1")
    blocks = projector_diagonal_blocks(cert.U, [s for _, s in K.layout.domain_blocks()])
    Y = BlockPSD("domain", tuple(blocks), None)
    w = Witness(Y, cert.U.dim, apply(K, Y).rank())
    if w.gap < cert.c:
        raise AssertionError(f"projector witness has gap {w.gap} < c = {cert.c}")
    return w


def witness_from_shrunk_dense(K: KrausSet, cert: ShrunkCertificate) -> Witness:
    """Same witness with the full projector materialized (rank read off P)."""
    P = projector(cert.U)
    return Witness.of(K, BlockPSD.from_full(K, P))


def witness_from_subrep_srsr(X: PartitionedDataSet, T: SubspaceTuple) -> Witness:
    """0/1 diagonal Y with ones on the D coordinates of every point in I_T."""
    K = build_kraus(to_representation(X))
    I = set(evaluate(X, T).index_set)
    one, zero = RationalMatrix.identity(1), RationalMatrix.zeros(1, 1)
    blocks = tuple(one if i in I else zero for i, _ in K.layout.domain_blocks())
    return Witness.of(K, BlockPSD("domain", blocks))


def witness_from_subrep_general(datum: QuiverDatum, W: Subrepresentation, K: KrausSet | None = None) -> Witness:
    """Y = direct sum over domain blocks of the projection onto W(x_i)."""
    K = K or build_kraus(datum)
    P = [projector(W.spaces[z]) for z in K.layout.sources]
    Y = BlockPSD("domain", tuple(P[i] for i, _ in K.layout.domain_blocks()))
    return Witness.of(K, Y)


def _support(K: KrausSet, Y: BlockPSD) -> list[int]:
    """Sources whose blocks carry a nonzero diagonal entry of Y."""
    hit = set()
    for (i, _), b in zip(K.layout.domain_blocks(), Y.blocks):
        if any(b.rows[k][k] for k in range(b.nrows)):
            hit.add(i)
    return sorted(hit)


def recover_srsr(X: PartitionedDataSet, w: Witness) -> tuple[SubspaceTuple, Subrepresentation, int]:
    """Support rule: I = points with a nonzero diagonal entry, T_j = span of their blocks.

    Returns the tuple, its subrepresentation W_T and the pairing value, which
    is at least the witness gap.
    """
    if w.gap < 1:
        raise NotRankDecreasing(f"rank Y - rank T(Y) = {w.gap} < 1")
    K = build_kraus(to_representation(X))
    I = _support(K, w.Y)
    T = span_tuple(X, I)
    ev = evaluate(X, T)
    if ev.pairing_value < w.gap:
        raise AssertionError(f"recovered pairing {ev.pairing_value} below witness gap {w.gap}")
    return T, canonical_subrep(X, T), ev.pairing_value


def recover_general(datum: QuiverDatum, w: Witness, K: KrausSet | None = None,
                    require_gap: bool = True) -> Subrepresentation:
    """W(x_i) = sum of column spaces of the blocks Y_r, r in I_i^+;
    W(y_j) = sum of V(a)(W(x_i)) over arrows into y_j."""
    if require_gap and w.gap < 1:
        raise NotRankDecreasing(f"rank Y - rank T(Y) = {w.gap} < 1")
    K = K or build_kraus(datum)
    lay = K.layout
    cols: list[list] = [[] for _ in lay.sources]
    for (i, _), b in zip(lay.domain_blocks(), w.Y.blocks):
        cols[i].extend(b.columns())
    src = [SubspaceBasis.span(c, d) for c, d in zip(cols, lay.source_dims)]
    snk = sink_images(K, src)
    spaces = {z: s for z, s in zip(lay.sources, src)}
    spaces.update({z: s for z, s in zip(lay.sinks, snk)})
    for z in datum.quiver.vertices:
        spaces.setdefault(z, SubspaceBasis.zero(datum.dims[z]))
    W = Subrepresentation(spaces)
    if w.gap >= 1 and pairing_of(datum, W) < w.gap:
        raise AssertionError("recovered subrepresentation does not meet the witness gap")
    return W


def pairing_of(datum: QuiverDatum, W: Subrepresentation) -> int:
    return weight_pairing(dict(datum.weight), W.dim_vector())


# ---------------------------------------------------------------------------
# discrepancy
# ---------------------------------------------------------------------------

@dataclass
class Discrepancy:
    value: int
    exact: bool
    subrep: Subrepresentation
    upper: int | None = None
    certificate: ShrunkCertificate | None = None
    combination: RandomCombination | None = None   # the B that settled the question
    witness: Witness | None = None
    attempts: int = 0


def _complete(datum: QuiverDatum, spaces: dict) -> Subrepresentation:
    full = dict(spaces)
    for z in datum.quiver.vertices:
        full.setdefault(z, SubspaceBasis.zero(datum.dims[z]))
    return Subrepresentation(full)


def _zero_subrep(datum: QuiverDatum) -> Subrepresentation:
    return Subrepresentation({z: SubspaceBasis.zero(datum.dims[z]) for z in datum.quiver.vertices})


def discrepancy(datum: QuiverDatum, epsilon=Fraction(1, 2), seed: int = 0, max_retries: int = 8,
                K: KrausSet | None = None) -> Discrepancy:
    """max sigma . dim W over subrepresentations, computed from random combinations of the Kraus operators.

    An invertible draw settles disc = 0.  A draw whose Wong limit lies in
    Im B settles disc = corank(B) and yields an optimal W.  If every draw
    fails, rank-one Kraus sets raise RetriesExhausted; other sets return the
    best W found with ``exact`` False and ``upper`` the smallest corank seen.
    """
    K = K or build_kraus(datum)
    best = Discrepancy(0, False, _zero_subrep(datum))
    upper = None
    for retry in range(max_retries):
        B = random_b(K, epsilon, seed, retry)
        corank = B.corank()
        upper = corank if upper is None else min(upper, corank)
        if corank == 0:
            return Discrepancy(0, True, _zero_subrep(datum), 0, None, B, None, retry + 1)
        out = shrunk_from_wong(K, B)
        if isinstance(out, ShrunkCertificate):
            wit = witness_from_shrunk(K, out)
            W = recover_general(datum, wit, K)
            value = pairing_of(datum, W)
            if value != out.c:
                raise AssertionError(f"recovered pairing {value} differs from certified value {out.c}")
            return Discrepancy(value, True, W, corank, out, B, wit, retry + 1)
        if out.shrink_value >= 1:
            # the limit is not in Im B, but U = B^{-1}(W*) may still shrink
            U = preimage_of(K, B, out.wong.limit)
            cert = ShrunkCertificate(U, out.shrink_value, B, corank, out.wong, U.dim - out.shrink_value)
            wit = witness_from_shrunk(K, cert)
            W = recover_general(datum, wit, K)
            value = pairing_of(datum, W)
            if value > best.value:
                best = Discrepancy(value, False, W, None, cert, B, wit)
    best.upper = upper
    best.attempts = max_retries
    if best.value == upper:
        best.exact = True
        return best
    if K.rank_one:
        raise RetriesExhausted(f"no max-rank combination found in {max_retries} attempts", best.value)
    return best


# ---------------------------------------------------------------------------
# end-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    epsilon: Fraction = Fraction(1, 2)
    seed: int = 0
    max_retries: int = 8
    scaling: bool = True
    scaling_config: ScalingConfig = field(default_factory=ScalingConfig)
    oracle_max_n: int = 12
    method: str = "wong"                 # "wong" or "oracle"

    def __post_init__(self):
        if not 0 < Fraction(self.epsilon) < 1:
            raise ValueError("epsilon must lie strictly between 0 and 1")
        if self.method not in ("wong", "oracle"):
            raise ValueError("method must be 'wong' or 'oracle'")

    def to_dict(self) -> dict:
        sc = self.scaling_config
        return {
            "epsilon": f"{Fraction(self.epsilon).numerator}/{Fraction(self.epsilon).denominator}",
            "seed": self.seed,
            "max_retries": self.max_retries,
            "scaling": self.scaling,
            "max_iters": sc.max_iters,
            "ds_threshold": sc.ds_threshold,
            "exact_precheck": sc.exact_precheck,
            "certify": sc.certify,
            "oracle_max_n": self.oracle_max_n,
            "method": self.method,
        }


@dataclass
class RecoveryReport:
    verdict: str
    method: str
    pairing_value: int
    discrepancy: int
    exact: bool
    solution: SubspaceTuple | None = None
    subrep: Subrepresentation | None = None
    index_set: tuple[int, ...] = ()
    margin: Fraction | None = None
    D: int | None = None
    certificate: dict = field(default_factory=dict)
    scaling: ScalingTrace | None = None
    anomalies: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    vertices: tuple[str, ...] = ()

    @property
    def unstable(self) -> bool:
        return self.verdict == UNSTABLE


def _run_scaling(K: KrausSet, cfg: SolverConfig, report: RecoveryReport) -> None:
    if not cfg.scaling:
        return
    t = time.perf_counter()
    try:
        report.scaling = capacity_positive(K, cfg.scaling_config)
    except ScalingBreakdown as exc:
        report.scaling = exc.trace
        report.anomalies.append(f"scaling loop broke down: {exc}")
    report.timings["scaling"] = time.perf_counter() - t


def _cross_check(report: RecoveryReport) -> None:
    tr = report.scaling
    if tr is None:
        return
    if tr.positive != (report.verdict == SEMISTABLE):
        report.anomalies.append(
            f"numerical anomaly: scaling says {tr.verdict} ({tr.reason}) but the exact route says {report.verdict}")


def _certificate_dict(d: Discrepancy, K: KrausSet) -> dict:
    out: dict = {"N": K.N, "L": K.L, "rank_one": K.rank_one, "attempts": d.attempts}
    B = d.combination
    if B is not None:
        out.update({"seed": B.seed, "retry": B.retry, "s": B.s,
                    "epsilon": f"{B.epsilon.numerator}/{B.epsilon.denominator}",
                    "alpha": list(B.alpha), "corank_B": B.corank() if d.certificate is None else d.certificate.corank_B})
    if d.certificate is not None:
        c = d.certificate
        out.update({"wong_dims": c.wong.dims, "stabilized_at": c.wong.stabilized_at,
                    "shrunk_dim": c.U.dim, "shrunk_image_dim": c.image_dim, "c": c.c})
    if d.witness is not None:
        out["ranks"] = {"rank_Y": d.witness.rank_Y, "rank_TY": d.witness.rank_TY, "gap": d.witness.gap}
    if d.upper is not None:
        out["upper_bound"] = d.upper
    return out


def solve_srsr(X: PartitionedDataSet, cfg: SolverConfig | None = None) -> RecoveryReport:
    """Encode, screen with operator scaling, settle exactly via Wong sequences,
    and recover an optimal SRSR solution when one exists."""
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    datum = to_representation(X)
    K = build_kraus(datum)
    report = RecoveryReport(SEMISTABLE, "WongRandomized", 0, 0, True, D=X.D, config=cfg.to_dict(),
                            vertices=datum.quiver.vertices)
    _run_scaling(K, cfg, report)

    if cfg.method == "oracle":
        t = time.perf_counter()
        o = brute_force_discrepancy(X, cfg.oracle_max_n)
        report.timings["oracle"] = time.perf_counter() - t
        report.method = "Oracle"
        _fill_srsr(report, X, o.tuple if o.disc > 0 else None, o.disc, True)
        _cross_check(report)
        report.timings["total"] = time.perf_counter() - t0
        return report

    t = time.perf_counter()
    try:
        d = discrepancy(datum, cfg.epsilon, cfg.seed, cfg.max_retries, K)
    except RetriesExhausted as exc:
        report.timings["wong"] = time.perf_counter() - t
        report.anomalies.append(str(exc))
        return _fallback_to_scaling(report, X, exc, t0)
    report.timings["wong"] = time.perf_counter() - t
    report.certificate = _certificate_dict(d, K)

    if d.value == 0:
        _fill_srsr(report, X, None, 0, d.exact)
    else:
        T, W, value = recover_srsr(X, d.witness)
        if value != d.value:
            raise AssertionError(f"support-rule recovery gives {value}, discrepancy is {d.value}")
        sw = witness_from_subrep_srsr(X, T)
        report.certificate["support_witness"] = {"rank_Y": sw.rank_Y, "rank_TY": sw.rank_TY, "gap": sw.gap}
        _fill_srsr(report, X, T, d.value, d.exact)
    _cross_check(report)
    report.timings["total"] = time.perf_counter() - t0
    return report


def _fill_srsr(report: RecoveryReport, X: PartitionedDataSet, T: SubspaceTuple | None, disc: int, exact: bool) -> None:
    report.discrepancy, report.exact = disc, exact
    if T is None:
        report.verdict = SEMISTABLE
        report.pairing_value = 0
        report.margin = Fraction(0)
        report.solution = None
        report.subrep = None
        return
    ev = evaluate(X, T)
    report.verdict = UNSTABLE
    report.solution = T
    report.subrep = canonical_subrep(X, T)
    report.index_set = ev.index_set
    report.pairing_value = ev.pairing_value
    report.margin = ev.margin


def _fallback_to_scaling(report: RecoveryReport, X: PartitionedDataSet, exc: RetriesExhausted, t0: float) -> RecoveryReport:
    tr = report.scaling
    report.method = "Scaling"
    report.exact = False
    if tr is not None and tr.positive:
        _fill_srsr(report, X, None, 0, False)
        report.notes.append("semi-stability decided by operator scaling only")
    else:
        report.verdict = UNSTABLE
        report.discrepancy = exc.lower_bound
        report.notes.append("instability decided by operator scaling only; no optimal solution certified")
    report.exact = False
    report.timings["total"] = time.perf_counter() - t0
    return report


def check_datum(datum: QuiverDatum, cfg: SolverConfig | None = None) -> RecoveryReport:
    """Semi-stability of a general acyclic quiver datum.

    Non-bipartite data (or data with zero-weight vertices) are replaced by
    their bipartization first; any certificate then lives on that datum.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    ensure_valid(datum)
    notes: list[str] = []
    work = datum
    if any(w == 0 for w in datum.weight.values()) or \
            any(datum.weight[a.tail] <= 0 or datum.weight[a.head] >= 0 for a in datum.quiver.arrows):
        bip = bipartize(datum)
        work = bip.datum
        notes.append("input was bipartized; the certificate is a subrepresentation of the bipartized datum")
        notes.extend(bip.datum.notes)
    K = build_kraus(work)
    report = RecoveryReport(SEMISTABLE, "WongRandomized", 0, 0, True, config=cfg.to_dict(),
                            vertices=work.quiver.vertices, notes=notes)
    _run_scaling(K, cfg, report)
    t = time.perf_counter()
    try:
        d = discrepancy(work, cfg.epsilon, cfg.seed, cfg.max_retries, K)
    except RetriesExhausted as exc:
        report.anomalies.append(str(exc))
        report.method, report.exact = "Scaling", False
        if report.scaling is not None and not report.scaling.positive:
            report.verdict = UNSTABLE
        report.discrepancy = exc.lower_bound
        report.timings["total"] = time.perf_counter() - t0
        return report
    report.timings["wong"] = time.perf_counter() - t
    report.certificate = _certificate_dict(d, K)
    report.discrepancy, report.exact = d.value, d.exact
    if d.value > 0:
        report.verdict = UNSTABLE
        report.subrep = d.subrep
        report.pairing_value = d.value
    elif not d.exact and report.scaling is not None and report.scaling.positive:
        report.exact = True
        report.method = "Scaling"
        report.notes.append("no shrunk subspace found and operator scaling reached the threshold: discrepancy 0")
    elif not d.exact and report.scaling is not None and report.scaling.subrep is not None:
        W = _complete(work, report.scaling.subrep)
        report.verdict, report.subrep, report.method = UNSTABLE, W, "Scaling"
        report.pairing_value = report.discrepancy = pairing_of(work, W)
        report.exact = report.discrepancy == d.upper
    if not report.exact:
        report.notes.append(f"discrepancy is only bounded: {report.discrepancy} <= disc <= {d.upper}")
    _cross_check(report)
    report.timings["total"] = time.perf_counter() - t0
    return report
