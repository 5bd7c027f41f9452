"""Spectral-gap lower bounds, support-number machinery and the bound report.

Four bounds are computed per instance and combined:

  canonical-path  tau0        classical block, path congestion with |gamma|
  Gershgorin      Lambda_QM   per-pair row bound on the nu > 0 blocks
  congestion-dilation tau0^   classical block, 1->1 / inf->inf norm product
  tree (Frobenius) Lambda^_QM nu > 0 blocks through the spanning-tree
                              factorization A W = U

Every bound is a rigorous lower bound on the spectral gap; a value of exactly
zero is reported as "failed" rather than as a (vacuous) valid bound.

The tree bound normalization: the factorization fixes the per-component
constant C = sum(phi) + 2 sum_T(lam_minus) through A|w_m> = C |m>, so

    Lambda^_nu^{-1} = ||W||_F^2
        = sum_m sigma(m)/C^2 * (sum phi + sum_T (2 lam_minus + 2 omega_m^2/lam_plus)).
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import blocks as _blocks
from . import graphs as _graphs
from . import liouvillian as _liouvillian
from .errors import (
    DegenerateNormalization,
    Disconnected,
    InvalidArguments,
    KernelMismatch,
    NoValidBound,
    NotPrimitive,
)
from .model import GibbsWeights, SystemSpec, gibbs

BLOCK_ORACLE_LIMIT = 2000

# relative threshold below which pencil directions count as kernel
KERNEL_REL_TOL = 1e-12


def support_number(a_mat: np.ndarray, b_mat: np.ndarray) -> float:
    """Smallest tau with tau*B - A >= 0, for PSD A, B with ker(B) in ker(A).

    Computed as the largest generalized eigenvalue of (A, B) after whitening B
    on the complement of its kernel (deflated at a relative threshold).
    """
    a_mat = np.asarray(a_mat)
    b_mat = np.asarray(b_mat)
    vals, vecs = np.linalg.eigh(0.5 * (b_mat + b_mat.conj().T))
    scale = max(float(vals.max()), 0.0)
    keep = vals > KERNEL_REL_TOL * max(scale, 1e-300)
    kernel = vecs[:, ~keep]
    if kernel.shape[1]:
        a_norm = max(np.linalg.norm(a_mat), 1e-300)
        resid = np.linalg.norm(a_mat @ kernel) / a_norm
        if resid > 1e-8:
            raise KernelMismatch(f"ker(B) not inside ker(A): residual {resid:.3e}")
    if not np.any(keep):
        return 0.0
    white = vecs[:, keep] / np.sqrt(vals[keep])
    t_mat = white.conj().T @ a_mat @ white
    t_mat = 0.5 * (t_mat + t_mat.conj().T)
    return float(max(np.linalg.eigvalsh(t_mat).max(), 0.0))


def _edge_q(pg: _blocks.PauliGenerator, w: GibbsWeights, i: int, j: int) -> float:
    """Symmetric classical edge weight Q(i,j) = P(i,j) sigma_j."""
    return float(pg.rates[i, j] * w.sigma[j])


def _tau0_canonical_detail(pg, w, cp):
    loads = defaultdict(float)
    sigma = w.sigma
    for (a, b), seq in cp.paths.items():
        contrib = sigma[a] * sigma[b] * (len(seq) - 1)
        for u, v in zip(seq[:-1], seq[1:]):
            loads[(u, v) if u < v else (v, u)] += contrib
    best = 0.0
    per_edge = {}
    for e, load in loads.items():
        val = float(load / _edge_q(pg, w, *e))
        per_edge[e] = val
        best = max(best, val)
    return best, per_edge


def tau0_canonical(pg, w: GibbsWeights, cp) -> float:
    """Canonical-path congestion constant for the classical block.

    tau0 = max over edges of  (1/(P(n,m) sigma_m)) sum_{paths through} sigma_a
    sigma_b |gamma_ab|, the maximum over unordered pairs of the complete graph
    with one path each.  1/tau0 lower-bounds the classical gap.
    """
    return _tau0_canonical_detail(pg, w, cp)[0]


def _tau0_hat_detail(pg, w, cp):
    sigma = w.sigma
    dilation = 0.0
    congestion = defaultdict(float)
    for (a, b), seq in cp.paths.items():
        root = math.sqrt(sigma[a] * sigma[b])
        total = 0.0
        for u, v in zip(seq[:-1], seq[1:]):
            e = (u, v) if u < v else (v, u)
            x = root / math.sqrt(_edge_q(pg, w, *e))
            total += x
            congestion[e] += x
        dilation = max(dilation, total)
    cong = max(congestion.values())
    return float(dilation * cong), float(dilation), float(cong)


def tau0_congestion_dilation(pg, w: GibbsWeights, cp) -> float:
    """Congestion-dilation constant (product of the 1- and inf-norm of W^0)."""
    return _tau0_hat_detail(pg, w, cp)[0]


def gershgorin_pairs(idx, spec: SystemSpec, w: GibbsWeights) -> dict:
    """Per-pair row bounds Lambda_(m1,m2)/2 over all pairs with nu > 0.

    For each pair the value collects the amplitude-difference squares over the
    pair set of its Bohr frequency plus the out-of-set transition weights per
    position; it lower-bounds the corresponding block eigenvalue and is exact
    when the block is one-dimensional.
    """
    gvals = _blocks.bath_values(spec, idx)
    gf = _blocks.g_matrix(spec, idx, gvals)
    abs_s = np.abs(spec.couplings)
    gw = gf * (abs_s**2).sum(axis=0)
    colsum = gw.sum(axis=0)
    out = {}
    for gi in idx.positive_indices():
        pairs = idx.groups[gi]
        a_lab = pairs[:, 0]
        b_lab = pairs[:, 1]
        gsub = gf[np.ix_(a_lab, a_lab)]
        diff = abs_s[:, a_lab[:, None], a_lab[None, :]] - abs_s[
            :, b_lab[:, None], b_lab[None, :]
        ]
        d2 = (diff**2).sum(axis=0)
        first = (gsub * d2).sum(axis=0)
        in1 = gw[np.ix_(a_lab, a_lab)].sum(axis=0)
        in2 = gw[np.ix_(b_lab, b_lab)].sum(axis=0)
        second = (colsum[a_lab] - in1) + (colsum[b_lab] - in2)
        vals = 0.5 * (first + second)
        for k, (m1, m2) in enumerate(pairs):
            out[(int(m1), int(m2))] = float(max(vals[k], 0.0))
    return out


def lambda_qm_gershgorin(idx, spec: SystemSpec, w: GibbsWeights) -> float:
    """Lambda_QM = min over pairs m1 < m2; zero means the bound failed."""
    return min(gershgorin_pairs(idx, spec, w).values())


def _tree_block_bound(db, tree) -> float:
    """Frobenius tree bound for one nu > 0 block; 1/||W||_F^2."""
    lam_minus = db.lam_minus
    lam_edge = lambda i, j: float(lam_minus[i, j])
    sub_phi, sub_lam = _graphs._subtree_sums(tree, db.phi, lam_edge)
    sub_sigma, _ = _graphs._subtree_sums(tree, db.sigma_pairs, lambda i, j: 0.0)

    n_comp = len(tree.roots)
    comp_phi = np.zeros(n_comp)
    comp_sigma = np.zeros(n_comp)
    for v in range(tree.n):
        comp_phi[tree.comp_id[v]] += db.phi[v]
        comp_sigma[tree.comp_id[v]] += db.sigma_pairs[v]
    comp_lam = np.zeros(n_comp)
    for i, j in tree.edges:
        comp_lam[tree.comp_id[i]] += lam_edge(i, j)

    inv = 0.0
    for c in range(n_comp):
        norm_c = comp_phi[c] + 2.0 * comp_lam[c]
        if norm_c <= 0.0:
            raise DegenerateNormalization(
                f"block nu={db.nu}: zero normalization on a component "
                "(zero sub-block, generator not primitive)"
            )
        total = norm_c * comp_sigma[c]
        for i, j in tree.edges:
            if tree.comp_id[i] != c:
                continue
            x = j if tree.parent[j] == i else i
            le = lam_edge(i, j)
            om_sub = le + sub_phi[x] + 2.0 * sub_lam[x]
            om_out = le + (comp_phi[c] - sub_phi[x]) + 2.0 * (
                comp_lam[c] - sub_lam[x] - le
            )
            sig_in = sub_sigma[x]
            sig_out = comp_sigma[c] - sub_sigma[x]
            lp = float(db.lam_plus[i, j])
            total += 2.0 * (om_sub**2 * sig_out + om_out**2 * sig_in) / lp
        inv += total / norm_c**2
    return float(1.0 / inv)


def tree_block_bounds(dblocks, trees) -> dict:
    """Per-frequency tree bounds, keyed by nu."""
    return {
        db.nu: _tree_block_bound(db, tree) for db, tree in zip(dblocks, trees)
    }


def lambda_qm_tree(dblocks, trees, w: GibbsWeights = None) -> float:
    """Lambda^_QM = min over the nu > 0 blocks of the tree bound.

    Raises DegenerateNormalization when some block component carries neither
    phi weight nor lam_minus weight (a zero sub-block; the generator is not
    primitive and no positive lower bound exists).
    """
    values = tree_block_bounds(dblocks, trees)
    return min(values.values())


def classical_factorization(pg, w: GibbsWeights, cp, graph):
    """Edge-space factorization E^0 = A A^T, V^0 = U U^T with A W = U.

    Columns of A are edges of the classical graph, columns of U are the pairs
    of the complete graph; W embeds each pair's canonical path.
    """
    d = graph.n
    edges = graph.edges
    eidx = {e: k for k, e in enumerate(edges)}
    a_mat = np.zeros((d, len(edges)))
    for k, (i, j) in enumerate(edges):
        root = math.sqrt(_edge_q(pg, w, i, j))
        a_mat[i, k] = root
        a_mat[j, k] = -root
    pairs = sorted(cp.paths)
    u_mat = np.zeros((d, len(pairs)))
    w_mat = np.zeros((len(edges), len(pairs)))
    for k, (i, j) in enumerate(pairs):
        root = math.sqrt(w.sigma[i] * w.sigma[j])
        u_mat[i, k] = root
        u_mat[j, k] = -root
        for u, v in cp.steps(i, j):
            e = (u, v) if u < v else (v, u)
            sign = 1.0 if v > u else -1.0
            w_mat[eidx[e], k] = sign * root / math.sqrt(_edge_q(pg, w, *e))
    return a_mat, u_mat, w_mat


def tree_factorization(db, tree):
    """Factorization E^nu = A A^dag, V^nu = U U^dag with A W = U for nu > 0.

    A has one column per basis element (phi weight) and two per graph edge
    (the +/- link eigenvectors); W is supported on the tree edges of each
    column's component, with phases taken from the propagated tree phases.
    """
    n = db.size
    iu, ju = np.triu_indices(n, 1)
    mask = db.lam_plus[iu, ju] > 0.0
    edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
    ecol = {e: n + 2 * k for k, e in enumerate(edges)}
    ncols = n + 2 * len(edges)

    a_mat = np.zeros((n, ncols), dtype=complex)
    for v in range(n):
        a_mat[v, v] = math.sqrt(max(db.phi[v], 0.0))
    for e in edges:
        i, j = e
        lp = float(db.lam_plus[e])
        lm = float(db.lam_minus[e])
        phase = np.exp(1j * db.theta[e])
        a_mat[i, ecol[e]] = math.sqrt(lp / 2.0)
        a_mat[j, ecol[e]] = -phase * math.sqrt(lp / 2.0)
        a_mat[i, ecol[e] + 1] = math.sqrt(lm / 2.0)
        a_mat[j, ecol[e] + 1] = phase * math.sqrt(lm / 2.0)

    u_mat = np.diag(np.sqrt(db.sigma_pairs)).astype(complex)

    lam_edge = lambda i, j: float(db.lam_minus[i, j])
    sub_phi, sub_lam = _graphs._subtree_sums(tree, db.phi, lam_edge)
    comp_phi = defaultdict(float)
    comp_lam = defaultdict(float)
    for v in range(n):
        comp_phi[tree.comp_id[v]] += db.phi[v]
    for i, j in tree.edges:
        comp_lam[tree.comp_id[i]] += lam_edge(i, j)

    w_mat = np.zeros((ncols, n), dtype=complex)
    for m in range(n):
        c = tree.comp_id[m]
        norm_c = comp_phi[c] + 2.0 * comp_lam[c]
        if norm_c <= 0.0:
            raise DegenerateNormalization(
                f"block nu={db.nu}: zero normalization on a component"
            )
        omega = _graphs.fill_weights(tree, db, m)
        scale = math.sqrt(db.sigma_pairs[m]) / norm_c
        for v in range(n):
            if tree.comp_id[v] == c and db.phi[v] > 0.0:
                w_mat[v, m] = scale * (tree.psi[v] / tree.psi[m]) * math.sqrt(db.phi[v])
        for e, om in omega.items():
            i, j = e
            x = j if tree.parent[j] == i else i  # child endpoint
            far = ((i if x == j else j)) if tree.in_subtree(x, m) else x
            # both coordinates carry the phase of the canonical first endpoint
            eta = scale * (tree.psi[i] / tree.psi[m])
            lm = lam_edge(i, j)
            lp = float(db.lam_plus[e])
            if lm > 0.0:
                w_mat[ecol[e] + 1, m] = eta * math.sqrt(2.0 * lm)
            sign = 1.0 if far == j else -1.0
            w_mat[ecol[e], m] = sign * eta * om * math.sqrt(2.0 / lp)
    return a_mat, u_mat, w_mat


def combined_bound(tau0=None, lambda_qm_gersh=None, tau0_hat=None, lambda_qm_tree=None):
    """Best valid combination of the two bound families.

    Each combination min(classical, quantum) is usable only when its quantum
    part is strictly positive and its classical part is available.  Returns
    (lambda_lower, parts) where parts holds the two candidate values; raises
    NoValidBound when neither combination is usable.
    """
    parts = {"main": None, "robust": None}
    if tau0 is not None and tau0 > 0.0 and lambda_qm_gersh and lambda_qm_gersh > 0.0:
        parts["main"] = min(1.0 / tau0, lambda_qm_gersh)
    if (
        tau0_hat is not None
        and tau0_hat > 0.0
        and lambda_qm_tree
        and lambda_qm_tree > 0.0
    ):
        parts["robust"] = min(1.0 / tau0_hat, lambda_qm_tree)
    usable = [v for v in parts.values() if v is not None]
    if not usable:
        raise NoValidBound("every quantum bound degenerated to zero")
    return max(usable), parts


def mixing_time_bound(lam: float, sigma_min: float, epsilon: float) -> float:
    """t = log(sigma_min^{-1} / epsilon^2) / (2 lambda)."""
    if not (lam > 0.0) or not (0.0 < epsilon < 1.0) or not (0.0 < sigma_min <= 1.0):
        raise InvalidArguments(
            f"need lam > 0, 0 < epsilon < 1, 0 < sigma_min <= 1; "
            f"got {lam}, {epsilon}, {sigma_min}"
        )
    return math.log(1.0 / (sigma_min * epsilon**2)) / (2.0 * lam)


@dataclass(eq=False)
class BoundReport:
    """All bounds, oracles and intermediates for one instance."""

    dim: int
    beta: float
    sigma_min: float
    tau0: float = None
    tau0_hat: float = None
    dilation: float = None
    congestion: float = None
    lambda_qm_gersh: float = None
    lambda_qm_tree: float = None
    bound_main: float = None
    bound_robust: float = None
    lambda_lower: float = None
    lambda_cl_exact: float = None
    lambda_qm_exact: float = None
    lambda_exact: float = None
    block_gaps: dict = None
    tree_block_bounds: dict = None
    edge_loads: dict = None
    bohr_diameter_max: float = None
    errors: dict = field(default_factory=dict)

    def mixing_time(self, epsilon: float) -> float:
        if self.lambda_lower is None:
            raise NoValidBound("no valid lower bound in report")
        return mixing_time_bound(self.lambda_lower, self.sigma_min, epsilon)

    def to_dict(self) -> dict:
        out = {}
        for key in (
            "dim beta sigma_min tau0 tau0_hat dilation congestion "
            "lambda_qm_gersh lambda_qm_tree bound_main bound_robust "
            "lambda_lower lambda_cl_exact lambda_qm_exact lambda_exact "
            "bohr_diameter_max"
        ).split():
            out[key] = getattr(self, key)
        if self.block_gaps is not None:
            out["block_gaps"] = {repr(k): v for k, v in self.block_gaps.items()}
        if self.tree_block_bounds is not None:
            out["tree_block_bounds"] = {
                repr(k): v for k, v in self.tree_block_bounds.items()
            }
        if self.edge_loads is not None:
            out["edge_loads"] = {f"{a}-{b}": v for (a, b), v in self.edge_loads.items()}
        out["errors"] = dict(self.errors)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def compute_report(
    spec: SystemSpec,
    with_bounds: bool = True,
    with_block_oracle: bool = True,
    with_full_oracle: bool = None,
    dense: int = None,
    block_limit: int = BLOCK_ORACLE_LIMIT,
) -> BoundReport:
    """Run the full pipeline on one instance; component failures are recorded
    in report.errors rather than raised."""
    w = gibbs(spec)
    idx = _blocks.bohr_index(spec)
    ctx = _blocks._block_context(spec, idx)
    report = BoundReport(
        dim=spec.dim,
        beta=spec.beta,
        sigma_min=w.sigma_min,
        # audit field: how tightly the Bohr groups cluster (grouping risk)
        bohr_diameter_max=float(idx.diameters.max()),
    )

    dblocks = {}
    need_blocks = with_bounds or (with_block_oracle and spec.dim <= block_limit)
    if need_blocks:
        for gi in range(idx.zero_index, idx.n_freqs):
            nu = float(idx.freqs[gi])
            dblocks[gi] = _blocks.dirichlet_block(
                spec, w, idx, nu, links=with_bounds, ctx=ctx
            )

    if with_block_oracle and spec.dim <= block_limit:
        gaps = {}
        for gi, db in dblocks.items():
            vb = _blocks.variance_block(w, idx, float(idx.freqs[gi]))
            gaps[db.nu] = _blocks.block_exact_gap(db, vb)
        report.block_gaps = gaps
        report.lambda_cl_exact = gaps[0.0]
        positives = [v for k, v in gaps.items() if k > 0.0]
        if positives:
            report.lambda_qm_exact = min(positives)

    limit = dense if dense is not None else _liouvillian.dense_limit()
    if with_full_oracle is None:
        with_full_oracle = spec.dim <= limit
    if with_full_oracle:
        try:
            sop = _liouvillian.build_davies(spec, limit=limit)
            report.lambda_exact = _liouvillian.exact_gap(sop, w)
        except (NotPrimitive, Exception) as exc:
            if not isinstance(exc, NotPrimitive):
                raise
            report.errors["lambda_exact"] = str(exc)

    if with_bounds:
        pg = _blocks.pauli_generator(spec, w, idx)
        try:
            g0 = _graphs.build_graph(dblocks[idx.zero_index])
            cp = _graphs.canonical_paths(g0)
            report.tau0, report.edge_loads = _tau0_canonical_detail(pg, w, cp)
            report.tau0_hat, report.dilation, report.congestion = _tau0_hat_detail(
                pg, w, cp
            )
        except Disconnected as exc:
            report.errors["classical"] = str(exc)
        report.lambda_qm_gersh = lambda_qm_gershgorin(idx, spec, w)
        pos_blocks = [dblocks[gi] for gi in idx.positive_indices()]
        try:
            trees = [_graphs.spanning_tree(_graphs.build_graph(db)) for db in pos_blocks]
            report.tree_block_bounds = tree_block_bounds(pos_blocks, trees)
            report.lambda_qm_tree = min(report.tree_block_bounds.values())
        except DegenerateNormalization as exc:
            report.errors["lambda_qm_tree"] = str(exc)
        try:
            report.lambda_lower, parts = combined_bound(
                tau0=report.tau0,
                lambda_qm_gersh=report.lambda_qm_gersh,
                tau0_hat=report.tau0_hat,
                lambda_qm_tree=report.lambda_qm_tree,
            )
            report.bound_main = parts["main"]
            report.bound_robust = parts["robust"]
        except NoValidBound as exc:
            report.errors["lambda_lower"] = str(exc)
    return report
