//! Bandwidth-optimal repair of one failed node.
//!
//! With d = n-q-1 helpers, q surviving nodes sit out as aloof. Each
//! helper contributes only the beta symbols on the hyperplane
//! z_{y1} = x1 of the failed node (x1, y1) — d*beta symbols total,
//! against the k*alpha a full data collection would move.
//!
//! Per hyperplane plane z, the unknowns are ordered
//!
//!   [ a1c | u*ac of aligned helpers | B of aligned aloof | B of unaligned aloof ]
//!
//! where a1c = A(x1,y1;z) is self-paired, aligned-helper companions are
//! failed-node symbols, and aloof B values are the coupled transforms.
//! The 2q plane parity rows form a Vandermonde in the 2q+m participating
//! thetas; the failed node's q nodal parity rows, row-reduced to isolate
//! the aligned companions, contribute the m extra rows free of
//! aligned-aloof terms. Solving the combined (2q+m) system and
//! back-substituting the remaining reduced rows recovers the whole
//! 2q-symbol nodal group that meets the plane, so the beta hyperplane
//! planes rebuild all alpha0 symbols. Planes are processed in increasing
//! intersection score; aloof transforms solved at score s feed the
//! known-side folds of score s+1.

use std::collections::HashMap;

use crate::code::{CodeParams, ErasurePattern, NodeId, PlaneId};
use crate::codec::NodeContent;
use crate::field::{self, Fe, FieldError, Matrix};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("invalid repair plan: {0}")]
    InvalidPlan(String),
    #[error("node {0} is not a helper in this plan")]
    NotAHelper(NodeId),
    #[error("incomplete helper bundles: {0}")]
    IncompleteBundles(String),
    #[error("repair system is singular for failed node {failed}: {source}")]
    SingularRepairSystem {
        failed: NodeId,
        source: FieldError,
    },
}

/// Who does what during one repair: the failed node, the q aloof nodes
/// split by alignment with the failed column, and the d helpers.
#[derive(Debug, Clone)]
pub struct RepairPlan {
    pub failed: NodeId,
    /// All q aloof nodes, canonically sorted.
    pub aloof: Vec<NodeId>,
    /// The d = n-q-1 helper nodes, canonically sorted.
    pub helpers: Vec<NodeId>,
    /// Number of aloof nodes outside the failed column.
    pub m: usize,
    /// Helpers in the failed column (q+m-1 of them).
    pub aligned_helpers: Vec<NodeId>,
    /// Aloof nodes in the failed column (q-m of them).
    pub aligned_aloof: Vec<NodeId>,
    /// Aloof nodes outside the failed column (m of them).
    pub unaligned_aloof: Vec<NodeId>,
}

/// Validates an aloof choice and computes the alignment partition.
pub fn plan_repair(
    params: &CodeParams,
    failed: NodeId,
    aloof: &[NodeId],
) -> Result<RepairPlan, RepairError> {
    let check = |nd: &NodeId| nd.x < params.r && nd.y >= 1 && nd.y <= params.t;
    if !check(&failed) {
        return Err(RepairError::InvalidPlan(format!(
            "failed node {failed} out of range"
        )));
    }
    let mut aloof: Vec<NodeId> = aloof.to_vec();
    aloof.sort();
    aloof.dedup();
    if aloof.len() != params.q {
        return Err(RepairError::InvalidPlan(format!(
            "need exactly q = {} distinct aloof nodes, got {}",
            params.q,
            aloof.len()
        )));
    }
    if let Some(bad) = aloof.iter().find(|nd| !check(nd)) {
        return Err(RepairError::InvalidPlan(format!(
            "aloof node {bad} out of range"
        )));
    }
    if aloof.contains(&failed) {
        return Err(RepairError::InvalidPlan(format!(
            "failed node {failed} cannot be aloof"
        )));
    }
    let aligned_aloof: Vec<NodeId> = aloof.iter().copied().filter(|nd| nd.y == failed.y).collect();
    let unaligned_aloof: Vec<NodeId> =
        aloof.iter().copied().filter(|nd| nd.y != failed.y).collect();
    let aligned_helpers: Vec<NodeId> = (0..params.r)
        .map(|x| NodeId::new(x, failed.y))
        .filter(|&nd| nd != failed && !aligned_aloof.contains(&nd))
        .collect();
    let helpers: Vec<NodeId> = params
        .nodes()
        .filter(|nd| *nd != failed && !aloof.contains(nd))
        .collect();
    debug_assert_eq!(helpers.len(), params.d);
    let m = unaligned_aloof.len();
    debug_assert_eq!(aligned_helpers.len(), params.q + m - 1);
    debug_assert_eq!(aligned_aloof.len(), params.q - m);
    Ok(RepairPlan {
        failed,
        aloof,
        helpers,
        m,
        aligned_helpers,
        aligned_aloof,
        unaligned_aloof,
    })
}

/// The beta symbols one helper ships: its values on the failed node's
/// hyperplane, in plane-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperBundle {
    pub helper: NodeId,
    pub symbols: Vec<Fe>,
}

impl HelperBundle {
    /// All-zero bundle, the stand-in for a shortened-away helper.
    pub fn zeros(params: &CodeParams, helper: NodeId) -> HelperBundle {
        HelperBundle {
            helper,
            symbols: vec![0; params.beta],
        }
    }
}

/// Extracts a helper's bundle from its completed contents.
///
/// A stored node holds only alpha free symbols; re-deriving all alpha0
/// via [`crate::codec::complete_node`] is the helper-side computation.
/// Shipped symbols are exactly those with z_{y1} = x1.
pub fn helper_extract(
    params: &CodeParams,
    content: &NodeContent,
    plan: &RepairPlan,
) -> Result<HelperBundle, RepairError> {
    if !plan.helpers.contains(&content.node) {
        return Err(RepairError::NotAHelper(content.node));
    }
    debug_assert_eq!(content.symbols.len(), params.alpha0);
    let symbols = (0..params.beta)
        .map(|g| content.symbols[params.plane_insert_coord(g, plan.failed.y, plan.failed.x).0])
        .collect();
    Ok(HelperBundle {
        helper: content.node,
        symbols,
    })
}

/// The per-plan linear system: a (2q+m) combined matrix shared by every
/// plane of the repair, plus the reduced nodal rows used to
/// back-substitute the aligned-aloof companions.
#[derive(Debug, Clone)]
pub struct RepairSystem {
    /// Unknown-column node order: failed, aligned helpers, aligned
    /// aloof, unaligned aloof.
    pub columns: Vec<NodeId>,
    combined_inv: Matrix,
    /// Rows m..q of the reduced nodal system restricted to the first q
    /// columns: u*ac of aligned-aloof node i solves C2[i]·sol[0..q].
    c2: Matrix,
}

impl RepairSystem {
    /// Builds and factors the combined system; fails with
    /// `SingularRepairSystem` if the evaluation-point assignment breaks
    /// the nonsingularity the construction relies on.
    pub fn build(params: &CodeParams, plan: &RepairPlan) -> Result<RepairSystem, RepairError> {
        let (q, r, m) = (params.q, params.r, plan.m);
        let f = &params.field;
        let singular = |source| RepairError::SingularRepairSystem {
            failed: plan.failed,
            source,
        };

        let mut columns = Vec::with_capacity(r + m);
        columns.push(plan.failed);
        columns.extend_from_slice(&plan.aligned_helpers);
        columns.extend_from_slice(&plan.aligned_aloof);
        columns.extend_from_slice(&plan.unaligned_aloof);

        // Failed node's q nodal parity rows over the failed column, as a
        // plain Vandermonde acting on [a1c, u*a2c, ..., u*a_{2q}c].
        let mut nodal = Matrix::zeros(q, r);
        for ell in 0..q {
            for (i, nd) in columns[..r].iter().enumerate() {
                nodal[(ell, i)] = params.theta_entry(*nd, ell);
            }
        }
        // Pivot on the last q columns: rows 0..m isolate the last m
        // aligned-helper companions with aligned-aloof terms eliminated,
        // rows m..q isolate the aligned-aloof companions.
        let pivots: Vec<usize> = (q..r).collect();
        let reduced = nodal.row_reduce(f, &pivots).map_err(singular)?;
        if cfg!(debug_assertions) {
            for i in 0..q {
                for j in q..r {
                    let expect = if j - q == i { 1 } else { 0 };
                    debug_assert_eq!(reduced[(i, j)], expect, "pivot block must be the identity");
                }
            }
        }
        let c1 = reduced.block(0, m, 0, q);
        let c2 = reduced.block(m, q, 0, q);

        let mut combined = Matrix::zeros(r + m, r + m);
        for ell in 0..r {
            for (j, nd) in columns.iter().enumerate() {
                combined[(ell, j)] = params.theta_entry(*nd, ell);
            }
        }
        for i in 0..m {
            for c in 0..q {
                combined[(r + i, c)] = c1[(i, c)];
            }
            combined[(r + i, q + i)] = 1;
        }
        let combined_inv = combined.inverse(f).map_err(singular)?;
        Ok(RepairSystem {
            columns,
            combined_inv,
            c2,
        })
    }

    pub fn dimension(&self) -> usize {
        self.combined_inv.rows()
    }
}

/// Regenerates the failed node's full alpha0 symbols from the d helper
/// bundles, reading nothing outside the hyperplane z_{y1} = x1.
pub fn repair_node(
    params: &CodeParams,
    plan: &RepairPlan,
    bundles: &[HelperBundle],
) -> Result<NodeContent, RepairError> {
    repair_node_inner(params, plan, bundles, None)
}

/// Total downloaded symbols against the naive k*alpha baseline.
#[derive(Debug, Clone, Serialize)]
pub struct BandwidthReport {
    pub helper_count: usize,
    pub symbols_per_helper: usize,
    pub symbols_downloaded: usize,
    pub baseline_kalpha: usize,
    pub ratio: f64,
}

/// Accounts for what a repair moves: beta symbols from each of d helpers.
pub fn bandwidth_accounting(
    params: &CodeParams,
    plan: &RepairPlan,
    bundles: &[HelperBundle],
) -> BandwidthReport {
    let symbols_downloaded: usize = bundles.iter().map(|b| b.symbols.len()).sum();
    let baseline = params.k * params.alpha;
    debug_assert_eq!(plan.helpers.len(), params.d);
    BandwidthReport {
        helper_count: plan.helpers.len(),
        symbols_per_helper: params.beta,
        symbols_downloaded,
        baseline_kalpha: baseline,
        ratio: symbols_downloaded as f64 / baseline as f64,
    }
}

fn repair_node_inner(
    params: &CodeParams,
    plan: &RepairPlan,
    bundles: &[HelperBundle],
    shuffle_seed: Option<u64>,
) -> Result<NodeContent, RepairError> {
    let f = &params.field;
    let (q, r, m) = (params.q, params.r, plan.m);
    let (x1, y1) = (plan.failed.x, plan.failed.y);
    let u = params.u;
    let u_inv = f.inv(u).expect("u is nonzero");
    let one_minus_u2 = 1 ^ f.mul(u, u);

    // Bundle per helper, indexed by canonical node index.
    let mut by_node: HashMap<usize, &HelperBundle> = HashMap::with_capacity(bundles.len());
    for b in bundles {
        if !plan.helpers.contains(&b.helper) {
            return Err(RepairError::NotAHelper(b.helper));
        }
        if b.symbols.len() != params.beta {
            return Err(RepairError::IncompleteBundles(format!(
                "bundle from {} has {} symbols, expected beta = {}",
                b.helper,
                b.symbols.len(),
                params.beta
            )));
        }
        by_node.insert(params.node_index(b.helper), b);
    }
    if by_node.len() != plan.helpers.len() {
        return Err(RepairError::IncompleteBundles(format!(
            "{} of {} helpers provided",
            by_node.len(),
            plan.helpers.len()
        )));
    }
    let bundle = |nd: NodeId| by_node[&params.node_index(nd)];

    let system = RepairSystem::build(params, plan)?;
    let erased = ErasurePattern::new(
        params,
        std::iter::once(plan.failed).chain(plan.aloof.iter().copied()),
    )
    .expect("plan nodes are valid and distinct");

    // Bucket the hyperplane by intersection score; the failed node always
    // contributes one hit, unaligned aloof nodes add the rest.
    let mut buckets: Vec<Vec<PlaneId>> = vec![Vec::new(); params.t + 1];
    for z in params.hyperplane(x1, y1) {
        let s = params.intersection_score(&erased, z);
        debug_assert!(s >= 1);
        buckets[s].push(z);
    }
    if let Some(seed) = shuffle_seed {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for bucket in &mut buckets {
            bucket.shuffle(&mut rng);
        }
    }

    // Aloof transforms solved at stage s, consumed by known-side folds at
    // stage s+1; values carry their stage for the write-once/read-later
    // invariant.
    let mut memo: HashMap<(usize, PlaneId), (Fe, usize)> = HashMap::new();
    let mut symbols = vec![0 as Fe; params.alpha0];
    let mut rhs = vec![0 as Fe; r + m];

    for (s, planes) in buckets.iter().enumerate() {
        for &z in planes {
            let g = params.plane_drop_coord(z, y1);
            rhs.fill(0);
            for &h in &plan.helpers {
                let a = bundle(h).symbols[g];
                if h.y == y1 {
                    // Aligned helper: its companion is a failed-node
                    // unknown; only the downloaded value folds out.
                    if a != 0 {
                        for (ell, slot) in rhs[..r].iter_mut().enumerate() {
                            *slot ^= f.mul(params.theta_entry(h, ell), a);
                        }
                    }
                    continue;
                }
                let zy = params.plane_coord(z, h.y);
                let b = if zy == h.x {
                    a
                } else {
                    let (cn, cz) = params.companion_coords(h, z);
                    if erased.contains(cn) {
                        // Companion sits in an unaligned aloof node; its
                        // transform came out of the previous stage.
                        let &(bc, stage) = memo
                            .get(&(params.node_index(cn), cz))
                            .expect("aloof transform memoized in the previous stage");
                        debug_assert_eq!(stage, s - 1, "memo reads must cross exactly one stage");
                        f.mul(one_minus_u2, a) ^ f.mul(u, bc)
                    } else {
                        let ac = bundle(cn).symbols[params.plane_drop_coord(cz, y1)];
                        field::add(a, f.mul(u, ac))
                    }
                };
                if b != 0 {
                    for (ell, slot) in rhs[..r].iter_mut().enumerate() {
                        *slot ^= f.mul(params.theta_entry(h, ell), b);
                    }
                }
            }
            // Nodal rows have zero right-hand side: every term is a
            // failed-node unknown.
            let sol = system.combined_inv.mul_vec(f, &rhs);

            // sol = [a1c | u*ac aligned helpers | B aligned aloof | B unaligned aloof]
            symbols[z.0] = sol[0];
            for (j, nd) in plan.aligned_helpers.iter().enumerate() {
                let plane = params.plane_with_coord(z, y1, nd.x);
                symbols[plane.0] = f.mul(u_inv, sol[1 + j]);
            }
            for (i, nd) in plan.aligned_aloof.iter().enumerate() {
                let mut acc = 0;
                for c in 0..q {
                    acc ^= f.mul(system.c2[(i, c)], sol[c]);
                }
                let plane = params.plane_with_coord(z, y1, nd.x);
                symbols[plane.0] = f.mul(u_inv, acc);
            }
            for (j, nd) in plan.aligned_aloof.iter().enumerate() {
                memo.insert(
                    (params.node_index(*nd), z),
                    (sol[1 + (q + m - 1) + j], s),
                );
            }
            for (j, nd) in plan.unaligned_aloof.iter().enumerate() {
                memo.insert((params.node_index(*nd), z), (sol[r + j], s));
            }
        }
    }
    Ok(NodeContent {
        node: plan.failed,
        symbols,
    })
}
