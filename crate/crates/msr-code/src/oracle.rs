//! Independent brute-force verifiers.
//!
//! Everything here cross-checks the codec and repair paths from first
//! principles: the stacked parity system is materialized and eliminated
//! to confirm its rank (hence the file size k*alpha), repairs are
//! replayed as plain erasure decodes, and whole case spaces are swept
//! exhaustively when small enough, seeded-uniformly otherwise.

use std::collections::HashSet;

use crate::code::{CodeParams, DataCube, ErasurePattern, NodeId, PlaneId};
use crate::codec::{self, NodeContent};
use crate::field::{Fe, Matrix};
use crate::repair::{self, RepairSystem};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("parity system of {size} symbols exceeds the dense-elimination guard {guard}")]
    TooLarge { size: usize, guard: usize },
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
}

/// Largest n*alpha0 the dense rank computation will attempt.
pub const RANK_GUARD: usize = 5_000;

/// Materializes every parity equation as one row over the n*alpha0 cube
/// entries (node-major, plane-minor): 2q*(2q)^t plane rows over the
/// transformed symbols expanded into their A-coefficients, then
/// q*(2q)^(t-1) nodal rows per node.
pub fn build_parity_system(params: &CodeParams) -> Matrix {
    let f = &params.field;
    let cols = params.n * params.alpha0;
    let plane_rows = params.r * params.alpha0;
    let nodal_rows = params.n * params.q * params.beta;
    let mut sys = Matrix::zeros(plane_rows + nodal_rows, cols);
    let col = |node_idx: usize, z: PlaneId| node_idx * params.alpha0 + z.0;

    let mut row = 0;
    for z in params.planes() {
        for ell in 0..params.r {
            for node in params.nodes() {
                let th = params.theta_entry(node, ell);
                let ni = params.node_index(node);
                sys[(row, col(ni, z))] ^= th;
                let zy = params.plane_coord(z, node.y);
                if zy != node.x {
                    let (cn, cz) = params.companion_coords(node, z);
                    sys[(row, col(params.node_index(cn), cz))] ^= f.mul(params.u, th);
                }
            }
            row += 1;
        }
    }
    for node in params.nodes() {
        let ni = params.node_index(node);
        for g in 0..params.beta {
            let grp = codec::GroupIndex { y0: node.y, rest: g };
            for ell in 0..params.q {
                for w in 0..params.r {
                    let th = params.theta_entry(NodeId::new(w, node.y), ell);
                    let coeff = if w == node.x { th } else { f.mul(params.u, th) };
                    sys[(row, col(ni, grp.plane(params, w)))] ^= coeff;
                }
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, sys.rows());
    sys
}

/// Rank of the stacked plane + nodal parity system. For a sound
/// construction this equals n*alpha0 - k*alpha, which pins the file size
/// at k*alpha.
pub fn pc_rank(params: &CodeParams) -> Result<usize, OracleError> {
    let size = params.n * params.alpha0;
    if size > RANK_GUARD {
        return Err(OracleError::TooLarge {
            size,
            guard: RANK_GUARD,
        });
    }
    Ok(build_parity_system(params).rank(&params.field))
}

/// Repairs by brute force: erase the failed node together with the aloof
/// set and run the full erasure decoder over everything the helpers
/// store. Correct but not bandwidth-optimal — the reference point for
/// [`repair::repair_node`].
pub fn repair_via_full_decode(
    params: &CodeParams,
    cube: &DataCube,
    failed: NodeId,
    aloof: &[NodeId],
) -> Result<NodeContent, OracleError> {
    let pattern = ErasurePattern::new(
        params,
        std::iter::once(failed).chain(aloof.iter().copied()),
    )
    .map_err(codec::CodecError::from)?;
    let decoded = codec::decode_erasures(params, cube, &pattern)?;
    Ok(NodeContent::from_cube(params, &decoded, failed))
}

/// Case limits for [`exhaustive_verify`]: each space is enumerated in
/// full when its size fits the budget, otherwise sampled uniformly from
/// the recorded seed.
#[derive(Debug, Clone, Copy)]
pub struct VerifyBudget {
    pub erasure_cases: usize,
    pub repair_cases: usize,
    pub seed: u64,
}

impl VerifyBudget {
    pub fn unlimited(seed: u64) -> VerifyBudget {
        VerifyBudget {
            erasure_cases: usize::MAX,
            repair_cases: usize::MAX,
            seed,
        }
    }

    pub fn none() -> VerifyBudget {
        VerifyBudget {
            erasure_cases: 0,
            repair_cases: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyFailure {
    pub kind: String,
    pub nodes: Vec<(usize, usize)>,
    pub detail: String,
}

/// Outcome of one verification sweep.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub q: usize,
    pub t: usize,
    pub seed: u64,
    pub cases_run: usize,
    pub cases_passed: usize,
    pub erasure_cases_run: usize,
    pub erasure_exhaustive: bool,
    pub repair_cases_run: usize,
    pub repair_exhaustive: bool,
    /// Dense parity rank, when the instance fits the guard.
    pub parity_rank: Option<usize>,
    pub parity_rank_expected: usize,
    /// Distinct combined-matrix shapes whose nonsingularity was probed.
    pub repair_shapes_probed: usize,
    pub failures: Vec<VerifyFailure>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k.min(n - k) {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Calls `f` with every k-combination of `0..n`, in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        // Advance the rightmost index that can still move.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Sweeps erasure decoding, repair-vs-oracle agreement, bandwidth
/// accounting, and repair-system nonsingularity over one random codeword.
/// Failures are recorded, never thrown.
pub fn exhaustive_verify(params: &CodeParams, budget: &VerifyBudget) -> VerificationReport {
    let expected_rank = params.n * params.alpha0 - params.k * params.alpha;
    let mut report = VerificationReport {
        q: params.q,
        t: params.t,
        seed: budget.seed,
        cases_run: 0,
        cases_passed: 0,
        erasure_cases_run: 0,
        erasure_exhaustive: false,
        repair_cases_run: 0,
        repair_exhaustive: false,
        parity_rank: None,
        parity_rank_expected: expected_rank,
        repair_shapes_probed: 0,
        failures: Vec::new(),
    };
    if budget.erasure_cases == 0 && budget.repair_cases == 0 {
        return report;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mask = (params.field.size() - 1) as Fe;
    let msg = codec::Message(
        (0..params.k * params.alpha)
            .map(|_| rng.random::<u16>() & mask)
            .collect(),
    );
    let cube = codec::encode(params, &msg).expect("message length is k*alpha");
    let nodes: Vec<NodeId> = params.nodes().collect();

    if let Ok(rank) = pc_rank(params) {
        report.parity_rank = Some(rank);
        if rank != expected_rank {
            report.failures.push(VerifyFailure {
                kind: "parity_rank".into(),
                nodes: Vec::new(),
                detail: format!("rank {rank} != n*alpha0 - k*alpha = {expected_rank}"),
            });
        }
    }

    // (a) erasure patterns through the decoder.
    let mut erasure_patterns: Vec<Vec<NodeId>> = Vec::new();
    let total_patterns = binomial(params.n, params.r);
    report.erasure_exhaustive = total_patterns <= budget.erasure_cases;
    if report.erasure_exhaustive {
        for_each_combination(params.n, params.r, |idx| {
            erasure_patterns.push(idx.iter().map(|&i| nodes[i]).collect());
        });
    } else {
        for _ in 0..budget.erasure_cases {
            let mut pick: Vec<NodeId> = nodes.clone();
            pick.shuffle(&mut rng);
            pick.truncate(params.r);
            erasure_patterns.push(pick);
        }
    }
    for pattern in &erasure_patterns {
        report.cases_run += 1;
        report.erasure_cases_run += 1;
        let e = ErasurePattern::new(params, pattern.iter().copied()).expect("valid pattern");
        let mut damaged = cube.clone();
        for nd in e.iter() {
            damaged.node_symbols_mut(params, nd).fill(0);
        }
        match codec::decode_erasures(params, &damaged, &e) {
            Ok(decoded) if decoded == cube => report.cases_passed += 1,
            Ok(_) => report.failures.push(VerifyFailure {
                kind: "erasure_decode_mismatch".into(),
                nodes: pattern.iter().map(|nd| (nd.x, nd.y)).collect(),
                detail: "decoded cube differs from the original".into(),
            }),
            Err(err) => report.failures.push(VerifyFailure {
                kind: "erasure_decode_error".into(),
                nodes: pattern.iter().map(|nd| (nd.x, nd.y)).collect(),
                detail: err.to_string(),
            }),
        }
    }

    // (b) repair cases against the full-decode oracle, with (c)
    // nonsingularity probes of each distinct system shape.
    let mut repair_cases: Vec<(NodeId, Vec<NodeId>)> = Vec::new();
    let total_repairs = params.n.saturating_mul(binomial(params.n - 1, params.q));
    report.repair_exhaustive = total_repairs <= budget.repair_cases;
    if report.repair_exhaustive {
        for &failed in &nodes {
            let rest: Vec<NodeId> = nodes.iter().copied().filter(|&nd| nd != failed).collect();
            for_each_combination(rest.len(), params.q, |idx| {
                repair_cases.push((failed, idx.iter().map(|&i| rest[i]).collect()));
            });
        }
    } else {
        for _ in 0..budget.repair_cases {
            let failed = nodes[rng.random_range(0..params.n)];
            let mut rest: Vec<NodeId> =
                nodes.iter().copied().filter(|&nd| nd != failed).collect();
            rest.shuffle(&mut rng);
            rest.truncate(params.q);
            repair_cases.push((failed, rest));
        }
    }
    let mut shapes: HashSet<(Vec<Fe>, usize)> = HashSet::new();
    for (failed, aloof) in &repair_cases {
        report.cases_run += 1;
        report.repair_cases_run += 1;
        let case_nodes = |extra: &NodeId| {
            std::iter::once((extra.x, extra.y))
                .chain(aloof.iter().map(|nd| (nd.x, nd.y)))
                .collect::<Vec<_>>()
        };
        let plan = match repair::plan_repair(params, *failed, aloof) {
            Ok(plan) => plan,
            Err(err) => {
                report.failures.push(VerifyFailure {
                    kind: "repair_plan_error".into(),
                    nodes: case_nodes(failed),
                    detail: err.to_string(),
                });
                continue;
            }
        };
        // Shape = (ordered theta multiset of participants, m); probe each
        // distinct one once by factoring its combined matrix.
        let mut thetas: Vec<Fe> = std::iter::once(*failed)
            .chain(plan.aloof.iter().copied())
            .map(|nd| params.theta(nd))
            .collect();
        thetas.sort_unstable();
        if shapes.insert((thetas, plan.m)) {
            report.repair_shapes_probed += 1;
            if let Err(err) = RepairSystem::build(params, &plan) {
                report.failures.push(VerifyFailure {
                    kind: "repair_system_singular".into(),
                    nodes: case_nodes(failed),
                    detail: err.to_string(),
                });
                continue;
            }
        }
        let bundles: Vec<repair::HelperBundle> = plan
            .helpers
            .iter()
            .map(|&h| {
                let content = NodeContent::from_cube(params, &cube, h);
                repair::helper_extract(params, &content, &plan).expect("helper in plan")
            })
            .collect();
        let repaired = match repair::repair_node(params, &plan, &bundles) {
            Ok(out) => out,
            Err(err) => {
                report.failures.push(VerifyFailure {
                    kind: "repair_error".into(),
                    nodes: case_nodes(failed),
                    detail: err.to_string(),
                });
                continue;
            }
        };
        let original = NodeContent::from_cube(params, &cube, *failed);
        let via_decode = match repair_via_full_decode(params, &cube, *failed, aloof) {
            Ok(out) => out,
            Err(err) => {
                report.failures.push(VerifyFailure {
                    kind: "oracle_decode_error".into(),
                    nodes: case_nodes(failed),
                    detail: err.to_string(),
                });
                continue;
            }
        };
        let bw = repair::bandwidth_accounting(params, &plan, &bundles);
        if repaired == original
            && repaired == via_decode
            && bw.symbols_downloaded == params.d * params.beta
        {
            report.cases_passed += 1;
        } else {
            report.failures.push(VerifyFailure {
                kind: "repair_mismatch".into(),
                nodes: case_nodes(failed),
                detail: format!(
                    "original match: {}, oracle match: {}, downloaded {} of {}",
                    repaired == original,
                    repaired == via_decode,
                    bw.symbols_downloaded,
                    params.d * params.beta
                ),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::derive_params;
    use crate::codec::{encode, Message};

    #[test]
    fn parity_rank_smallest_instance() {
        // 128 equations over 128 symbols leave exactly k*alpha = 32 free.
        let p = derive_params(2, 2).unwrap();
        assert_eq!(pc_rank(&p).unwrap(), 96);
        assert_eq!(p.n * p.alpha0 - pc_rank(&p).unwrap(), p.k * p.alpha);
    }

    #[test]
    fn parity_rank_q3_t2() {
        let p = derive_params(3, 2).unwrap();
        let rank = pc_rank(&p).unwrap();
        assert_eq!(rank, p.n * p.alpha0 - p.k * p.alpha);
    }

    #[test]
    fn parity_rank_guard_trips() {
        let p = derive_params(3, 4).unwrap(); // 24 * 1296 symbols
        assert!(matches!(pc_rank(&p), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn full_decode_oracle_matches_original_node() {
        let p = derive_params(2, 2).unwrap();
        let msg = Message((0..p.k * p.alpha).map(|i| (i % 251) as Fe).collect());
        let cube = encode(&p, &msg).unwrap();
        let failed = NodeId::new(2, 2);
        let aloof = [NodeId::new(0, 1), NodeId::new(1, 1)];
        let out = repair_via_full_decode(&p, &cube, failed, &aloof).unwrap();
        assert_eq!(out, NodeContent::from_cube(&p, &cube, failed));
        let zero = repair_via_full_decode(&p, &DataCube::zero(&p), failed, &aloof).unwrap();
        assert!(zero.symbols.iter().all(|&v| v == 0));
    }

    #[test]
    fn verify_sweep_is_exhaustive_when_budget_allows() {
        let p = derive_params(2, 2).unwrap();
        let report = exhaustive_verify(&p, &VerifyBudget::unlimited(7));
        assert!(report.erasure_exhaustive && report.repair_exhaustive);
        assert_eq!(report.erasure_cases_run, 70);
        assert_eq!(report.repair_cases_run, 168);
        assert_eq!(report.cases_run, 238);
        assert_eq!(report.cases_passed, report.cases_run, "{:?}", report.failures);
        assert!(report.failures.is_empty());
        assert_eq!(report.parity_rank, Some(96));
        assert!(report.repair_shapes_probed > 0);
    }

    #[test]
    fn verify_sweep_samples_with_recorded_seed() {
        let p = derive_params(2, 3).unwrap();
        let budget = VerifyBudget {
            erasure_cases: 25,
            repair_cases: 25,
            seed: 99,
        };
        let report = exhaustive_verify(&p, &budget);
        assert!(!report.erasure_exhaustive && !report.repair_exhaustive);
        assert_eq!(report.cases_run, 50);
        assert_eq!(report.cases_passed, 50, "{:?}", report.failures);
        assert_eq!(report.seed, 99);
        // Same seed, same outcome shape.
        let again = exhaustive_verify(&p, &budget);
        assert_eq!(again.cases_passed, report.cases_passed);
    }

    #[test]
    fn verify_zero_budget_is_empty() {
        let p = derive_params(2, 2).unwrap();
        let report = exhaustive_verify(&p, &VerifyBudget::none());
        assert_eq!(report.cases_run, 0);
        assert_eq!(report.cases_passed, 0);
        assert!(report.parity_rank.is_none());
        assert!(report.failures.is_empty());
    }

    #[test]
    fn combination_walker_counts_match() {
        let mut count = 0;
        for_each_combination(8, 4, |idx| {
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        });
        assert_eq!(count, binomial(8, 4));
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(7, 2), 21);
    }
}
