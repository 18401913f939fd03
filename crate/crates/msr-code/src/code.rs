//! Code parameters and the coordinate system of the coupled-layer cube:
//! node and plane indexing, companion pairing, the symbol pair transform,
//! parity-matrix evaluation points, and the intersection score that
//! drives staged decoding and repair.

use crate::field::{self, Fe, FieldContext};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Node coordinate: `x` within a column, `y` the column (1-based).
///
/// Canonical node order is column-major, `(y, x)` lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId {
    pub x: usize,
    pub y: usize,
}

impl NodeId {
    pub fn new(x: usize, y: usize) -> NodeId {
        NodeId { x, y }
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Plane index in `[0, (2q)^t)`. The base-2q digits are the coordinates
/// `z_1..z_t` with `z_1` most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaneId(pub usize);

/// All derived quantities of one `(q, t)` code instance, plus the field
/// and the parity-matrix evaluation points. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CodeParams {
    pub q: usize,
    pub t: usize,
    /// Total nodes, 2qt.
    pub n: usize,
    /// Data nodes, 2q(t-1).
    pub k: usize,
    /// Helpers per repair, n-(q+1).
    pub d: usize,
    /// Erasure tolerance n-k = 2q.
    pub r: usize,
    /// Planes per node before the nodal checks halve the storage: (2q)^t.
    pub alpha0: usize,
    /// Stored symbols per node, (2q)^t / 2.
    pub alpha: usize,
    /// Symbols downloaded per helper during repair, alpha / q.
    pub beta: usize,
    pub field: FieldContext,
    /// Coupling coefficient of the pair transform; nonzero with u^2 != 1.
    pub u: Fe,
    /// Precomputed 1/(1 - u^2) used by the inverse pair transform.
    pair_inv_scale: Fe,
    /// Evaluation point per node, indexed canonically.
    thetas: Vec<Fe>,
    /// pow2q[i] = (2q)^i, for plane digit arithmetic.
    pow2q: Vec<usize>,
}

/// Computes every parameter of the `(q, t)` instance and fixes the
/// canonical evaluation points and coupling coefficient.
///
/// The field is GF(2^8) while n fits in it and GF(2^16) beyond; theta of
/// the node with canonical index `i` is the field element `i + 1`, and
/// `u = 2`. In characteristic 2 every u outside {0, 1} has u^2 != 1.
pub fn derive_params(q: usize, t: usize) -> Result<CodeParams, CodeError> {
    if q < 2 || t < 2 {
        return Err(CodeError::InvalidParameters(format!(
            "require q >= 2 and t >= 2, got q={q}, t={t}"
        )));
    }
    let n = 2 * q * t;
    let m: u8 = if n <= 255 {
        8
    } else if n <= 65_535 {
        16
    } else {
        return Err(CodeError::InvalidParameters(format!(
            "n = {n} exceeds the largest supported field GF(2^16)"
        )));
    };
    let alpha0 = (2usize * q)
        .checked_pow(t as u32)
        .filter(|a| a.checked_mul(n).is_some())
        .ok_or_else(|| {
            CodeError::InvalidParameters(format!("(2q)^t overflows for q={q}, t={t}"))
        })?;
    let field = FieldContext::new(m)
        .map_err(|e| CodeError::InvalidParameters(e.to_string()))?;

    let u: Fe = 2;
    if u == 0 || u == 1 || field.mul(u, u) == 1 {
        return Err(CodeError::InvalidParameters(
            "coupling coefficient must satisfy u != 0 and u^2 != 1".into(),
        ));
    }
    let pair_inv_scale = field
        .inv(1 ^ field.mul(u, u))
        .map_err(|e| CodeError::InvalidParameters(e.to_string()))?;

    // Distinct nonzero evaluation points 1..=n; any 2q of them give a
    // nonsingular Vandermonde block, so the plane parity matrix is the
    // parity-check matrix of an [n, k] MDS code.
    let thetas: Vec<Fe> = (1..=n).map(|v| v as Fe).collect();
    debug_assert!(thetas.iter().all(|&th| th != 0 && (th as usize) < field.size()));

    let mut pow2q = Vec::with_capacity(t + 1);
    let mut acc = 1usize;
    for _ in 0..=t {
        pow2q.push(acc);
        acc = acc.saturating_mul(2 * q);
    }

    let params = CodeParams {
        q,
        t,
        n,
        k: 2 * q * (t - 1),
        d: n - (q + 1),
        r: 2 * q,
        alpha0,
        alpha: alpha0 / 2,
        beta: alpha0 / (2 * q),
        field,
        u,
        pair_inv_scale,
        thetas,
        pow2q,
    };
    debug_assert_eq!(params.alpha, q * params.pow2q[t - 1]);
    debug_assert_eq!(params.alpha, (params.d - params.k + 1) * params.beta);
    debug_assert_eq!(params.beta, params.alpha / q);
    debug_assert!(params.alpha <= params.alpha0); // alpha <= r^(n/r) = (2q)^t
    Ok(params)
}

impl CodeParams {
    #[inline]
    pub fn node_index(&self, node: NodeId) -> usize {
        debug_assert!(node.x < self.r && node.y >= 1 && node.y <= self.t);
        (node.y - 1) * self.r + node.x
    }

    #[inline]
    pub fn node_at(&self, index: usize) -> NodeId {
        debug_assert!(index < self.n);
        NodeId::new(index % self.r, index / self.r + 1)
    }

    /// All n nodes in canonical order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n).map(|i| self.node_at(i))
    }

    /// The k systematic nodes: every node outside column t.
    pub fn systematic_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.k).map(|i| self.node_at(i))
    }

    /// The 2q nodes of column t, computed by the encoder.
    pub fn parity_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (self.k..self.n).map(|i| self.node_at(i))
    }

    pub fn planes(&self) -> impl Iterator<Item = PlaneId> {
        (0..self.alpha0).map(PlaneId)
    }

    /// The evaluation point of `node`.
    #[inline]
    pub fn theta(&self, node: NodeId) -> Fe {
        self.thetas[self.node_index(node)]
    }

    /// Parity-matrix entry: theta of `node` raised to `ell`.
    #[inline]
    pub fn theta_entry(&self, node: NodeId, ell: usize) -> Fe {
        self.field.pow(self.theta(node), ell)
    }

    /// Digit weight of coordinate `y`: (2q)^(t-y).
    #[inline]
    fn weight(&self, y: usize) -> usize {
        debug_assert!(y >= 1 && y <= self.t);
        self.pow2q[self.t - y]
    }

    /// Coordinate `z_y` of the plane.
    #[inline]
    pub fn plane_coord(&self, z: PlaneId, y: usize) -> usize {
        (z.0 / self.weight(y)) % self.r
    }

    /// The plane with coordinate `y` replaced by `x`.
    #[inline]
    pub fn plane_with_coord(&self, z: PlaneId, y: usize, x: usize) -> PlaneId {
        debug_assert!(x < self.r);
        let w = self.weight(y);
        let old = (z.0 / w) % self.r;
        PlaneId(z.0 - old * w + x * w)
    }

    /// Packs the t-1 coordinates other than `y` into one index in
    /// `[0, (2q)^(t-1))`, preserving their order.
    #[inline]
    pub fn plane_drop_coord(&self, z: PlaneId, y: usize) -> usize {
        let w = self.weight(y);
        (z.0 / (w * self.r)) * w + z.0 % w
    }

    /// Inverse of [`plane_drop_coord`](Self::plane_drop_coord): re-inserts
    /// digit `x` at coordinate `y`.
    #[inline]
    pub fn plane_insert_coord(&self, rest: usize, y: usize, x: usize) -> PlaneId {
        debug_assert!(x < self.r && rest < self.pow2q[self.t - 1]);
        let w = self.weight(y);
        PlaneId((rest / w * self.r + x) * w + rest % w)
    }

    pub fn plane_coords(&self, z: PlaneId) -> Vec<usize> {
        (1..=self.t).map(|y| self.plane_coord(z, y)).collect()
    }

    pub fn plane_from_coords(&self, coords: &[usize]) -> PlaneId {
        assert_eq!(coords.len(), self.t);
        PlaneId(
            coords
                .iter()
                .fold(0, |acc, &c| {
                    debug_assert!(c < self.r);
                    acc * self.r + c
                }),
        )
    }

    /// The plane paired with `z` at `node`: coordinate `node.y`
    /// replaced by `node.x`.
    #[inline]
    pub fn companion_plane(&self, z: PlaneId, node: NodeId) -> PlaneId {
        self.plane_with_coord(z, node.y, node.x)
    }

    /// Companion coordinates of the symbol at `(node, z)`: the paired
    /// symbol lives in node `(z_y, y)` on the plane with coordinate `y`
    /// swapped to `node.x`. An involution; fixed exactly when `z_y = x`.
    #[inline]
    pub fn companion_coords(&self, node: NodeId, z: PlaneId) -> (NodeId, PlaneId) {
        (
            NodeId::new(self.plane_coord(z, node.y), node.y),
            self.companion_plane(z, node),
        )
    }

    /// Couples a symbol with its companion: `(a + u*ac, u*a + ac)`.
    #[inline]
    pub fn pair_transform(&self, a: Fe, ac: Fe) -> (Fe, Fe) {
        (
            field::add(a, self.field.mul(self.u, ac)),
            field::add(self.field.mul(self.u, a), ac),
        )
    }

    /// Inverse of [`pair_transform`](Self::pair_transform), scaling by
    /// 1/(1 - u^2).
    #[inline]
    pub fn inverse_pair_transform(&self, b: Fe, bc: Fe) -> (Fe, Fe) {
        let a = self
            .field
            .mul(self.pair_inv_scale, field::add(b, self.field.mul(self.u, bc)));
        let ac = self
            .field
            .mul(self.pair_inv_scale, field::add(self.field.mul(self.u, b), bc));
        (a, ac)
    }

    /// Number of columns `y` whose plane coordinate hits an erased node,
    /// i.e. `(z_y, y)` is in the pattern.
    pub fn intersection_score(&self, e: &ErasurePattern, z: PlaneId) -> usize {
        (1..=self.t)
            .filter(|&y| e.contains(NodeId::new(self.plane_coord(z, y), y)))
            .count()
    }

    /// The beta planes with `z_{y1} = x1`, in increasing plane index.
    pub fn hyperplane(&self, x1: usize, y1: usize) -> Vec<PlaneId> {
        (0..self.beta)
            .map(|rest| self.plane_insert_coord(rest, y1, x1))
            .collect()
    }
}

/// A set of at most `2q` node coordinates, kept sorted canonically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErasurePattern {
    nodes: Vec<NodeId>,
}

impl ErasurePattern {
    pub fn new<I: IntoIterator<Item = NodeId>>(
        params: &CodeParams,
        nodes: I,
    ) -> Result<ErasurePattern, CodeError> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        for node in &nodes {
            if node.x >= params.r || node.y < 1 || node.y > params.t {
                return Err(CodeError::InvalidParameters(format!(
                    "node {node} out of range for q={}, t={}",
                    params.q, params.t
                )));
            }
        }
        nodes.sort();
        let before = nodes.len();
        nodes.dedup();
        if nodes.len() != before {
            return Err(CodeError::InvalidParameters(
                "erasure pattern contains duplicate nodes".into(),
            ));
        }
        if nodes.len() > params.r {
            return Err(CodeError::InvalidParameters(format!(
                "{} erasures exceed n-k = {}",
                nodes.len(),
                params.r
            )));
        }
        Ok(ErasurePattern { nodes })
    }

    pub fn empty() -> ErasurePattern {
        ErasurePattern { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// One codeword stripe: the full `(2q x t x (2q)^t)` symbol array,
/// node-major then plane-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataCube {
    alpha0: usize,
    entries: Vec<Fe>,
}

impl DataCube {
    pub fn zero(params: &CodeParams) -> DataCube {
        DataCube {
            alpha0: params.alpha0,
            entries: vec![0; params.n * params.alpha0],
        }
    }

    #[inline]
    pub fn get(&self, params: &CodeParams, node: NodeId, z: PlaneId) -> Fe {
        self.entries[params.node_index(node) * self.alpha0 + z.0]
    }

    #[inline]
    pub fn set(&mut self, params: &CodeParams, node: NodeId, z: PlaneId, v: Fe) {
        self.entries[params.node_index(node) * self.alpha0 + z.0] = v;
    }

    /// One node's alpha0 symbols in plane order.
    pub fn node_symbols(&self, params: &CodeParams, node: NodeId) -> &[Fe] {
        let i = params.node_index(node) * self.alpha0;
        &self.entries[i..i + self.alpha0]
    }

    pub fn node_symbols_mut(&mut self, params: &CodeParams, node: NodeId) -> &mut [Fe] {
        let i = params.node_index(node) * self.alpha0;
        &mut self.entries[i..i + self.alpha0]
    }

    /// Entry-wise XOR, the cube-level field addition.
    pub fn xor_assign(&mut self, other: &DataCube) {
        assert_eq!(self.entries.len(), other.entries.len());
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a ^= b;
        }
    }

    pub fn as_slice(&self) -> &[Fe] {
        &self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn derive_params_matches_reference_rows() {
        let p = derive_params(2, 3).unwrap();
        assert_eq!(
            (p.n, p.k, p.d, p.alpha, p.beta, p.alpha0),
            (12, 8, 9, 32, 16, 64)
        );
        let p = derive_params(2, 4).unwrap();
        assert_eq!((p.n, p.k, p.d, p.alpha), (16, 12, 13, 128));
        // k follows 2q(t-1) = n - 2q, forced by the MSR identity
        // alpha = (d-k+1)*beta together with d = n-q-1.
        let p = derive_params(3, 4).unwrap();
        assert_eq!((p.n, p.k, p.d, p.alpha), (24, 18, 20, 648));
        assert_eq!(p.alpha, (p.d - p.k + 1) * p.beta);
    }

    #[test]
    fn derive_params_smallest_instance() {
        let p = derive_params(2, 2).unwrap();
        assert_eq!(
            (p.n, p.k, p.d, p.alpha, p.beta, p.alpha0),
            (8, 4, 5, 8, 4, 16)
        );
        assert_eq!(p.field.m(), 8);
    }

    #[test]
    fn derive_params_rejects_small_q_or_t() {
        assert!(derive_params(1, 2).is_err());
        assert!(derive_params(2, 1).is_err());
        assert!(derive_params(0, 0).is_err());
    }

    #[test]
    fn derive_params_switches_to_wide_field() {
        // n = 256 no longer fits GF(2^8).
        let p = derive_params(64, 2).unwrap();
        assert_eq!(p.n, 256);
        assert_eq!(p.field.m(), 16);
        assert_eq!(p.theta(p.node_at(255)), 256);
    }

    #[test]
    fn msr_identities_hold_across_supported_range() {
        for q in 2..=4 {
            for t in 2..=5 {
                let p = derive_params(q, t).unwrap();
                assert_eq!(p.d - p.k + 1, q);
                assert_eq!(p.d * p.beta, (p.n - q - 1) * p.pow2q[t - 1]);
                assert_eq!(p.alpha, (p.d - p.k + 1) * p.beta);
                assert_eq!(p.beta, p.alpha / q);
                // alpha <= r^(n/r) with r = 2q and n/r = t.
                assert!(p.alpha <= p.alpha0);
            }
        }
    }

    #[test]
    fn node_index_round_trips_canonically() {
        let p = derive_params(3, 4).unwrap();
        let mut seen = Vec::new();
        for i in 0..p.n {
            let nd = p.node_at(i);
            assert_eq!(p.node_index(nd), i);
            seen.push(nd);
        }
        let mut sorted = seen.clone();
        sorted.sort();
        assert_eq!(sorted, seen, "canonical order is (y, x) lexicographic");
    }

    #[test]
    fn plane_digit_round_trips() {
        let p = derive_params(3, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..500 {
            let z = PlaneId(rng.random_range(0..p.alpha0));
            assert_eq!(p.plane_from_coords(&p.plane_coords(z)), z);
            let y = rng.random_range(1..=p.t);
            let rest = p.plane_drop_coord(z, y);
            assert_eq!(p.plane_insert_coord(rest, y, p.plane_coord(z, y)), z);
        }
    }

    #[test]
    fn companion_plane_replaces_one_coordinate() {
        // t = 5, 2q = 4: z = (3,2,0,0,0), node (x=1, y=2) -> (3,1,0,0,0).
        let p = derive_params(2, 5).unwrap();
        let z = p.plane_from_coords(&[3, 2, 0, 0, 0]);
        let moved = p.companion_plane(z, NodeId::new(1, 2));
        assert_eq!(p.plane_coords(moved), vec![3, 1, 0, 0, 0]);
        // Fixed point when z_y already equals x.
        assert_eq!(p.companion_plane(z, NodeId::new(2, 2)), z);
        // Swapping back restores the plane.
        assert_eq!(p.companion_plane(moved, NodeId::new(2, 2)), z);
    }

    #[test]
    fn companion_coords_definition_and_self_pairing() {
        let p = derive_params(2, 5).unwrap();
        let z = p.plane_from_coords(&[3, 2, 0, 0, 0]);
        let (cn, cz) = p.companion_coords(NodeId::new(1, 2), z);
        assert_eq!(cn, NodeId::new(2, 2));
        assert_eq!(p.plane_coords(cz), vec![3, 1, 0, 0, 0]);
        // z_y = x pairs the symbol with itself.
        let (sn, sz) = p.companion_coords(NodeId::new(2, 2), z);
        assert_eq!((sn, sz), (NodeId::new(2, 2), z));
    }

    #[test]
    fn companion_coords_is_an_involution() {
        let p = derive_params(3, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..1_000 {
            let node = p.node_at(rng.random_range(0..p.n));
            let z = PlaneId(rng.random_range(0..p.alpha0));
            let (cn, cz) = p.companion_coords(node, z);
            assert_eq!(p.companion_coords(cn, cz), (node, z));
            // Fixed points are exactly the self-paired symbols.
            assert_eq!((cn, cz) == (node, z), p.plane_coord(z, node.y) == node.x);
        }
    }

    #[test]
    fn pair_transform_zero_and_symmetry() {
        let p = derive_params(2, 2).unwrap();
        assert_eq!(p.pair_transform(0, 0), (0, 0));
        let one_plus_u = 1 ^ p.u;
        for a in [1 as Fe, 7, 200] {
            let (b, bc) = p.pair_transform(a, a);
            assert_eq!(b, bc);
            assert_eq!(b, p.field.mul(one_plus_u, a));
        }
    }

    #[test]
    fn pair_transform_round_trips() {
        let p = derive_params(2, 2).unwrap();
        assert_eq!(p.inverse_pair_transform(0, 0), (0, 0));
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..1_000 {
            let a = rng.random_range(0..256) as Fe;
            let ac = rng.random_range(0..256) as Fe;
            let (b, bc) = p.pair_transform(a, ac);
            assert_eq!(p.inverse_pair_transform(b, bc), (a, ac));
            let (rb, rbc) = p.pair_transform(p.inverse_pair_transform(b, bc).0, ac);
            assert_eq!((rb, rbc), (b, bc));
        }
    }

    #[test]
    fn any_two_of_the_coupled_quadruple_determine_the_rest() {
        // (a, ac, b, bc) satisfy b = a + u*ac and bc = u*a + ac; every
        // 2-subset pins the other two because u^2 != 1.
        let p = derive_params(2, 2).unwrap();
        let f = &p.field;
        let u = p.u;
        let mut rng = StdRng::seed_from_u64(14);
        for _ in 0..200 {
            let a = rng.random_range(0..256) as Fe;
            let ac = rng.random_range(0..256) as Fe;
            let (b, bc) = p.pair_transform(a, ac);

            // (a, ac), (b, bc) are the transform and its inverse.
            assert_eq!(p.pair_transform(a, ac), (b, bc));
            assert_eq!(p.inverse_pair_transform(b, bc), (a, ac));
            // (a, b): ac = (b - a)/u.
            assert_eq!(f.div(b ^ a, u).unwrap(), ac);
            // (a, bc): ac = bc - u*a.
            assert_eq!(bc ^ f.mul(u, a), ac);
            // (ac, b): a = b - u*ac.
            assert_eq!(b ^ f.mul(u, ac), a);
            // (ac, bc): a = (bc - ac)/u.
            assert_eq!(f.div(bc ^ ac, u).unwrap(), a);
        }
    }

    #[test]
    fn theta_entries_power_law_and_distinctness() {
        for (q, t) in [(2, 2), (2, 3), (3, 2)] {
            let p = derive_params(q, t).unwrap();
            let mut points = Vec::new();
            for node in p.nodes() {
                assert_eq!(p.theta_entry(node, 0), 1);
                assert_eq!(
                    p.theta_entry(node, 2),
                    p.field.mul(p.theta_entry(node, 1), p.theta_entry(node, 1))
                );
                points.push(p.theta_entry(node, 1));
            }
            points.sort_unstable();
            points.dedup();
            assert_eq!(points.len(), p.n, "theta values must be pairwise distinct");
            assert!(points.iter().all(|&v| v != 0));
        }
    }

    #[test]
    fn intersection_score_reference_case() {
        // 2q = 4, t = 5; E = {(0,2),(1,2),(2,2),(2,4)}, z = (1,2,3,1,0).
        let p = derive_params(2, 5).unwrap();
        let e = ErasurePattern::new(
            &p,
            [
                NodeId::new(0, 2),
                NodeId::new(1, 2),
                NodeId::new(2, 2),
                NodeId::new(2, 4),
            ],
        )
        .unwrap();
        let z = p.plane_from_coords(&[1, 2, 3, 1, 0]);
        assert_eq!(p.intersection_score(&e, z), 1);
    }

    #[test]
    fn intersection_score_extremes() {
        let p = derive_params(2, 3).unwrap();
        let z = p.plane_from_coords(&[1, 2, 3]);
        // Disjoint from every (z_y, y).
        let none = ErasurePattern::new(&p, [NodeId::new(0, 1), NodeId::new(0, 2)]).unwrap();
        assert_eq!(p.intersection_score(&none, z), 0);
        // Hitting every column scores t.
        let all = ErasurePattern::new(
            &p,
            [NodeId::new(1, 1), NodeId::new(2, 2), NodeId::new(3, 3)],
        )
        .unwrap();
        assert_eq!(p.intersection_score(&all, z), p.t);
    }

    #[test]
    fn intersection_score_bounds_and_order_independence() {
        let p = derive_params(2, 3).unwrap();
        let mut rng = StdRng::seed_from_u64(15);
        for _ in 0..300 {
            let mut picked = Vec::new();
            while picked.len() < 3 {
                let nd = p.node_at(rng.random_range(0..p.n));
                if !picked.contains(&nd) {
                    picked.push(nd);
                }
            }
            let z = PlaneId(rng.random_range(0..p.alpha0));
            let e1 = ErasurePattern::new(&p, picked.clone()).unwrap();
            picked.reverse();
            let e2 = ErasurePattern::new(&p, picked).unwrap();
            let s = p.intersection_score(&e1, z);
            assert_eq!(s, p.intersection_score(&e2, z));
            assert!(s <= p.t.min(e1.len()));
        }
    }

    #[test]
    fn hyperplane_enumeration_and_partition() {
        let p = derive_params(2, 2).unwrap();
        let h = p.hyperplane(0, 1);
        assert_eq!(h, vec![PlaneId(0), PlaneId(1), PlaneId(2), PlaneId(3)]);
        assert_eq!(h.len(), p.beta);

        let p = derive_params(2, 3).unwrap();
        for y1 in 1..=p.t {
            let mut all: Vec<PlaneId> = Vec::new();
            for x1 in 0..p.r {
                let h = p.hyperplane(x1, y1);
                assert_eq!(h.len(), p.beta);
                assert!(h.windows(2).all(|w| w[0] < w[1]), "increasing plane index");
                assert!(h.iter().all(|&z| p.plane_coord(z, y1) == x1));
                all.extend(h);
            }
            all.sort();
            all.dedup();
            assert_eq!(all.len(), p.alpha0, "hyperplanes partition the planes");
        }
    }

    #[test]
    fn coordinate_replacement_orbits_partition_each_hyperplane() {
        // For fixed (x1, y1), replacing coordinate y1 maps the hyperplane's
        // planes into orbit groups of size 2q.
        let p = derive_params(2, 3).unwrap();
        let (x1, y1) = (1, 2);
        let mut orbit_of = std::collections::HashMap::new();
        for z in p.hyperplane(x1, y1) {
            let orbit: Vec<PlaneId> = (0..p.r).map(|w| p.plane_with_coord(z, y1, w)).collect();
            assert_eq!(orbit.len(), p.r);
            orbit_of.insert(z, orbit);
        }
        let mut union: Vec<PlaneId> = orbit_of.values().flatten().copied().collect();
        union.sort();
        union.dedup();
        assert_eq!(union.len(), p.alpha0);
    }

    #[test]
    fn erasure_pattern_validation() {
        let p = derive_params(2, 2).unwrap();
        assert!(ErasurePattern::new(&p, [NodeId::new(4, 1)]).is_err());
        assert!(ErasurePattern::new(&p, [NodeId::new(0, 3)]).is_err());
        assert!(ErasurePattern::new(&p, [NodeId::new(0, 1), NodeId::new(0, 1)]).is_err());
        let too_many: Vec<NodeId> = p.nodes().take(5).collect();
        assert!(ErasurePattern::new(&p, too_many).is_err());
        assert!(ErasurePattern::new(&p, []).unwrap().is_empty());
    }
}
