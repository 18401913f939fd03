//! Encoding, parity verification, and data collection.
//!
//! A codeword stripe carries k*alpha message symbols. Each node's alpha0
//! plane symbols split per nodal parity group into q free and q dependent
//! coordinates; the encoder writes the message into the free positions of
//! the k systematic nodes (columns 1..t-1), completes each node through
//! its nodal checks, and derives column t by running the erasure decoder
//! with that column marked missing. Decoding of up to 2q erased nodes
//! proceeds plane by plane in increasing intersection score: each plane
//! yields a 2q x 2q Vandermonde system in the transformed symbols of the
//! erased nodes, and the staged order guarantees every companion value
//! needed on the known side was either never erased or recovered in an
//! earlier stage.

use std::collections::HashMap;

use crate::code::{CodeError, CodeParams, DataCube, ErasurePattern, NodeId, PlaneId};
use crate::field::{self, Fe, FieldError, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("message has {got} symbols, expected {expected}")]
    BadMessageLength { got: usize, expected: usize },
    #[error("{got} erasures exceed the correctable maximum n-k = {max}")]
    TooManyErasures { got: usize, max: usize },
    #[error("incomplete input: {0}")]
    IncompleteInput(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// One nodal parity group: the 2q planes of one node that differ only in
/// coordinate `y0`. `rest` packs the remaining t-1 coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupIndex {
    pub y0: usize,
    pub rest: usize,
}

impl GroupIndex {
    pub fn of_plane(params: &CodeParams, z: PlaneId, y0: usize) -> GroupIndex {
        GroupIndex {
            y0,
            rest: params.plane_drop_coord(z, y0),
        }
    }

    /// The group's plane with coordinate `y0` equal to `w`.
    pub fn plane(&self, params: &CodeParams, w: usize) -> PlaneId {
        params.plane_insert_coord(self.rest, self.y0, w)
    }
}

/// The full alpha0 plane symbols of one node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeContent {
    pub node: NodeId,
    pub symbols: Vec<Fe>,
}

impl NodeContent {
    pub fn from_cube(params: &CodeParams, cube: &DataCube, node: NodeId) -> NodeContent {
        NodeContent {
            node,
            symbols: cube.node_symbols(params, node).to_vec(),
        }
    }
}

/// A k*alpha-symbol message, the payload of one codeword stripe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message(pub Vec<Fe>);

impl Message {
    pub fn zero(params: &CodeParams) -> Message {
        Message(vec![0; params.k * params.alpha])
    }
}

/// Coefficient of the symbol with `z_{y0} = w` in the node's nodal parity
/// equation of power `ell`: the self coordinate is unscaled, every other
/// one carries the coupling coefficient u.
fn nodal_coeff(params: &CodeParams, node: NodeId, w: usize, ell: usize) -> Fe {
    let th = params.theta_entry(NodeId::new(w, node.y), ell);
    if w == node.x {
        th
    } else {
        params.field.mul(params.u, th)
    }
}

/// Fills a node's alpha0 symbols from its alpha free symbols.
///
/// Free layout: group-major, then `z_{y0}` ascending over `0..q`. The q
/// dependent symbols of each group (`z_{y0}` in `q..2q`) solve the group's
/// q nodal parity equations; the q x q system is a column-scaled
/// Vandermonde, identical across groups, so it is factored once.
pub fn complete_node(
    params: &CodeParams,
    node: NodeId,
    free: &[Fe],
) -> Result<NodeContent, CodecError> {
    if free.len() != params.alpha {
        return Err(CodecError::InvalidParameters(format!(
            "free symbol count {} != alpha = {}",
            free.len(),
            params.alpha
        )));
    }
    let q = params.q;
    let f = &params.field;
    let mut dep = Matrix::zeros(q, q);
    for ell in 0..q {
        for j in 0..q {
            dep[(ell, j)] = nodal_coeff(params, node, q + j, ell);
        }
    }
    // Distinct thetas make any q columns of the scaled Vandermonde
    // invertible; failure here means a broken construction, not bad data.
    let dep_inv = dep.inverse(f)?;

    let mut symbols = vec![0 as Fe; params.alpha0];
    let mut rhs = vec![0 as Fe; q];
    for g in 0..params.beta {
        let grp = GroupIndex { y0: node.y, rest: g };
        rhs.fill(0);
        for w in 0..q {
            let v = free[g * q + w];
            symbols[grp.plane(params, w).0] = v;
            if v != 0 {
                for ell in 0..q {
                    rhs[ell] ^= f.mul(nodal_coeff(params, node, w, ell), v);
                }
            }
        }
        let depv = dep_inv.mul_vec(f, &rhs);
        for (j, v) in depv.into_iter().enumerate() {
            symbols[grp.plane(params, q + j).0] = v;
        }
    }
    Ok(NodeContent { node, symbols })
}

/// The symbols at the canonical free positions, group-major then
/// `z_{y0}` ascending; inverse of [`complete_node`]'s layout.
pub fn extract_free(params: &CodeParams, content: &NodeContent) -> Vec<Fe> {
    let q = params.q;
    let mut out = Vec::with_capacity(params.alpha);
    for g in 0..params.beta {
        let grp = GroupIndex { y0: content.node.y, rest: g };
        for w in 0..q {
            out.push(content.symbols[grp.plane(params, w).0]);
        }
    }
    out
}

/// The transformed symbol B at `(node, z)`: the symbol coupled with its
/// companion, or the symbol itself when self-paired.
pub(crate) fn transformed(params: &CodeParams, cube: &DataCube, node: NodeId, z: PlaneId) -> Fe {
    let a = cube.get(params, node, z);
    let zy = params.plane_coord(z, node.y);
    if zy == node.x {
        return a;
    }
    let (cn, cz) = params.companion_coords(node, z);
    field::add(a, params.field.mul(params.u, cube.get(params, cn, cz)))
}

/// One unsatisfied parity equation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParityViolation {
    Plane {
        plane: PlaneId,
        ell: usize,
        residual: Fe,
    },
    Nodal {
        node: NodeId,
        group: GroupIndex,
        ell: usize,
        residual: Fe,
    },
}

/// Evaluates every plane parity equation (2q per plane, over transformed
/// symbols) and every nodal parity equation (q per group per node),
/// reporting each nonzero residual. Empty means the cube is a codeword.
pub fn is_codeword(params: &CodeParams, cube: &DataCube) -> Vec<ParityViolation> {
    let f = &params.field;
    let mut violations = Vec::new();
    let mut brow = vec![0 as Fe; params.n];
    for z in params.planes() {
        for node in params.nodes() {
            brow[params.node_index(node)] = transformed(params, cube, node, z);
        }
        for ell in 0..params.r {
            let mut acc = 0;
            for node in params.nodes() {
                let b = brow[params.node_index(node)];
                if b != 0 {
                    acc ^= f.mul(params.theta_entry(node, ell), b);
                }
            }
            if acc != 0 {
                violations.push(ParityViolation::Plane {
                    plane: z,
                    ell,
                    residual: acc,
                });
            }
        }
    }
    for node in params.nodes() {
        for g in 0..params.beta {
            let grp = GroupIndex { y0: node.y, rest: g };
            for ell in 0..params.q {
                let mut acc = 0;
                for w in 0..params.r {
                    let v = cube.get(params, node, grp.plane(params, w));
                    if v != 0 {
                        acc ^= f.mul(nodal_coeff(params, node, w, ell), v);
                    }
                }
                if acc != 0 {
                    violations.push(ParityViolation::Nodal {
                        node,
                        group: grp,
                        ell,
                        residual: acc,
                    });
                }
            }
        }
    }
    violations
}

/// Extends a pattern to exactly 2q nodes with the canonically smallest
/// non-erased nodes; their stored values are discarded and re-derived.
fn pad_pattern(params: &CodeParams, e: &ErasurePattern) -> Result<ErasurePattern, CodecError> {
    let mut nodes: Vec<NodeId> = e.iter().collect();
    for cand in params.nodes() {
        if nodes.len() == params.r {
            break;
        }
        if !e.contains(cand) {
            nodes.push(cand);
        }
    }
    Ok(ErasurePattern::new(params, nodes)?)
}

/// Recovers the contents of up to 2q erased nodes.
///
/// The pattern is padded to exactly 2q nodes, planes are bucketed by
/// intersection score, and stages run in increasing score. Within a stage
/// every plane's Vandermonde system is solved first; symbols are converted
/// back only after all solves, because pairs straddling two erased nodes
/// need both transformed values of the stage.
pub fn decode_erasures(
    params: &CodeParams,
    cube: &DataCube,
    erased: &ErasurePattern,
) -> Result<DataCube, CodecError> {
    if erased.len() > params.r {
        return Err(CodecError::TooManyErasures {
            got: erased.len(),
            max: params.r,
        });
    }
    if erased.is_empty() {
        return Ok(cube.clone());
    }
    let full = pad_pattern(params, erased)?;
    let e = full.as_slice();
    let f = &params.field;
    let u = params.u;

    // The plane system matrix is the same for every plane: Vandermonde on
    // the erased nodes' thetas. Invert once.
    let points: Vec<Fe> = e.iter().map(|&nd| params.theta(nd)).collect();
    let vinv = Matrix::vandermonde(f, &points, params.r).inverse(f)?;

    let mut buckets: Vec<Vec<PlaneId>> = vec![Vec::new(); params.t + 1];
    for z in params.planes() {
        buckets[params.intersection_score(&full, z)].push(z);
    }

    let mut out = cube.clone();
    // stage_of[entry]: 0 = known input, s+1 = recovered in the score-s
    // stage. Guards the staged-read invariant below.
    let mut stage_of = vec![0u16; params.n * params.alpha0];
    for &nd in e {
        let base = params.node_index(nd) * params.alpha0;
        stage_of[base..base + params.alpha0].fill(u16::MAX);
    }

    let mut rhs = vec![0 as Fe; params.r];
    for (s, planes) in buckets.iter().enumerate() {
        if planes.is_empty() {
            continue;
        }
        let mut solved: HashMap<PlaneId, Vec<Fe>> = HashMap::with_capacity(planes.len());
        for &z in planes {
            rhs.fill(0);
            for node in params.nodes() {
                if full.contains(node) {
                    continue;
                }
                let a = out.get(params, node, z);
                let zy = params.plane_coord(z, node.y);
                let b = if zy == node.x {
                    a
                } else {
                    let (cn, cz) = params.companion_coords(node, z);
                    debug_assert!(
                        (stage_of[params.node_index(cn) * params.alpha0 + cz.0] as usize) <= s,
                        "companion of an unerased symbol must be known or \
                         recovered in a lower-score stage"
                    );
                    field::add(a, f.mul(u, out.get(params, cn, cz)))
                };
                if b != 0 {
                    for (ell, slot) in rhs.iter_mut().enumerate() {
                        *slot ^= f.mul(params.theta_entry(node, ell), b);
                    }
                }
            }
            solved.insert(z, vinv.mul_vec(f, &rhs));
        }
        for (&z, bvals) in &solved {
            for (i, &node) in e.iter().enumerate() {
                let b = bvals[i];
                let zy = params.plane_coord(z, node.y);
                let a = if zy == node.x {
                    // Self-paired: the transformed symbol is the symbol.
                    b
                } else {
                    let (cn, cz) = params.companion_coords(node, z);
                    if !full.contains(cn) {
                        // Companion lives in a surviving node.
                        field::add(b, f.mul(u, out.get(params, cn, cz)))
                    } else {
                        // Companion erased too; its plane has the same
                        // score, so both transformed values are in hand.
                        let ci = e.binary_search(&cn).expect("companion in pattern");
                        let bc = solved.get(&cz).expect("companion plane shares the stage")[ci];
                        params.inverse_pair_transform(b, bc).0
                    }
                };
                out.set(params, node, z, a);
                stage_of[params.node_index(node) * params.alpha0 + z.0] = (s + 1) as u16;
            }
        }
    }
    Ok(out)
}

/// Encodes a k*alpha-symbol message into a full codeword stripe.
///
/// Systematic nodes carry the message in their free positions; column t
/// falls out of the erasure decoder, for which every plane of that
/// pattern has intersection score exactly 1.
pub fn encode(params: &CodeParams, msg: &Message) -> Result<DataCube, CodecError> {
    let expected = params.k * params.alpha;
    if msg.0.len() != expected {
        return Err(CodecError::BadMessageLength {
            got: msg.0.len(),
            expected,
        });
    }
    let mut cube = DataCube::zero(params);
    for (i, node) in params.systematic_nodes().enumerate() {
        let content = complete_node(params, node, &msg.0[i * params.alpha..(i + 1) * params.alpha])?;
        cube.node_symbols_mut(params, node).copy_from_slice(&content.symbols);
    }
    let parity = ErasurePattern::new(params, params.parity_nodes())?;
    decode_erasures(params, &cube, &parity)
}

/// Reads the message back out of a valid codeword: the free symbols of
/// the systematic nodes in canonical node order. Only systematic nodes
/// are touched.
pub fn decode_message(params: &CodeParams, cube: &DataCube) -> Message {
    let mut out = Vec::with_capacity(params.k * params.alpha);
    for node in params.systematic_nodes() {
        let content = NodeContent::from_cube(params, cube, node);
        out.extend(extract_free(params, &content));
    }
    Message(out)
}

/// How a derived code relates to its base instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `delta` systematic nodes pinned to zero and not stored.
    Shortened { delta: usize },
    /// `delta` column-t nodes never stored; they count against the
    /// erasure budget and are forced aloof during repair.
    Punctured { delta: usize },
}

/// Effective parameters and dropped-node bookkeeping of a shortened or
/// punctured code, with thin wrappers over the base codec.
#[derive(Debug, Clone)]
pub struct DerivedProfile {
    pub kind: ProfileKind,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub alpha: usize,
    pub beta: usize,
    pub dropped: Vec<NodeId>,
}

/// Derives the (n-Δ, k-Δ, d-Δ) shortened code: the first Δ systematic
/// nodes carry an all-zero message, making their whole contents zero, so
/// they need not be stored at all.
pub fn shorten_profile(params: &CodeParams, delta_s: usize) -> Result<DerivedProfile, CodecError> {
    if delta_s > params.k - 1 {
        return Err(CodecError::InvalidParameters(format!(
            "shortening depth {delta_s} out of range 0..={}",
            params.k - 1
        )));
    }
    Ok(DerivedProfile {
        kind: ProfileKind::Shortened { delta: delta_s },
        n: params.n - delta_s,
        k: params.k - delta_s,
        d: params.d - delta_s,
        alpha: params.alpha,
        beta: params.beta,
        dropped: params.systematic_nodes().take(delta_s).collect(),
    })
}

/// Derives the (n-Δ, k, d) punctured code: the last Δ nodes of column t
/// are treated as permanently erased.
pub fn puncture_profile(params: &CodeParams, delta_p: usize) -> Result<DerivedProfile, CodecError> {
    let max = params.n - params.d - 1;
    if delta_p > max {
        return Err(CodecError::InvalidParameters(format!(
            "puncturing depth {delta_p} out of range 0..={max}"
        )));
    }
    Ok(DerivedProfile {
        kind: ProfileKind::Punctured { delta: delta_p },
        n: params.n - delta_p,
        k: params.k,
        d: params.d,
        alpha: params.alpha,
        beta: params.beta,
        dropped: params.nodes().skip(params.n - delta_p).collect(),
    })
}

impl DerivedProfile {
    pub fn message_len(&self) -> usize {
        self.k * self.alpha
    }

    /// Encodes an effective-k message on the base code.
    pub fn encode(&self, params: &CodeParams, msg: &[Fe]) -> Result<DataCube, CodecError> {
        if msg.len() != self.message_len() {
            return Err(CodecError::BadMessageLength {
                got: msg.len(),
                expected: self.message_len(),
            });
        }
        match self.kind {
            ProfileKind::Shortened { delta } => {
                let mut full = vec![0 as Fe; delta * self.alpha];
                full.extend_from_slice(msg);
                encode(params, &Message(full))
            }
            ProfileKind::Punctured { .. } => encode(params, &Message(msg.to_vec())),
        }
    }

    /// Decodes with `extra` erasures on top of the profile's dropped
    /// nodes. Shortened drops are known zeros, not erasures; punctured
    /// drops spend erasure budget.
    pub fn decode_erasures(
        &self,
        params: &CodeParams,
        cube: &DataCube,
        extra: &ErasurePattern,
    ) -> Result<DataCube, CodecError> {
        match self.kind {
            ProfileKind::Shortened { .. } => {
                let mut c = cube.clone();
                for &nd in &self.dropped {
                    c.node_symbols_mut(params, nd).fill(0);
                }
                decode_erasures(params, &c, extra)
            }
            ProfileKind::Punctured { .. } => {
                let total = self.dropped.len() + extra.len();
                if total > params.r {
                    return Err(CodecError::TooManyErasures {
                        got: total,
                        max: params.r,
                    });
                }
                let all = ErasurePattern::new(
                    params,
                    self.dropped.iter().copied().chain(extra.iter()),
                )?;
                decode_erasures(params, cube, &all)
            }
        }
    }

    /// The effective-k message of a decoded cube.
    pub fn decode_message(&self, params: &CodeParams, cube: &DataCube) -> Vec<Fe> {
        let full = decode_message(params, cube);
        match self.kind {
            ProfileKind::Shortened { delta } => full.0[delta * self.alpha..].to_vec(),
            ProfileKind::Punctured { .. } => full.0,
        }
    }

    /// The aloof set to hand to repair planning: punctured nodes are
    /// forced aloof, so only q - Δp may be chosen freely.
    pub fn repair_aloof(
        &self,
        params: &CodeParams,
        extra: &[NodeId],
    ) -> Result<Vec<NodeId>, CodecError> {
        match self.kind {
            ProfileKind::Shortened { .. } => Ok(extra.to_vec()),
            ProfileKind::Punctured { .. } => {
                let mut aloof = self.dropped.clone();
                aloof.extend_from_slice(extra);
                if aloof.len() != params.q {
                    return Err(CodecError::InvalidParameters(format!(
                        "punctured repair needs exactly {} extra aloof nodes, got {}",
                        params.q - self.dropped.len(),
                        extra.len()
                    )));
                }
                Ok(aloof)
            }
        }
    }
}
