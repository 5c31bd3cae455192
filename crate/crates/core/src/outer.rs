//! Outer parity-check codes: sensitivity certification, the random
//! ensemble, the classical-transpose construction, and girth-graph codes
//! including the Petersen code.
//!
//! An outer code is an m × n_outer matrix M over F2 whose rows prescribe
//! which noisy magic states enter each measured Hadamard product. A code is
//! (d̃, s)-sensitive when every nonzero v with |v| ≤ d̃ violates at least s
//! checks; the weaker distillation condition asks 2|Mv| + |v| ≥ d for every
//! nonzero v.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Error;
use crate::f2core::{enum_budget, BitMatrix, BitVector};

/// Common parity of the check rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowParity {
    AllEven,
    AllOdd,
    Mixed,
}

/// An outer parity-check matrix with cached row statistics.
#[derive(Clone, Debug)]
pub struct OuterCode {
    pub m: BitMatrix,
    pub row_weights: Vec<usize>,
    pub parity: RowParity,
}

impl OuterCode {
    pub fn new(m: BitMatrix) -> Self {
        let row_weights: Vec<usize> = m.rows().iter().map(|r| r.weight()).collect();
        let parity = if row_weights.iter().all(|w| w % 2 == 0) {
            RowParity::AllEven
        } else if row_weights.iter().all(|w| w % 2 == 1) {
            RowParity::AllOdd
        } else {
            RowParity::Mixed
        };
        OuterCode { m, row_weights, parity }
    }

    /// Number of checks.
    pub fn num_checks(&self) -> usize {
        self.m.num_rows()
    }

    /// Number of outer qubits (matrix columns).
    pub fn n_outer(&self) -> usize {
        self.m.num_cols()
    }

    /// Violated checks for the error pattern `v`.
    pub fn syndrome(&self, v: &BitVector) -> BitVector {
        self.m.mul_vec(v)
    }

    /// Parses the text format: first line "m n_outer", then m rows of 0/1.
    pub fn from_file_str(text: &str) -> Result<Self, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty outer-code file".into()))?;
        let mut parts = header.split_whitespace();
        let m: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad outer-code header".into()))?;
        let n: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad outer-code header".into()))?;
        let mut rows = Vec::with_capacity(m);
        for line in lines {
            let row = BitVector::from_str01(line.trim())?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row has {} columns, header says {n}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        if rows.len() != m {
            return Err(Error::Parse(format!(
                "found {} rows, header says {m}",
                rows.len()
            )));
        }
        Ok(OuterCode::new(BitMatrix::from_rows_cols(rows, n)))
    }

    /// Serializes to the text format accepted by `from_file_str`.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{} {}\n", self.num_checks(), self.n_outer());
        for row in self.m.rows() {
            out.push_str(&row.to_string());
            out.push('\n');
        }
        out
    }
}

/// Result of a brute-force sensitivity scan.
#[derive(Clone, Debug)]
pub struct SensitivityReport {
    pub d_tilde: usize,
    /// min |Mv| over nonzero v with |v| ≤ d_tilde.
    pub s: usize,
    /// min 2|Mv| + |v| over all nonzero v.
    pub min_2mv_plus_v: usize,
    /// Achieves `s`.
    pub s_witness: BitVector,
    /// Achieves `min_2mv_plus_v`.
    pub min_witness: BitVector,
}

impl SensitivityReport {
    /// True iff the code is (d_tilde, s_required)-sensitive.
    pub fn is_sensitive(&self, s_required: usize) -> bool {
        self.s >= s_required
    }
}

/// Visits every weight-w subset of 0..n in lexicographic order.
fn for_each_combination<F: FnMut(&[usize]) -> bool>(n: usize, w: usize, f: &mut F) -> bool {
    if w > n {
        return true;
    }
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        if !f(&idx) {
            return false;
        }
        // Advance to the next combination.
        let mut i = w;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] < n - (w - i) {
                idx[i] += 1;
                for j in i + 1..w {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Brute-force sensitivity scan by increasing weight: reports the
/// sensitivity s at `d_tilde` and the global minimum of 2|Mv| + |v|.
pub fn sensitivity(code: &OuterCode, d_tilde: usize) -> Result<SensitivityReport, Error> {
    let n = code.n_outer();
    let budget = enum_budget();
    let mut evaluated: u64 = 0;

    let mut s = usize::MAX;
    let mut s_witness = BitVector::zeros(n);
    let mut best = usize::MAX;
    let mut min_witness = BitVector::zeros(n);

    for w in 1..=n {
        // 2|Mv| + |v| ≥ w for every weight-w vector, so once both scans are
        // settled there is nothing left to improve.
        if w > d_tilde && w >= best {
            break;
        }
        let mut over = None;
        for_each_combination(n, w, &mut |support| {
            evaluated += 1;
            if evaluated > budget {
                over = Some(evaluated);
                return false;
            }
            let v = BitVector::from_support(n, support);
            let mv = code.syndrome(&v).weight();
            if w <= d_tilde && mv < s {
                s = mv;
                s_witness = v.clone();
            }
            if 2 * mv + w < best {
                best = 2 * mv + w;
                min_witness = v;
            }
            true
        });
        if let Some(needed) = over {
            return Err(Error::BudgetExceeded { needed, budget });
        }
    }

    Ok(SensitivityReport {
        d_tilde,
        s: if d_tilde == 0 { 0 } else { s },
        min_2mv_plus_v: best,
        s_witness,
        min_witness,
    })
}

/// True iff 2|Mv| + |v| ≥ d for every nonzero v, with a witness vector
/// achieving the minimum.
pub fn distillation_condition(code: &OuterCode, d: usize) -> Result<(bool, BitVector), Error> {
    let report = sensitivity(code, 0)?;
    Ok((report.min_2mv_plus_v >= d, report.min_witness))
}

/// Outer code whose columns are the basis codewords v₁..v_k of a classical
/// [n, k, d] code together with w = v₁ + … + v_k. Rows always have even
/// weight, and the result is (k, d)-sensitive.
pub fn from_classical_transpose(codeword_basis: &BitMatrix) -> Result<OuterCode, Error> {
    let k = codeword_basis.num_rows();
    let n = codeword_basis.num_cols();
    let mut reduced = codeword_basis.clone();
    reduced.echelonize();
    if reduced.num_rows() != k {
        return Err(Error::InvalidOuter("codeword basis is linearly dependent".into()));
    }

    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = BitVector::zeros(k + 1);
        let mut sum = false;
        for j in 0..k {
            let bit = codeword_basis.get(j, i);
            row.set(j, bit);
            sum ^= bit;
        }
        row.set(k, sum);
        rows.push(row);
    }
    let code = OuterCode::new(BitMatrix::from_rows_cols(rows, k + 1));
    assert_eq!(code.parity, RowParity::AllEven);

    // Every proper column subset sums to a nonzero codeword, so the code is
    // (n_outer − 1, d)-sensitive for the classical distance d.
    let d = classical_distance(codeword_basis)?;
    let report = sensitivity(&code, k)?;
    assert!(report.s >= d, "transpose construction lost sensitivity");
    Ok(code)
}

/// Minimum weight of a nonzero codeword in the row space.
fn classical_distance(basis: &BitMatrix) -> Result<usize, Error> {
    let k = basis.num_rows() as u32;
    let budget = enum_budget();
    if (1u64 << k) > budget {
        return Err(Error::BudgetExceeded { needed: 1 << k, budget });
    }
    let mut best = usize::MAX;
    for bits in 1u64..(1 << k) {
        let w = BitVector::combine(basis.rows(), bits).weight();
        best = best.min(w);
    }
    Ok(best)
}

/// Undirected simple graph given by an edge list.
#[derive(Clone, Debug)]
pub struct Graph {
    pub num_vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, mut edges: Vec<(usize, usize)>) -> Self {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Graph { num_vertices, edges }
    }

    /// Parses an edge-list text: first line the vertex count, then one
    /// "u v" pair per line.
    pub fn from_edge_list(text: &str) -> Result<Self, Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let n: usize = lines
            .next()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::Parse("bad edge-list header".into()))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let u: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
            let v: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line {line:?}")))?;
            if u >= n || v >= n || u == v {
                return Err(Error::Parse(format!("edge ({u}, {v}) out of range")));
            }
            edges.push((u, v));
        }
        Ok(Graph::new(n, edges))
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.num_vertices];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    /// Length of the shortest cycle; None for forests.
    pub fn girth(&self) -> Option<usize> {
        let adj = self.adjacency();
        let mut best: Option<usize> = None;
        for start in 0..self.num_vertices {
            let mut dist = vec![usize::MAX; self.num_vertices];
            let mut via = vec![usize::MAX; self.num_vertices];
            dist[start] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, e) in &adj[u] {
                    if e == via[u] {
                        continue;
                    }
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        via[v] = e;
                        queue.push_back(v);
                    } else {
                        // Two BFS branches met: a cycle through `start`.
                        let len = dist[u] + dist[v] + 1;
                        if best.is_none_or(|b| len < b) {
                            best = Some(len);
                        }
                    }
                }
            }
        }
        best
    }

    /// The Petersen graph: outer 5-ring, spokes, inner pentagram.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((i, 5 + i));
            edges.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::new(10, edges)
    }

    /// The cycle graph C_n.
    pub fn cycle(n: usize) -> Self {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }
}

/// Outer code from a w-regular graph: vertices become checks, edges become
/// bits, so every bit sits in exactly two checks. Requires girth > d_tilde,
/// which makes the code (d_tilde, 2)-sensitive.
pub fn from_graph(graph: &Graph, d_tilde: usize) -> Result<OuterCode, Error> {
    let degrees = {
        let mut deg = vec![0usize; graph.num_vertices];
        for &(u, v) in &graph.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    };
    let w = *degrees.first().ok_or_else(|| Error::InvalidOuter("empty graph".into()))?;
    if degrees.iter().any(|&d| d != w) {
        return Err(Error::InvalidOuter("graph is not regular".into()));
    }
    match graph.girth() {
        Some(g) if g <= d_tilde => {
            return Err(Error::InvalidOuter(format!(
                "girth {g} is not greater than requested d̃ = {d_tilde}"
            )))
        }
        _ => {}
    }

    let n_outer = graph.edges.len();
    let mut rows = vec![BitVector::zeros(n_outer); graph.num_vertices];
    for (e, &(u, v)) in graph.edges.iter().enumerate() {
        rows[u].set(e, true);
        rows[v].set(e, true);
    }
    Ok(OuterCode::new(BitMatrix::from_rows_cols(rows, n_outer)))
}

/// The Petersen outer code: 10 weight-3 checks on 15 bits, (4, 2)-sensitive.
pub fn petersen_code() -> OuterCode {
    from_graph(&Graph::petersen(), 4).expect("Petersen graph has girth 5")
}

/// m i.i.d. uniform rows from the requested parity class (Mixed means
/// unconstrained). Deterministic given the seed.
pub fn sample_random_outer(m: usize, n_outer: usize, parity: RowParity, seed: u64) -> OuterCode {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = BitVector::zeros(n_outer);
        let mut acc = false;
        for i in 0..n_outer {
            let bit = rng.gen::<bool>();
            row.set(i, bit);
            acc ^= bit;
        }
        // Fixing the last bit maps the uniform distribution onto the parity
        // class uniformly.
        match parity {
            RowParity::Mixed => {}
            RowParity::AllEven => row.set(n_outer - 1, row.get(n_outer - 1) ^ acc),
            RowParity::AllOdd => row.set(n_outer - 1, row.get(n_outer - 1) ^ acc ^ true),
        }
        rows.push(row);
    }
    OuterCode::new(BitMatrix::from_rows_cols(rows, n_outer))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section632_code() -> OuterCode {
        OuterCode::new(BitMatrix::from_str01("1110\n1101\n1011\n0111").unwrap())
    }

    #[test]
    fn petersen_graph_shape() {
        let g = Graph::petersen();
        assert_eq!(g.num_vertices, 10);
        assert_eq!(g.edges.len(), 15);
        assert_eq!(g.girth(), Some(5));
    }

    #[test]
    fn petersen_code_is_4_2_sensitive() {
        let code = petersen_code();
        assert_eq!(code.num_checks(), 10);
        assert_eq!(code.n_outer(), 15);
        assert!(code.row_weights.iter().all(|&w| w == 3));
        // m = n_outer · s / w with column weight s = 2.
        assert_eq!(code.num_checks(), code.n_outer() * 2 / 3);

        let report = sensitivity(&code, 4).unwrap();
        assert_eq!(report.s, 2);
        assert!(report.is_sensitive(2));
        let v = &report.s_witness;
        assert!(!v.is_zero() && v.weight() <= 4);
        assert_eq!(code.syndrome(v).weight(), 2);
    }

    #[test]
    fn sensitivity_is_antitone_in_d_tilde() {
        let code = petersen_code();
        let mut prev = usize::MAX;
        for dt in 1..=5 {
            let s = sensitivity(&code, dt).unwrap().s;
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn weight_three_checks_reach_fifth_order() {
        let code = section632_code();
        let report = sensitivity(&code, 4).unwrap();
        assert!(!report.is_sensitive(2), "a weight-3 input flips only one check");
        assert_eq!(report.min_2mv_plus_v, 5);
        let v = &report.min_witness;
        assert_eq!(2 * code.syndrome(v).weight() + v.weight(), 5);

        let (ok, _) = distillation_condition(&code, 5).unwrap();
        assert!(ok);
        let (ok6, witness) = distillation_condition(&code, 6).unwrap();
        assert!(!ok6);
        assert!(2 * code.syndrome(&witness).weight() + witness.weight() < 6);
    }

    #[test]
    fn trivial_and_degenerate_conditions() {
        let single = OuterCode::new(BitMatrix::from_str01("1").unwrap());
        let (ok, v) = distillation_condition(&single, 3).unwrap();
        assert!(ok);
        assert_eq!(v.weight(), 1);

        let zero = OuterCode::new(BitMatrix::from_str01("000").unwrap());
        let (ok, witness) = distillation_condition(&zero, 2).unwrap();
        assert!(!ok);
        assert_eq!(witness.weight(), 1);
    }

    #[test]
    fn transpose_of_repetition_code() {
        let basis = BitMatrix::from_str01("111").unwrap();
        let code = from_classical_transpose(&basis).unwrap();
        assert_eq!((code.num_checks(), code.n_outer()), (3, 2));
        assert_eq!(code.parity, RowParity::AllEven);
        assert!(code.row_weights.iter().all(|&w| w == 2));
        for support in [&[0usize][..], &[1]] {
            let v = BitVector::from_support(2, support);
            assert_eq!(code.syndrome(&v).weight(), 3);
        }
        // The all-ones v sums every column to zero, but it has weight n_outer.
        let all = BitVector::from_support(2, &[0, 1]);
        assert!(code.syndrome(&all).is_zero());
    }

    #[test]
    fn transpose_of_even_weight_code() {
        let basis = BitMatrix::from_str01("1100\n0110\n0011").unwrap();
        let code = from_classical_transpose(&basis).unwrap();
        assert_eq!((code.num_checks(), code.n_outer()), (4, 4));
        assert_eq!(code.parity, RowParity::AllEven);
        let report = sensitivity(&code, 3).unwrap();
        assert!(report.is_sensitive(2));
    }

    #[test]
    fn transpose_rejects_dependent_basis() {
        let basis = BitMatrix::from_str01("110\n011\n101").unwrap();
        assert!(matches!(
            from_classical_transpose(&basis),
            Err(Error::InvalidOuter(_))
        ));
    }

    #[test]
    fn ring_of_six_repetition_checks() {
        let g = Graph::cycle(6);
        assert_eq!(g.girth(), Some(6));
        let code = from_graph(&g, 5).unwrap();
        assert_eq!((code.num_checks(), code.n_outer()), (6, 6));
        for i in 0..6 {
            let v = BitVector::from_support(6, &[i]);
            assert_eq!(code.syndrome(&v).weight(), 2);
        }
        assert!(from_graph(&g, 6).is_err());
    }

    #[test]
    fn graph_codes_reject_irregular_graphs() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)]);
        assert!(matches!(from_graph(&g, 1), Err(Error::InvalidOuter(_))));
        assert_eq!(g.girth(), None);
    }

    #[test]
    fn random_rows_match_requested_parity() {
        for (parity, odd) in [(RowParity::AllEven, 0), (RowParity::AllOdd, 1)] {
            let code = sample_random_outer(50, 13, parity, 7);
            assert!(code.row_weights.iter().all(|w| w % 2 == odd));
            assert_eq!(code.parity, parity);
        }
        let a = sample_random_outer(8, 12, RowParity::AllEven, 123);
        let b = sample_random_outer(8, 12, RowParity::AllEven, 123);
        assert_eq!(a.m.rows(), b.m.rows());
    }

    #[test]
    fn random_syndrome_bits_are_balanced() {
        // For fixed v with 0 < |v| < n_outer, each check bit of Mv is an XOR
        // of a proper subset of the (conditioned-parity) uniform row, hence
        // Bernoulli(1/2).
        let v = BitVector::from_support(12, &[0, 2, 5]);
        let mut ones = 0usize;
        let total = 4000;
        let code = sample_random_outer(total, 12, RowParity::AllEven, 99);
        for row in code.m.rows() {
            if row.dot(&v) {
                ones += 1;
            }
        }
        let dev = (ones as f64 - total as f64 / 2.0).abs();
        assert!(dev < 4.0 * (total as f64 / 4.0).sqrt(), "ones = {ones}");
    }

    #[test]
    fn random_even_codes_usually_stay_sensitive() {
        // 24 even checks on 12 bits: s at d̃ = 11 should almost always be ≥ 1.
        let mut good = 0;
        for seed in 0..40 {
            let code = sample_random_outer(24, 12, RowParity::AllEven, seed);
            if sensitivity(&code, 11).unwrap().s >= 1 {
                good += 1;
            }
        }
        assert!(good >= 38, "only {good}/40 sensitive");
    }

    #[test]
    fn file_format_round_trip() {
        let code = petersen_code();
        let text = code.to_file_string();
        let back = OuterCode::from_file_str(&text).unwrap();
        assert_eq!(back.m.rows(), code.m.rows());
        assert!(OuterCode::from_file_str("2 3\n101\n").is_err());
        assert!(OuterCode::from_file_str("1 3\n10\n").is_err());
    }
}
