//! Exact stochastic-error analysis: per-routine fault algebra, Y-logical
//! weight enumerators, and protocol-level counting that yields exact
//! leading error coefficients.
//!
//! A fault at a T location acts as Pauli Y on its wire. One measurement
//! pass with column faults (a, b) has ancilla-branch operators
//! B₀ = Y(b)Y(a) = Y(e) and B₁ = (−1)^|a| Y(e)·H^{⊗n} with e = a⊕b, so the
//! accepted operator is (B₀ + B₁)/2. Protocols built from normal inner
//! codes reduce to exact integer dynamic programming over outer flag
//! vectors; hyperbolic checks are evaluated with the exact sparse
//! simulator, grouping fault patterns that induce the same accepted
//! operator and counting multiplicities.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::circuits::encoder;
use crate::error::Error;
use crate::exact::{
    apply_circuit, apply_pauli, basis_state, inner as state_dot, ExactMat, Scalar, SparseState,
};
use crate::f2core::{enum_budget, span_vectors, BitVector, Echelon};
use crate::inner::{CodeKind, CssCode};
use crate::pauli::{Gate, Pauli};
use crate::protocol::{CheckJob, Location, Protocol};

/// Outcome of one H-measurement routine under discrete faults.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Detected,
    Passed,
}

/// Classification of a fault pair (a, b) in one routine.
#[derive(Clone, Debug)]
pub struct RoutineOutcome {
    pub status: Status,
    /// Measurement-outcome flip (meaningful when Passed).
    pub flip: bool,
    /// Logical slots on which the residual Y(e) acts nontrivially.
    pub logical_mask: BitVector,
}

/// Classifies the fault pair: e = a ⊕ b escapes detection iff its syndrome
/// vanishes; the outcome flip is the parity of the first column.
pub fn routine_outcome(
    inner: &CssCode,
    a_bits: &BitVector,
    b_bits: &BitVector,
) -> Result<RoutineOutcome, Error> {
    if a_bits.len() != inner.n_inner || b_bits.len() != inner.n_inner {
        return Err(Error::IncompatibleCheck(format!(
            "fault columns must have length {}",
            inner.n_inner
        )));
    }
    let e = a_bits.xor(b_bits);
    if !inner.syndrome(&e).is_zero() {
        return Ok(RoutineOutcome {
            status: Status::Detected,
            flip: false,
            logical_mask: BitVector::zeros(inner.k_inner),
        });
    }
    let mut mask = BitVector::zeros(inner.k_inner);
    for slot in 0..inner.k_inner {
        let hit = e.dot(&inner.logical_x(slot).x.xor(&inner.logical_x(slot).z))
            || e.dot(&inner.logical_z(slot).x.xor(&inner.logical_z(slot).z));
        mask.set(slot, hit);
    }
    Ok(RoutineOutcome {
        status: Status::Passed,
        flip: a_bits.weight() % 2 == 1,
        logical_mask: mask,
    })
}

/// Number of weight-w vectors in span(S⊥) \ span(S).
pub fn logical_weight_count(code: &CssCode, w: usize) -> Result<u64, Error> {
    let perp = code.perp();
    let inside = Echelon::new(&code.stabilizers);
    let mut count = 0;
    for v in span_vectors(&perp, enum_budget())? {
        if v.weight() == w && !inside.contains(&v) {
            count += 1;
        }
    }
    Ok(count)
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut out = BigUint::one();
    for i in 0..k {
        out = out * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    out
}

/// Configurations of one pass with residual weight |e| = t and total fault
/// weight w at the given flip parity: support bits split two ways per
/// position (half of the 2^t splits per parity) and (w−t)/2 doubled
/// positions off the support.
fn pass_count(n: usize, t: usize, w: usize, flip: bool) -> BigUint {
    if w < t || (w - t) % 2 != 0 {
        return BigUint::zero();
    }
    let m = (w - t) / 2;
    if m > n - t {
        return BigUint::zero();
    }
    if t == 0 {
        if flip == (m % 2 == 1) {
            binomial(n as u64, m as u64)
        } else {
            BigUint::zero()
        }
    } else {
        BigUint::from(2u32).pow(t as u32 - 1) * binomial((n - t) as u64, m as u64)
    }
}

/// Per-check factor of the classical DP for a normal inner code: exact
/// counts of passed configurations by (weight, flip, logical mask), plus
/// the detected count per weight.
#[derive(Clone, Debug)]
pub struct TransferTable {
    pub n_inner: usize,
    pub k_inner: usize,
    /// passed[w] maps (flip, mask over logical slots) to a count.
    pub passed: Vec<HashMap<(bool, u64), BigUint>>,
    pub detected: Vec<BigUint>,
}

pub fn check_transfer_table(job: &CheckJob, w_max: usize) -> Result<TransferTable, Error> {
    let code = &job.inner;
    if code.kind != CodeKind::Normal {
        return Err(Error::IncompatibleCheck(format!(
            "transfer tables count flag flips; hyperbolic code {} needs the exact evaluator",
            code.name
        )));
    }
    let n = code.n_inner;
    let mut passed: Vec<HashMap<(bool, u64), BigUint>> = vec![HashMap::new(); w_max + 1];
    for e in span_vectors(&code.perp(), enum_budget())? {
        let t = e.weight();
        if t > w_max {
            continue;
        }
        let outcome = routine_outcome(code, &e, &BitVector::zeros(n))?;
        let mut mask = 0u64;
        for slot in 0..code.k_inner {
            if outcome.logical_mask.get(slot) {
                mask |= 1 << slot;
            }
        }
        for w in t..=w_max {
            for flip in [false, true] {
                let c = pass_count(n, t, w, flip);
                if !c.is_zero() {
                    *passed[w].entry((flip, mask)).or_insert_with(BigUint::zero) += c;
                }
            }
        }
    }
    let detected = (0..=w_max)
        .map(|w| {
            let total = binomial(2 * n as u64, w as u64);
            let ok: BigUint = passed[w].values().sum();
            total - ok
        })
        .collect();
    Ok(TransferTable { n_inner: n, k_inner: code.k_inner, passed, detected })
}

/// Exact per-weight accounting of all fault patterns of a protocol.
/// Entries are rationals because some accepted hyperbolic patterns pass
/// with probability 1/2 or leave a partially damaged output; on all-normal
/// protocols every entry is an integer.
#[derive(Clone, Debug)]
pub struct WeightTally {
    pub locations: u64,
    pub accepted_bad: Vec<BigRational>,
    pub accepted_good: Vec<BigRational>,
    pub rejected: Vec<BigRational>,
}

impl WeightTally {
    pub fn w_max(&self) -> usize {
        self.accepted_bad.len() - 1
    }

    /// Smallest weight with a nonzero accepted-bad coefficient.
    pub fn leading(&self) -> Option<(usize, BigRational)> {
        self.accepted_bad
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_zero())
            .map(|(w, c)| (w, c.clone()))
    }
}

/// Exact error accounting up to weight w_max: integer DP over outer flag
/// vectors for all-normal protocols, exact quantum evaluation otherwise.
pub fn error_polynomial(p: &Protocol, w_max: usize) -> Result<WeightTally, Error> {
    let all_normal = p
        .stages
        .iter()
        .flat_map(|s| s.jobs.iter())
        .all(|j| j.inner.kind == CodeKind::Normal);
    if all_normal {
        error_polynomial_classical(p, w_max)
    } else {
        error_polynomial_quantum(p, w_max)
    }
}

/// (d, accepted_bad(d)) with d certified equal to the claimed order.
pub fn leading_coefficient(p: &Protocol) -> Result<(usize, BigRational), Error> {
    let tally = error_polynomial(p, p.claimed_order)?;
    let (w, c) = tally
        .leading()
        .ok_or_else(|| Error::Simulation("no bad pattern up to the claimed order".into()))?;
    assert_eq!(w, p.claimed_order, "leading weight disagrees with the claimed order");
    Ok((w, c))
}

fn targets_mask(job: &CheckJob) -> u64 {
    job.targets.iter().fold(0u64, |m, &t| m | 1 << t)
}

fn error_polynomial_classical(p: &Protocol, w_max: usize) -> Result<WeightTally, Error> {
    let n_outer = p.n_outer;
    // state[flags][w] = number of weight-w fault patterns reaching `flags`.
    let mut state: Vec<Vec<BigUint>> =
        vec![vec![BigUint::zero(); w_max + 1]; 1 << n_outer];
    for flags in 0u64..1 << n_outer {
        let w = flags.count_ones() as usize;
        if w <= w_max {
            state[flags as usize][w] = BigUint::one();
        }
    }

    for stage in &p.stages {
        for job in &stage.jobs {
            let table = check_transfer_table(job, w_max)?;
            let tmask = targets_mask(job);
            let mut next: Vec<Vec<BigUint>> =
                vec![vec![BigUint::zero(); w_max + 1]; 1 << n_outer];
            for flags in 0..1usize << n_outer {
                for w in 0..=w_max {
                    let count = state[flags][w].clone();
                    if count.is_zero() {
                        continue;
                    }
                    for dw in 0..=w_max - w {
                        for ((flip, mask), c) in &table.passed[dw] {
                            // The observed outcome uses the flags entering
                            // the routine; a flipped product means rejection.
                            let observed =
                                ((flags as u64 & tmask).count_ones() % 2 == 1) ^ flip;
                            if observed {
                                continue;
                            }
                            let mut new_flags = flags as u64;
                            for (slot, &t) in job.targets.iter().enumerate() {
                                if mask >> slot & 1 == 1 {
                                    new_flags ^= 1 << t;
                                }
                            }
                            next[new_flags as usize][w + dw] += &count * c;
                        }
                    }
                }
            }
            state = next;
        }
    }

    let locations = p.resources().n_t;
    let mut bad = vec![BigRational::zero(); w_max + 1];
    let mut good = vec![BigRational::zero(); w_max + 1];
    for flags in 0..1usize << n_outer {
        for w in 0..=w_max {
            let c = BigRational::from_integer(state[flags][w].clone().into());
            if flags == 0 {
                good[w] += c;
            } else {
                bad[w] += c;
            }
        }
    }
    Ok(finish_tally(locations, bad, good))
}

fn finish_tally(
    locations: u64,
    bad: Vec<BigRational>,
    good: Vec<BigRational>,
) -> WeightTally {
    let rejected = (0..bad.len())
        .map(|w| {
            BigRational::from_integer(binomial(locations, w as u64).into())
                - &bad[w]
                - &good[w]
        })
        .collect();
    WeightTally { locations, accepted_bad: bad, accepted_good: good, rejected }
}

// ---------------------------------------------------------------------------
// Exact quantum evaluation of hyperbolic (and mixed) protocols.

/// Precomputed exact data for one check job shape.
struct JobEvaluator {
    n: usize,
    t: usize,
    mu_count: usize,
    passes: usize,
    w_gates: Vec<Gate>,
    k_gates: Vec<Gate>,
    /// Per target input: W·Enc(in ⊗ Bell ⊗ 0) — branch-0 reference state.
    chi0: Vec<SparseState>,
    /// Per target input: (H̄WH̄)·Enc(in ⊗ Bell ⊗ 0) — branch-1 reference.
    chi1: Vec<SparseState>,
    /// Enc(out ⊗ Bell ⊗ 0) for out < 2^t: the accepted-output frame with
    /// filler pairs verified.
    duals: Vec<SparseState>,
}

#[doc(hidden)]
pub fn parse_gate_list(s: &str) -> Vec<Gate> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let parts: Vec<&str> = t.split_whitespace().collect();
            let wire = |i: usize| parts[i].parse::<usize>().unwrap();
            match parts[0] {
                "CX" => Gate::CX(wire(1), wire(2)),
                "CZ" => Gate::CZ(wire(1), wire(2)),
                "H" => Gate::H(wire(1)),
                "S" => Gate::S(wire(1)),
                "Sdg" => Gate::Sdg(wire(1)),
                "X" => Gate::X(wire(1)),
                "Z" => Gate::Z(wire(1)),
                other => panic!("unknown gate {other}"),
            }
        })
        .collect()
}

impl JobEvaluator {
    fn new(job: &CheckJob) -> Result<Self, Error> {
        let code = &job.inner;
        let n = code.n_inner;
        let k = code.k_inner;
        let t = job.targets.len();
        let enc = encoder(code)?;
        let dec_gates = enc.decode_gates();
        let passes = job.passes();

        // Mid-circuit logical Hadamard on the odd member of each target
        // pair, realized as decode → H → encode.
        let mut w_gates = Vec::new();
        if passes == 2 {
            assert!(code.magic.p() == 0, "hyperbolic check on a mixed magic basis");
            w_gates.extend_from_slice(&dec_gates);
            if let Ok(s) = std::env::var(format!("DISTILLERY_MIXER_{}", code.name)) {
                w_gates.extend(parse_gate_list(&s));
            } else {
                w_gates.extend(crate::circuits::check_mixer(code));
            }
            for slot in (1..t).step_by(2) {
                w_gates.push(Gate::H(slot));
            }
            w_gates.extend_from_slice(&enc.gates);
        }
        let mut k_gates: Vec<Gate> = (0..n).map(Gate::H).collect();
        if passes == 2 {
            k_gates.extend_from_slice(&w_gates);
            k_gates.extend((0..n).map(Gate::H));
        }

        // Targets on wires 0..t, Bell fillers on t..k, |0⟩ checks. Fillers
        // are verified at the end: the accepted map projects them back onto
        // the same Bell product, so filler damage counts as a detection.
        let dressed = |label: u64| -> SparseState {
            let mut psi = basis_state(label);
            for pair in 0..(k - t) / 2 {
                let (w1, w2) = (t + 2 * pair, t + 2 * pair + 1);
                let mut bell = SparseState::new();
                bell.insert(0, Scalar::INV_SQRT2);
                bell.insert((1 << w1) | (1 << w2), Scalar::INV_SQRT2);
                psi = product_state(&psi, &bell);
            }
            apply_circuit(&psi, &enc.gates)
        };
        let mut chi0 = Vec::with_capacity(1 << t);
        let mut chi1 = Vec::with_capacity(1 << t);
        let mut duals = Vec::with_capacity(1 << t);
        for input in 0..1u64 << t {
            let psi0 = dressed(input);
            chi0.push(apply_circuit(&psi0, &w_gates));
            chi1.push(apply_circuit(&psi0, &k_gates));
            duals.push(psi0);
        }
        Ok(JobEvaluator { n, t, mu_count: 1, passes, w_gates, k_gates, chi0, chi1, duals })
    }

    /// Raw branch matrices per filler label for the residuals (e₁, e₂):
    /// branch 0 is Y(e₂)·W·Y(e₁), branch 1 is (−1)^{|e₁|}·Y(e₂)·K·Y(e₁)
    /// (flip signs enter separately).
    fn branch_matrices(&self, e1: &BitVector, e2: &BitVector) -> (Vec<ExactMat>, Vec<ExactMat>) {
        let q0 = Pauli::from_y(e1).conjugate_by(&self.w_gates);
        let p0 = Pauli::from_y(e2).mul(&q0);
        let q1 = Pauli::from_y(e1).conjugate_by(&self.k_gates);
        let p1 = Pauli::from_y(e2).mul(&q1);
        let sign1 = e1.weight() % 2 == 1;

        let dim = 1 << self.t;
        let mut b0 = vec![ExactMat::zeros(dim); self.mu_count];
        let mut b1 = vec![ExactMat::zeros(dim); self.mu_count];
        let p0_dag = p0.inverse();
        let p1_dag = p1.inverse();
        for mu in 0..self.mu_count {
            for out in 0..dim {
                let dual = &self.duals[mu * dim + out];
                let bra0 = apply_pauli(dual, &p0_dag);
                let bra1 = apply_pauli(dual, &p1_dag);
                for input in 0..dim {
                    b0[mu].set(out, input, state_dot(&bra0, &self.chi0[input]));
                    let mut amp = state_dot(&bra1, &self.chi1[input]);
                    if sign1 {
                        amp = amp.neg();
                    }
                    b1[mu].set(out, input, amp);
                }
            }
        }
        (b0, b1)
    }

    /// Accepted-operator Kraus pieces for flip parity f: (B₀ + (−1)^f B₁)/2.
    fn kraus(
        &self,
        b0: &[ExactMat],
        b1: &[ExactMat],
        parity: bool,
    ) -> Vec<(usize, ExactMat)> {
        let half = Scalar::dyadic(1, 2);
        let mut out = Vec::new();
        for mu in 0..self.mu_count {
            let dim = b0[mu].dim;
            let mut m = ExactMat::zeros(dim);
            let mut nonzero = false;
            for r in 0..dim {
                for c in 0..dim {
                    let one = b0[mu].get(r, c);
                    let two = b1[mu].get(r, c);
                    let v = if parity { one.sub(two) } else { one.add(two) }.mul(half);
                    if !v.is_zero() {
                        nonzero = true;
                    }
                    m.set(r, c, v);
                }
            }
            if nonzero {
                out.push((mu, m));
            }
        }
        out
    }
}

pub(crate) fn product_state(a: &SparseState, b: &SparseState) -> SparseState {
    let mut out = SparseState::with_capacity(a.len() * b.len());
    for (&ka, &va) in a {
        for (&kb, &vb) in b {
            out.insert(ka | kb, va.mul(vb));
        }
    }
    out
}

fn mat_key(maps: &[(usize, ExactMat)]) -> Vec<u8> {
    let mut best: Option<Vec<u8>> = None;
    for unit in 0..4u8 {
        let mut bytes = Vec::new();
        for (mu, m) in maps {
            bytes.extend_from_slice(&(*mu as u32).to_le_bytes());
            for s in &m.data {
                let v = s.times_i_pow(unit);
                bytes.extend_from_slice(&format!("{v:?}").into_bytes());
            }
        }
        if best.as_ref().is_none_or(|b| bytes < *b) {
            best = Some(bytes);
        }
    }
    best.unwrap()
}

/// One accepted-operator equivalence class of fault patterns on a check.
struct JobClass {
    kraus: Vec<(usize, ExactMat)>,
    counts: Vec<BigUint>,
}

struct JobTable {
    classes: Vec<JobClass>,
}

fn build_job_table(job: &CheckJob, w_max: usize) -> Result<JobTable, Error> {
    let eval = JobEvaluator::new(job)?;
    let n = eval.n;
    let budget = enum_budget();

    // Residual vectors by weight, pass 1 only meaningful for two passes.
    let mut residuals: Vec<BitVector> = vec![BitVector::zeros(n)];
    let e1_max = if eval.passes == 2 { w_max } else { 0 };
    let mut work = 0u64;
    let mut classes: Vec<JobClass> = Vec::new();
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();

    collect_by_weight(n, w_max, &mut residuals);
    for e1 in &residuals {
        if e1.weight() > e1_max {
            continue;
        }
        for e2 in &residuals {
            let base = e1.weight() + e2.weight();
            if base > w_max {
                continue;
            }
            work += 1;
            if work > budget {
                return Err(Error::BudgetExceeded { needed: work, budget });
            }
            let (b0, b1) = eval.branch_matrices(e1, e2);
            for parity in [false, true] {
                let maps = eval.kraus(&b0, &b1, parity);
                if maps.is_empty() {
                    continue;
                }
                let mut counts = vec![BigUint::zero(); w_max + 1];
                let mut any = false;
                if eval.passes == 1 {
                    for w in base..=w_max {
                        let c = pass_count(n, e2.weight(), w, parity);
                        if !c.is_zero() {
                            counts[w] += c;
                            any = true;
                        }
                    }
                } else {
                    for w1 in e1.weight()..=w_max {
                        for w2 in e2.weight()..=w_max - w1 {
                            for f1 in [false, true] {
                                let f2 = f1 ^ parity;
                                let c = pass_count(n, e1.weight(), w1, f1)
                                    * pass_count(n, e2.weight(), w2, f2);
                                if !c.is_zero() {
                                    counts[w1 + w2] += c;
                                    any = true;
                                }
                            }
                        }
                    }
                }
                if !any {
                    continue;
                }
                let key = mat_key(&maps);
                match index.get(&key) {
                    Some(&i) => {
                        for w in 0..=w_max {
                            let c = counts[w].clone();
                            classes[i].counts[w] += c;
                        }
                    }
                    None => {
                        index.insert(key, classes.len());
                        classes.push(JobClass { kraus: maps, counts });
                    }
                }
            }
        }
    }
    Ok(JobTable { classes })
}

fn collect_by_weight(n: usize, w_max: usize, out: &mut Vec<BitVector>) {
    // All vectors of weight 1..=w_max in increasing weight order.
    for w in 1..=w_max.min(n) {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            out.push(BitVector::from_support(n, &idx));
            let mut i = w;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if idx[i] < n - (w - i) {
                    idx[i] += 1;
                    for j in i + 1..w {
                        idx[j] = idx[j - 1] + 1;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
}

/// Transforms M → R†^{⊗n} M R^{⊗n} exactly, pairing the rotation factors
/// per wire so every entry stays in Q(√2, i). Row/column x then addresses
/// the |H⟩-frame basis: index 0 is the ideal all-|H⟩ state.
fn h_frame_paired(m: &ExactMat, n: usize) -> ExactMat {
    let dim = m.dim;
    let mut cur = m.clone();
    // Paired per-wire products conj(R[a, r]) R[b, c]:
    // cc = (2+√2)/4, ss = (2−√2)/4, cs = √2/4, with R[0,1] = −sin.
    let cc = Scalar::real_sqrt2(2, 1, 4);
    let ss = Scalar::real_sqrt2(2, -1, 4);
    let cs = Scalar::real_sqrt2(0, 1, 4);
    let entry_factor = |a: usize, x: usize| -> (bool, bool) {
        // (is_sin, negative): R[a, x] = cos if a == x else ±sin.
        if a == x {
            (false, false)
        } else {
            (true, a == 0) // R[0, 1] = −sin, R[1, 0] = +sin.
        }
    };
    for wire in 0..n {
        let bit = 1usize << wire;
        let mut next = ExactMat::zeros(dim);
        for r in 0..dim {
            let rx = (r & bit != 0) as usize;
            for c in 0..dim {
                let cx = (c & bit != 0) as usize;
                let mut acc = Scalar::ZERO;
                for a in 0..2usize {
                    for b in 0..2usize {
                        let rr = (r & !bit) | if a == 1 { bit } else { 0 };
                        let ccol = (c & !bit) | if b == 1 { bit } else { 0 };
                        let entry = cur.get(rr, ccol);
                        if entry.is_zero() {
                            continue;
                        }
                        let (s1, n1) = entry_factor(a, rx);
                        let (s2, n2) = entry_factor(b, cx);
                        let mut f = match (s1, s2) {
                            (false, false) => cc,
                            (true, true) => ss,
                            _ => cs,
                        };
                        if n1 ^ n2 {
                            f = f.neg();
                        }
                        acc = acc.add(entry.mul(f));
                    }
                }
                next.set(r, c, acc);
            }
        }
        cur = next;
    }
    cur
}

fn error_polynomial_quantum(p: &Protocol, w_max: usize) -> Result<WeightTally, Error> {
    let jobs: Vec<&CheckJob> = p.stages.iter().flat_map(|s| s.jobs.iter()).collect();
    // Tables cached by code name and target count.
    let mut tables: Vec<usize> = Vec::new();
    let mut built: Vec<JobTable> = Vec::new();
    let mut by_shape: HashMap<(String, usize), usize> = HashMap::new();
    for job in &jobs {
        let shape = (job.inner.name.clone(), job.targets.len());
        let idx = match by_shape.get(&shape) {
            Some(&i) => i,
            None => {
                let i = built.len();
                built.push(build_job_table(job, w_max)?);
                by_shape.insert(shape, i);
                i
            }
        };
        tables.push(idx);
    }

    let n_outer = p.n_outer;
    let dim = 1usize << n_outer;
    let mut bad = vec![Scalar::ZERO; w_max + 1];
    let mut good = vec![Scalar::ZERO; w_max + 1];

    // Depth-first over per-job class choices; branches track the filler
    // Kraus splits as separate matrices.
    struct Ctx<'a> {
        jobs: &'a [&'a CheckJob],
        tables: &'a [usize],
        built: &'a [JobTable],
        n_outer: usize,
        w_max: usize,
        bad: &'a mut [Scalar],
        good: &'a mut [Scalar],
    }
    fn descend(
        ctx: &mut Ctx,
        job_idx: usize,
        weight: usize,
        count: BigUint,
        branches: &[ExactMat],
    ) {
        if job_idx == ctx.jobs.len() {
            let cnt = Scalar::from_int(
                u128::try_from(&count).expect("pattern count overflow") as i128,
            );
            let mut frames = Vec::with_capacity(branches.len());
            for b in branches {
                frames.push(h_frame_paired(b, ctx.n_outer));
            }
            for flt in 0..1u64 << ctx.n_outer {
                let wf = flt.count_ones() as usize;
                if weight + wf > ctx.w_max {
                    continue;
                }
                let mut p_acc = Scalar::ZERO;
                let mut p_good = Scalar::ZERO;
                for g in &frames {
                    for x in 0..g.dim {
                        let v = g.get(x, flt as usize).norm_sqr();
                        p_acc = p_acc.add(v);
                        if x == 0 {
                            p_good = p_good.add(v);
                        }
                    }
                }
                let w = weight + wf;
                ctx.good[w] = ctx.good[w].add(cnt.mul(p_good));
                ctx.bad[w] = ctx.bad[w].add(cnt.mul(p_acc.sub(p_good)));
            }
            return;
        }
        let table = &ctx.built[ctx.tables[job_idx]];
        let wires = ctx.jobs[job_idx].targets.clone();
        for class in &table.classes {
            for w in 0..=ctx.w_max - weight {
                if class.counts[w].is_zero() {
                    continue;
                }
                let mut next = Vec::with_capacity(branches.len() * class.kraus.len());
                for b in branches {
                    for (_, m) in &class.kraus {
                        let applied = m.embed_mul(&wires, b);
                        if !applied.is_zero() {
                            next.push(applied);
                        }
                    }
                }
                if next.is_empty() {
                    continue;
                }
                descend(
                    ctx,
                    job_idx + 1,
                    weight + w,
                    &count * &class.counts[w],
                    &next,
                );
            }
        }
    }

    let mut ctx = Ctx {
        jobs: &jobs,
        tables: &tables,
        built: &built,
        n_outer,
        w_max,
        bad: &mut bad,
        good: &mut good,
    };
    descend(&mut ctx, 0, 0, BigUint::one(), &[ExactMat::identity(dim)]);

    let locations = p.resources().n_t;
    let to_rational = |v: &[Scalar]| -> Result<Vec<BigRational>, Error> {
        v.iter()
            .map(|s| {
                s.to_rational().ok_or_else(|| {
                    Error::Simulation("tally has an irrational component".into())
                })
            })
            .collect()
    };
    Ok(finish_tally(locations, to_rational(&bad)?, to_rational(&good)?))
}

/// Exact acceptance and correct-output probabilities of one explicit fault
/// pattern, indexed like `Protocol::fault_locations`.
pub fn pattern_outcome(
    p: &Protocol,
    faults: &BitVector,
) -> Result<(BigRational, BigRational), Error> {
    let locations = p.fault_locations();
    assert_eq!(faults.len(), locations.len());
    let n_outer = p.n_outer;

    // Split the pattern per job into (a, b) per pass plus input flips.
    let mut input_flips = 0u64;
    let mut per_job: HashMap<(usize, usize), Vec<(usize, bool, usize)>> = HashMap::new();
    for (i, loc) in locations.iter().enumerate() {
        if !faults.get(i) {
            continue;
        }
        match *loc {
            Location::Input { qubit } => input_flips ^= 1 << qubit,
            Location::Gate { stage, job, pass, dagger, wire } => {
                per_job.entry((stage, job)).or_default().push((pass, dagger, wire));
            }
        }
    }

    let mut branches = vec![ExactMat::identity(1 << n_outer)];
    for (s, stage) in p.stages.iter().enumerate() {
        for (j, job) in stage.jobs.iter().enumerate() {
            let eval = JobEvaluator::new(job)?;
            let n = eval.n;
            let mut a = vec![BitVector::zeros(n); eval.passes];
            let mut b = vec![BitVector::zeros(n); eval.passes];
            for &(pass, dagger, wire) in per_job.get(&(s, j)).map(|v| v.as_slice()).unwrap_or(&[])
            {
                if dagger {
                    b[pass].flip(wire);
                } else {
                    a[pass].flip(wire);
                }
            }
            let (e1, f1) = if eval.passes == 2 {
                (a[0].xor(&b[0]), a[0].weight() % 2 == 1)
            } else {
                (BitVector::zeros(n), false)
            };
            let last = eval.passes - 1;
            let e2 = a[last].xor(&b[last]);
            let f2 = a[last].weight() % 2 == 1;
            let (b0, b1) = eval.branch_matrices(&e1, &e2);
            let kraus = eval.kraus(&b0, &b1, f1 ^ f2);
            let mut next = Vec::new();
            for branch in &branches {
                for (_, m) in &kraus {
                    let applied = m.embed_mul(&job.targets, branch);
                    if !applied.is_zero() {
                        next.push(applied);
                    }
                }
            }
            branches = next;
            if branches.is_empty() {
                return Ok((BigRational::zero(), BigRational::zero()));
            }
        }
    }

    let mut p_acc = Scalar::ZERO;
    let mut p_good = Scalar::ZERO;
    for branch in &branches {
        let g = h_frame_paired(branch, n_outer);
        for x in 0..g.dim {
            let v = g.get(x, input_flips as usize).norm_sqr();
            p_acc = p_acc.add(v);
            if x == 0 {
                p_good = p_good.add(v);
            }
        }
    }
    let conv = |s: Scalar| {
        s.to_rational()
            .ok_or_else(|| Error::Simulation("pattern probability is irrational".into()))
    };
    Ok((conv(p_acc)?, conv(p_good)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::library_code;
    use crate::protocol::preset;
    use num_traits::ToPrimitive;

    fn bits(n: usize, support: &[usize]) -> BitVector {
        BitVector::from_support(n, support)
    }

    #[test]
    fn routine_outcomes_on_the_steane_code() {
        let steane = library_code("7_1_3").unwrap();
        let zero = BitVector::zeros(7);
        let clean = routine_outcome(&steane, &zero, &zero).unwrap();
        assert_eq!(clean.status, Status::Passed);
        assert!(!clean.flip && clean.logical_mask.is_zero());

        // Matching faults on one qubit: a pure measurement error.
        let one = bits(7, &[1]);
        let meas = routine_outcome(&steane, &one, &one).unwrap();
        assert_eq!(meas.status, Status::Passed);
        assert!(meas.flip && meas.logical_mask.is_zero());

        // A single unmatched fault is detected.
        let hit = routine_outcome(&steane, &one, &zero).unwrap();
        assert_eq!(hit.status, Status::Detected);

        // A weight-3 logical with both faults in the first column passes
        // with flip 0 and a logical error.
        let logical = bits(7, &[0, 1, 2]);
        assert!(steane.syndrome(&logical).is_zero());
        let log = routine_outcome(&steane, &bits(7, &[0, 1]), &bits(7, &[2])).unwrap();
        assert_eq!(log.status, Status::Passed);
        assert!(!log.flip);
        assert_eq!(log.logical_mask, bits(1, &[0]));
    }

    #[test]
    fn logical_weight_counts() {
        assert_eq!(logical_weight_count(&library_code("7_1_3").unwrap(), 3).unwrap(), 7);
        assert_eq!(logical_weight_count(&library_code("17_1_5").unwrap(), 5).unwrap(), 51);
        assert_eq!(logical_weight_count(&library_code("4_2_2").unwrap(), 2).unwrap(), 6);
    }

    #[test]
    fn steane_transfer_table() {
        let job = CheckJob::new(library_code("7_1_3").unwrap(), vec![0]).unwrap();
        let table = check_transfer_table(&job, 3).unwrap();
        assert_eq!(table.passed[0][&(false, 0)].to_u64().unwrap(), 1);
        // Weight 2: a measurement error on any of the 7 qubits.
        assert_eq!(table.passed[2][&(true, 0)].to_u64().unwrap(), 7);
        // Weight 3: 7 logicals × 4 even placements.
        assert_eq!(table.passed[3][&(false, 1)].to_u64().unwrap(), 28);
        // Sum rule per weight.
        for w in 0..=3 {
            let ok: BigUint = table.passed[w].values().sum();
            assert_eq!(ok + &table.detected[w], binomial(14, w as u64));
        }
    }

    #[test]
    fn four_of_eight_placements_pass_without_flip() {
        // For a fixed weight-3 logical support, exactly the even-|a| splits
        // pass with flip 0: C(3,0) + C(3,2) = 4 of the 8.
        let steane = library_code("7_1_3").unwrap();
        let support = [0usize, 1, 2];
        let mut flip0 = 0;
        for split in 0u32..8 {
            let a: Vec<usize> =
                support.iter().enumerate().filter(|(i, _)| split >> i & 1 == 1).map(|(_, &q)| q).collect();
            let b: Vec<usize> =
                support.iter().enumerate().filter(|(i, _)| split >> i & 1 == 0).map(|(_, &q)| q).collect();
            let out = routine_outcome(&steane, &bits(7, &a), &bits(7, &b)).unwrap();
            assert_eq!(out.status, Status::Passed);
            if !out.flip {
                flip0 += 1;
            }
        }
        assert_eq!(flip0, 4);
    }

    #[test]
    fn preset_7_has_35_bad_patterns_at_weight_3() {
        let tally = error_polynomial(&preset("7").unwrap(), 3).unwrap();
        assert_eq!(tally.accepted_bad[3], BigRational::from_integer(35.into()));
        assert!(tally.accepted_bad[0].is_zero());
        assert!(tally.accepted_bad[1].is_zero());
        assert!(tally.accepted_bad[2].is_zero());
        assert_eq!(tally.accepted_good[0], BigRational::from_integer(1.into()));
        // Weight-1 patterns: all 15 are rejected.
        assert_eq!(tally.rejected[1], BigRational::from_integer(15.into()));
    }

    #[test]
    fn preset_17_has_1411_bad_patterns_at_weight_5() {
        let tally = error_polynomial(&preset("17").unwrap(), 5).unwrap();
        for w in 0..5 {
            assert!(tally.accepted_bad[w].is_zero(), "weight {w}");
        }
        assert_eq!(tally.accepted_bad[5], BigRational::from_integer(1411.into()));
    }

    #[test]
    fn preset_4_has_45_weighted_bad_patterns_at_weight_2() {
        let tally = error_polynomial(&preset("4").unwrap(), 2).unwrap();
        assert!(tally.accepted_bad[0].is_zero());
        assert!(tally.accepted_bad[1].is_zero());
        assert_eq!(tally.accepted_bad[2], BigRational::from_integer(45.into()));
        assert_eq!(tally.accepted_good[0], BigRational::from_integer(1.into()));
    }

    #[test]
    fn quantum_and_classical_paths_agree_on_preset_7() {
        let p = preset("7").unwrap();
        let classical = error_polynomial_classical(&p, 3).unwrap();
        let quantum = error_polynomial_quantum(&p, 3).unwrap();
        assert_eq!(classical.accepted_bad, quantum.accepted_bad);
        assert_eq!(classical.accepted_good, quantum.accepted_good);
        assert_eq!(classical.rejected, quantum.rejected);
    }

    #[test]
    fn leading_coefficients_match_claimed_orders() {
        let (d, c) = leading_coefficient(&preset("7").unwrap()).unwrap();
        assert_eq!((d, c), (3, BigRational::from_integer(35.into())));
        let (d, c) = leading_coefficient(&preset("4").unwrap()).unwrap();
        assert_eq!((d, c), (2, BigRational::from_integer(45.into())));
    }

    #[test]
    fn clean_pattern_accepts_perfectly() {
        let p = preset("4").unwrap();
        let faults = BitVector::zeros(p.fault_locations().len());
        let (acc, good) = pattern_outcome(&p, &faults).unwrap();
        assert_eq!(acc, BigRational::from_integer(1.into()));
        assert_eq!(good, BigRational::from_integer(1.into()));
    }
}
