//! Inner codes: weakly self-dual CSS codes built from self-orthogonal
//! F2 row spaces.
//!
//! A self-orthogonal matrix S yields a CSS code with stabilizers X(s), Z(s)
//! for each row s. Logical operators are assigned from a magic basis of
//! S⊥/S: normal slots carry X̃ = X(v), Z̃ = Z(v); hyperbolic pairs carry the
//! crossed assignment, so transversal Hadamard acts as logical H on normal
//! slots and as a pairwise swap on hyperbolic pairs. The module also ships
//! the code library, puncturing, the Majorana lift, and the random ensemble
//! with its existence bound.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Error;
use crate::f2core::{enum_budget, min_weight_coset, BitMatrix, BitVector, Echelon};
use crate::forms::{magic_basis, MagicBasis};
use crate::pauli::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Normal,
    Hyperbolic,
}

/// A weakly self-dual CSS code with magic-basis logicals.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub name: String,
    pub stabilizers: BitMatrix,
    pub magic: MagicBasis,
    pub n_inner: usize,
    pub k_inner: usize,
    pub distance: usize,
    pub kind: CodeKind,
}

impl CssCode {
    pub fn rank(&self) -> usize {
        self.stabilizers.num_rows()
    }

    /// X-type logical representative of a slot.
    pub fn logical_x(&self, slot: usize) -> Pauli {
        let p = self.magic.p();
        if slot < p {
            Pauli::from_x(&self.magic.normal_vectors[slot])
        } else {
            let j = slot - p;
            let lead = &self.magic.hyperbolic_vectors[j & !1];
            if j % 2 == 0 {
                Pauli::from_x(lead)
            } else {
                Pauli::from_z(lead)
            }
        }
    }

    /// Z-type logical representative of a slot.
    pub fn logical_z(&self, slot: usize) -> Pauli {
        let p = self.magic.p();
        if slot < p {
            Pauli::from_z(&self.magic.normal_vectors[slot])
        } else {
            let j = slot - p;
            let trail = &self.magic.hyperbolic_vectors[(j & !1) + 1];
            if j % 2 == 0 {
                Pauli::from_z(trail)
            } else {
                Pauli::from_x(trail)
            }
        }
    }

    /// Stabilizer generators as signed Paulis: X(s) rows then Z(s) rows.
    pub fn stabilizer_paulis(&self) -> Vec<Pauli> {
        let mut out = Vec::new();
        for s in self.stabilizers.rows() {
            out.push(Pauli::from_x(s));
        }
        for s in self.stabilizers.rows() {
            out.push(Pauli::from_z(s));
        }
        out
    }

    /// Basis of S⊥ (contains the stabilizer rows).
    pub fn perp(&self) -> BitMatrix {
        if self.stabilizers.num_rows() == 0 {
            BitMatrix::identity(self.n_inner)
        } else {
            self.stabilizers.orthogonal_complement()
        }
    }

    /// Syndrome of a Y-type error support against the stabilizer rows.
    pub fn syndrome(&self, e: &BitVector) -> BitVector {
        let mut s = BitVector::zeros(self.rank());
        for (i, row) in self.stabilizers.rows().iter().enumerate() {
            s.set(i, row.dot(e));
        }
        s
    }
}

/// Certifies min weight over S⊥ \ S.
fn certify_distance(stabilizers: &BitMatrix, n: usize) -> Result<usize, Error> {
    let perp = if stabilizers.num_rows() == 0 {
        BitMatrix::identity(n)
    } else {
        stabilizers.orthogonal_complement()
    };
    let (d, _) = min_weight_coset(&perp, stabilizers, enum_budget())?
        .ok_or_else(|| Error::InvalidCode("no logical operators: k = 0".into()))?;
    Ok(d)
}

/// Builds the CSS code of a self-orthogonal row space.
pub fn from_self_orthogonal(rows: &BitMatrix, name: &str) -> Result<CssCode, Error> {
    let n = rows.num_cols();
    let mut stabilizers = rows.clone();
    stabilizers.echelonize();
    for i in 0..stabilizers.num_rows() {
        for j in i..stabilizers.num_rows() {
            if stabilizers.row(i).dot(stabilizers.row(j)) {
                return Err(Error::NotSelfOrthogonal(i, j));
            }
        }
    }
    let magic = magic_basis(&stabilizers)?;
    let k_inner = n - 2 * stabilizers.num_rows();
    debug_assert_eq!(k_inner, magic.p() + magic.q());
    let distance = certify_distance(&stabilizers, n)?;
    let kind = if magic.q() == 0 { CodeKind::Normal } else { CodeKind::Hyperbolic };
    Ok(CssCode {
        name: name.to_string(),
        stabilizers,
        magic,
        n_inner: n,
        k_inner,
        distance,
        kind,
    })
}

/// Structured result of the four verification checks.
#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks self-orthogonality, canonical logical commutation, the
/// transversal-Hadamard logical action, and the declared distance.
pub fn verify_code(code: &CssCode) -> VerificationReport {
    let mut report = VerificationReport::default();
    let s = &code.stabilizers;
    for i in 0..s.num_rows() {
        for j in i..s.num_rows() {
            if s.row(i).dot(s.row(j)) {
                report.failures.push(format!("stabilizer rows {i} and {j} overlap oddly"));
            }
        }
    }

    let k = code.k_inner;
    for a in 0..k {
        for b in 0..k {
            let want = a == b;
            if code.logical_x(a).commutes_with(&code.logical_z(b)) == want {
                report.failures.push(format!("logical commutation failed at slots {a},{b}"));
            }
            if a < b
                && (!code.logical_x(a).commutes_with(&code.logical_x(b))
                    || !code.logical_z(a).commutes_with(&code.logical_z(b)))
            {
                report.failures.push(format!("same-type logicals {a},{b} anticommute"));
            }
        }
    }
    for p in [true, false] {
        for a in 0..k {
            let l = if p { code.logical_x(a) } else { code.logical_z(a) };
            if code.stabilizer_paulis().iter().any(|g| !l.commutes_with(g)) {
                report.failures.push(format!("logical at slot {a} leaves the normalizer"));
            }
        }
    }

    // Transversal H maps X(v) ↔ Z(v); the induced slot permutation must be
    // H on normal slots and a swap on each hyperbolic pair, modulo S.
    let ech = Echelon::new(s);
    let reduce = |p: &Pauli| (ech.reduce(&p.x), ech.reduce(&p.z));
    let h_image = |p: &Pauli| Pauli { phase: p.phase, x: p.z.clone(), z: p.x.clone() };
    for slot in 0..k {
        let (expect_x, expect_z) = expected_h_action(code, slot);
        if reduce(&h_image(&code.logical_x(slot))) != reduce(&expect_x)
            || reduce(&h_image(&code.logical_z(slot))) != reduce(&expect_z)
        {
            report
                .failures
                .push(format!("transversal H acts incorrectly on slot {slot}"));
        }
    }

    match certify_distance(s, code.n_inner) {
        Ok(d) if d == code.distance => {}
        Ok(d) => report
            .failures
            .push(format!("distance is {d}, declared {}", code.distance)),
        Err(e) => report.failures.push(format!("distance certification failed: {e}")),
    }
    report
}

/// Image of a slot's (X̃, Z̃) pair under the Theorem-2 action.
fn expected_h_action(code: &CssCode, slot: usize) -> (Pauli, Pauli) {
    let p = code.magic.p();
    if slot < p {
        (code.logical_z(slot), code.logical_x(slot))
    } else {
        let j = slot - p;
        let partner = p + (j ^ 1);
        (code.logical_x(partner), code.logical_z(partner))
    }
}

/// Removes one qubit and the stabilizer generator pair supported on it.
pub fn puncture(code: &CssCode, qubit: usize) -> Result<CssCode, Error> {
    if qubit >= code.n_inner {
        return Err(Error::InvalidQubit(qubit));
    }
    let mut rows: Vec<BitVector> = code.stabilizers.rows().to_vec();
    let pivot = rows.iter().position(|r| r.get(qubit));
    let Some(pivot) = pivot else {
        return Err(Error::InvalidQubit(qubit));
    };
    let pivot_row = rows.remove(pivot);
    for r in rows.iter_mut() {
        if r.get(qubit) {
            r.xor_assign(&pivot_row);
        }
    }
    let shortened: Vec<BitVector> = rows.iter().map(|r| r.delete(qubit)).collect();
    let name = format!("{}/punctured{}", code.name, qubit);
    let new = from_self_orthogonal(&BitMatrix::from_rows_cols(shortened, code.n_inner - 1), &name)?;
    if new.k_inner != code.k_inner + 1 {
        return Err(Error::InvalidCode(format!(
            "puncturing produced k = {}, expected {}",
            new.k_inner,
            code.k_inner + 1
        )));
    }
    if new.distance + 1 < code.distance {
        return Err(Error::InvalidCode(format!(
            "puncturing dropped distance to {} from {}",
            new.distance, code.distance
        )));
    }
    Ok(new)
}

/// Lifts an [[n,k,d]] stabilizer code to a [[4n,2k,2d]] weakly self-dual
/// CSS code via four Majorana modes per qubit: X ↦ modes {0,1}, Y ↦ {0,2},
/// Z ↦ {0,3}, plus the quartic row on each block.
pub fn majorana_lift(stabilizers: &[Pauli], name: &str) -> Result<CssCode, Error> {
    let n = stabilizers.first().map(Pauli::len).unwrap_or(1);
    for (i, a) in stabilizers.iter().enumerate() {
        for b in &stabilizers[i + 1..] {
            if !a.commutes_with(b) {
                return Err(Error::InvalidCode("input stabilizers do not commute".into()));
            }
        }
    }
    let mut rows: Vec<BitVector> = Vec::new();
    for q in 0..n {
        rows.push(BitVector::from_support(4 * n, &[4 * q, 4 * q + 1, 4 * q + 2, 4 * q + 3]));
    }
    for p in stabilizers {
        let mut row = BitVector::zeros(4 * n);
        for q in 0..n {
            let offset = match p.letter(q) {
                0 => continue,
                1 => 1, // X
                3 => 2, // Y
                2 => 3, // Z
                _ => unreachable!(),
            };
            row.set(4 * q, true);
            row.set(4 * q + offset, true);
        }
        rows.push(row);
    }
    from_self_orthogonal(&BitMatrix::from_rows_cols(rows, 4 * n), name)
}

/// Samples a self-orthogonal c×n matrix: first row all ones, later rows
/// uniform over the orthogonal complement of the prefix.
pub fn sample_random_inner(n: usize, c: usize, seed: u64) -> Result<BitMatrix, Error> {
    if n % 2 != 0 {
        return Err(Error::InvalidCode("n must be even for the all-ones row".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut rows = vec![BitVector::from_support(n, &(0..n).collect::<Vec<_>>())];
    while rows.len() < c {
        let kernel = BitMatrix::from_rows(rows.clone()).kernel();
        let mut v = BitVector::zeros(n);
        for b in kernel.rows() {
            if rng.gen() {
                v.xor_assign(b);
            }
        }
        // Orthogonality to the all-ones row forces even weight, hence v ⊥ v.
        debug_assert!(!v.dot(&v));
        rows.push(v);
    }
    Ok(BitMatrix::from_rows_cols(rows, n))
}

/// First-moment existence bound (2^{−n+c+1} + 2^{−c+1}) Σ_{w=1..d} C(n,w).
pub fn ncd_bound(n: u64, c: u64, d: u64) -> f64 {
    let r = ncd_bound_exact(n, c, d);
    rational_to_f64(&r)
}

/// The same bound in exact rational arithmetic.
pub fn ncd_bound_exact(n: u64, c: u64, d: u64) -> BigRational {
    let mut sum = BigUint::zero();
    for w in 1..=d.min(n) {
        sum += binomial(n, w);
    }
    let two = BigUint::from(2u32);
    let factor = BigRational::new(two.pow((c + 1) as u32).into(), two.pow(n as u32).into())
        + BigRational::new(BigUint::one().into(), two.pow((c - 1) as u32).into());
    factor * BigRational::from_integer(sum.into())
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Extended Golay [24,12,8] generator matrix [I | B] with B the bordered
/// quadratic-residue circulant mod 11.
pub fn extended_golay() -> BitMatrix {
    const QR11: [usize; 6] = [0, 1, 3, 4, 5, 9];
    let mut rows = Vec::new();
    for i in 0..12 {
        let mut r = BitVector::zeros(24);
        r.set(i, true);
        if i < 11 {
            for &q in &QR11 {
                r.set(12 + (q + i) % 11, true);
            }
            r.set(23, true);
        } else {
            for j in 0..11 {
                r.set(12 + j, true);
            }
        }
        rows.push(r);
    }
    BitMatrix::from_rows(rows)
}

/// Shortens a classical code at a bit: keep codewords that vanish there,
/// then delete the bit.
pub fn shorten_classical(basis: &BitMatrix, bit: usize) -> BitMatrix {
    let mut rows: Vec<BitVector> = basis.rows().to_vec();
    if let Some(pivot) = rows.iter().position(|r| r.get(bit)) {
        let pivot_row = rows.remove(pivot);
        for r in rows.iter_mut() {
            if r.get(bit) {
                r.xor_assign(&pivot_row);
            }
        }
    }
    let n = basis.num_cols();
    BitMatrix::from_rows_cols(rows.iter().map(|r| r.delete(bit)).collect(), n - 1)
}

const LIBRARY_FILES: [&str; 5] = [
    include_str!("../codes/4_2_2.txt"),
    include_str!("../codes/7_1_3.txt"),
    include_str!("../codes/16_6_4.txt"),
    include_str!("../codes/17_1_5.txt"),
    include_str!("../codes/21_3_5.txt"),
];

/// Parses the code file format: "n k d kind" then stabilizer rows.
pub fn parse_code_file(text: &str, name: &str) -> Result<CssCode, Error> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty code file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::Parse(format!("bad code header: {header}")));
    }
    let n: usize = fields[0].parse().map_err(|_| Error::Parse(header.into()))?;
    let k: usize = fields[1].parse().map_err(|_| Error::Parse(header.into()))?;
    let d: usize = fields[2].parse().map_err(|_| Error::Parse(header.into()))?;
    let kind = match fields[3] {
        "normal" => CodeKind::Normal,
        "hyperbolic" => CodeKind::Hyperbolic,
        other => return Err(Error::Parse(format!("unknown kind: {other}"))),
    };
    let rows: Result<Vec<BitVector>, Error> = lines.map(BitVector::from_str01).collect();
    let code = from_self_orthogonal(&BitMatrix::from_rows_cols(rows?, n), name)?;
    if code.n_inner != n || code.k_inner != k || code.distance != d || code.kind != kind {
        return Err(Error::InvalidCode(format!(
            "{name}: built [[{},{},{}]] {:?}, declared [[{n},{k},{d}]] {kind:?}",
            code.n_inner, code.k_inner, code.distance, code.kind
        )));
    }
    Ok(code)
}

/// Builds [[23,1,7]] by shortening the extended Golay code once.
pub fn golay_23() -> Result<CssCode, Error> {
    let s = shorten_classical(&extended_golay(), 0);
    from_self_orthogonal(&s, "23_1_7")
}

/// Builds [[16,2,4]] by promoting two hyperbolic pairs of [[16,6,4]] to
/// stabilizers: the leading vectors of pairs (3,4) and (5,6) join S.
pub fn hadamard_16_2_4() -> Result<CssCode, Error> {
    let base = parse_code_file(LIBRARY_FILES[2], "16_6_4")?;
    let mut rows: Vec<BitVector> = base.stabilizers.rows().to_vec();
    rows.push(base.magic.hyperbolic_vectors[2].clone());
    rows.push(base.magic.hyperbolic_vectors[4].clone());
    from_self_orthogonal(&BitMatrix::from_rows_cols(rows, 16), "16_2_4")
}

/// Loads and verifies the full eight-code library.
pub fn library() -> Result<Vec<CssCode>, Error> {
    let names = ["4_2_2", "7_1_3", "16_6_4", "17_1_5", "21_3_5"];
    let mut codes = Vec::new();
    for (text, name) in LIBRARY_FILES.iter().zip(names) {
        codes.push(parse_code_file(text, name)?);
    }
    codes.push(golay_23()?);
    codes.push(hadamard_16_2_4()?);
    let h16 = codes[2].clone();
    let mut punctured = puncture(&h16, 0)?;
    punctured.name = "15_7_3".into();
    codes.push(punctured);
    for code in &codes {
        let report = verify_code(code);
        if !report.passed() {
            return Err(Error::InvalidCode(format!(
                "library code {} failed verification: {:?}",
                code.name, report.failures
            )));
        }
    }
    Ok(codes)
}

/// Looks up one library code by name.
pub fn library_code(name: &str) -> Result<CssCode, Error> {
    library()?
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::UnknownCode(name.to_string()))
}
