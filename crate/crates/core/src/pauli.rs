//! Pauli operators with exact phase tracking and Clifford circuits.
//!
//! A Pauli is stored in the canonical form i^t · X(x) · Z(z). Conjugation by
//! the gate set {H, S, CX, CZ, X, Y, Z} is exact, so stabilizer tableaus and
//! encoder circuits carry correct signs throughout. The synthesizer turns a
//! full set of generator images into an explicit circuit by reducing the
//! tableau to the identity and replaying the inverse gates.

use crate::error::Error;
use crate::f2core::{BitMatrix, BitVector};

/// i^phase · X(x) · Z(z).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pauli {
    pub phase: u8,
    pub x: BitVector,
    pub z: BitVector,
}

impl Pauli {
    pub fn identity(n: usize) -> Self {
        Pauli { phase: 0, x: BitVector::zeros(n), z: BitVector::zeros(n) }
    }

    pub fn from_x(v: &BitVector) -> Self {
        Pauli { phase: 0, x: v.clone(), z: BitVector::zeros(v.len()) }
    }

    pub fn from_z(v: &BitVector) -> Self {
        Pauli { phase: 0, x: BitVector::zeros(v.len()), z: v.clone() }
    }

    /// Y(e) = i^{|e|} X(e) Z(e).
    pub fn from_y(v: &BitVector) -> Self {
        Pauli { phase: (v.weight() % 4) as u8, x: v.clone(), z: v.clone() }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    /// X(x1)Z(z1) · X(x2)Z(z2) = (−1)^{z1·x2} X(x1+x2) Z(z1+z2).
    pub fn mul(&self, other: &Pauli) -> Pauli {
        let mut phase = (self.phase + other.phase) % 4;
        if self.z.dot(&other.x) {
            phase = (phase + 2) % 4;
        }
        Pauli { phase, x: self.x.xor(&other.x), z: self.z.xor(&other.z) }
    }

    pub fn commutes_with(&self, other: &Pauli) -> bool {
        self.x.dot(&other.z) == self.z.dot(&other.x)
    }

    /// Symplectic product as a bit: 1 when the operators anticommute.
    pub fn sym(&self, other: &Pauli) -> bool {
        !self.commutes_with(other)
    }

    pub fn inverse(&self) -> Pauli {
        // (i^t X Z)^{-1} = i^{-t} Z X = i^{-t} (−1)^{x·z} X Z.
        let mut phase = (4 - self.phase) % 4;
        if self.x.dot(&self.z) {
            phase = (phase + 2) % 4;
        }
        Pauli { phase, x: self.x.clone(), z: self.z.clone() }
    }

    /// Letter at qubit q: 0 = I, 1 = X, 2 = Z, 3 = Y.
    pub fn letter(&self, q: usize) -> u8 {
        (self.x.get(q) as u8) | ((self.z.get(q) as u8) << 1)
    }

    pub fn weight(&self) -> usize {
        self.x.support().len() + self.z.support().iter().filter(|&&q| !self.x.get(q)).count()
    }

    /// Restriction to a wire subset, preserving the overall phase.
    pub fn restrict(&self, wires: &[usize]) -> Pauli {
        let mut x = BitVector::zeros(wires.len());
        let mut z = BitVector::zeros(wires.len());
        for (i, &w) in wires.iter().enumerate() {
            x.set(i, self.x.get(w));
            z.set(i, self.z.get(w));
        }
        Pauli { phase: self.phase, x, z }
    }

    /// Conjugation by a single gate: P → g P g†.
    pub fn conjugate(&mut self, gate: Gate) {
        match gate {
            Gate::H(q) => {
                // X↔Z; Y → −Y.
                if self.x.get(q) && self.z.get(q) {
                    self.phase = (self.phase + 2) % 4;
                }
                let xb = self.x.get(q);
                self.x.set(q, self.z.get(q));
                self.z.set(q, xb);
            }
            Gate::S(q) => {
                // X → Y = iXZ, XZ → iX, Z fixed.
                if self.x.get(q) {
                    self.phase = (self.phase + 1) % 4;
                    self.z.flip(q);
                }
            }
            Gate::Sdg(q) => {
                if self.x.get(q) {
                    self.phase = (self.phase + 3) % 4;
                    self.z.flip(q);
                }
            }
            Gate::CX(c, t) => {
                // Aaronson–Gottesman update with exact sign.
                if self.x.get(c) && self.z.get(t) && !(self.x.get(t) ^ self.z.get(c)) {
                    self.phase = (self.phase + 2) % 4;
                }
                let xc = self.x.get(c);
                let zt = self.z.get(t);
                self.x.set(t, self.x.get(t) ^ xc);
                self.z.set(c, self.z.get(c) ^ zt);
            }
            Gate::CZ(a, b) => {
                self.conjugate(Gate::H(b));
                self.conjugate(Gate::CX(a, b));
                self.conjugate(Gate::H(b));
            }
            Gate::X(q) => {
                if self.z.get(q) {
                    self.phase = (self.phase + 2) % 4;
                }
            }
            Gate::Z(q) => {
                if self.x.get(q) {
                    self.phase = (self.phase + 2) % 4;
                }
            }
        }
    }

    /// Conjugates through a whole circuit: P → C P C†.
    pub fn conjugate_by(&self, circuit: &[Gate]) -> Pauli {
        let mut p = self.clone();
        for &g in circuit {
            p.conjugate(g);
        }
        p
    }

    /// Conjugates by the inverse circuit: P → C† P C.
    pub fn conjugate_by_inverse(&self, circuit: &[Gate]) -> Pauli {
        let mut p = self.clone();
        for &g in circuit.iter().rev() {
            p.conjugate(g.inverse());
        }
        p
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", ["+", "i", "-", "-i"][self.phase as usize])?;
        for q in 0..self.len() {
            write!(f, "{}", ["I", "X", "Z", "Y"][self.letter(q) as usize])?;
        }
        Ok(())
    }
}

/// Clifford gate on named wires.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    CX(usize, usize),
    CZ(usize, usize),
    X(usize),
    Z(usize),
}

impl Gate {
    pub fn inverse(self) -> Gate {
        match self {
            Gate::S(q) => Gate::Sdg(q),
            Gate::Sdg(q) => Gate::S(q),
            g => g,
        }
    }
}

/// Completes symplectic partners for a list of independent commuting Paulis.
///
/// Given stabilizer generators and existing logical pairs, returns one
/// partner per stabilizer: partner j anticommutes with stabilizer j and
/// commutes with every other listed operator and partner.
pub fn complete_partners(
    stabilizers: &[Pauli],
    logicals: &[Pauli],
) -> Result<Vec<Pauli>, Error> {
    let n = stabilizers
        .first()
        .or_else(|| logicals.first())
        .map(Pauli::len)
        .ok_or_else(|| Error::InvalidCode("empty generator set".into()))?;

    // Symplectic-vector view: v = (x | z); <v, w> = x_v·z_w + z_v·x_w.
    let to_vec = |p: &Pauli| {
        let mut v = BitVector::zeros(2 * n);
        for q in 0..n {
            v.set(q, p.x.get(q));
            v.set(n + q, p.z.get(q));
        }
        v
    };
    let sym_row = |p: &Pauli| {
        // Row r with r·v = <p, v>: swap halves.
        let mut v = BitVector::zeros(2 * n);
        for q in 0..n {
            v.set(q, p.z.get(q));
            v.set(n + q, p.x.get(q));
        }
        v
    };

    let mut constraint_rows: Vec<BitVector> = Vec::new();
    for p in stabilizers.iter().chain(logicals) {
        constraint_rows.push(sym_row(p));
    }
    let m = BitMatrix::from_rows(constraint_rows);

    let mut partners: Vec<Pauli> = Vec::new();
    for (j, _) in stabilizers.iter().enumerate() {
        // Solve m·d = e_j over the anticommutation pattern.
        let mut rhs = BitVector::zeros(m.num_rows());
        rhs.set(j, true);
        let d = solve_f2(&m, &rhs).ok_or_else(|| {
            Error::InvalidCode("generators admit no symplectic completion".into())
        })?;
        let mut p = Pauli::identity(n);
        for q in 0..n {
            p.x.set(q, d.get(q));
            p.z.set(q, d.get(n + q));
        }
        // Restore mutual commutation among partners.
        for l in 0..j {
            if to_vec(&p).dot(&sym_row(&partners[l])) {
                p = p.mul(&stabilizers[l]);
            }
        }
        partners.push(p);
    }
    Ok(partners)
}

/// Solves A·x = b over F2, returning any solution.
pub fn solve_f2(a: &BitMatrix, b: &BitVector) -> Option<BitVector> {
    let rows = a.num_rows();
    let cols = a.num_cols();
    // Augmented elimination.
    let mut work: Vec<(BitVector, bool)> =
        (0..rows).map(|r| (a.row(r).clone(), b.get(r))).collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (work row, column)
    let mut rank = 0;
    for col in 0..cols {
        let Some(r) = (rank..rows).find(|&r| work[r].0.get(col)) else {
            continue;
        };
        work.swap(rank, r);
        for r2 in 0..rows {
            if r2 != rank && work[r2].0.get(col) {
                let (head, tail) = work.split_at_mut(rank.max(r2));
                let (src, dst) = if r2 > rank {
                    (&head[rank], &mut tail[0])
                } else {
                    (&tail[0], &mut head[r2])
                };
                dst.0.xor_assign(&src.0);
                dst.1 ^= src.1;
            }
        }
        pivots.push((rank, col));
        rank += 1;
    }
    if work[rank..].iter().any(|(_, rhs)| *rhs) {
        return None;
    }
    let mut x = BitVector::zeros(cols);
    for &(r, c) in &pivots {
        x.set(c, work[r].1);
    }
    Some(x)
}

/// Full generator-image specification of a Clifford on n qubits.
#[derive(Clone, Debug)]
pub struct Tableau {
    pub x_images: Vec<Pauli>,
    pub z_images: Vec<Pauli>,
}

impl Tableau {
    pub fn n(&self) -> usize {
        self.x_images.len()
    }

    /// Image of an arbitrary Pauli under the tableau's Clifford.
    pub fn image(&self, p: &Pauli) -> Pauli {
        let n = self.n();
        let mut out = Pauli::identity(n);
        out.phase = p.phase;
        for q in 0..n {
            if p.x.get(q) {
                out = out.mul(&self.x_images[q]);
            }
        }
        for q in 0..n {
            if p.z.get(q) {
                out = out.mul(&self.z_images[q]);
            }
        }
        out
    }

    /// Checks the symplectic consistency of the images.
    pub fn is_valid(&self) -> bool {
        let n = self.n();
        for i in 0..n {
            if self.x_images[i].commutes_with(&self.z_images[i]) {
                return false;
            }
            for j in 0..n {
                if j != i
                    && (!self.x_images[i].commutes_with(&self.x_images[j])
                        || !self.x_images[i].commutes_with(&self.z_images[j])
                        || !self.z_images[i].commutes_with(&self.z_images[j]))
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Synthesizes a circuit whose conjugation action realizes the tableau
/// exactly, signs included.
pub fn synthesize(tableau: &Tableau) -> Result<Vec<Gate>, Error> {
    if !tableau.is_valid() {
        return Err(Error::InvalidCode("inconsistent tableau".into()));
    }
    let n = tableau.n();
    let mut xr: Vec<Pauli> = tableau.x_images.clone();
    let mut zr: Vec<Pauli> = tableau.z_images.clone();
    // Gates applied on the left to reduce the tableau to the identity; the
    // synthesized circuit is the reversed inverses.
    let mut reduction: Vec<Gate> = Vec::new();
    let mut push = |g: Gate, xr: &mut Vec<Pauli>, zr: &mut Vec<Pauli>| {
        for p in xr.iter_mut().chain(zr.iter_mut()) {
            p.conjugate(g);
        }
        reduction.push(g);
    };

    for i in 0..n {
        // Bring the X-row to X_i.
        if !(i..n).any(|j| xr[i].x.get(j)) {
            let j = (i..n)
                .find(|&j| xr[i].z.get(j))
                .expect("nonzero row by symplectic independence");
            push(Gate::H(j), &mut xr, &mut zr);
        }
        let j = (i..n).find(|&j| xr[i].x.get(j)).unwrap();
        if j != i {
            // Swap wires i and j.
            push(Gate::CX(i, j), &mut xr, &mut zr);
            push(Gate::CX(j, i), &mut xr, &mut zr);
            push(Gate::CX(i, j), &mut xr, &mut zr);
        }
        for j in i + 1..n {
            if xr[i].x.get(j) {
                push(Gate::CX(i, j), &mut xr, &mut zr);
            }
        }
        if xr[i].z.get(i) {
            push(Gate::Sdg(i), &mut xr, &mut zr);
        }
        for j in i + 1..n {
            if xr[i].z.get(j) {
                push(Gate::CZ(i, j), &mut xr, &mut zr);
            }
        }
        // The Z-row now has z_i = 1 and support only on wires ≥ i.
        if zr[i].x.get(i) {
            // Rotate Y_i → Z_i while fixing X_i.
            push(Gate::H(i), &mut xr, &mut zr);
            push(Gate::S(i), &mut xr, &mut zr);
            push(Gate::H(i), &mut xr, &mut zr);
        }
        for j in i + 1..n {
            if zr[i].x.get(j) {
                if zr[i].z.get(j) {
                    push(Gate::H(j), &mut xr, &mut zr);
                    push(Gate::S(j), &mut xr, &mut zr);
                    push(Gate::H(j), &mut xr, &mut zr);
                } else {
                    push(Gate::H(j), &mut xr, &mut zr);
                }
            }
        }
        for j in i + 1..n {
            if zr[i].z.get(j) {
                push(Gate::CX(j, i), &mut xr, &mut zr);
            }
        }
        // Fix residual signs.
        if xr[i].phase == 2 {
            push(Gate::Z(i), &mut xr, &mut zr);
        }
        if zr[i].phase == 2 {
            push(Gate::X(i), &mut xr, &mut zr);
        }
        debug_assert_eq!(xr[i], Pauli::from_x(&BitVector::from_support(n, &[i])));
        debug_assert_eq!(zr[i], Pauli::from_z(&BitVector::from_support(n, &[i])));
    }

    Ok(reduction.iter().rev().map(|g| g.inverse()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn pauli(s: &str) -> Pauli {
        let mut p = Pauli::identity(s.len());
        for (q, ch) in s.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => p.x.set(q, true),
                'Z' => p.z.set(q, true),
                'Y' => {
                    p.x.set(q, true);
                    p.z.set(q, true);
                    p.phase = (p.phase + 1) % 4;
                }
                _ => panic!("bad letter"),
            }
        }
        p
    }

    #[test]
    fn products_track_phases() {
        let x = pauli("X");
        let z = pauli("Z");
        let y = pauli("Y");
        // XZ = −iY (canonical phase 0), ZX = iY = −XZ.
        assert_eq!(x.mul(&z), Pauli { phase: 0, ..y.clone() });
        assert_eq!(z.mul(&x), Pauli { phase: 2, ..y.clone() });
        assert_eq!(y.mul(&y), Pauli::identity(1));
        assert!(x.mul(&x.inverse()).phase == 0);
    }

    #[test]
    fn conjugation_matches_known_actions() {
        let mut p = pauli("X");
        p.conjugate(Gate::H(0));
        assert_eq!(p, pauli("Z"));
        let mut p = pauli("Y");
        p.conjugate(Gate::H(0));
        assert_eq!(p, Pauli { phase: 3, ..pauli("Y").clone() }); // −Y = i^3·(iXZ)... phase 1+2
        let mut p = pauli("X");
        p.conjugate(Gate::S(0));
        assert_eq!(p, pauli("Y"));
        let mut p = pauli("XI");
        p.conjugate(Gate::CX(0, 1));
        assert_eq!(p, pauli("XX"));
        let mut p = pauli("IZ");
        p.conjugate(Gate::CX(0, 1));
        assert_eq!(p, pauli("ZZ"));
        let mut p = pauli("XI");
        p.conjugate(Gate::CZ(0, 1));
        assert_eq!(p, pauli("XZ"));
    }

    #[test]
    fn circuit_inverse_round_trips() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 5;
        for _ in 0..50 {
            let circuit: Vec<Gate> = (0..30)
                .map(|_| {
                    let a = rng.gen_range(0..n);
                    let b = (a + 1 + rng.gen_range(0..n - 1)) % n;
                    match rng.gen_range(0..5) {
                        0 => Gate::H(a),
                        1 => Gate::S(a),
                        2 => Gate::CX(a, b),
                        3 => Gate::CZ(a, b),
                        _ => Gate::X(a),
                    }
                })
                .collect();
            let mut p = Pauli::identity(n);
            for q in 0..n {
                if rng.gen() {
                    p.x.set(q, true);
                }
                if rng.gen() {
                    p.z.set(q, true);
                }
            }
            let q = p.conjugate_by(&circuit).conjugate_by_inverse(&circuit);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn synthesis_reproduces_random_cliffords() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 4;
        for _ in 0..40 {
            // Random Clifford as a random circuit; extract its tableau.
            let circuit: Vec<Gate> = (0..40)
                .map(|_| {
                    let a = rng.gen_range(0..n);
                    let b = (a + 1 + rng.gen_range(0..n - 1)) % n;
                    match rng.gen_range(0..6) {
                        0 => Gate::H(a),
                        1 => Gate::S(a),
                        2 => Gate::CX(a, b),
                        3 => Gate::CZ(a, b),
                        4 => Gate::Z(a),
                        _ => Gate::X(a),
                    }
                })
                .collect();
            let tableau = Tableau {
                x_images: (0..n)
                    .map(|q| {
                        Pauli::from_x(&BitVector::from_support(n, &[q])).conjugate_by(&circuit)
                    })
                    .collect(),
                z_images: (0..n)
                    .map(|q| {
                        Pauli::from_z(&BitVector::from_support(n, &[q])).conjugate_by(&circuit)
                    })
                    .collect(),
            };
            let synth = synthesize(&tableau).unwrap();
            for q in 0..n {
                let x = Pauli::from_x(&BitVector::from_support(n, &[q]));
                let z = Pauli::from_z(&BitVector::from_support(n, &[q]));
                assert_eq!(x.conjugate_by(&synth), tableau.x_images[q]);
                assert_eq!(z.conjugate_by(&synth), tableau.z_images[q]);
            }
        }
    }

    #[test]
    fn partner_completion_is_symplectic() {
        // [[4,2,2]]-style stabilizers with crossed logicals.
        let stabs = vec![pauli("XXXX"), pauli("ZZZZ")];
        let logicals = vec![pauli("XXII"), pauli("IZZI"), pauli("IXXI"), pauli("ZZII")];
        let partners = complete_partners(&stabs, &logicals).unwrap();
        assert_eq!(partners.len(), 2);
        for (j, d) in partners.iter().enumerate() {
            for (l, s) in stabs.iter().enumerate() {
                assert_eq!(d.commutes_with(s), j != l);
            }
            for p in &logicals {
                assert!(d.commutes_with(p));
            }
        }
        assert!(partners[0].commutes_with(&partners[1]));
    }
}
