//! Exact sparse linear algebra over Q(√2, i) for circuit-level fault
//! analysis.
//!
//! Scalars are (a + b√2 + i(c + d√2)) / √2^k with integer coefficients,
//! which is closed under every Clifford-gate matrix entry and under the
//! |H⟩-basis moments cos²(π/8) = (2+√2)/4, sin²(π/8) = (2−√2)/4 and
//! cos·sin = √2/4. States are sparse maps from computational basis labels
//! to scalars; gates apply exactly with no rounding.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::f2core::BitVector;
use crate::pauli::{Gate, Pauli};

/// (a + b√2 + i·(c + d√2)) / √2^k, kept in lowest k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scalar {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
    k: u32,
}

fn mul(x: i128, y: i128) -> i128 {
    x.checked_mul(y).expect("scalar coefficient overflow")
}

fn add(x: i128, y: i128) -> i128 {
    x.checked_add(y).expect("scalar coefficient overflow")
}

impl Scalar {
    pub const ZERO: Scalar = Scalar { a: 0, b: 0, c: 0, d: 0, k: 0 };
    pub const ONE: Scalar = Scalar { a: 1, b: 0, c: 0, d: 0, k: 0 };
    /// i.
    pub const I: Scalar = Scalar { a: 0, b: 0, c: 1, d: 0, k: 0 };
    /// 1/√2.
    pub const INV_SQRT2: Scalar = Scalar { a: 1, b: 0, c: 0, d: 0, k: 1 };

    pub fn from_int(n: i128) -> Scalar {
        Scalar { a: n, b: 0, c: 0, d: 0, k: 0 }.reduced()
    }

    /// n / √2^k.
    pub fn dyadic(n: i128, k: u32) -> Scalar {
        Scalar { a: n, b: 0, c: 0, d: 0, k }.reduced()
    }

    /// (a + b√2)/√2^k as a real scalar.
    pub fn real_sqrt2(a: i128, b: i128, k: u32) -> Scalar {
        Scalar { a, b, c: 0, d: 0, k }.reduced()
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }

    fn reduced(mut self) -> Scalar {
        if self.is_zero() {
            return Scalar::ZERO;
        }
        // Dividing numerator and denominator by √2 maps
        // (a + b√2) → (b + (a/2)√2) and needs a, c even.
        while self.k > 0 && self.a % 2 == 0 && self.c % 2 == 0 {
            self = Scalar {
                a: self.b,
                b: self.a / 2,
                c: self.d,
                d: self.c / 2,
                k: self.k - 1,
            };
        }
        self
    }

    fn lift(self, k: u32) -> Scalar {
        // Multiply numerator by √2^(k − self.k).
        let mut s = self;
        while s.k < k {
            s = Scalar { a: mul(s.b, 2), b: s.a, c: mul(s.d, 2), d: s.c, k: s.k + 1 };
        }
        s
    }

    pub fn add(self, other: Scalar) -> Scalar {
        let k = self.k.max(other.k);
        let x = self.lift(k);
        let y = other.lift(k);
        Scalar {
            a: add(x.a, y.a),
            b: add(x.b, y.b),
            c: add(x.c, y.c),
            d: add(x.d, y.d),
            k,
        }
        .reduced()
    }

    pub fn sub(self, other: Scalar) -> Scalar {
        self.add(other.neg())
    }

    pub fn neg(self) -> Scalar {
        Scalar { a: -self.a, b: -self.b, c: -self.c, d: -self.d, k: self.k }
    }

    pub fn mul(self, other: Scalar) -> Scalar {
        // (p + iq)(r + is) with p = a + b√2 components.
        let (a1, b1, c1, d1) = (self.a, self.b, self.c, self.d);
        let (a2, b2, c2, d2) = (other.a, other.b, other.c, other.d);
        let rr_a = add(mul(a1, a2), mul(2, mul(b1, b2)));
        let rr_b = add(mul(a1, b2), mul(b1, a2));
        let ii_a = add(mul(c1, c2), mul(2, mul(d1, d2)));
        let ii_b = add(mul(c1, d2), mul(d1, c2));
        let ri_a = add(mul(a1, c2), mul(2, mul(b1, d2)));
        let ri_b = add(mul(a1, d2), mul(b1, c2));
        let ir_a = add(mul(c1, a2), mul(2, mul(d1, b2)));
        let ir_b = add(mul(c1, b2), mul(d1, a2));
        Scalar {
            a: add(rr_a, -ii_a),
            b: add(rr_b, -ii_b),
            c: add(ri_a, ir_a),
            d: add(ri_b, ir_b),
            k: self.k + other.k,
        }
        .reduced()
    }

    pub fn conj(self) -> Scalar {
        Scalar { a: self.a, b: self.b, c: -self.c, d: -self.d, k: self.k }
    }

    /// z · z̄ (a real scalar).
    pub fn norm_sqr(self) -> Scalar {
        self.mul(self.conj())
    }

    /// Multiplication by i^t.
    pub fn times_i_pow(self, t: u8) -> Scalar {
        match t % 4 {
            0 => self,
            1 => Scalar { a: -self.c, b: -self.d, c: self.a, d: self.b, k: self.k },
            2 => self.neg(),
            _ => Scalar { a: self.c, b: self.d, c: -self.a, d: -self.b, k: self.k },
        }
    }

    pub fn to_f64(self) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        (self.a as f64 + self.b as f64 * s2) / s2.powi(self.k as i32)
    }

    pub fn imag_f64(self) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        (self.c as f64 + self.d as f64 * s2) / s2.powi(self.k as i32)
    }

    pub fn is_real(&self) -> bool {
        self.c == 0 && self.d == 0
    }

    /// Exact rational value; None when the value has a √2 or imaginary part.
    pub fn to_rational(self) -> Option<BigRational> {
        if !self.is_real() {
            return None;
        }
        // Value = (a + b√2)/√2^k: rational iff the √2-component vanishes.
        let (num, sqrt_part) = if self.k % 2 == 0 { (self.a, self.b) } else { (self.b * 2, self.a) };
        if sqrt_part != 0 {
            return None;
        }
        let half_k = if self.k % 2 == 0 { self.k / 2 } else { (self.k + 1) / 2 };
        Some(BigRational::new(BigInt::from(num), BigInt::from(2i128).pow(half_k)))
    }
}

/// A sparse exact state: basis label (bit i = wire i) → amplitude.
pub type SparseState = HashMap<u64, Scalar>;

fn insert_add(state: &mut SparseState, key: u64, amp: Scalar) {
    if amp.is_zero() {
        return;
    }
    let entry = state.entry(key).or_insert(Scalar::ZERO);
    *entry = entry.add(amp);
    if entry.is_zero() {
        state.remove(&key);
    }
}

/// |0…0⟩.
pub fn basis_state(label: u64) -> SparseState {
    HashMap::from([(label, Scalar::ONE)])
}

/// Applies one Clifford gate exactly.
pub fn apply_gate(state: &SparseState, gate: Gate) -> SparseState {
    let mut out = SparseState::with_capacity(state.len() * 2);
    match gate {
        Gate::H(q) => {
            let m = 1u64 << q;
            for (&key, &amp) in state {
                let half = amp.mul(Scalar::INV_SQRT2);
                if key & m == 0 {
                    insert_add(&mut out, key, half);
                    insert_add(&mut out, key | m, half);
                } else {
                    insert_add(&mut out, key & !m, half);
                    insert_add(&mut out, key, half.neg());
                }
            }
        }
        Gate::S(q) => {
            let m = 1u64 << q;
            for (&key, &amp) in state {
                let amp = if key & m != 0 { amp.times_i_pow(1) } else { amp };
                insert_add(&mut out, key, amp);
            }
        }
        Gate::Sdg(q) => {
            let m = 1u64 << q;
            for (&key, &amp) in state {
                let amp = if key & m != 0 { amp.times_i_pow(3) } else { amp };
                insert_add(&mut out, key, amp);
            }
        }
        Gate::CX(c, t) => {
            let (mc, mt) = (1u64 << c, 1u64 << t);
            for (&key, &amp) in state {
                let key = if key & mc != 0 { key ^ mt } else { key };
                insert_add(&mut out, key, amp);
            }
        }
        Gate::CZ(a, b) => {
            let (ma, mb) = (1u64 << a, 1u64 << b);
            for (&key, &amp) in state {
                let amp = if key & ma != 0 && key & mb != 0 { amp.neg() } else { amp };
                insert_add(&mut out, key, amp);
            }
        }
        Gate::X(q) => {
            let m = 1u64 << q;
            for (&key, &amp) in state {
                insert_add(&mut out, key ^ m, amp);
            }
        }
        Gate::Z(q) => {
            let m = 1u64 << q;
            for (&key, &amp) in state {
                let amp = if key & m != 0 { amp.neg() } else { amp };
                insert_add(&mut out, key, amp);
            }
        }
    }
    out
}

pub fn apply_circuit(state: &SparseState, gates: &[Gate]) -> SparseState {
    let mut s = state.clone();
    for &g in gates {
        s = apply_gate(&s, g);
    }
    s
}

/// Applies i^t X(x)Z(z) exactly: |y⟩ → i^t (−1)^{z·y} |y ⊕ x⟩.
pub fn apply_pauli(state: &SparseState, p: &Pauli) -> SparseState {
    let x = bits_of(&p.x);
    let z = bits_of(&p.z);
    let mut out = SparseState::with_capacity(state.len());
    for (&key, &amp) in state {
        let mut amp = amp.times_i_pow(p.phase);
        if (key & z).count_ones() % 2 == 1 {
            amp = amp.neg();
        }
        out.insert(key ^ x, amp);
    }
    out
}

pub fn bits_of(v: &BitVector) -> u64 {
    let mut out = 0u64;
    for q in v.support() {
        out |= 1 << q;
    }
    out
}

/// ⟨bra|ket⟩ (conjugating bra amplitudes).
pub fn inner(bra: &SparseState, ket: &SparseState) -> Scalar {
    let (small, big, small_is_bra) =
        if bra.len() <= ket.len() { (bra, ket, true) } else { (ket, bra, false) };
    let mut acc = Scalar::ZERO;
    for (key, &amp) in small {
        if let Some(&other) = big.get(key) {
            let term = if small_is_bra { amp.conj().mul(other) } else { other.conj().mul(amp) };
            acc = acc.add(term);
        }
    }
    acc
}

pub fn scale(state: &mut SparseState, s: Scalar) {
    for amp in state.values_mut() {
        *amp = amp.mul(s);
    }
}

pub fn add_states(a: &SparseState, b: &SparseState) -> SparseState {
    let mut out = a.clone();
    for (&key, &amp) in b {
        insert_add(&mut out, key, amp);
    }
    out
}

/// A dense square matrix of exact scalars, dimension 2^wires.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMat {
    pub dim: usize,
    pub data: Vec<Scalar>,
}

impl ExactMat {
    pub fn zeros(dim: usize) -> Self {
        ExactMat { dim, data: vec![Scalar::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = ExactMat::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Scalar::ONE;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.dim + c] = v;
    }

    pub fn matmul(&self, other: &ExactMat) -> ExactMat {
        assert_eq!(self.dim, other.dim);
        let mut out = ExactMat::zeros(self.dim);
        for r in 0..self.dim {
            for k in 0..self.dim {
                let lhs = self.get(r, k);
                if lhs.is_zero() {
                    continue;
                }
                for c in 0..self.dim {
                    let rhs = other.get(k, c);
                    if !rhs.is_zero() {
                        out.data[r * self.dim + c] = out.data[r * self.dim + c].add(lhs.mul(rhs));
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> ExactMat {
        let mut out = ExactMat::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    /// Applies `self` on the sub-register `wires` of an n-wire operator,
    /// left-multiplying `big` (dimension 2^n). Bit i of a row/column index
    /// of `self` corresponds to wires[i].
    pub fn embed_mul(&self, wires: &[usize], big: &ExactMat) -> ExactMat {
        let n_dim = big.dim;
        let t = wires.len();
        assert_eq!(self.dim, 1 << t);
        let mut out = ExactMat::zeros(n_dim);
        for full_row in 0..n_dim {
            // Decompose the row into sub-register bits and the rest.
            let mut sub = 0usize;
            for (i, &w) in wires.iter().enumerate() {
                if full_row >> w & 1 == 1 {
                    sub |= 1 << i;
                }
            }
            for sub_col in 0..self.dim {
                let entry = self.get(sub, sub_col);
                if entry.is_zero() {
                    continue;
                }
                let mut mid = full_row;
                for (i, &w) in wires.iter().enumerate() {
                    if sub_col >> i & 1 == 1 {
                        mid |= 1 << w;
                    } else {
                        mid &= !(1 << w);
                    }
                }
                for col in 0..n_dim {
                    let rhs = big.get(mid, col);
                    if !rhs.is_zero() {
                        out.data[full_row * n_dim + col] =
                            out.data[full_row * n_dim + col].add(entry.mul(rhs));
                    }
                }
            }
        }
        out
    }
}

/// Per-wire moment ⟨x|R†_{bit_a} … with R|0⟩ = cos(π/8)|0⟩ + sin(π/8)|1⟩:
/// returns the exact product ∏ conj(R[x_w, s_w]) R[y_w, t_w] over wires,
/// where s, t are the deferred |H⟩-frame inputs on the bra and ket side.
/// R entries: R[0,0]=c, R[1,0]=s, R[0,1]=−s, R[1,1]=c; all pairwise
/// products lie in Q(√2): c² = (2+√2)/4, s² = (2−√2)/4, cs = √2/4.
pub fn h_moment(n: usize, x: u64, s_in: u64, y: u64, t_in: u64) -> Scalar {
    let mut acc = Scalar::ONE;
    for w in 0..n {
        let (xa, sa) = ((x >> w & 1) as u8, (s_in >> w & 1) as u8);
        let (ya, ta) = ((y >> w & 1) as u8, (t_in >> w & 1) as u8);
        // Signs: R[x, s] is negative only for (x, s) = (0, 1).
        let sign = |r: u8, c: u8| if (r, c) == (0, 1) { -1i128 } else { 1 };
        let sgn = sign(xa, sa) * sign(ya, ta);
        // |R[x, s]| is cos when x == s (diagonal), sin otherwise.
        let factor = match ((xa == sa) as u8, (ya == ta) as u8) {
            (1, 1) => Scalar::real_sqrt2(2 * sgn, sgn, 4),  // c² = (2+√2)/4
            (0, 0) => Scalar::real_sqrt2(2 * sgn, -sgn, 4), // s² = (2−√2)/4
            _ => Scalar::real_sqrt2(0, sgn, 4),             // cs = √2/4
        };
        acc = acc.mul(factor);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn scalar_field_axioms() {
        let x = Scalar::real_sqrt2(3, -2, 1);
        let y = Scalar { a: 1, b: 1, c: 2, d: 0, k: 2 }.reduced();
        let z = Scalar::I.mul(Scalar::INV_SQRT2);
        assert_eq!(x.mul(y).mul(z), x.mul(y.mul(z)));
        assert_eq!(x.mul(y.add(z)), x.mul(y).add(x.mul(z)));
        assert_eq!(x.sub(x), Scalar::ZERO);
        assert_eq!(Scalar::INV_SQRT2.mul(Scalar::INV_SQRT2), Scalar::dyadic(1, 2));
        assert!((x.mul(y).to_f64()
            - (x.to_f64() * y.to_f64() - x.imag_f64() * y.imag_f64()))
        .abs()
            < 1e-12);
    }

    #[test]
    fn rational_extraction() {
        assert_eq!(Scalar::dyadic(3, 4).to_rational().unwrap().to_f64().unwrap(), 0.75);
        assert!(Scalar::INV_SQRT2.to_rational().is_none());
        assert!(Scalar::real_sqrt2(0, 1, 0).to_rational().is_none());
        // (0 + 2√2)/√2^3 = 2√2/(2√2) = 1.
        assert_eq!(Scalar::real_sqrt2(0, 2, 3).to_rational().unwrap().to_f64().unwrap(), 1.0);
    }

    #[test]
    fn gates_are_unitary_on_random_states() {
        let mut state = basis_state(0);
        let gates = [
            Gate::H(0),
            Gate::CX(0, 2),
            Gate::S(2),
            Gate::H(1),
            Gate::CZ(1, 2),
            Gate::Sdg(0),
            Gate::X(1),
            Gate::Z(2),
            Gate::H(2),
        ];
        for &g in &gates {
            state = apply_gate(&state, g);
            let n = inner(&state, &state);
            assert_eq!(n, Scalar::ONE, "norm after {g:?}");
        }
    }

    #[test]
    fn pauli_application_matches_gates() {
        let mut state = basis_state(0);
        for g in [Gate::H(0), Gate::CX(0, 1), Gate::S(1), Gate::H(2)] {
            state = apply_gate(&state, g);
        }
        // Y(e) as a Pauli equals Z·X·(i) per wire.
        let e = BitVector::from_support(3, &[0, 2]);
        let via_pauli = apply_pauli(&state, &Pauli::from_y(&e));
        let mut via_gates = state.clone();
        for q in [0, 2] {
            via_gates = apply_gate(&via_gates, Gate::X(q));
            via_gates = apply_gate(&via_gates, Gate::Z(q));
            scale(&mut via_gates, Scalar::I);
        }
        assert_eq!(inner(&via_pauli, &via_gates), Scalar::ONE);
    }

    #[test]
    fn h_moments_are_consistent() {
        // Σ_x ⟨x|R|s⟩⟨R s|x⟩ = 1 for each deferred input s.
        for s in 0..4u64 {
            let mut acc = Scalar::ZERO;
            for x in 0..4u64 {
                acc = acc.add(h_moment(2, x, s, x, s));
            }
            assert_eq!(acc, Scalar::ONE);
        }
        // Orthogonality of deferred inputs: Σ_x conj(R[x,0]) R[x,1] = 0.
        let mut acc = Scalar::ZERO;
        for x in 0..2u64 {
            acc = acc.add(h_moment(1, x, 0, x, 1));
        }
        assert_eq!(acc, Scalar::ZERO);
        // Numerically: h_moment(1, 0,0, 0,0) = cos²(π/8).
        let c2 = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert!((h_moment(1, 0, 0, 0, 0).to_f64() - c2).abs() < 1e-12);
    }

    #[test]
    fn embed_mul_places_submatrix() {
        // X on wire 1 of a 2-wire identity.
        let mut x = ExactMat::zeros(2);
        x.set(0, 1, Scalar::ONE);
        x.set(1, 0, Scalar::ONE);
        let big = x.embed_mul(&[1], &ExactMat::identity(4));
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r ^ 2 == c { Scalar::ONE } else { Scalar::ZERO };
                assert_eq!(big.get(r, c), expect);
            }
        }
    }
}
