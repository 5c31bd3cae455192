//! Symmetric bilinear forms over F2 and over odd primes.
//!
//! Over F2 a nondegenerate symmetric form is congruent to I_p ⊕ λ_q where λ
//! is the 2x2 hyperbolic plane; the identity I_{p+2} ⊕ λ_{q-2} ≅ I_p ⊕ λ_q
//! lets us push everything to q = 0 as soon as one diagonal entry is odd.
//! The same machinery applied to the quotient S⊥/S of a self-orthogonal
//! matrix S yields the magic basis used by the CSS construction.
//!
//! Over odd primes, nondegenerate forms of fixed dimension are classified by
//! the determinant modulo squares; null-vector counts follow the closed form
//! ζ(n,m,k) = p^(n-k-1) + p^m - p^(n-m-1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::Error;
use crate::f2core::{BitMatrix, BitVector, Echelon};

/// Classification certificate over F2.
///
/// `transform` rows are the new basis vectors in input coordinates, normal
/// vectors first, then hyperbolic pairs: `transform · Λ · transformᵀ`
/// equals I_p ⊕ λ_q exactly.
#[derive(Clone, Debug)]
pub struct F2FormClass {
    pub p_count: usize,
    pub q_count: usize,
    pub transform: BitMatrix,
}

/// A (p,q)-magic basis of S⊥/S: Gram matrix exactly I_p ⊕ λ_q.
#[derive(Clone, Debug)]
pub struct MagicBasis {
    pub normal_vectors: Vec<BitVector>,
    pub hyperbolic_vectors: Vec<BitVector>,
}

impl MagicBasis {
    pub fn p(&self) -> usize {
        self.normal_vectors.len()
    }

    pub fn q(&self) -> usize {
        self.hyperbolic_vectors.len()
    }

    /// All basis vectors, normal slots first then hyperbolic pairs.
    pub fn vectors(&self) -> impl Iterator<Item = &BitVector> {
        self.normal_vectors.iter().chain(&self.hyperbolic_vectors)
    }
}

fn gram(vectors: &[BitVector]) -> BitMatrix {
    let k = vectors.len();
    let mut g = BitMatrix::from_rows(vec![BitVector::zeros(k); k]);
    for i in 0..k {
        for j in 0..k {
            if vectors[i].dot(&vectors[j]) {
                g.set(i, j, true);
            }
        }
    }
    g
}

/// Target Gram matrix I_p ⊕ λ_q.
pub fn normal_form_gram(p: usize, q: usize) -> BitMatrix {
    let k = p + q;
    let mut g = BitMatrix::from_rows(vec![BitVector::zeros(k); k]);
    for i in 0..p {
        g.set(i, i, true);
    }
    for j in 0..q / 2 {
        g.set(p + 2 * j, p + 2 * j + 1, true);
        g.set(p + 2 * j + 1, p + 2 * j, true);
    }
    g
}

/// Classifies a nonsingular symmetric form over F2.
pub fn classify_f2(lambda: &BitMatrix) -> Result<F2FormClass, Error> {
    let k = lambda.num_cols();
    if lambda.num_rows() != k {
        return Err(Error::Parse("form matrix must be square".into()));
    }
    for i in 0..k {
        for j in 0..i {
            if lambda.get(i, j) != lambda.get(j, i) {
                return Err(Error::InvalidCode("form matrix is not symmetric".into()));
            }
        }
    }
    if lambda.rank() != k {
        return Err(Error::InvalidCode("form matrix is singular".into()));
    }

    let b = |x: &BitVector, y: &BitVector| -> bool {
        // xᵀ Λ y
        lambda.mul_vec(y).dot(x)
    };

    // Remaining basis of the unclassified part, in input coordinates.
    let mut rest: Vec<BitVector> = (0..k).map(|i| BitVector::from_support(k, &[i])).collect();
    let mut normal: Vec<BitVector> = Vec::new();
    let mut pairs: Vec<(BitVector, BitVector)> = Vec::new();

    while !rest.is_empty() {
        if let Some(i) = (0..rest.len()).find(|&i| b(&rest[i], &rest[i])) {
            let u = rest.remove(i);
            for v in &mut rest {
                if b(v, &u) {
                    v.xor_assign(&u);
                }
            }
            normal.push(u);
        } else {
            // All diagonal entries vanish; nondegeneracy gives a crossing pair.
            let (i, j) = (0..rest.len())
                .flat_map(|i| ((i + 1)..rest.len()).map(move |j| (i, j)))
                .find(|&(i, j)| b(&rest[i], &rest[j]))
                .ok_or_else(|| Error::InvalidCode("degenerate residual form".into()))?;
            let w2 = rest.remove(j);
            let w1 = rest.remove(i);
            for v in &mut rest {
                if b(v, &w2) {
                    v.xor_assign(&w1);
                }
                if b(v, &w1) {
                    v.xor_assign(&w2);
                }
            }
            pairs.push((w1, w2));
        }
    }

    // I_1 ⊕ λ_2 ≅ I_3: absorb hyperbolic pairs whenever a normal vector exists.
    while !normal.is_empty() && !pairs.is_empty() {
        let u = normal.pop().unwrap();
        let (w1, w2) = pairs.pop().unwrap();
        let mut n1 = u.clone();
        n1.xor_assign(&w1);
        n1.xor_assign(&w2);
        let mut n2 = u.clone();
        n2.xor_assign(&w1);
        let mut n3 = u;
        n3.xor_assign(&w2);
        normal.push(n1);
        normal.push(n2);
        normal.push(n3);
    }

    let p_count = normal.len();
    let q_count = 2 * pairs.len();
    let mut rows = normal;
    for (w1, w2) in pairs {
        rows.push(w1);
        rows.push(w2);
    }
    let transform = BitMatrix::from_rows(rows);
    Ok(F2FormClass { p_count, q_count, transform })
}

/// Gram matrix `T Λ Tᵀ` of a certificate, for verification.
pub fn apply_congruence(t: &BitMatrix, lambda: &BitMatrix) -> BitMatrix {
    let k = t.num_rows();
    let mut g = BitMatrix::from_rows(vec![BitVector::zeros(k); k]);
    for i in 0..k {
        let li = lambda.mul_vec(t.row(i));
        for j in 0..k {
            if li.dot(t.row(j)) {
                g.set(j, i, true);
            }
        }
    }
    g
}

/// Computes a magic basis for S⊥/S of a self-orthogonal matrix.
///
/// Prefers the all-normal form: the result has q = 0 unless every coset of
/// S in S⊥ consists of even-weight vectors only.
pub fn magic_basis(s: &BitMatrix) -> Result<MagicBasis, Error> {
    for i in 0..s.num_rows() {
        for j in i..s.num_rows() {
            if s.row(i).dot(s.row(j)) {
                return Err(Error::NotSelfOrthogonal(i, j));
            }
        }
    }
    let perp = s.orthogonal_complement();
    let s_ech = Echelon::new(s);

    // Extend a basis of S to one of S⊥; the added vectors represent S⊥/S.
    let mut span = s.clone();
    let mut reps: Vec<BitVector> = Vec::new();
    let mut r = span.rank();
    for v in perp.rows() {
        let mut trial = span.clone();
        trial.push_row(v.clone());
        let nr = trial.rank();
        if nr > r {
            r = nr;
            span.push_row(v.clone());
            reps.push(s_ech.reduce(v));
        }
    }

    let g = gram(&reps);
    let class = classify_f2(&g)?;
    let k = reps.len();
    let mut transformed: Vec<BitVector> = Vec::new();
    for i in 0..k {
        let coeffs = class.transform.row(i);
        let mut v = BitVector::zeros(s.num_cols());
        for (j, rep) in reps.iter().enumerate() {
            if coeffs.get(j) {
                v.xor_assign(rep);
            }
        }
        transformed.push(v);
    }
    let hyperbolic = transformed.split_off(class.p_count);
    let basis = MagicBasis { normal_vectors: transformed, hyperbolic_vectors: hyperbolic };
    debug_assert_eq!(
        gram(&basis.vectors().cloned().collect::<Vec<_>>()),
        normal_form_gram(basis.p(), basis.q())
    );
    Ok(basis)
}

// ---------------------------------------------------------------------------
// Odd primes.

/// Dense matrix with entries in F_p, p an odd prime below 2^16.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpMatrix {
    pub prime: u64,
    pub rows: usize,
    pub cols: usize,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn zeros(prime: u64, rows: usize, cols: usize) -> Self {
        FpMatrix { prime, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_entries(prime: u64, rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        let p = prime as i64;
        FpMatrix {
            prime,
            rows,
            cols,
            data: entries.iter().map(|&e| (e.rem_euclid(p)) as u64).collect(),
        }
    }

    pub fn diag(prime: u64, entries: &[i64]) -> Self {
        let n = entries.len();
        let mut m = FpMatrix::zeros(prime, n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e.rem_euclid(prime as i64) as u64);
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.prime;
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// vᵀ M w mod p.
    pub fn bilinear(&self, v: &[u64], w: &[u64]) -> u64 {
        let p = self.prime;
        let mut acc: u64 = 0;
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            let mut rowacc: u64 = 0;
            for (j, &wj) in w.iter().enumerate() {
                rowacc = (rowacc + self.get(i, j) * wj) % p;
            }
            acc = (acc + vi * rowacc) % p;
        }
        acc
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.prime, other.prime);
        let p = self.prime;
        let mut out = FpMatrix::zeros(p, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = (out.get(i, j) + a * other.get(k, j)) % p;
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut out = FpMatrix::zeros(self.prime, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn determinant(&self) -> u64 {
        assert_eq!(self.rows, self.cols);
        let p = self.prime;
        let mut m = self.clone();
        let n = self.rows;
        let mut det: u64 = 1;
        for col in 0..n {
            let Some(pivot) = (col..n).find(|&r| m.get(r, col) != 0) else {
                return 0;
            };
            if pivot != col {
                for j in 0..n {
                    let a = m.get(col, j);
                    let b = m.get(pivot, j);
                    m.set(col, j, b);
                    m.set(pivot, j, a);
                }
                det = (p - det) % p;
            }
            let pv = m.get(col, col);
            det = det * pv % p;
            let inv = fp_inv(pv, p);
            for r in col + 1..n {
                let factor = m.get(r, col) * inv % p;
                if factor == 0 {
                    continue;
                }
                for j in col..n {
                    let v = (m.get(r, j) + (p - factor) * m.get(col, j)) % p;
                    m.set(r, j, v);
                }
            }
        }
        det
    }
}

pub fn fp_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    base %= p;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

pub fn fp_inv(a: u64, p: u64) -> u64 {
    fp_pow(a, p - 2, p)
}

/// Euler criterion; 0 counts as a square.
pub fn is_square_mod(a: u64, p: u64) -> bool {
    let a = a % p;
    a == 0 || fp_pow(a, (p - 1) / 2, p) == 1
}

/// Smallest quadratic non-residue mod p.
pub fn non_square_mod(p: u64) -> u64 {
    (2..p).find(|&a| !is_square_mod(a, p)).expect("odd prime has a non-residue")
}

/// Classification certificate over an odd prime.
///
/// `transform` rows are the new basis vectors: `transform · Λ · transformᵀ`
/// is diagonal with all entries 1 except possibly the last, which is the
/// canonical non-square when the determinant class is non-square.
#[derive(Clone, Debug)]
pub struct FpFormClass {
    pub prime: u64,
    pub dimension: usize,
    pub det_is_square: bool,
    pub transform: FpMatrix,
}

/// Classifies a nonsingular symmetric form over an odd prime by congruence.
pub fn classify_fp(lambda: &FpMatrix) -> Result<FpFormClass, Error> {
    let p = lambda.prime;
    if p == 2 {
        return Err(Error::InvalidCode("characteristic 2: use classify_f2".into()));
    }
    let n = lambda.rows;
    if lambda.cols != n {
        return Err(Error::Parse("form matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if lambda.get(i, j) != lambda.get(j, i) {
                return Err(Error::InvalidCode("form matrix is not symmetric".into()));
            }
        }
    }
    if lambda.determinant() == 0 {
        return Err(Error::InvalidCode("form matrix is singular".into()));
    }

    // Basis rows in input coordinates.
    let mut basis: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
        .collect();
    let b = |x: &[u64], y: &[u64]| lambda.bilinear(x, y);

    let mut diagonalized: Vec<Vec<u64>> = Vec::new();
    let mut rest = basis.split_off(0);
    while !rest.is_empty() {
        let idx = (0..rest.len()).find(|&i| b(&rest[i], &rest[i]) != 0);
        let u = match idx {
            Some(i) => rest.remove(i),
            None => {
                // All Q(v)=0 on the residual basis: mix a crossing pair.
                let (i, j) = (0..rest.len())
                    .flat_map(|i| ((i + 1)..rest.len()).map(move |j| (i, j)))
                    .find(|&(i, j)| b(&rest[i], &rest[j]) != 0)
                    .ok_or_else(|| Error::InvalidCode("degenerate residual form".into()))?;
                for k in 0..n {
                    let v = (rest[i][k] + rest[j][k]) % p;
                    rest[i][k] = v;
                }
                rest.remove(i)
            }
        };
        let qu = b(&u, &u);
        let inv = fp_inv(qu, p);
        for v in rest.iter_mut() {
            let c = b(v, &u) * inv % p;
            if c != 0 {
                for k in 0..n {
                    v[k] = (v[k] + (p - c) * u[k]) % p;
                }
            }
        }
        diagonalized.push(u);
    }

    // Scale entries to 1 or the canonical non-square; then merge non-square
    // pairs into squares.
    let alpha = non_square_mod(p);
    let mut labels: Vec<bool> = Vec::new(); // true = entry is the non-square
    for u in diagonalized.iter_mut() {
        let q = b(u, u);
        let target = if is_square_mod(q, p) { 1 } else { alpha };
        // Find t with t² q = target.
        let ratio = target * fp_inv(q, p) % p;
        let t = fp_sqrt(ratio, p).expect("ratio is a square by construction");
        for k in 0..n {
            u[k] = u[k] * t % p;
        }
        labels.push(target == alpha);
    }
    // diag(α, α) ≅ diag(1, 1): find a² + b² = α^{-1} and rotate the pair.
    loop {
        let nonsq: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
        if nonsq.len() < 2 {
            break;
        }
        let (i, j) = (nonsq[0], nonsq[1]);
        let target = fp_inv(alpha, p);
        let (a, c) = (0..p)
            .find_map(|a| {
                let rem = (target + p - a * a % p) % p;
                fp_sqrt(rem, p).map(|c| (a, c))
            })
            .expect("every element of F_p is a sum of two squares");
        // New pair: (a·u_i + c·u_j, -c·u_i + a·u_j), both of norm α·(a²+c²)=1.
        let ui = diagonalized[i].clone();
        let uj = diagonalized[j].clone();
        for k in 0..n {
            diagonalized[i][k] = (a * ui[k] + c * uj[k]) % p;
            diagonalized[j][k] = ((p - c) * ui[k] % p + a * uj[k]) % p;
        }
        labels[i] = false;
        labels[j] = false;
    }
    // Put the possible non-square last.
    let order: Vec<usize> = (0..n)
        .filter(|&i| !labels[i])
        .chain((0..n).filter(|&i| labels[i]))
        .collect();
    let mut transform = FpMatrix::zeros(p, n, n);
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            transform.set(r, k, diagonalized[i][k]);
        }
    }
    let det_is_square = is_square_mod(lambda.determinant(), p);
    Ok(FpFormClass { prime: p, dimension: n, det_is_square, transform })
}

/// Square root mod p by exhaustive search (primes here are small).
pub fn fp_sqrt(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    (0..p).find(|&t| t * t % p == a)
}

/// ζ(n,m,k) = p^(n-k-1) + p^m - p^(n-m-1): the number of null vectors of a
/// nondegenerate n-dimensional quadratic space with maximal null dimension m
/// that are orthogonal to a fixed k-dimensional null subspace.
pub fn count_null_vectors(n: u64, m: u64, k: u64, p: u64) -> Result<u64, Error> {
    if k > m || 2 * m > n {
        return Err(Error::Parse(format!("invalid null-space parameters n={n} m={m} k={k}")));
    }
    Ok(p.pow((n - k - 1) as u32) + p.pow(m as u32) - p.pow((n - m - 1) as u32))
}

/// Canonical nondegenerate space of dimension n whose maximal null subspace
/// has dimension m, together with a maximal null basis. Requires
/// n - 2m ∈ {0, 1, 2}; the definite part is empty, (1), or the norm form of
/// the quadratic extension.
pub fn canonical_space(n: usize, m: usize, p: u64) -> Result<(FpMatrix, Vec<Vec<u64>>), Error> {
    if n < 2 * m || n - 2 * m > 2 {
        return Err(Error::Parse(format!("no space of dimension {n} with null dimension {m}")));
    }
    let mut q = FpMatrix::zeros(p, n, n);
    for j in 0..m {
        q.set(2 * j, 2 * j + 1, 1);
        q.set(2 * j + 1, 2 * j, 1);
    }
    match n - 2 * m {
        0 => {}
        1 => q.set(n - 1, n - 1, 1),
        2 => {
            // x² - α y² with α a non-residue: anisotropic.
            q.set(n - 2, n - 2, 1);
            q.set(n - 1, n - 1, p - non_square_mod(p));
        }
        _ => unreachable!(),
    }
    let null_basis = (0..m)
        .map(|j| (0..n).map(|i| u64::from(i == 2 * j)).collect())
        .collect();
    Ok((q, null_basis))
}

/// Exhaustively counts null vectors of `q` orthogonal to the rows of `null_space`.
pub fn brute_force_null_count(
    q: &FpMatrix,
    null_space: &[Vec<u64>],
    budget: u64,
) -> Result<u64, Error> {
    let p = q.prime;
    let n = q.rows;
    let total = p.checked_pow(n as u32).filter(|&t| t <= budget).ok_or(
        Error::BudgetExceeded { needed: u64::MAX, budget },
    )?;
    let mut count = 0u64;
    let mut v = vec![0u64; n];
    for _ in 0..total {
        if q.bilinear(&v, &v) == 0 && null_space.iter().all(|w| q.bilinear(w, &v) == 0) {
            count += 1;
        }
        // Odometer increment in base p.
        for digit in v.iter_mut() {
            *digit += 1;
            if *digit == p {
                *digit = 0;
            } else {
                break;
            }
        }
    }
    Ok(count)
}

/// Failure bound for the F_p random self-orthogonal ensemble:
/// 20·(3/5)^(n-c) + (11/15)^(c-1).
pub fn fp_ensemble_bound(n: u64, c: u64) -> f64 {
    20.0 * (3.0f64 / 5.0).powi((n - c) as i32) + (11.0f64 / 15.0).powi((c - 1) as i32)
}

/// Samples a c × n self-orthogonal matrix over F_p whose first row is all
/// ones and whose later rows are uniform null vectors orthogonal to the
/// prefix. Requires p | n so the all-ones row is null.
pub fn sample_fp_self_orthogonal(
    n: usize,
    c: usize,
    prime: u64,
    seed: u64,
) -> Result<FpMatrix, Error> {
    const MAX_TRIES: u64 = 10_000;
    if prime < 3 || n % prime as usize != 0 || c == 0 || 2 * (c + 1) >= n {
        return Err(Error::Parse(format!("invalid ensemble parameters n={n} c={c} p={prime}")));
    }
    let p = prime;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut m = FpMatrix::zeros(p, c, n);
    for j in 0..n {
        m.set(0, j, 1);
    }
    for row in 1..c {
        // Kernel of the constraint matrix built from prior rows.
        let kernel = fp_kernel(&m, row);
        let mut tries = 0;
        loop {
            tries += 1;
            if tries > MAX_TRIES {
                return Err(Error::SamplingFailed(MAX_TRIES));
            }
            let mut v = vec![0u64; n];
            for basis_vec in &kernel {
                let coeff = rng.gen_range(0..p);
                if coeff == 0 {
                    continue;
                }
                for (vi, bi) in v.iter_mut().zip(basis_vec) {
                    *vi = (*vi + coeff * bi) % p;
                }
            }
            let norm: u64 = v.iter().map(|&x| x * x % p).fold(0, |a, b| (a + b) % p);
            if norm == 0 {
                for (j, &x) in v.iter().enumerate() {
                    m.set(row, j, x);
                }
                break;
            }
        }
    }
    Ok(m)
}

/// Kernel basis of the first `rows` rows of `m`, as vectors in F_p^n.
fn fp_kernel(m: &FpMatrix, rows: usize) -> Vec<Vec<u64>> {
    let p = m.prime;
    let n = m.cols;
    // Row reduce a copy of the constraint matrix.
    let mut a: Vec<Vec<u64>> = (0..rows).map(|r| m.row(r).to_vec()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(r) = (rank..rows).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(rank, r);
        let inv = fp_inv(a[rank][col], p);
        for x in a[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r2 in 0..rows {
            if r2 != rank && a[r2][col] != 0 {
                let f = a[r2][col];
                for j in 0..n {
                    a[r2][j] = (a[r2][j] + (p - f) * a[rank][j]) % p;
                }
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; n];
        v[free] = 1;
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = (p - a[r][free]) % p;
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_identity_and_hyperbolic() {
        let c = classify_f2(&BitMatrix::identity(3)).unwrap();
        assert_eq!((c.p_count, c.q_count), (3, 0));

        let lam = BitMatrix::from_str01("01\n10").unwrap();
        let c = classify_f2(&lam).unwrap();
        assert_eq!((c.p_count, c.q_count), (0, 2));
        assert_eq!(apply_congruence(&c.transform, &lam), normal_form_gram(0, 2));
    }

    #[test]
    fn eq13_instance_normalizes_to_i3() {
        // I_1 ⊕ λ_2.
        let lam = BitMatrix::from_str01("100\n001\n010").unwrap();
        let c = classify_f2(&lam).unwrap();
        assert_eq!((c.p_count, c.q_count), (3, 0));
        assert_eq!(apply_congruence(&c.transform, &lam), BitMatrix::identity(3));
        let mut rows: Vec<String> = c.transform.rows().iter().map(|r| r.to_string()).collect();
        rows.sort();
        assert_eq!(rows, vec!["101", "110", "111"]);
    }

    #[test]
    fn magic_basis_of_1111_is_hyperbolic() {
        let s = BitMatrix::from_str01("1111").unwrap();
        let b = magic_basis(&s).unwrap();
        assert_eq!((b.p(), b.q()), (0, 2));
        let w1 = &b.hyperbolic_vectors[0];
        let w2 = &b.hyperbolic_vectors[1];
        assert!(!w1.dot(w1) && !w2.dot(w2) && w1.dot(w2));
    }

    #[test]
    fn fp_classification_separates_det_classes() {
        // p = 3: diag(1,1) has square det; hyperbolic plane has det -1 = 2,
        // a non-square mod 3.
        let id = FpMatrix::diag(3, &[1, 1]);
        let hyp = FpMatrix::from_entries(3, 2, 2, &[0, 1, 1, 0]);
        let c1 = classify_fp(&id).unwrap();
        let c2 = classify_fp(&hyp).unwrap();
        assert!(c1.det_is_square);
        assert!(!c2.det_is_square);

        // Certificate: T Λ Tᵀ diagonal with the right entries.
        for (class, lam) in [(&c1, &id), (&c2, &hyp)] {
            let g = class.transform.mul(lam).mul(&class.transform.transpose());
            for i in 0..2 {
                for j in 0..2 {
                    if i != j {
                        assert_eq!(g.get(i, j), 0);
                    }
                }
            }
            assert_eq!(g.get(0, 0), 1);
            let last = g.get(1, 1);
            if class.det_is_square {
                assert_eq!(last, 1);
            } else {
                assert_eq!(last, non_square_mod(3));
            }
        }
    }

    #[test]
    fn zeta_matches_brute_force_small() {
        for &p in &[3u64, 5] {
            for n in 1..=4u64 {
                for m in 0..=(n / 2) {
                    if n - 2 * m > 2 {
                        continue;
                    }
                    let (q, nb) = canonical_space(n as usize, m as usize, p).unwrap();
                    for k in 0..=m {
                        let brute =
                            brute_force_null_count(&q, &nb[..k as usize], 1 << 20).unwrap();
                        assert_eq!(
                            brute,
                            count_null_vectors(n, m, k, p).unwrap(),
                            "p={p} n={n} m={m} k={k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zeta_2_1_0_is_5_mod_3() {
        assert_eq!(count_null_vectors(2, 1, 0, 3).unwrap(), 5);
    }

    #[test]
    fn fp_sampler_outputs_are_self_orthogonal() {
        for seed in 0..20 {
            let m = sample_fp_self_orthogonal(9, 3, 3, seed).unwrap();
            let g = m.mul(&m.transpose());
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(g.get(i, j), 0, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn ensemble_bound_evaluates() {
        let b = fp_ensemble_bound(9, 3);
        assert!((b - (20.0 * (0.6f64).powi(6) + (11.0f64 / 15.0).powi(2))).abs() < 1e-12);
    }
}
