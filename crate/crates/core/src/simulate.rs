//! Statevector Monte Carlo of whole protocols under coherent T-gate
//! over-rotation, and exact Pauli fault injection on the same engine.
//!
//! Each measurement routine starts its fillers, check wires and ancilla
//! fresh and measures them at the end, so conditioned on acceptance it
//! acts on its t targets as a 2^t × 2^t map. The two ancilla branches are
//! products of per-wire 2×2 column operators (identity or Z between the
//! columns) around the mid-circuit logical Hadamard; the Hadamard layer is
//! applied as a short product of conjugated Pauli factors instead of a
//! gate sequence. Single-pass routines contract bra and ket sparsely;
//! two-pass routines carry one dense frontier over the block. Every run
//! draws its angles in fault-location order from its own counter-selected
//! stream, so results are bit-reproducible for a fixed seed at any thread
//! count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuits::{check_mixer, encoder};
use crate::error::Error;
use crate::exact::{apply_circuit, basis_state, bits_of, Scalar, SparseState};
use crate::inner::CssCode;
use crate::pauli::{Gate, Pauli};
use crate::protocol::{CheckJob, Protocol};

type C = Complex64;
/// 2×2 complex matrix, row major.
type M2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);

fn mul2(a: &M2, b: &M2) -> M2 {
    let mut m = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    m
}

/// Real Y-rotation by matrix angle φ: e^{−iφY}. A T gate with Bloch-sphere
/// over-rotation δ is rot(π/8 + δ/2); the ideal magic state is
/// rot(π/8)|0⟩.
pub fn rot(phi: f64) -> M2 {
    let (s, c) = phi.sin_cos();
    [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]]
}

fn y_mat() -> M2 {
    [[ZERO, C::new(0.0, -1.0)], [C::new(0.0, 1.0), ZERO]]
}

fn z_mat() -> M2 {
    [[C::new(1.0, 0.0), ZERO], [ZERO, C::new(-1.0, 0.0)]]
}

fn scalar_to_c(s: Scalar) -> C {
    C::new(s.to_f64(), s.imag_f64())
}

fn sparse_to_c(state: &SparseState) -> Vec<(u64, C)> {
    let mut v: Vec<(u64, C)> = state.iter().map(|(&z, &a)| (z, scalar_to_c(a))).collect();
    v.sort_by_key(|&(z, _)| z);
    v
}

/// Pauli in shift/mask form: P|z⟩ = phase·(−1)^{|z∧zmask|}|z ⊕ xshift⟩.
#[derive(Clone, Debug)]
struct ShiftPauli {
    xshift: u64,
    zmask: u64,
    phase: C,
}

impl ShiftPauli {
    fn new(p: &Pauli) -> Self {
        let phase = match p.phase % 4 {
            0 => C::new(1.0, 0.0),
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        };
        ShiftPauli { xshift: bits_of(&p.x), zmask: bits_of(&p.z), phase }
    }
}

/// One factor of the mid-circuit operator in conjugated form.
#[derive(Clone, Debug)]
enum MidFactor {
    /// Encoded image of a check-wire CX: ½(I + S + D − SD).
    Routed { s: ShiftPauli, d: ShiftPauli, sd: ShiftPauli },
    /// Encoded image of H on a logical slot: (X̃ + Z̃)/√2.
    Hadamard { x: ShiftPauli, z: ShiftPauli },
}

/// Accepted-map evaluator for one measurement routine.
struct CheckEngine {
    n: usize,
    t: usize,
    passes: usize,
    /// Enc(input ⊗ Bell fillers ⊗ 0), one per target label; these states
    /// are also the accepted-output duals (fillers are verified).
    kets: Vec<Vec<(u64, C)>>,
    /// Mid-circuit factors, in application order (two-pass only).
    mid: Vec<MidFactor>,
}

/// Scratch buffers reused across routine evaluations. The f64 buffers hold
/// the frontier interleaved as [state][column][re, im].
pub struct Workspace {
    v: Vec<f64>,
    u: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Workspace { v: Vec::new(), u: Vec::new() }
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Self::new()
    }
}

impl CheckEngine {
    fn new(job: &CheckJob) -> Result<Self, Error> {
        let code = &job.inner;
        let n = code.n_inner;
        let k = code.k_inner;
        let t = job.targets.len();
        let enc = encoder(code)?;
        let passes = job.passes();

        let mut kets = Vec::with_capacity(1 << t);
        for label in 0..1u64 << t {
            let mut psi = basis_state(label);
            for pair in 0..(k - t) / 2 {
                let (w1, w2) = (t + 2 * pair, t + 2 * pair + 1);
                let mut bell = SparseState::new();
                bell.insert(0, Scalar::INV_SQRT2);
                bell.insert((1 << w1) | (1 << w2), Scalar::INV_SQRT2);
                psi = crate::enumerate::product_state(&psi, &bell);
            }
            kets.push(sparse_to_c(&apply_circuit(&psi, &enc.gates)));
        }

        let mut mid = Vec::new();
        if passes == 2 {
            let mixer = match std::env::var(format!("DISTILLERY_MIXER_{}", code.name)) {
                Ok(s) => crate::enumerate::parse_gate_list(&s),
                Err(_) => check_mixer(code),
            };
            for gate in mixer {
                let (c, tgt) = match gate {
                    Gate::CX(c, tgt) => (c, tgt),
                    other => {
                        return Err(Error::Simulation(format!(
                            "unsupported mixer gate {other:?}"
                        )))
                    }
                };
                debug_assert!(c >= k && tgt >= k, "mixer must act on check wires");
                let s = enc.tableau.z_images[c].clone();
                let d = enc.tableau.x_images[tgt].clone();
                let sd = s.mul(&d);
                mid.push(MidFactor::Routed {
                    s: ShiftPauli::new(&s),
                    d: ShiftPauli::new(&d),
                    sd: ShiftPauli::new(&sd),
                });
            }
            for slot in (1..t).step_by(2) {
                mid.push(MidFactor::Hadamard {
                    x: ShiftPauli::new(&enc.tableau.x_images[slot]),
                    z: ShiftPauli::new(&enc.tableau.z_images[slot]),
                });
            }
        }
        Ok(CheckEngine { n, t, passes, kets, mid })
    }

    /// Accepted Kraus map, row major over (out, in) labels. `cols[pass][c]`
    /// holds the per-wire 2×2 column operators, column 0 applied first.
    fn accepted_kraus(&self, cols: &[[Vec<M2>; 2]], ws: &mut Workspace) -> Vec<C> {
        let dim = 1 << self.t;
        let mut m = vec![ZERO; dim * dim];
        let mut layers: Vec<Vec<M2>> = Vec::with_capacity(self.passes);
        for branch in 0..2 {
            layers.clear();
            for pass in 0..self.passes {
                let mut layer = Vec::with_capacity(self.n);
                for w in 0..self.n {
                    let op = if branch == 0 {
                        mul2(&cols[pass][1][w], &cols[pass][0][w])
                    } else {
                        mul2(&cols[pass][1][w], &mul2(&z_mat(), &cols[pass][0][w]))
                    };
                    layer.push(op);
                }
                layers.push(layer);
            }
            if self.passes == 1 {
                self.bilinear(&layers[0], &mut m);
            } else {
                self.frontier(&layers, &mut m, ws);
            }
        }
        for e in m.iter_mut() {
            *e *= 0.5;
        }
        m
    }

    /// ⟨dual|⊗L|ket⟩ with both sides sparse (single pass).
    fn bilinear(&self, layer: &[M2], m: &mut [C]) {
        let dim = 1 << self.t;
        for (o, dual) in self.kets.iter().enumerate() {
            for &(x, dx) in dual {
                for (i, ket) in self.kets.iter().enumerate() {
                    let mut acc = ZERO;
                    for &(y, ky) in ket {
                        let mut prod = ky;
                        for w in 0..self.n {
                            let r = (x >> w) & 1;
                            let c = (y >> w) & 1;
                            prod *= layer[w][r as usize][c as usize];
                        }
                        acc += prod;
                    }
                    m[o * dim + i] += dx.conj() * acc;
                }
            }
        }
    }

    /// Dense-frontier evaluation of layer₂ ∘ mid ∘ layer₁ (two passes).
    /// The frontier is interleaved f64 [state][column][re, im]; fault-free
    /// layers are real rotations and take a fused two-lane kernel.
    fn frontier(&self, layers: &[Vec<M2>], m: &mut [C], ws: &mut Workspace) {
        let dim = 1 << self.t;
        let width = 2 * dim;
        let size = 1usize << self.n;
        ws.v.clear();
        ws.v.resize(size * width, 0.0);
        for (i, ket) in self.kets.iter().enumerate() {
            for &(z, amp) in ket {
                ws.v[z as usize * width + 2 * i] = amp.re;
                ws.v[z as usize * width + 2 * i + 1] = amp.im;
            }
        }
        apply_layer(&mut ws.v, &layers[0], self.n, width);
        ws.u.clear();
        ws.u.resize(size * width, 0.0);
        for factor in &self.mid {
            let half = C::new(0.5, 0.0);
            let r = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            let terms: Vec<(&ShiftPauli, C)> = match factor {
                MidFactor::Routed { s, d, sd } => vec![(s, half), (d, half), (sd, -half)],
                MidFactor::Hadamard { x, z } => vec![(x, r), (z, r)],
            };
            let identity = if matches!(factor, MidFactor::Routed { .. }) { 0.5 } else { 0.0 };
            pauli_mix(&mut ws.u, &ws.v, identity, &terms, width);
            std::mem::swap(&mut ws.v, &mut ws.u);
        }
        apply_layer(&mut ws.v, &layers[1], self.n, width);
        for (o, dual) in self.kets.iter().enumerate() {
            for &(z, amp) in dual {
                let base = z as usize * width;
                let a = amp.conj();
                for i in 0..dim {
                    let val = C::new(ws.v[base + 2 * i], ws.v[base + 2 * i + 1]);
                    m[o * dim + i] += a * val;
                }
            }
        }
    }
}

/// dst[y] = identity·src[y] + Σⱼ scaleⱼ·(Pⱼ src)[y] in one gather sweep.
fn pauli_mix(dst: &mut [f64], src: &[f64], identity: f64, terms: &[(&ShiftPauli, C)], width: usize) {
    // Fold the xshift-dependent part of the Pauli sign into the scale so the
    // remaining sign depends only on parity(y & zmask).
    let folded: Vec<(u64, u64, C)> = terms
        .iter()
        .map(|&(p, coeff)| {
            let flip = (p.xshift & p.zmask).count_ones() & 1 == 1;
            let scale = if flip { -coeff * p.phase } else { coeff * p.phase };
            (p.xshift, p.zmask, scale)
        })
        .collect();
    if folded.iter().all(|&(_, _, s)| s.im == 0.0) {
        let real: Vec<(u64, u64, f64)> =
            folded.iter().map(|&(x, z, s)| (x, z, s.re)).collect();
        match width {
            4 => pauli_mix_w::<4>(dst, src, identity, &real),
            8 => pauli_mix_w::<8>(dst, src, identity, &real),
            16 => pauli_mix_w::<16>(dst, src, identity, &real),
            32 => pauli_mix_w::<32>(dst, src, identity, &real),
            64 => pauli_mix_w::<64>(dst, src, identity, &real),
            _ => {
                let n_states = src.len() / width;
                for y in 0..n_states as u64 {
                    let b = y as usize * width;
                    for c in 0..width {
                        dst[b + c] = identity * src[b + c];
                    }
                    for &(xshift, zmask, scale) in &real {
                        let s = if (y & zmask).count_ones() & 1 == 1 { -scale } else { scale };
                        let f = (y ^ xshift) as usize * width;
                        for c in 0..width {
                            dst[b + c] += s * src[f + c];
                        }
                    }
                }
            }
        }
        return;
    }
    let n_states = src.len() / width;
    for y in 0..n_states as u64 {
        let b = y as usize * width;
        let to = &mut dst[b..b + width];
        for (c, e) in to.iter_mut().enumerate() {
            *e = identity * src[b + c];
        }
        for &(xshift, zmask, scale) in &folded {
            let s = if (y & zmask).count_ones() & 1 == 1 { -scale } else { scale };
            let f = (y ^ xshift) as usize * width;
            for (c, e) in to.chunks_exact_mut(2).enumerate() {
                let x = C::new(src[f + 2 * c], src[f + 2 * c + 1]) * s;
                e[0] += x.re;
                e[1] += x.im;
            }
        }
    }
}

fn pauli_mix_w<const W: usize>(dst: &mut [f64], src: &[f64], identity: f64, terms: &[(u64, u64, f64)]) {
    let n_states = src.len() / W;
    for y in 0..n_states as u64 {
        let b = y as usize * W;
        let mut acc = [0.0f64; W];
        for c in 0..W {
            acc[c] = identity * src[b + c];
        }
        for &(xshift, zmask, scale) in terms {
            let s = if (y & zmask).count_ones() & 1 == 1 { -scale } else { scale };
            let f = (y ^ xshift) as usize * W;
            for c in 0..W {
                acc[c] += s * src[f + c];
            }
        }
        dst[b..b + W].copy_from_slice(&acc);
    }
}

fn apply_layer(v: &mut [f64], layer: &[M2], n: usize, width: usize) {
    match width {
        4 => apply_layer_w::<4>(v, layer, n),
        8 => apply_layer_w::<8>(v, layer, n),
        16 => apply_layer_w::<16>(v, layer, n),
        32 => apply_layer_w::<32>(v, layer, n),
        64 => apply_layer_w::<64>(v, layer, n),
        _ => apply_layer_dyn(v, layer, n, width),
    }
}

fn apply_layer_dyn(v: &mut [f64], layer: &[M2], n: usize, width: usize) {
    let size = 1usize << n;
    for (w, op) in layer.iter().enumerate().take(n) {
        let bit = 1usize << w;
        for base in (0..size).step_by(2 * bit) {
            for z in base..base + bit {
                let (b0, b1) = (z * width, (z | bit) * width);
                for c in (0..width).step_by(2) {
                    let a = C::new(v[b0 + c], v[b0 + c + 1]);
                    let b = C::new(v[b1 + c], v[b1 + c + 1]);
                    let na = op[0][0] * a + op[0][1] * b;
                    let nb = op[1][0] * a + op[1][1] * b;
                    v[b0 + c] = na.re;
                    v[b0 + c + 1] = na.im;
                    v[b1 + c] = nb.re;
                    v[b1 + c + 1] = nb.im;
                }
            }
        }
    }
}

fn apply_layer_w<const W: usize>(v: &mut [f64], layer: &[M2], n: usize) {
    let size = 1usize << n;
    if layer.iter().take(n).flatten().flatten().any(|e| e.im != 0.0) {
        // Faulted columns can be complex; take the general per-wire kernel.
        for (w, op) in layer.iter().enumerate().take(n) {
            let bit = 1usize << w;
            for base in (0..size).step_by(2 * bit) {
                for z in base..base + bit {
                    let (b0, b1) = (z * W, (z | bit) * W);
                    for c in (0..W).step_by(2) {
                        let a = C::new(v[b0 + c], v[b0 + c + 1]);
                        let b = C::new(v[b1 + c], v[b1 + c + 1]);
                        let na = op[0][0] * a + op[0][1] * b;
                        let nb = op[1][0] * a + op[1][1] * b;
                        v[b0 + c] = na.re;
                        v[b0 + c + 1] = na.im;
                        v[b1 + c] = nb.re;
                        v[b1 + c + 1] = nb.im;
                    }
                }
            }
        }
        return;
    }
    // All ops real (the fault-free case): fuse four wires at a time into a
    // 16×16 Kronecker block so the frontier is swept n/4 times instead of n.
    let mut w0 = 0;
    while w0 + 8 <= n {
        let mut ops = [[[0.0f64; 2]; 2]; 8];
        for (i, op) in ops.iter_mut().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    op[r][c] = layer[w0 + i][r][c].re;
                }
            }
        }
        apply_group::<W, 8, 256>(v, &ops, w0, n);
        w0 += 8;
    }
    while w0 + 4 <= n {
        let mut ops = [[[0.0f64; 2]; 2]; 4];
        for (i, op) in ops.iter_mut().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    op[r][c] = layer[w0 + i][r][c].re;
                }
            }
        }
        apply_group::<W, 4, 16>(v, &ops, w0, n);
        w0 += 4;
    }
    for (w, op) in layer.iter().enumerate().take(n).skip(w0) {
        let bit = 1usize << w;
        let (m00, m01) = (op[0][0].re, op[0][1].re);
        let (m10, m11) = (op[1][0].re, op[1][1].re);
        for base in (0..size).step_by(2 * bit) {
            for z in base..base + bit {
                let (b0, b1) = (z * W, (z | bit) * W);
                for c in 0..W {
                    let a = v[b0 + c];
                    let b = v[b1 + c];
                    v[b0 + c] = m00 * a + m01 * b;
                    v[b1 + c] = m10 * a + m11 * b;
                }
            }
        }
    }
}

/// One memory sweep applying G real 2×2 gates to wires shift..shift+G,
/// as butterflies over a cached R-row block (R = 2^G).
fn apply_group<const W: usize, const G: usize, const R: usize>(
    v: &mut [f64],
    ops: &[[[f64; 2]; 2]; G],
    shift: usize,
    n: usize,
) {
    debug_assert_eq!(R, 1 << G);
    let size = 1usize << n;
    let stride = 1usize << shift;
    for hi in (0..size).step_by(R * stride) {
        for lo in hi..hi + stride {
            let mut blk = [[0.0f64; W]; R];
            for (j, row) in blk.iter_mut().enumerate() {
                let a = (lo + (j << shift)) * W;
                row.copy_from_slice(&v[a..a + W]);
            }
            for (i, op) in ops.iter().enumerate() {
                let bit = 1usize << i;
                let (m00, m01) = (op[0][0], op[0][1]);
                let (m10, m11) = (op[1][0], op[1][1]);
                for j in 0..R {
                    if j & bit != 0 {
                        continue;
                    }
                    let (lo_row, hi_row) = blk.split_at_mut(j | bit);
                    let (a, b) = (&mut lo_row[j], &mut hi_row[0]);
                    for c in 0..W {
                        let x = a[c];
                        let y = b[c];
                        a[c] = m00 * x + m01 * y;
                        b[c] = m10 * x + m11 * y;
                    }
                }
            }
            for (j, row) in blk.iter().enumerate() {
                let a = (lo + (j << shift)) * W;
                v[a..a + W].copy_from_slice(row);
            }
        }
    }
}

/// Monte Carlo configuration: over-rotation half-width θ, run count, seed.
#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub theta: f64,
    pub runs: u64,
    pub seed: u64,
}

/// Aggregate outcome of a Monte Carlo sweep at one noise point.
#[derive(Clone, Copy, Debug)]
pub struct RunStats {
    pub attempted: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Mean of 1 − |⟨H…H|ψ⟩|² over accepted runs.
    pub mean_infidelity: f64,
    /// Standard error of the mean infidelity.
    pub stderr_infidelity: f64,
}

/// Outcome of one exact Pauli injection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Injection {
    pub accepted: bool,
    /// Output damaged (any residual on the accepted outputs).
    pub output_bad: bool,
}

/// Input infidelity of the uniform over-rotation model,
/// ε(θ) = 1/2 − sin θ / (2θ).
pub fn epsilon_of_theta(theta: f64) -> f64 {
    let t = theta.abs();
    if t < 1e-4 {
        let t2 = t * t;
        t2 / 12.0 - t2 * t2 / 240.0
    } else {
        0.5 - t.sin() / (2.0 * t)
    }
}

/// Inverse of `epsilon_of_theta` on (0, 1/2), by bisection.
pub fn theta_of_epsilon(eps: f64) -> Result<f64, Error> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Simulation(format!("epsilon {eps} out of range (0, 0.5)")));
    }
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if epsilon_of_theta(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares fit of ε_out ≈ c·ε_in^d on log/log points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64), Error> {
    if points.len() < 2 {
        return Err(Error::Simulation("power-law fit needs at least two points".into()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::Simulation("power-law fit needs positive points".into()));
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (lx, ly) = (x.ln(), y.ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::Simulation("power-law fit is degenerate".into()));
    }
    let d = (n * sxy - sx * sy) / denom;
    let c = ((sy - d * sx) / n).exp();
    Ok((c, d))
}

fn build_engines(p: &Protocol) -> Result<Vec<Vec<CheckEngine>>, Error> {
    p.stages
        .iter()
        .map(|stage| stage.jobs.iter().map(CheckEngine::new).collect())
        .collect()
}

/// Per-wire column operator: noisy T^± as a Y-rotation, times an optional
/// injected Y fault.
fn column_op(dagger: bool, delta: f64, fault: bool) -> M2 {
    let base = if dagger {
        rot(std::f64::consts::FRAC_PI_8 + delta / 2.0)
    } else {
        rot(-std::f64::consts::FRAC_PI_8 + delta / 2.0)
    };
    if fault {
        mul2(&y_mat(), &base)
    } else {
        base
    }
}

enum Noise<'a> {
    Angles { theta: f64, rng: &'a mut ChaCha8Rng },
    Faults { flags: &'a [bool] },
}

impl Noise<'_> {
    fn delta(&mut self) -> f64 {
        match self {
            Noise::Angles { theta, rng } => {
                if *theta > 0.0 {
                    rng.gen_range(-*theta..=*theta)
                } else {
                    0.0
                }
            }
            Noise::Faults { .. } => 0.0,
        }
    }

    fn fault(&self, loc_index: usize) -> bool {
        match self {
            Noise::Angles { .. } => false,
            Noise::Faults { flags } => flags[loc_index],
        }
    }
}

/// Applies the accepted map to the outer register on the target wires and
/// returns the acceptance probability (outer state assumed normalized).
fn apply_kraus(psi: &mut [C], m: &[C], targets: &[usize]) -> f64 {
    let t = targets.len();
    let dim = 1 << t;
    let size = psi.len();
    let masks: Vec<usize> = targets.iter().map(|&q| 1usize << q).collect();
    let all: usize = masks.iter().sum();
    let mut norm = 0.0;
    let mut old = vec![ZERO; dim];
    for rest in 0..size {
        if rest & all != 0 {
            continue;
        }
        for i in 0..dim {
            let mut idx = rest;
            for (s, &mask) in masks.iter().enumerate() {
                if (i >> s) & 1 == 1 {
                    idx |= mask;
                }
            }
            old[i] = psi[idx];
        }
        for o in 0..dim {
            let mut acc = ZERO;
            for (i, &a) in old.iter().enumerate() {
                acc += m[o * dim + i] * a;
            }
            let mut idx = rest;
            for (s, &mask) in masks.iter().enumerate() {
                if (o >> s) & 1 == 1 {
                    idx |= mask;
                }
            }
            psi[idx] = acc;
            norm += acc.norm_sqr();
        }
    }
    norm
}

/// Overlap with the ideal all-|H⟩ product output.
fn target_overlap(psi: &[C], n: usize) -> C {
    let c = std::f64::consts::FRAC_PI_8.cos();
    let s = std::f64::consts::FRAC_PI_8.sin();
    let mut amp = ZERO;
    for (z, &a) in psi.iter().enumerate() {
        let w = (z as u64).count_ones() as i32;
        amp += a * c.powi(n as i32 - w) * s.powi(w);
    }
    amp
}

/// Walks one protocol execution. Returns None if a postselection rejects;
/// in fault mode, errors if any postselection is not deterministic.
fn execute(
    p: &Protocol,
    engines: &[Vec<CheckEngine>],
    mut noise: Noise<'_>,
    ws: &mut Workspace,
) -> Result<Option<f64>, Error> {
    let n_out = p.n_outer;
    let mut loc = 0usize;

    // Noisy magic-state preparation on every outer qubit.
    let mut psi = vec![ZERO; 1 << n_out];
    psi[0] = C::new(1.0, 0.0);
    for q in 0..n_out {
        let delta = noise.delta();
        let op = column_op(true, delta, noise.fault(loc));
        loc += 1;
        let bit = 1usize << q;
        for z in 0..psi.len() {
            if z & bit == 0 && psi[z] != ZERO {
                let a = psi[z];
                psi[z] = op[0][0] * a;
                psi[z | bit] = op[1][0] * a;
            }
        }
    }

    let mut cols: [[Vec<M2>; 2]; 2] = Default::default();
    for (s, stage) in p.stages.iter().enumerate() {
        for (j, job) in stage.jobs.iter().enumerate() {
            let engine = &engines[s][j];
            for pass in 0..engine.passes {
                for dagger in [false, true] {
                    let col = &mut cols[pass][dagger as usize];
                    col.clear();
                    for _wire in 0..engine.n {
                        let delta = noise.delta();
                        col.push(column_op(dagger, delta, noise.fault(loc)));
                        loc += 1;
                    }
                }
            }
            let m = engine.accepted_kraus(&cols[..engine.passes], ws);
            let p_acc = apply_kraus(&mut psi, &m, &job.targets);
            match &mut noise {
                Noise::Angles { rng, .. } => {
                    if rng.gen::<f64>() >= p_acc {
                        return Ok(None);
                    }
                }
                Noise::Faults { .. } => {
                    // Post-select on acceptance; a pattern is rejected only
                    // when no acceptance amplitude survives at all.
                    if p_acc < 1e-9 {
                        return Ok(None);
                    }
                }
            }
            let scale = C::new(1.0 / p_acc.sqrt(), 0.0);
            psi.iter_mut().for_each(|a| *a *= scale);
        }
    }
    let infid = (1.0 - target_overlap(&psi, n_out).norm_sqr()).max(0.0);
    Ok(Some(infid))
}

/// Monte Carlo sweep of a protocol at one noise point. Runs execute in
/// parallel; each takes its own RNG stream, so the result is independent
/// of thread count.
pub fn run(p: &Protocol, cfg: &SimConfig) -> Result<RunStats, Error> {
    let engines = build_engines(p)?;
    let outcomes: Vec<Option<f64>> = (0..cfg.runs)
        .into_par_iter()
        .map_init(Workspace::new, |ws, r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r);
            execute(p, &engines, Noise::Angles { theta: cfg.theta, rng: &mut rng }, ws)
                .ok()
                .flatten()
        })
        .collect();
    let accepted: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let acc = accepted.len() as u64;
    let mean = if acc > 0 { accepted.iter().sum::<f64>() / acc as f64 } else { 0.0 };
    let var = if acc > 1 {
        accepted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (acc as f64 - 1.0)
    } else {
        0.0
    };
    Ok(RunStats {
        attempted: cfg.runs,
        accepted: acc,
        acceptance_rate: acc as f64 / cfg.runs as f64,
        mean_infidelity: mean,
        stderr_infidelity: if acc > 1 { (var / acc as f64).sqrt() } else { 0.0 },
    })
}

/// Places Y faults at the given fault-location indices (θ = 0 elsewhere),
/// post-selects every check on acceptance, and reports whether any
/// acceptance amplitude survives and whether the accepted output has
/// fidelity below 1 − 1e−9.
pub fn inject_pauli(p: &Protocol, fault_locs: &[usize]) -> Result<Injection, Error> {
    let locations = p.fault_locations();
    let mut flags = vec![false; locations.len()];
    for &ix in fault_locs {
        if ix >= flags.len() {
            return Err(Error::Simulation(format!(
                "fault location {ix} out of range ({} locations)",
                flags.len()
            )));
        }
        flags[ix] = true;
    }
    let engines = build_engines(p)?;
    let mut ws = Workspace::new();
    match execute(p, &engines, Noise::Faults { flags: &flags }, &mut ws)? {
        None => Ok(Injection { accepted: false, output_bad: false }),
        Some(infid) => Ok(Injection { accepted: true, output_bad: infid > 1e-9 }),
    }
}

/// Statevector verification of an encoder: exact round trip on basis
/// states, +1 stabilizer eigenvalues on the encoded block, and correct
/// logical-Z readout on every slot.
pub fn verify_encoder(code: &CssCode) -> Result<(), Error> {
    let enc = encoder(code)?;
    let n = code.n_inner;
    let labels: Vec<u64> = (0..n as u64).map(|i| 1 << i).chain([0, (1 << n) - 1]).collect();
    for label in labels {
        let encoded = apply_circuit(&basis_state(label), &enc.gates);
        let back = apply_circuit(&encoded, &enc.decode_gates());
        let expect = basis_state(label);
        if crate::exact::inner(&expect, &back) != Scalar::ONE {
            return Err(Error::Simulation(format!(
                "{}: encode/decode round trip fails on |{label:b}⟩",
                code.name
            )));
        }
        // Stabilizer and logical-Z eigenvalues only apply inside the
        // codespace, i.e. when no check wire is excited.
        if label >> code.k_inner != 0 {
            continue;
        }
        for s in code.stabilizer_paulis() {
            let moved = crate::exact::apply_pauli(&encoded, &s);
            if crate::exact::inner(&encoded, &moved) != Scalar::ONE {
                return Err(Error::Simulation(format!(
                    "{}: stabilizer {s:?} not +1 on encoded |{label:b}⟩",
                    code.name
                )));
            }
        }
        for slot in 0..code.k_inner {
            let moved = crate::exact::apply_pauli(&encoded, &code.logical_z(slot));
            let want = if (label >> slot) & 1 == 1 { -1.0 } else { 1.0 };
            let got = crate::exact::inner(&encoded, &moved);
            if (got.to_f64() - want).abs() > 0.0 || got.imag_f64() != 0.0 {
                return Err(Error::Simulation(format!(
                    "{}: logical Z on slot {slot} reads wrongly",
                    code.name
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inner::library_code;
    use crate::protocol::preset;

    #[test]
    fn rotation_identities() {
        // R(π/8)·Z·R(−π/8) = H per wire, the clean branch-1 column algebra.
        let h = mul2(&rot(std::f64::consts::FRAC_PI_8), &mul2(&z_mat(), &rot(-std::f64::consts::FRAC_PI_8)));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (row, want) in h.iter().zip([[r, r], [r, -r]]) {
            for (got, w) in row.iter().zip(want) {
                assert!((got.re - w).abs() < 1e-12 && got.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn epsilon_theta_round_trip() {
        for eps in [1e-4, 1e-3, 3e-3, 1e-2, 0.1] {
            let theta = theta_of_epsilon(eps).unwrap();
            assert!((epsilon_of_theta(theta) - eps).abs() < 1e-12 * eps.max(1e-9));
        }
        // Small-θ series agrees with the closed form where both are stable.
        let theta = 1e-3f64;
        let series = theta * theta / 12.0 - theta.powi(4) / 240.0;
        assert!((epsilon_of_theta(theta) - series).abs() < 1e-15);
    }

    #[test]
    fn power_law_fit_recovers_exact_data() {
        let pts: Vec<(f64, f64)> =
            [1e-3f64, 3e-3, 1e-2].iter().map(|&x| (x, 35.0 * x.powi(3))).collect();
        let (c, d) = fit_power_law(&pts).unwrap();
        assert!((c - 35.0).abs() < 1e-9 && (d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn encoders_verify() {
        for name in ["4_2_2", "7_1_3", "16_6_4", "16_2_4", "17_1_5"] {
            verify_encoder(&library_code(name).unwrap()).unwrap();
        }
    }

    #[test]
    fn clean_runs_accept_and_output_magic_states() {
        for name in ["4", "7", "16"] {
            let p = preset(name).unwrap();
            let stats =
                run(&p, &SimConfig { theta: 0.0, runs: 4, seed: 7 }).unwrap();
            assert_eq!(stats.accepted, 4, "{name}");
            assert!(stats.mean_infidelity < 1e-12, "{name}: {}", stats.mean_infidelity);
        }
    }

    #[test]
    fn injection_with_no_faults_is_clean() {
        let p = preset("7").unwrap();
        let inj = inject_pauli(&p, &[]).unwrap();
        assert_eq!(inj, Injection { accepted: true, output_bad: false });
    }

    #[test]
    fn single_fault_on_steane_is_always_detected() {
        let p = preset("7").unwrap();
        let total = p.fault_locations().len();
        assert_eq!(total, 15);
        for ix in 0..total {
            let inj = inject_pauli(&p, &[ix]).unwrap();
            // An input fault or a lone in-block fault never slips through.
            assert!(!inj.accepted || !inj.output_bad, "location {ix}");
        }
    }

    #[test]
    fn acceptance_rate_tracks_t_count() {
        // P(accept) ≈ (1 − ε)^{n_T} for small noise.
        let p = preset("7").unwrap();
        let eps = 3e-3;
        let theta = theta_of_epsilon(eps).unwrap();
        let stats = run(&p, &SimConfig { theta, runs: 4000, seed: 11 }).unwrap();
        let expect = (1.0 - eps).powi(15);
        let sigma = (expect * (1.0 - expect) / 4000.0).sqrt();
        assert!(
            (stats.acceptance_rate - expect).abs() < 4.0 * sigma,
            "rate {} vs {expect}",
            stats.acceptance_rate
        );
    }

    #[test]
    fn runs_are_reproducible() {
        let p = preset("4").unwrap();
        let cfg = SimConfig { theta: 0.2, runs: 200, seed: 3 };
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.mean_infidelity.to_bits(), b.mean_infidelity.to_bits());
    }
}
