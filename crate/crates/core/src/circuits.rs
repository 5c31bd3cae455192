//! Encoder circuits for inner codes.
//!
//! The encoder is the Clifford taking wire i (i < k) to logical slot i and
//! the remaining n − k wires, prepared in |0⟩, to the stabilized block:
//! their Z operators map to the stabilizer generators. Signs are exact, so
//! the encoded all-zero state carries +1 for every stabilizer.

use crate::error::Error;
use crate::inner::CssCode;
use crate::pauli::{complete_partners, synthesize, Gate, Pauli, Tableau};

/// Synthesized encoder for one inner code.
#[derive(Clone, Debug)]
pub struct Encoder {
    pub tableau: Tableau,
    pub gates: Vec<Gate>,
    pub n: usize,
    pub k: usize,
}

impl Encoder {
    /// The inverse circuit (decode): reversed gate-wise inverses.
    pub fn decode_gates(&self) -> Vec<Gate> {
        self.gates.iter().rev().map(|g| g.inverse()).collect()
    }
}

/// Builds the encoder tableau from the code's logical and stabilizer
/// Paulis and synthesizes an explicit gate list.
pub fn encoder(code: &CssCode) -> Result<Encoder, Error> {
    let n = code.n_inner;
    let k = code.k_inner;
    let stabilizers = code.stabilizer_paulis();
    let mut logicals = Vec::with_capacity(2 * k);
    for slot in 0..k {
        logicals.push(code.logical_x(slot));
        logicals.push(code.logical_z(slot));
    }
    let destabilizers = complete_partners(&stabilizers, &logicals)?;

    let mut x_images = Vec::with_capacity(n);
    let mut z_images = Vec::with_capacity(n);
    for slot in 0..k {
        x_images.push(code.logical_x(slot));
        z_images.push(code.logical_z(slot));
    }
    for j in 0..n - k {
        x_images.push(destabilizers[j].clone());
        z_images.push(stabilizers[j].clone());
    }
    let tableau = Tableau { x_images, z_images };
    debug_assert!(tableau.is_valid());
    let gates = synthesize(&tableau)?;
    Ok(Encoder { tableau, gates, n, k })
}

/// Syndrome-routing layer inserted on the check wires while a block sits
/// decoded between the two passes of a hyperbolic measurement. Every gate
/// fixes |x⟩|0…0⟩, so the encoded action of decode → H → encode is still
/// exactly the logical Hadamard; what changes is the syndrome that a
/// first-pass fault presents at the final readout. The fixed lists below
/// keep cross-pass fault pairs of total weight below the code distance
/// detectable, and set the weight-d coincidence count of each protocol.
/// Wire indices are in the decoded frame (logical slots first, then check
/// wires), matching the encoder convention.
pub fn check_mixer(code: &CssCode) -> Vec<Gate> {
    use Gate::CX;
    match code.name.as_str() {
        "16_2_4" => vec![
            CX(15, 14),
            CX(6, 8),
            CX(10, 9),
            CX(5, 9),
            CX(10, 11),
            CX(9, 14),
            CX(7, 9),
            CX(6, 2),
            CX(9, 10),
            CX(4, 12),
            CX(2, 6),
            CX(15, 10),
            CX(14, 7),
            CX(4, 8),
            CX(2, 9),
            CX(9, 8),
            CX(3, 6),
            CX(5, 12),
            CX(12, 13),
            CX(10, 4),
            CX(7, 11),
            CX(5, 6),
            CX(12, 8),
            CX(3, 7),
        ],
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{apply_circuit, apply_pauli, basis_state, inner as dot, Scalar};
    use crate::inner::library_code;

    fn roundtrip_is_identity(name: &str) {
        let code = library_code(name).unwrap();
        let enc = encoder(&code).unwrap();
        // Conjugating wire operators through the circuit reproduces the
        // tableau images, including signs.
        for wire in 0..enc.n {
            let x = Pauli::from_x(&crate::f2core::BitVector::from_support(enc.n, &[wire]));
            let z = Pauli::from_z(&crate::f2core::BitVector::from_support(enc.n, &[wire]));
            assert_eq!(x.conjugate_by(&enc.gates), enc.tableau.x_images[wire]);
            assert_eq!(z.conjugate_by(&enc.gates), enc.tableau.z_images[wire]);
        }
    }

    #[test]
    fn encoders_realize_their_tableaus() {
        for name in ["4_2_2", "7_1_3", "16_6_4", "17_1_5"] {
            roundtrip_is_identity(name);
        }
    }

    #[test]
    fn encoded_zero_is_stabilized() {
        for name in ["4_2_2", "7_1_3", "16_6_4"] {
            let code = library_code(name).unwrap();
            let enc = encoder(&code).unwrap();
            let state = apply_circuit(&basis_state(0), &enc.gates);
            assert_eq!(dot(&state, &state), Scalar::ONE);
            for s in code.stabilizer_paulis() {
                let moved = apply_pauli(&state, &s);
                assert_eq!(dot(&moved, &state), Scalar::ONE, "{name}: {s:?}");
            }
            // Logical Z of every slot also reads +1 on the all-zero input.
            for slot in 0..code.k_inner {
                let moved = apply_pauli(&state, &code.logical_z(slot));
                assert_eq!(dot(&moved, &state), Scalar::ONE);
            }
        }
    }

    #[test]
    fn logical_x_flips_the_right_slot() {
        let code = library_code("7_1_3").unwrap();
        let enc = encoder(&code).unwrap();
        // X on wire 0 before encoding = logical X after encoding.
        let pre = apply_circuit(&basis_state(1), &enc.gates);
        let post = apply_pauli(&apply_circuit(&basis_state(0), &enc.gates), &code.logical_x(0));
        let overlap = dot(&pre, &post);
        assert_eq!(overlap.norm_sqr(), Scalar::ONE);
    }
}
