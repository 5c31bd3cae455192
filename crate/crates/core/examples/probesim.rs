use distillery::enumerate::pattern_outcome;
use distillery::f2core::BitVector;
use distillery::protocol::preset;
use num_traits::{One, Zero};
use distillery::simulate::{inject_pauli, run, theta_of_epsilon, SimConfig};

fn main() {
    let mode = std::env::args().nth(1).unwrap();
    match mode.as_str() {
        "xval" => {
            let name = std::env::args().nth(2).unwrap();
            let wmax: usize = std::env::args().nth(3).unwrap().parse().unwrap();
            let p = preset(&name).unwrap();
            let total = p.fault_locations().len();
            let mut checked = 0u64;
            let mut combos: Vec<Vec<usize>> = vec![vec![]];
            for w in 1..=wmax {
                let mut idx: Vec<usize> = (0..w).collect();
                loop {
                    combos.push(idx.clone());
                    let mut i = w;
                    loop {
                        if i == 0 { break; }
                        i -= 1;
                        if idx[i] != i + total - w { break; }
                    }
                    if idx[i] == i + total - w { break; }
                    idx[i] += 1;
                    for j in i + 1..w { idx[j] = idx[j - 1] + 1; }
                }
            }
            for locs in &combos {
                let mut bits = BitVector::zeros(total);
                for &ix in locs { bits.set(ix, true); }
                let (acc, good) = pattern_outcome(&p, &bits).unwrap();
                let b = inject_pauli(&p, locs).unwrap();
                let a_accepted = !acc.is_zero();
                let a_bad = a_accepted && good != acc;
                assert_eq!((a_accepted, a_bad), (b.accepted, b.output_bad),
                    "mismatch at {locs:?}: enumerate ({acc}, {good}) vs inject {b:?}");
                checked += 1;
            }
            println!("{name} w<={wmax}: {checked} patterns agree");
        }
        "mc" => {
            let name = std::env::args().nth(2).unwrap();
            let runs: u64 = std::env::args().nth(3).unwrap().parse().unwrap();
            let p = preset(&name).unwrap();
            for eps in [1e-3, 3e-3, 1e-2] {
                let theta = theta_of_epsilon(eps).unwrap();
                let t0 = std::time::Instant::now();
                let s = run(&p, &SimConfig { theta, runs, seed: 1 }).unwrap();
                println!(
                    "{name} eps={eps:.0e}: acc={:.4} out={:.3e} +- {:.1e}  ({:?})",
                    s.acceptance_rate, s.mean_infidelity, s.stderr_infidelity, t0.elapsed()
                );
            }
        }
        _ => panic!("unknown mode"),
    }
}
