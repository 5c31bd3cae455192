use distillery::enumerate::error_polynomial;
use distillery::protocol::preset;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let vocab = args[1].clone();
    let len: usize = args[2].parse().unwrap();
    let s0: u64 = args[3].parse().unwrap();
    let s1: u64 = args[4].parse().unwrap();
    for seed in s0..s1 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut gates = Vec::new();
        for _ in 0..len {
            let roll: f64 = rng.gen();
            let g = match vocab.as_str() {
                "cx" => {
                    let c = rng.gen_range(11..16usize);
                    let mut t = rng.gen_range(6..16usize);
                    while t == c {
                        t = rng.gen_range(6..16);
                    }
                    format!("CX {c} {t}")
                }
                "cxs" => {
                    let c = rng.gen_range(11..16usize);
                    if roll < 0.35 {
                        let t = rng.gen_range(0..6usize);
                        format!("CX {c} {t}")
                    } else {
                        let mut t = rng.gen_range(6..16usize);
                        while t == c {
                            t = rng.gen_range(6..16);
                        }
                        format!("CX {c} {t}")
                    }
                }
                "cxz" => {
                    if roll < 0.25 {
                        let a = rng.gen_range(11..16usize);
                        let mut b = rng.gen_range(11..16usize);
                        while b == a {
                            b = rng.gen_range(11..16);
                        }
                        format!("CZ {a} {b}")
                    } else if roll < 0.40 {
                        let a = rng.gen_range(6..16usize);
                        format!("Z {a}")
                    } else {
                        let c = rng.gen_range(11..16usize);
                        let mut t = rng.gen_range(6..16usize);
                        while t == c {
                            t = rng.gen_range(6..16);
                        }
                        format!("CX {c} {t}")
                    }
                }
                _ => {
                    if roll < 0.20 {
                        let a = rng.gen_range(11..16usize);
                        let mut b = rng.gen_range(11..16usize);
                        while b == a {
                            b = rng.gen_range(11..16);
                        }
                        format!("CZ {a} {b}")
                    } else if roll < 0.30 {
                        let a = rng.gen_range(6..16usize);
                        format!("Z {a}")
                    } else if roll < 0.45 {
                        let c = rng.gen_range(11..16usize);
                        let t = rng.gen_range(0..6usize);
                        format!("CX {c} {t}")
                    } else if roll < 0.55 {
                        let a = rng.gen_range(11..16usize);
                        format!("S {a}")
                    } else {
                        let c = rng.gen_range(11..16usize);
                        let mut t = rng.gen_range(6..16usize);
                        while t == c {
                            t = rng.gen_range(6..16);
                        }
                        format!("CX {c} {t}")
                    }
                }
            };
            gates.push(g);
        }
        let spec = gates.join(",");
        std::env::set_var("DISTILLERY_MIXER_16_6_4", &spec);
        let p = preset("16").unwrap();
        let t0 = std::time::Instant::now();
        let t3 = error_polynomial(&p, 3).unwrap();
        let b2 = t3.accepted_bad[2].to_f64().unwrap();
        let b3 = t3.accepted_bad[3].to_f64().unwrap();
        if b2 != 0.0 || b3 != 0.0 {
            println!("16 {vocab} len{len} seed {seed}: bad2={b2} bad3={b3} skip ({:?})", t0.elapsed());
            continue;
        }
        let t4 = error_polynomial(&p, 4).unwrap();
        let b4 = t4.accepted_bad[4].to_f64().unwrap();
        let hit = if (7250.0..7350.0).contains(&b4) { "  <<< HIT" } else { "" };
        println!("16 {vocab} len{len} seed {seed}: bad2=0 bad3=0 bad4={b4}{hit} ({:?})", t0.elapsed());
        println!("  gates: {spec}");
    }
}
