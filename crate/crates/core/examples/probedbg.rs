use distillery::enumerate::error_polynomial;
use distillery::protocol::preset;
use num_traits::ToPrimitive;

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let wmax: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let t0 = std::time::Instant::now();
    let tally = error_polynomial(&preset(&name).unwrap(), wmax).unwrap();
    for w in 0..=wmax {
        println!(
            "{name} w={w}: bad={:.6} good={:.6} rej={:.6}",
            tally.accepted_bad[w].to_f64().unwrap(),
            tally.accepted_good[w].to_f64().unwrap(),
            tally.rejected[w].to_f64().unwrap()
        );
    }
    println!("elapsed {:?}", t0.elapsed());
}
