use distillery::enumerate::error_polynomial;
use distillery::protocol::preset;
use num_traits::ToPrimitive;
fn main() {
    for name in ["16", "20"] {
        let t0 = std::time::Instant::now();
        let p = preset(name).unwrap();
        let tally = error_polynomial(&p, 4).unwrap();
        for w in 0..=4 {
            println!("{name} w={w} bad={} good={}", tally.accepted_bad[w], tally.accepted_good[w]);
        }
        println!("{name} bad(4) f64 = {}", tally.accepted_bad[4].to_f64().unwrap());
        println!("{name} took {:?}", t0.elapsed());
    }
}
