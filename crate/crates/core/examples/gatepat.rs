use distillery::circuits::encoder;
use distillery::inner::library_code;
fn main() {
    let code = library_code("16_6_4").unwrap();
    let enc = encoder(&code).unwrap();
    for c in code.k_inner..code.n_inner {
        let z = &enc.tableau.z_images[c];
        let x = &enc.tableau.x_images[c];
        println!(
            "wire {c}: z_image diag={} z={z}  x_image pureX={} x={x}",
            z.x.is_zero(),
            x.z.is_zero()
        );
    }
}
