use std::time::Instant;
use tunlife::quad::QuadratureConfig;
use tunlife::regularized;
use tunlife::spectral::PotentialSpec;

#[test]
fn timing() {
    let spec = PotentialSpec::with_ell_one(1.0, -4.0).unwrap();
    let cfg = QuadratureConfig { rel_tol: 1e-7, ..QuadratureConfig::default() };
    for ab in [0.2, 0.025] {
        let t = Instant::now();
        let d = regularized::regularized_denominator(&spec, ab, &cfg).unwrap();
        println!("D({ab}) = {d:.8e}   [{:?}]", t.elapsed());
        let t = Instant::now();
        let n = regularized::regularized_numerator(&spec, ab, &cfg).unwrap();
        println!("N({ab}) = {n:.8e}   [{:?}]", t.elapsed());
    }
}
