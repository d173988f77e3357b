#[test]
fn probe_bracket_poly() {
    let mu: f64 = 0.9 * (10.0 / 64.0);
    let w = [1.0 - mu, mu];
    let mut p = vec![1.0f64];
    for _ in 0..64 {
        let mut out = vec![0.0; p.len() + 1];
        for (i, a) in p.iter().enumerate() {
            out[i] += a * w[0];
            out[i + 1] += a * w[1];
        }
        p = out;
    }
    p[1] -= 1.0;
    match easq_core::test_probe_all_roots(&p) {
        Some(roots) => {
            let mut mods: Vec<f64> = roots.iter().map(|r| r.norm()).collect();
            mods.sort_by(|a, b| a.partial_cmp(b).unwrap());
            println!("converged, {} roots, min {:e} max {:e}", roots.len(), mods[0], mods[mods.len()-1]);
        }
        None => println!("DID NOT CONVERGE"),
    }
}
