use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use setopt::oracle::fd_jacobian;
use setopt::problem::{builtin, load, BUILTIN_NAMES};

fn random_point(bounds: &[(f64, f64)], rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        bounds.len(),
        bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)),
    )
}

#[test]
fn problem_files_match_builtins() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in BUILTIN_NAMES {
        let path = format!("{}/problems/{name}.prob", env!("CARGO_MANIFEST_DIR"));
        let file = load(&path).unwrap();
        let reference = builtin(name).unwrap();
        assert_eq!(
            (file.n, file.m, file.p),
            (reference.n, reference.m, reference.p)
        );
        assert_eq!(file.cone, reference.cone, "{name}");
        assert_eq!(file.sample_box, reference.sample_box, "{name}");
        for _ in 0..100 {
            let x = random_point(&reference.sample_box, &mut rng);
            for i in 0..reference.p {
                let (a, b) = (file.value(i, &x).unwrap(), reference.value(i, &x).unwrap());
                let scale = 1.0 + b.amax();
                assert!(
                    (a - &b).amax() <= 1e-12 * scale,
                    "{name} f^{} at {x}",
                    i + 1
                );
                let (ja, jb) = (
                    file.jacobian(i, &x).unwrap(),
                    reference.jacobian(i, &x).unwrap(),
                );
                let scale = 1.0 + jb.amax();
                assert!(
                    (ja - &jb).amax() <= 1e-10 * scale,
                    "{name} J^{} at {x}",
                    i + 1
                );
            }
        }
    }
}

#[test]
fn analytic_jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for name in BUILTIN_NAMES {
        let ps = builtin(name).unwrap();
        for _ in 0..10 {
            let x = random_point(&ps.sample_box, &mut rng);
            for i in 0..ps.p {
                let fd = fd_jacobian(&ps, i, &x, 1e-6).unwrap();
                let an = ps.jacobian(i, &x).unwrap();
                let dev = (&fd - &an).amax();
                assert!(
                    dev <= 1e-5 * (1.0 + an.amax()),
                    "{name} J^{} at {x}: {dev:.2e}",
                    i + 1
                );
            }
        }
    }
}

#[test]
fn ex1_first_jacobian_at_2_3() {
    let ps = builtin("ex1").unwrap();
    let fd = fd_jacobian(&ps, 0, &DVector::from_element(1, 2.3), 1e-6).unwrap();
    assert!((fd[(0, 0)] - 32.9148).abs() <= 1e-3);
    assert!((fd[(1, 0)] - 8.9177).abs() <= 1e-3);
}
