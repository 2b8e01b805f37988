//! Regeneration check for the pinned circular-interface eigenvalue
//! reference (stabilized, N=96, p=4, γ_A=4.1, γ_M=0.002, α=(1,1000)).
//! Expensive (a few minutes); run explicitly with
//! `cargo test -p usem --test eigen_reference -- --ignored --nocapture`.

use usem::problems::CIRCLE_EIGEN_REFERENCE;
use usem::study::eigen_reference_oracle;

#[test]
#[ignore = "fine-grid oracle run, several minutes"]
fn pinned_reference_reproduces() {
    let fresh = eigen_reference_oracle().expect("oracle run");
    println!("fresh oracle eigenvalues: {fresh:?}");
    println!("pinned reference:         {CIRCLE_EIGEN_REFERENCE:?}");
    assert_eq!(fresh.len(), CIRCLE_EIGEN_REFERENCE.len());
    for (f, p) in fresh.iter().zip(&CIRCLE_EIGEN_REFERENCE) {
        assert!(
            (f - p).abs() <= 1e-7 * p,
            "reference drift: fresh {f:.12} vs pinned {p:.12}"
        );
    }
}
