//! Decide erosion for the builtin rules and a hand-written one, and print
//! the certificate each verdict rests on.
//!
//!     cargo run --example certify_rules

use toomlab::eroder::{certificate_constants, check_eroder, verify_certificate, ErosionCertificate};
use toomlab::rule::{builtin, RuleSpec, BUILTIN_NAMES};

fn report(name: &str, rule: &RuleSpec) -> toomlab::Result<()> {
    rule.validate()?;
    let family = rule.minimal_plus_sets()?;
    let cert = check_eroder(&family, rule.dimension())?;
    assert!(verify_certificate(&family, &cert)?);
    println!("{name}: {} minimal plus sets, {:?}", family.sets.len(), cert.verdict());
    match &cert {
        ErosionCertificate::Eroder(_) => {
            let (q, r) = certificate_constants(&cert)?;
            println!("    separation with q = {q}, r = {r}");
        }
        ErosionCertificate::NonEroder(w) => {
            let point: Vec<String> = w.witness.iter().map(|c| c.to_string()).collect();
            println!("    common point of all hulls: ({})", point.join(", "));
        }
    }
    Ok(())
}

fn main() -> toomlab::Result<()> {
    for name in BUILTIN_NAMES {
        report(name, &builtin(name)?)?;
    }
    // Toom's rule with the south-west corner instead of north-east-center.
    let sw = RuleSpec::from_plus_sets(
        2,
        vec![vec![0, 0], vec![-1, 0], vec![0, -1]],
        &[vec![0, 1], vec![0, 2], vec![1, 2]],
    )?;
    report("south-west", &sw)?;
    Ok(())
}
