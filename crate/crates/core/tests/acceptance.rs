use std::io::Write;

use boussinesq_ist::potentials::builtin_bump;
use boussinesq_ist::verify::{criterion, VerifyOptions, CRITERIA};

// written to the raw stderr handle so the lines survive libtest capture
#[test]
fn acceptance() {
    let data = builtin_bump();
    let opts = VerifyOptions::default();
    let mut err = std::io::stderr();
    let mut failed = Vec::new();
    writeln!(err).unwrap();
    for id in CRITERIA {
        let rep = criterion(id, &data, &opts);
        writeln!(err, "{}", rep.line()).unwrap();
        for c in &rep.checks {
            let rel = if c.upper { "<=" } else { ">" };
            writeln!(err, "        {} {:.3e} {rel} {:.0e}", c.name, c.value, c.tol).unwrap();
        }
        if !rep.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
