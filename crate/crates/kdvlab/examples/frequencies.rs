//! Gap lengths, actions and frequencies of a two-mode potential.
//!
//! `cargo run --release -p kdvlab --example frequencies`

use kdvlab::invariants::{analyze, AnalysisConfig};
use kdvlab::{Potential, Result};

fn main() -> Result<()> {
    let q = Potential::cosines(&[(1, 0.2), (2, 0.1)])?;
    let an = analyze(&q, &AnalysisConfig::new(6))?;
    let rep = an.frequencies();
    println!("{:>3} {:>12} {:>12} {:>14} {:>14}", "n", "gamma", "I", "omega1*", "omega2*");
    for (j, &n) in rep.n.iter().enumerate() {
        println!(
            "{n:>3} {:>12.4e} {:>12.4e} {:>14.6e} {:>14.6e}",
            an.spectrum.gamma(n),
            rep.actions[j],
            rep.omega1_star[j],
            rep.omega2_star[j]
        );
    }
    let h = an.hamiltonians();
    println!("H0 = {:.12e} (from actions {:.12e})", h.h0, h.h0_from_actions);
    Ok(())
}
