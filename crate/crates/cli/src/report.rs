//! Plain-text reports.

use std::fmt::Write;

use mcmrb::analysis::{Classification, SuiteResult};
use mcmrb::protocols::Protocol;
use mcmrb::simulator::Qubit;

pub fn fit_table(result: &SuiteResult) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<9} {:<8} {:>11} {:>10} {:>10} {:>10} {:>10}",
        "protocol", "qubit", "eps", "sigma", "alpha", "A", "rms"
    )
    .unwrap();
    for protocol in Protocol::ALL {
        for qubit in [Qubit::Control, Qubit::Ancilla] {
            let Some(e) = result.entry(protocol, qubit) else { continue };
            let mut flags = String::new();
            if e.suspect {
                flags.push_str(" suspect");
            }
            if e.fit.degenerate {
                flags.push_str(" flat");
            } else if !e.fit.converged {
                flags.push_str(" unconverged");
            }
            writeln!(
                s,
                "{:<9} {:<8} {:>11.4e} {:>10.2e} {:>10.6} {:>10.4} {:>10.2e}{flags}",
                protocol.as_str(),
                qubit.as_str(),
                e.eps.value,
                e.eps.sigma,
                e.fit.alpha,
                e.fit.a,
                e.fit.residual_rms
            )
            .unwrap();
        }
    }
    match result.eps_irb {
        Some(irb) => writeln!(s, "eps_irb = {:.4e} +/- {:.2e}", irb.value, irb.sigma).unwrap(),
        None => writeln!(s, "eps_irb unavailable").unwrap(),
    }
    s
}

pub fn classification(c: &Classification) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "thresholds: abs_floor = {:e}, z = {}",
        c.thresholds.abs_floor, c.thresholds.z
    )
    .unwrap();
    if c.signatures.is_empty() {
        writeln!(s, "signature: none of the known signatures matches").unwrap();
    }
    for v in &c.signatures {
        writeln!(s, "signature: {:?}", v.signature).unwrap();
        writeln!(s, "  {}", v.evidence).unwrap();
    }
    match &c.collision_hint {
        Some(hint) => writeln!(s, "collision hint: {hint}").unwrap(),
        None => writeln!(s, "collision hint: none").unwrap(),
    }
    writeln!(s, "checks (margin > 0 holds):").unwrap();
    for check in &c.checks {
        writeln!(s, "  {:<5} {:>11.3e}  {}", if check.holds { "yes" } else { "no" }, check.margin, check.label).unwrap();
    }
    s
}

pub fn full(header: &str, result: &SuiteResult, c: Option<&Classification>) -> String {
    let mut s = String::new();
    if !header.is_empty() {
        s.push_str(header);
        s.push('\n');
    }
    s.push_str(&fit_table(result));
    if let Some(c) = c {
        s.push_str(&classification(c));
    }
    s
}
