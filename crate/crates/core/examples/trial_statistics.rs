//! Period summaries, change-score difference-in-differences with the BH
//! adjustment, and the exchangeable GEE on a simulated trial.

use pearl::baseline::Period;
use pearl::sim::{run_trial, TrialConfig};
use pearl::stats::{gee_fit, summarize_periods, table4, table6_design, GeeOptions, StepPanel};

fn main() {
    let cfg = TrialConfig { n_per_arm: 150, study_days: 60, seed: Some(8), ..Default::default() };
    let log = run_trial(&cfg).expect("valid config");
    let panel = StepPanel::from_log(&log);

    let summary = summarize_periods(&panel);
    for c in summary.cells.iter().filter(|c| c.period != Period::Month2) {
        println!("{:<8} {:<9} {:>7.1} (SD {:>6.1}, n = {})", c.arm.to_string(), c.period.name(), c.mean, c.sd, c.n);
    }
    println!();
    for r in table4(&panel).expect("all arms present") {
        let adj = r.adjusted_p.map(|a| format!("  adj p {a:.3}")).unwrap_or_default();
        println!("{:<18} {:<7} B {:>7.1}  SE {:>6.1}  p {:.3}{adj}", r.label, r.period.name(), r.b, r.se, r.p);
    }
    println!();
    let g = gee_fit(&table6_design(&panel).unwrap(), &GeeOptions::default()).expect("converges");
    println!("rho {:.3} over {} participants, {} days", g.rho, g.n_clusters, g.n_obs);
    for k in 0..g.names.len() {
        println!("{:<14} {:>9.2}  ({:>8.2}, {:>8.2})", g.names[k], g.estimates[k], g.ci_low[k], g.ci_high[k]);
    }
}
