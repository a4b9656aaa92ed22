//! CSGM at b = 50 against the uncompressed Gaussian mechanism over an ε
//! grid, printed as CSV.
//!
//! `cargo run --release --example crossover_sweep [d] [trials]`

use commdp::harness::{run_sweep, to_csv, Accounting, ExperimentConfig, Protocol};

fn main() -> commdp::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map_or(500, |s| s.parse().expect("d"));
    let trials: usize = args.next().map_or(50, |s| s.parse().expect("trials"));
    let grid = vec![0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0];

    let mut csgm = ExperimentConfig::new(Protocol::Csgm, 500, d, grid.clone(), 1e-5);
    csgm.b = Some(50);
    let mut base = ExperimentConfig::new(Protocol::GaussianBaseline, 500, d, grid, 1e-5);
    for c in [&mut csgm, &mut base] {
        c.trials = trials;
        c.accounting = Accounting::Rdp;
    }
    let a = run_sweep(&csgm)?;
    let g = run_sweep(&base)?;
    print!("{}", to_csv(&[a.clone(), g.clone()].concat()));
    for (x, y) in a.iter().zip(&g) {
        eprintln!(
            "eps={:<4} mse ratio {:.3}",
            x.eps_target,
            x.mse_mean / y.mse_mean
        );
    }
    Ok(())
}
