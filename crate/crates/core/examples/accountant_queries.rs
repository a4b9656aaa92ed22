//! Privacy accounting: closed-form calibration, RDP calibration, and the
//! budgets each implies.
//!
//! `cargo run --example accountant_queries`

use commdp::accountant::{
    amplify_shuffle, calibrate_subsampled_gaussian, calibrate_subsampled_gaussian_rdp,
    closed_form_epsilon, default_orders, rdp_subsampled_gaussian_epsilon,
};
use commdp::PrivacyBudget;

fn main() -> commdp::Result<()> {
    let target = PrivacyBudget::new(1.0, 1e-5)?;
    let (gamma, coords, sens) = (0.1, 500, 1.0);

    let closed = calibrate_subsampled_gaussian(target, gamma, coords, sens)?;
    let rdp = calibrate_subsampled_gaussian_rdp(target, gamma, coords, sens, &default_orders())?;
    println!("sigma2 closed-form: {:.4}", closed.sigma2_sum);
    println!("sigma2 rdp:         {:.4}", rdp.sigma2_sum);

    for (name, cal) in [("closed-form", &closed), ("rdp", &rdp)] {
        let z = cal.sigma2_sum.sqrt() / sens;
        let e_closed = closed_form_epsilon(cal.sigma2_sum, sens, gamma, coords, target.delta)?;
        let e_rdp =
            rdp_subsampled_gaussian_epsilon(gamma, z, coords, target.delta, &default_orders())?;
        println!("{name:<12} noise -> eps closed {e_closed:.4}, eps rdp {e_rdp:.4}");
    }

    for n in [1_000, 10_000, 100_000] {
        println!(
            "shuffle eps0=0.5 n={n}: central eps {:.4}",
            amplify_shuffle(0.5, n, 1e-6)?
        );
    }
    Ok(())
}
