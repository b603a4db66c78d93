// Finite-difference verification of the exact value on (0.05, 5] x [0, 1].

use exploratory_stopping::cli::{hjb_check, HjbConfig};
use exploratory_stopping::{ClosedFormSolution, Model};

fn main() -> exploratory_stopping::Result<()> {
    let sol = ClosedFormSolution::new(Model::reference(0.5)?)?;
    let (report, _) = hjb_check(&sol, &HjbConfig::default(), 5.0)?;
    println!(
        "continuation residual max |r| = {:.3e} over {} points",
        report.continuation_max_abs, report.continuation_points
    );
    println!(
        "stopping residual max r       = {:.3e} over {} points",
        report.stopping_max, report.stopping_points
    );
    println!("min V_y                       = {:.3e}", report.min_dy);
    println!(
        "smooth fit |V_y|, |V_xy|      = {:.3e}, {:.3e}",
        report.smooth_fit_dy_max, report.smooth_fit_dxy_max
    );
    println!("pass                          = {}", report.pass);
    Ok(())
}
