// Reflection level b_lambda(y) against the classical boundary as lambda shrinks.

use exploratory_stopping::closed_form::vanishing_sweep;
use exploratory_stopping::{ModelParams, ProfitModel};

fn main() -> exploratory_stopping::Result<()> {
    let lambdas = [2.5, 1.0, 0.5, 0.1, 0.01];
    let ys = [1.0, (-1f64).exp(), 0.1];
    let table = vanishing_sweep(
        &ModelParams::reference(),
        &ProfitModel::power(1.0, 0.5),
        &lambdas,
        &ys,
    )?;
    println!("b_star = {:.10}", table.b_star);
    println!(
        "{:>8} {:>10} {:>14} {:>14}",
        "lambda", "y", "b_lambda", "gap"
    );
    for r in &table.rows {
        println!(
            "{:>8} {:>10.6} {:>14.8} {:>14.3e}",
            r.lambda, r.y, r.b_lambda, r.gap
        );
    }
    for (y, t) in &table.trends {
        println!("y = {y:.6}: gap {t:?} as lambda decreases");
    }
    Ok(())
}
