// Exact solution at the reference parameters: roots, classical boundary,
// entropy floor and a few points of the regularized boundary and value.

use exploratory_stopping::{ClosedFormSolution, Model};

fn main() -> exploratory_stopping::Result<()> {
    let lambda = std::env::args()
        .nth(1)
        .map_or(0.5, |s| s.parse().expect("lambda"));
    let sol = ClosedFormSolution::new(Model::reference(lambda)?)?;
    println!("lambda      = {lambda}");
    println!("alpha_minus = {:.12}", sol.alpha_minus());
    println!("alpha_plus  = {:.12}", sol.alpha_plus());
    println!("b_star      = {:.12}", sol.b_star());
    println!("y_floor     = {:.12}", sol.y_floor());
    println!("x_hat       = {:.12}", sol.x_hat());
    println!();
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "x", "g_lambda", "V(x,0.5)", "V(x,1)"
    );
    for i in 0..=10 {
        let x = 0.5 * i as f64;
        println!(
            "{x:>6.2} {:>12.6} {:>12.6} {:>12.6}",
            sol.g_lambda(x),
            sol.value(x, 0.5),
            sol.value(x, 1.0)
        );
    }
    Ok(())
}
