//! Simulated value of a reflection policy against its semi-analytic value.

use exploratory_stopping::boundary::uniform_knots;
use exploratory_stopping::policy_eval::evaluate_policy;
use exploratory_stopping::simulator::{PathConfig, Simulator};
use exploratory_stopping::{ClosedFormSolution, Model};

fn main() -> exploratory_stopping::Result<()> {
    let model = Model::reference(0.5)?;
    let g = ClosedFormSolution::new(model.clone())?.boundary_on(&uniform_knots(0.02, 5.0)?)?;
    let exact = evaluate_policy(&g, &model)?;
    let sim = Simulator::new(&model);
    let cfg = PathConfig {
        seed: 7,
        ..Default::default()
    };
    println!(
        "{:>5} {:>5} {:>12} {:>12} {:>10} {:>6}",
        "x", "y", "simulated", "exact", "stderr", "z"
    );
    for &(x, y) in &[(0.5, 0.8), (1.0, 0.3), (2.0, 1.0), (3.0, 0.05), (4.5, 0.6)] {
        let mc = sim.mc_value(x, y, &g, 4000, &cfg)?;
        let v = exact.value_of(x, y);
        println!(
            "{x:>5} {y:>5} {:>12.6} {v:>12.6} {:>10.2e} {:>6.2}",
            mc.mean,
            mc.stderr,
            (mc.mean - v) / mc.stderr
        );
    }
    Ok(())
}
