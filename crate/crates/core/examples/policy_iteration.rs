// Model-based policy iteration from the linear and exponential starts.

use exploratory_stopping::boundary::{
    init_exponential, init_linear, uniform_knots, validate_initial,
};
use exploratory_stopping::policy_iter::{run_pi, PiOptions};
use exploratory_stopping::{ClosedFormSolution, Model};

fn main() -> exploratory_stopping::Result<()> {
    let model = Model::reference(0.5)?;
    let knots = uniform_knots(0.02, 5.0)?;
    let truth = ClosedFormSolution::new(model.clone())?.boundary_on(&knots)?;
    let starts = [
        ("linear", init_linear(&model, &knots)?),
        ("exponential(0.75)", init_exponential(&model, 0.75, &knots)?),
    ];
    for (name, g0) in starts {
        let report = validate_initial(&g0, &model);
        println!(
            "{name}: start admissible = {} {:?}",
            report.is_ok(),
            report.failed()
        );
        let opts = PiOptions {
            ground_truth: Some(truth.clone()),
            allow_invalid_init: true,
            ..Default::default()
        };
        let trace = run_pi(&g0, &model, &opts)?;
        for k in 0..trace.rows() {
            let c = trace.conditions[k]
                .as_ref()
                .expect("model-based rows carry conditions");
            println!(
                "  k={k:>2} l1_to_truth={:.3e} l1_step={:.3e} conditions={}",
                trace.l1_to_truth[k].unwrap_or(f64::NAN),
                trace.l1_step[k],
                c.all_hold()
            );
        }
        println!(
            "  final l1 = {:.3e}, converged = {}\n",
            trace.final_boundary().l1_distance(&truth)?,
            trace.converged
        );
    }
    Ok(())
}
