//! Zeroth-order learning of the boundary floor from simulated rewards at x = 0.

use exploratory_stopping::model_free::{learn_y_floor, NeverStopObjective, ZeroOrderConfig};
use exploratory_stopping::simulator::{PathConfig, SimulatedFloorObjective, Simulator};
use exploratory_stopping::Model;

fn main() -> exploratory_stopping::Result<()> {
    let model = Model::reference(2.5)?;
    let target = model.y_floor();
    let simulated = SimulatedFloorObjective {
        sim: Simulator::new(&model),
        cfg: PathConfig::default(),
        paths: 16,
    };
    let exact = NeverStopObjective {
        kappa: model.params.kappa,
        rho: model.params.rho,
        lambda: model.params.lambda,
    };
    for y0 in [0.5, 0.99] {
        let cfg = ZeroOrderConfig {
            y0,
            ..Default::default()
        };
        let sim_run = learn_y_floor(&cfg, &simulated)?;
        let exact_run = learn_y_floor(&cfg, &exact)?;
        println!(
            "y0={y0}: simulated {:.6}, exact {:.6}, target {target:.6}",
            sim_run.y, exact_run.y
        );
        for s in exact_run.steps.iter().filter(|s| s.i.is_power_of_two()) {
            println!(
                "  i={:>4} y={:.8} sq_err={:.3e}",
                s.i,
                s.y,
                (s.y - target).powi(2)
            );
        }
    }
    Ok(())
}
