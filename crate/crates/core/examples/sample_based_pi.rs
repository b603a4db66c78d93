//! Sample-based policy iteration with simulated value tables.
//!
//! `cargo run --release --example sample_based_pi -- [paths] [seed]`

use exploratory_stopping::boundary::init_exponential;
use exploratory_stopping::model_free::{run_spi, SpiConfig};
use exploratory_stopping::simulator::{MonteCarloEstimator, PathConfig, Simulator};
use exploratory_stopping::{ClosedFormSolution, Model};

fn main() -> exploratory_stopping::Result<()> {
    let mut args = std::env::args().skip(1);
    let paths = args.next().map_or(20, |s| s.parse().expect("paths"));
    let seed = args.next().map_or(2, |s| s.parse().expect("seed"));
    let model = Model::reference(0.5)?;
    let cfg = SpiConfig {
        max_iter: 15,
        ..Default::default()
    };
    let knots = cfg.knots()?;
    let truth = ClosedFormSolution::new(model.clone())?.boundary_on(&knots)?;
    let g0 = init_exponential(&model, 0.75, &knots)?;
    let est = MonteCarloEstimator {
        sim: Simulator::new(&model),
        cfg: PathConfig {
            seed,
            ..Default::default()
        },
        paths,
    };
    let run = run_spi(&g0, &cfg, &est, model.y_floor(), Some(&truth))?;
    let t = &run.trace;
    for k in 0..t.rows() {
        println!(
            "k={k:>2} l1_to_truth={:.4} l1_step={:.4}",
            t.l1_to_truth[k].unwrap_or(f64::NAN),
            t.l1_step[k]
        );
    }
    println!(
        "final l1_to_truth = {:.4}",
        t.final_boundary().l1_distance(&truth)?
    );
    Ok(())
}
