// Calibration helper: step a config and report each field's global
// extremes over the run.

use biofilm_ecom::grid::Grid;
use biofilm_ecom::model::Field;

fn main() {
    let path = std::env::args().nth(1).expect("usage: field_envelope <config.json> [dt]");
    let dt: f64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(2.5e-4);
    let config = biofilm_ecom::load_config(std::path::Path::new(&path)).unwrap();
    let mut grid = Grid::new(config.grid.dx, config.grid.initial_length).unwrap();
    let mut state = biofilm_ecom::BiofilmState::initial(grid.n_nodes, grid.length);
    let steps = (config.step.t_end / dt).ceil() as usize;
    let mut lo = [f64::INFINITY; 7];
    let mut hi = [f64::NEG_INFINITY; 7];
    for _ in 0..steps {
        biofilm_ecom::integrator::rk4_step(
            &mut state,
            &mut grid,
            dt,
            &config.parameters,
            &config.signals.glutamate,
            &config.signals.potassium,
            config.signals.source_mode,
        )
        .unwrap();
        for node in &state.nodes {
            for (k, field) in Field::ALL.iter().enumerate() {
                let v = field.get(node);
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
    }
    for (k, field) in Field::ALL.iter().enumerate() {
        println!("{:4}  min {:12.4}  max {:12.4}", field.name(), lo[k], hi[k]);
    }
}
