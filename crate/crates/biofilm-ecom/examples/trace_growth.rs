// Calibration helper: run a config and print the growth-rate series with
// candidate stall cutoffs.

use biofilm_ecom::observe::growth_arrest_intervals;

fn main() {
    let path = std::env::args().nth(1).expect("usage: trace_growth <config.json>");
    let config = biofilm_ecom::load_config(std::path::Path::new(&path)).unwrap();
    let traj = biofilm_ecom::run(&config).unwrap();
    let ls = &traj.length_series;
    let baseline_until = traj.stimulus_times.first().copied().unwrap_or(config.step.t_end);
    println!("# length series: {} points, L0 = {}, L_end = {}", ls.len(), ls[0].1, ls.last().unwrap().1);
    let rate = |i: usize| (ls[i + 1].1 - ls[i - 1].1) / (ls[i + 1].0 - ls[i - 1].0);
    let mut base_sum = 0.0;
    let mut base_n = 0;
    for i in 1..ls.len() - 1 {
        if ls[i].0 <= baseline_until {
            base_sum += rate(i);
            base_n += 1;
        }
    }
    println!("# baseline mean rate (t <= {baseline_until}): {:.5}", base_sum / base_n as f64);
    for i in (1..ls.len() - 1).step_by(25) {
        println!("{:7.3} {:8.5} {:9.6}", ls[i].0, ls[i].1, rate(i));
    }
    for stall in [0.1, 0.2, 0.3, 0.5] {
        let iv = growth_arrest_intervals(ls, stall, baseline_until);
        println!("# stall {stall}: {iv:?}");
    }
}
