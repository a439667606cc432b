//! Finite-difference gradient checks for every layer and for the whole
//! network at a reduced width.

use gaitcnn::gradcheck;

fn main() {
    let outcomes = gradcheck::run_all(10, 32).unwrap();
    println!(
        "{:<14} {:>7} {:>14} {:>11} {:>7}",
        "layer", "trials", "max_rel_err", "tolerance", "result"
    );
    let mut all_pass = true;
    for o in &outcomes {
        println!(
            "{:<14} {:>7} {:>14.3e} {:>11.0e} {:>7}",
            o.layer,
            o.trials,
            o.max_rel_err,
            o.tolerance,
            if o.pass { "pass" } else { "FAIL" }
        );
        all_pass &= o.pass;
    }
    std::process::exit(if all_pass { 0 } else { 4 });
}
