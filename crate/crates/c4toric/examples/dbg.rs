use c4toric::circuits::*;
use c4toric::codes::build_c4_toric;
use c4toric::decode::exhaustive_single_fault_sweep;
use std::time::Instant;

fn main() {
    let c4 = build_c4_toric(3).unwrap();
    for (name, schedule) in [
        ("c4_eight l=3", build_c4_schedule_8step(&c4).unwrap()),
        ("c4_four  l=3", build_c4_schedule_4step(&c4).unwrap()),
    ] {
        let t0 = Instant::now();
        let report = exhaustive_single_fault_sweep(&c4, &schedule, c4.d, 1);
        println!(
            "{name}: cases={} failures={} ({:.1}s)",
            report.cases,
            report.failures.len(),
            t0.elapsed().as_secs_f64()
        );
        for (inj, _) in report.failures.iter().take(5) {
            println!("  round {} t{} op{} {:?}", inj.round, inj.timestep, inj.op_index, inj.effect);
        }
    }
}
