//! Strichartz and bilinear ratios of random free waves over a dyadic
//! frequency sweep.

use gbq::estimates::{bilinear_sweep, strichartz_sweep, ExponentPair, SweepConfig};

fn main() -> gbq::Result<()> {
    let cfg = SweepConfig::default();
    let inf = f64::INFINITY;
    let pairs = [
        ExponentPair::new(2.0, 2.0),
        ExponentPair::new(8.0, 4.0),
        ExponentPair::new(inf, 2.0),
        ExponentPair::new(6.0, 6.0),
        ExponentPair::new(4.0, 4.0),
        ExponentPair::new(inf, inf),
    ];
    let scales = [4.0, 8.0, 16.0, 32.0, 64.0];
    for report in strichartz_sweep(&cfg, &pairs, &scales)? {
        println!("{:<10} growth {:.3} {}", report.estimate, report.growth, if report.pass { "PASS" } else { "FAIL" });
        for row in &report.rows {
            println!("    N = {:>4}  max {:.5}  median {:.5}  (M = {}, Q = {})", row.scale, row.max, row.median, row.modes, row.time_samples);
        }
    }
    let report = bilinear_sweep(&cfg, 4.0, &[16.0, 32.0, 64.0, 128.0])?;
    println!("{:<10} growth {:.3} {}", report.estimate, report.growth, if report.pass { "PASS" } else { "FAIL" });
    for row in &report.rows {
        println!("    N2 = {:>4}  max {:.5}  median {:.5}", row.scale, row.max, row.median);
    }
    Ok(())
}
