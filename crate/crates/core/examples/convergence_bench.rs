//! Error per iteration for several methods on a log-spaced spectrum, as CSV.
//!
//! cargo run --release --example convergence_bench > out.csv

use polar_express::bench::{resolve_method, write_csv, BenchOptions};
use polar_express::engine::{ApplyOptions, BaselineRegistry, Normalization};
use polar_express::{gen_matrix, run_convergence, SpectrumSpec};

fn main() -> polar_express::Result<()> {
    let m = gen_matrix(&SpectrumSpec::log_spaced(1e-6, 1.0, 64, 64))?;
    let registry = BaselineRegistry::default();
    let methods = ["polarexpress:1e-6", "ns5", "ns3", "jordan"]
        .iter()
        .map(|n| resolve_method(n, 25, &registry))
        .collect::<polar_express::Result<Vec<_>>>()?;
    // sigma_max is already 1, so scale nothing and let l match sigma_min
    let opts = BenchOptions {
        steps: 25,
        apply: ApplyOptions {
            normalization: Normalization::None,
            ..Default::default()
        },
        parallel: true,
        ..Default::default()
    };
    let reports = run_convergence(&m, &methods, &opts)?;
    for r in &reports {
        let e = r.spectral_errors();
        eprintln!("{:<18} T=10 {:.2e}  T=25 {:.2e}", r.method, e[10], e[25]);
    }
    write_csv(&reports, std::io::stdout().lock())
}
