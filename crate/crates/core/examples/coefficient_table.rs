//! Print the greedy degree-5 schedule for a lower bound, with its interval trace.
//!
//! cargo run --example coefficient_table -- 1e-3 8

use polar_express::ScheduleBuilder;

fn main() -> polar_express::Result<()> {
    let mut args = std::env::args().skip(1);
    let l: f64 = args.next().map_or(1e-3, |a| a.parse().expect("l"));
    let steps: usize = args.next().map_or(8, |a| a.parse().expect("T"));

    let s = ScheduleBuilder::new(l).steps(steps).build()?;
    println!("{:>2}  {:>22} {:>22} {:>22}   interval", "t", "a", "b", "c");
    for (t, (p, iv)) in s.pre_safety_polys().iter().zip(s.intervals()).enumerate() {
        let c = p.coeffs();
        println!(
            "{:>2}  {:>22.16} {:>22.16} {:>22.16}   [{:.6e}, {:.6}]",
            t + 1, c[0], c[1], c[2], iv.lo, iv.hi
        );
    }
    println!("certified error after {steps} steps: {:e}", s.certified_error());
    println!("\nwith the safety factor applied (what the engine runs):");
    for p in s.polys() {
        println!("  {:?}", p.coeffs());
    }
    Ok(())
}
