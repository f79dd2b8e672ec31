//! SQUID-mediated couplings P and Q from the reference circuit, and the
//! resulting two-site coupling J = f√(QQ).

use rabi_chain::circuit::{effective_pq, CircuitParams, QUOTED_PQ};
use std::f64::consts::PI;

fn main() -> rabi_chain::Result<()> {
    let circuit = CircuitParams::reference();
    let pq = effective_pq(&circuit)?;
    println!("P = {:.6e} rad/s", pq.p);
    println!("Q = {:.6e} rad/s", pq.q);
    println!("quoted value {QUOTED_PQ:.4e}, ratio {:.4}", pq.p / QUOTED_PQ);
    let f = 2.0 * PI * 10.0;
    for (label, q) in [("computed", pq.q), ("quoted", QUOTED_PQ)] {
        let j = f * q;
        println!("J with {label} Q: {j:.4e} rad/s = 2π × {:.4} GHz", j / (2.0 * PI * 1e9));
    }
    Ok(())
}
