//! Scalar special functions and the two correlated-Ricean cross-moment
//! kernels, including the Rayleigh closed forms they collapse to.

use ris_lab::specfun::{
    eval_fr, eval_gr, hyp1f1, hyp2f1, laguerre_half, ln_gamma, FRParams, GRParams, SeriesControl,
};
use std::f64::consts::PI;

fn main() -> ris_lab::Result<()> {
    println!("scalar functions");
    for (a, b, z) in [(0.5, 1.0, 2.0), (1.5, 2.0, -5.0), (-0.5, 1.0, 10.0)] {
        println!("  1F1({a:>4}, {b}; {z:>5}) = {:+.12e}", hyp1f1(a, b, z)?);
    }
    for (a, b, c, z) in [(-0.5, -0.5, 1.0, 0.25), (0.5, 0.5, 2.0, 0.81), (-0.5, -0.5, 1.0, 1.0)] {
        println!("  2F1({a}, {b}; {c}; {z:>4}) = {:+.12e}", hyp2f1(a, b, c, z)?);
    }
    println!("  2F1(-1/2,-1/2;1;1) - 4/pi = {:+.3e}", hyp2f1(-0.5, -0.5, 1.0, 1.0)? - 4.0 / PI);
    for x in [-4.0, 0.5, 6.0] {
        println!("  L_1/2({x:>4}) = {:+.12e}", laguerre_half(x)?);
    }
    for x in [0.5, 7.5, 41.0] {
        println!("  lnGamma({x:>4}) = {:+.12e}", ln_gamma(x)?);
    }

    let ctl = SeriesControl::default();
    println!("\nenvelope cross-moment F_R = E[|h_i||h_j|]/beta");
    println!("  {:>6} {:>5} {:>14} {:>14}", "kappa", "rho", "F_R", "Rayleigh form");
    for kappa in [0.0, 0.5, 2.0, 10.0] {
        for rho in [0.2, 0.8] {
            let p = FRParams { kappa_ur: kappa, rho_abs: rho, rho_phase: 0.4, delta_angle: 0.9 };
            let rayleigh = PI / 4.0 * hyp2f1(-0.5, -0.5, 1.0, rho * rho)?;
            println!("  {kappa:>6} {rho:>5} {:>14.9} {rayleigh:>14.9}", eval_fr(&p, &ctl)?);
        }
    }

    println!("\nphasor cross-moment G_R = E[e^(j angle_i) e^(-j angle_j)]");
    println!("  {:>6} {:>5} {:>26} {:>8}", "kappa", "rho", "G_R", "|G_R|");
    for kappa in [0.0, 1.0, 10.0] {
        for rho in [0.3, 0.9] {
            let p = GRParams {
                kappa_ur: kappa,
                rho_abs: rho,
                rho_phase: 0.4,
                angle_i: 0.7,
                angle_j: -0.2,
            };
            let g = eval_gr(&p, &ctl)?;
            println!("  {kappa:>6} {rho:>5} {:>12.9} {:+.9}j {:>8.6}", g.re, g.im, g.norm());
        }
    }
    Ok(())
}
