//! Adaptive Gauss-Kronrod quadrature on finite and half-infinite ranges.

use penfbm::quadrature::{integrate, integrate_to_infinity};

fn main() {
    let q = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-14, 1e-12);
    println!("∫_0^1 √x dx = {:.15} (err {:.1e}, {} intervals)", q.value, q.error, q.intervals);
    let g = integrate_to_infinity(|x: f64| (-x * x / 2.0).exp(), 0.0, 1e-14, 1e-12);
    println!(
        "∫_0^∞ e^(-x²/2) dx = {:.15} vs √(π/2) = {:.15}",
        g.value,
        (std::f64::consts::PI / 2.0).sqrt()
    );
}
