//! Penalized and meander drifts on a small (t, x) lattice.

use penfbm::sde::{drift_table, DriftKind};

fn main() {
    let ts = [0.0, 0.5, 0.9, 0.99];
    let xs = [0.1, 0.5, 1.0, 2.0];
    for kind in [DriftKind::Penalized, DriftKind::Meander] {
        println!("{kind:?}");
        for (t, x, c) in drift_table(kind, &ts, &xs) {
            println!("  t={t:<5} x={x:<4} c={c:.6}");
        }
    }
}
