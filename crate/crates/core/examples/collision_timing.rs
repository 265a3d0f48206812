//! Times one collision evaluation per grid size.

use std::time::Instant;

use qboltz::collision::{collide_direct, CollisionKernelConfig, CollisionWorkspace};
use qboltz::grid::VelocityGrid;
use qboltz::phase_space::quantum_maxwellian;
use qboltz::statistics::{EquilibriumParams, GasStatistics};

fn main() {
    let gas = GasStatistics::bose(1.0).unwrap();
    for n in [32] {
        let grid = VelocityGrid::new(n, 8.0).unwrap();
        let t0 = Instant::now();
        let ws = CollisionWorkspace::new(&grid, CollisionKernelConfig::default()).unwrap();
        let build = t0.elapsed();
        let f = quantum_maxwellian(
            EquilibriumParams { z: 0.5, t: 1.0 },
            [0.3, 0.0],
            &gas,
            &grid,
        )
        .unwrap();
        let reps = 20;
        let t0 = Instant::now();
        let mut peak = 0.0f64;
        for _ in 0..reps {
            let q = collide_direct(&f, &gas, &ws).unwrap();
            peak = q.iter().fold(peak, |m, v| m.max(v.abs()));
        }
        let per = t0.elapsed() / reps;
        println!(
            "n={n:3} points={} stencils={} build={build:?} per-call={per:?} residual={peak:.3e}",
            ws.point_count(),
            ws.stencil_count()
        );
    }
}
