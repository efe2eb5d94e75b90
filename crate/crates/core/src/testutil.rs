//! Shared fixtures for the crate's tests. The canonical oscillator run is
//! expensive enough to be worth computing once per test binary.

use std::sync::OnceLock;

use crate::model::{BasisTerm, ModelSpec, Trajectory};
use crate::sim::{simulate, SimConfig};

/// The benchmark oscillator: Duffing with symmetric clearance spring and
/// gated damper (m = 0.1, b = 0.08, b_nl = 2000, beta = 0.2, k = 40,
/// k_nl = 5000, alpha = 200, e = 0.005).
pub fn benchmark_model() -> ModelSpec {
    ModelSpec::new(
        0.1,
        vec![
            (BasisTerm::VelPower(1), 0.08),
            (BasisTerm::MixedDispSqVel, 2000.0),
            (BasisTerm::VelGateTwoSided { clearance: 0.005 }, 0.2),
        ],
        vec![
            (BasisTerm::DispPower(1), 40.0),
            (BasisTerm::DispPower(3), 5000.0),
            (BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 }, 200.0),
        ],
    )
    .unwrap()
}

/// Damping candidate library used with the benchmark model (terms b1..b6).
pub fn benchmark_damping_library() -> Vec<BasisTerm> {
    vec![
        BasisTerm::VelPower(1),
        BasisTerm::VelPower(2),
        BasisTerm::VelPower(3),
        BasisTerm::MixedDispSqVel,
        BasisTerm::VelGateOneSided { clearance: 0.005 },
        BasisTerm::VelGateTwoSided { clearance: 0.005 },
    ]
}

/// Stiffness candidate library used with the benchmark model (terms k1..k7).
pub fn benchmark_stiffness_library() -> Vec<BasisTerm> {
    vec![
        BasisTerm::DispPower(1),
        BasisTerm::DispPower(2),
        BasisTerm::DispPower(3),
        BasisTerm::DispPower(4),
        BasisTerm::DispPower(5),
        BasisTerm::ClearanceSpringOneSided { clearance: 0.005 },
        BasisTerm::ClearanceSpringTwoSided { clearance: 0.005 },
    ]
}

/// Canonical free-decay run: ic (0, 1), 10 s at 20 kHz, rel_tol 1e-12.
pub fn benchmark_trajectory() -> &'static Trajectory {
    static TRAJ: OnceLock<Trajectory> = OnceLock::new();
    TRAJ.get_or_init(|| {
        simulate(&benchmark_model(), &SimConfig::new((0.0, 10.0), 20_000.0, (0.0, 1.0))).unwrap()
    })
}
