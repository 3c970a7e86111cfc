use dcpbc::controllers::ph::dvoc_current_reference;
use dcpbc::engine::{run_scenario, Scenario};
use dcpbc::ph::{hamiltonian_total, EnergyState, StorageWeights};
use dcpbc::plant::PlantParams;
use dcpbc::Ab;

#[test]
fn single_precision_energy_matches_double() {
    let x64 = EnergyState {
        phi: Ab::new(0.03, -0.01),
        q_dc: 8.0,
        zeta_v: 0.02,
        zeta_i: Ab::new(0.1, 0.2),
    };
    let x32 = EnergyState {
        phi: Ab::new(0.03f32, -0.01),
        q_dc: 8.0,
        zeta_v: 0.02,
        zeta_i: Ab::new(0.1, 0.2),
    };
    let w64 = StorageWeights { a_v: 1.25e5, m_i: 2.0 };
    let w32 = StorageWeights { a_v: 1.25e5f32, m_i: 2.0 };
    let h64 = hamiltonian_total(&x64, &PlantParams::<f64>::default(), &w64).unwrap().total;
    let h32 = hamiltonian_total(&x32, &PlantParams::<f32>::default(), &w32).unwrap().total;
    assert!(((h32 as f64) - h64).abs() <= 1e-5 * h64);
}

#[test]
fn single_precision_dvoc_identity() {
    let v = Ab::new(300.0f32, -120.0);
    let i = dvoc_current_reference(4e5f32, 1e4, v, 1.0).unwrap();
    assert!((v.dot(i) - 4e5).abs() <= 1e-5 * 4e5);
}

#[test]
fn single_precision_steady_run() {
    let s: Scenario<f32> = Scenario::steady("f32", 0.05);
    let r = run_scenario(&s).unwrap();
    assert!(r.succeeded());
    let worst = r.regulation.unwrap().max_deviation_pu;
    assert!(worst < 1e-3, "{worst}");
}
