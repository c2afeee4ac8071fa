use kirigami_core::analytic::stretch_energy_total;
use kirigami_core::laminate::{plate_bending_stiffness, LayerSpec};
use kirigami_core::materials::MooneyRivlin;
use kirigami_core::pattern::{assign_rest_metrics, generate_mesh, KirigamiPattern, SubstrateShape};
use kirigami_core::shellsim::{find_stable_states, minimize, Seed, ShellModel, SolverOptions, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cross_model(side: f64, lambda: f64, h: f64) -> ShellModel {
    let cross = KirigamiPattern::cross(side, side / 3.0).unwrap();
    let sub = SubstrateShape::Square { side };
    let mesh = assign_rest_metrics(&generate_mesh(&cross, &sub, h).unwrap(), lambda).unwrap();
    ShellModel::new(mesh, LayerSpec::SUBSTRATE, LayerSpec::KIRIGAMI_G, 0.5, side).unwrap()
}

fn bare_model(side: f64, lambda: f64, h: f64) -> ShellModel {
    let sub = SubstrateShape::Square { side };
    let mesh = assign_rest_metrics(&generate_mesh(&KirigamiPattern::empty(), &sub, h).unwrap(), lambda).unwrap();
    ShellModel::new(mesh, LayerSpec::SUBSTRATE, LayerSpec::KIRIGAMI_G, 0.5, side).unwrap()
}

fn perturbed(m: &ShellModel, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = m.length_scale;
    m.planar_positions()
        .iter()
        .map(|p| {
            let r = (p[0] * p[0] + p[1] * p[1]) / (l * l);
            [0.8 * p[0] + rng.random_range(-0.01..0.01) * l, 0.8 * p[1] + rng.random_range(-0.01..0.01) * l, 0.2 * l * r]
        })
        .collect()
}

fn total(m: &ShellModel, x: &[Vec3]) -> f64 {
    m.membrane_energy(x).unwrap() + m.bending_energy(x)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn equibiaxial_patch_matches_closed_form() {
    for lambda in [1.0001, 1.2, 1.6, 2.5] {
        let m = bare_model(10.0, lambda, 1.0);
        let x: Vec<Vec3> = m.planar_positions();
        let area = m.mesh.total_area() / (lambda * lambda);
        let exact = stretch_energy_total(&MooneyRivlin::SUBSTRATE, lambda, area, 1.1).unwrap();
        assert!(rel(m.membrane_energy(&x).unwrap(), exact) < 1e-10, "λ = {lambda}");
    }
}

/// Relative error of the bending energy of an isometric cylinder wrap against
/// ½·A·D·κ², for each mesh size.
fn cylinder_errors(sizes: &[f64]) -> Vec<f64> {
    let side = 20.0;
    let kappa = 0.02;
    sizes
        .iter()
        .map(|&h| {
            let m = bare_model(side, 1.0, h);
            let x: Vec<Vec3> = m
                .planar_positions()
                .iter()
                .map(|p| [(kappa * p[0]).sin() / kappa, p[1], (1.0 - (kappa * p[0]).cos()) / kappa])
                .collect();
            let d = plate_bending_stiffness(&LayerSpec::SUBSTRATE, 0.5).unwrap();
            let exact = 0.5 * m.mesh.total_area() * d * kappa * kappa;
            rel(m.bending_energy(&x), exact)
        })
        .collect()
}

#[test]
fn cylinder_bending_converges() {
    let sizes = [2.0, 1.0, 0.5];
    let err = cylinder_errors(&sizes);
    assert!(err[2] < 0.05, "finest error {}", err[2]);
    let order = (err[1] / err[2]).ln() / (sizes[1] / sizes[2]).ln();
    assert!(order >= 1.0 - 1e-6, "errors {err:?}, order {order}");
    assert!(err[0] > err[1] && err[1] > err[2]);
}

#[test]
fn flat_is_the_only_state_without_prestretch() {
    let m = cross_model(20.0, 1.0, 1.0);
    let found = find_stable_states(&m, &Seed::GLOBAL, &SolverOptions::default());
    assert!(found.failures.is_empty());
    assert_eq!(found.states.len(), 1);
    assert!(found.states[0].height_ratio(20.0) < 1e-6);
}

#[test]
fn converged_state_mirror_has_same_energy() {
    let m = cross_model(20.0, 1.5, 1.0);
    let s = minimize(&m, &m.planar_positions(), Seed::Positive, &SolverOptions::default()).unwrap();
    let mirrored: Vec<Vec3> = s.positions.iter().map(|p| [p[0], p[1], -p[2]]).collect();
    assert!(rel(total(&m, &mirrored), total(&m, &s.positions)) < 1e-9);
}

fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_rigid_body_invariant(
        seed in 0u64..1000,
        axis in prop::array::uniform3(-1.0f64..1.0),
        angle in -3.1f64..3.1,
        shift in prop::array::uniform3(-50.0f64..50.0),
    ) {
        prop_assume!(axis.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        let m = cross_model(20.0, 1.4, 1.5);
        let x = perturbed(&m, seed);
        let r = rotation(axis, angle);
        let moved: Vec<Vec3> = x
            .iter()
            .map(|p| std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + shift[i]))
            .collect();
        prop_assert!(rel(total(&m, &moved), total(&m, &x)) < 1e-10);
    }

    #[test]
    fn energy_is_mirror_symmetric(seed in 0u64..1000, lambda in 1.0f64..2.5) {
        let m = cross_model(20.0, lambda, 1.5);
        let x = perturbed(&m, seed);
        let mirrored: Vec<Vec3> = x.iter().map(|p| [p[0], p[1], -p[2]]).collect();
        prop_assert!(rel(total(&m, &mirrored), total(&m, &x)) < 1e-9);
    }
}
