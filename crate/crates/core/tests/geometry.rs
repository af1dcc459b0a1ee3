use std::f64::consts::PI;

use lifshitz::bodies::{order_n_interaction, BodyAssembly, SphereBody};
use lifshitz::roughsurf::{energy_second_order, energy_second_order_detailed, HeightProfile, RoughPair};
use lifshitz::{DielectricModel, QuadratureConfig};
use proptest::prelude::*;

fn osc(omega_0: f64) -> DielectricModel<f64> {
    DielectricModel::oscillator(omega_0, 0.0).unwrap()
}

fn wave(amplitude: f64, k: [f64; 2], phase: f64) -> HeightProfile<f64> {
    HeightProfile::Sinusoid { amplitude, wavevector: k, phase }
}

#[test]
fn sphere_config_round_trip() {
    let text = "# two spheres\n0,0,0,1,oscillator:omega0=1\n0,0,12,1.5,constant:eps=3\n";
    let asm = BodyAssembly::<f64>::parse_config(text, 4).unwrap();
    assert_eq!(asm.bodies().len(), 2);
    let e = order_n_interaction(&asm, 2, &QuadratureConfig::default()).unwrap();
    assert!(e < 0.0);
}

#[test]
fn rough_energy_is_deterministic_across_thread_counts() {
    let side = 4.0;
    let k = 2.0 * PI / side;
    let pair = RoughPair::new(osc(1.0), osc(0.6), 1.1, wave(0.2, [k, 0.0], 0.1), wave(0.1, [k, 0.0], 1.9), side, 4)
        .unwrap();
    let c = QuadratureConfig::default().with_rel_tol(1e-6);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| energy_second_order(&pair, &c).unwrap())
    };
    assert_eq!(run(1).to_bits(), run(4).to_bits());
}

#[test]
fn rough_energy_decreases_on_five_separations() {
    let side = 4.0;
    let k = 2.0 * PI / side;
    let c = QuadratureConfig::default().with_rel_tol(1e-6);
    let energies: Vec<f64> = [0.8, 1.0, 1.3, 1.7, 2.2]
        .iter()
        .map(|&h| {
            let pair =
                RoughPair::new(osc(1.0), osc(1.0), h, wave(0.15, [k, 0.0], 0.0), wave(0.1, [0.0, k], 0.5), side, 4)
                    .unwrap();
            energy_second_order(&pair, &c).unwrap()
        })
        .collect();
    assert!(energies.iter().all(|&e| e < 0.0));
    assert!(energies.windows(2).all(|w| w[1].abs() < w[0].abs()), "{energies:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn two_sphere_energy_is_attractive(w in 0.3f64..2.0, r2 in 0.5f64..2.0, d in 6.0f64..40.0) {
        let a = SphereBody::new([0.0, 0.0, 0.0], 1.0, osc(w)).unwrap();
        let b = SphereBody::new([0.0, d, 0.0], r2, osc(w)).unwrap();
        let asm = BodyAssembly::new(vec![a, b], 4).unwrap();
        prop_assert!(order_n_interaction(&asm, 2, &QuadratureConfig::default()).unwrap() < 0.0);
    }

    #[test]
    fn sphere_order_does_not_matter(d in 5.0f64..15.0, w in 0.5f64..1.5) {
        let bodies = vec![
            SphereBody::new([0.0, 0.0, 0.0], 1.0, osc(w)).unwrap(),
            SphereBody::new([d, 0.0, 0.0], 0.8, osc(1.0)).unwrap(),
            SphereBody::new([0.0, d, 1.0], 1.2, osc(0.7)).unwrap(),
        ];
        let mut reversed = bodies.clone();
        reversed.reverse();
        let c = QuadratureConfig::default();
        let a = order_n_interaction(&BodyAssembly::new(bodies, 2).unwrap(), 2, &c).unwrap();
        let b = order_n_interaction(&BodyAssembly::new(reversed, 2).unwrap(), 2, &c).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn body_swap_leaves_rough_energy_unchanged(a1 in 0.0f64..0.25, a2 in 0.0f64..0.25, phase in 0.0f64..6.0) {
        let side = 3.0;
        let k = 2.0 * PI / side;
        let pair = RoughPair::new(osc(1.0), osc(0.5), 1.0, wave(a1, [k, 0.0], 0.0), wave(a2, [k, 0.0], phase), side, 4)
            .unwrap();
        let c = QuadratureConfig::default().with_rel_tol(1e-6);
        let e = energy_second_order_detailed(&pair, &c).unwrap();
        let s = energy_second_order_detailed(&pair.swapped(), &c).unwrap();
        prop_assert!((e.energy - s.energy).abs() <= 1e-9 * e.energy.abs());
    }
}
