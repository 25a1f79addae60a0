use approx::assert_abs_diff_eq;
use mpsqp::channel::{channel_spectrum, choi_cp_check, transfer_matrix, QuantumChannel};
use mpsqp::excitations::{fourier_transfer, one_particle_modes, Series, Truncation};
use mpsqp::glauber::tau_table;
use mpsqp::io::{parse_mps, MpsFile, Table};
use mpsqp::linalg::*;
use mpsqp::localization::{family_channel, lambda_schedule, xi_metric, DisorderFamily};
use mpsqp::mps::{canonicalize, pauli_tensor, random_mps, state_vector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unitary(r: &mut ChaCha8Rng, d: usize) -> CMat {
    let h = hermitian_part(&random_cmat(r, d, d));
    herm_eig(&h).1
}

fn sorted_moduli(ch: &QuantumChannel) -> Vec<f64> {
    let mut v: Vec<f64> = channel_spectrum(ch).eigenvalues.iter().map(|z| z.norm()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn gauge_preserves_channel_spectrum_and_state(seed in any::<u64>(), d in 2usize..4, bond in 2usize..4) {
        let mut r = rng(seed);
        let t = random_mps(&mut r, d, bond);
        let s = random_cmat(&mut r, bond, bond) + identity(bond) * c(3.0, 0.0);
        let g = t.gauge(&s).unwrap();
        for (a, b) in sorted_moduli(&transfer_matrix(&t)).iter().zip(sorted_moduli(&transfer_matrix(&g))) {
            prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0));
        }
        let (x, y) = (state_vector(&t, 4).unwrap(), state_vector(&g, 4).unwrap());
        let diff: f64 = x.amps.iter().zip(&y.amps).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(diff <= 1e-8 * x.norm());
    }

    #[test]
    fn canonical_gauge_is_trace_preserving(seed in any::<u64>(), d in 2usize..5, bond in 2usize..4) {
        let t = random_mps(&mut rng(seed), d, bond);
        let (g, rho) = canonicalize(&t).unwrap();
        let ch = transfer_matrix(&g);
        prop_assert!(ch.trace_preservation_defect() <= 1e-10);
        let fixed = ch.apply(&rho);
        prop_assert!((fixed - &rho).norm() <= 1e-10);
        prop_assert!((rho.trace() - ONE).norm() <= 1e-12);
    }

    #[test]
    fn channels_from_tensors_are_cp(seed in any::<u64>(), d in 1usize..4, bond in 1usize..4) {
        let ch = transfer_matrix(&random_mps(&mut rng(seed), d, bond));
        prop_assert!(choi_cp_check(&ch).is_cp);
    }

    #[test]
    fn fourier_transfer_is_hermitian(seed in any::<u64>(), k in -3.1f64..3.1, l in 1usize..12) {
        let (g, _) = canonicalize(&random_mps(&mut rng(seed), 2, 2)).unwrap();
        let t = fourier_transfer(&transfer_matrix(&g), k, Truncation::Finite(l), false).unwrap();
        prop_assert!(t.hermiticity_defect <= 1e-10);
    }

    #[test]
    fn mode_energies_invariant_under_unitary_conjugation(seed in any::<u64>(), k in 0.2f64..3.0, l in 1usize..6) {
        let t = pauli_tensor([0.55, 0.25, 0.15, 0.05]);
        let u = random_unitary(&mut rng(seed), 2);
        let rot = t.map(|a| u.adjoint() * a * &u);
        let e1 = one_particle_modes(&transfer_matrix(&t), k, l, Series::Resummed).unwrap();
        let e2 = one_particle_modes(&transfer_matrix(&rot), k, l, Series::Resummed).unwrap();
        prop_assert_eq!(e1.len(), e2.len());
        for (a, b) in e1.iter().zip(&e2) {
            prop_assert!((a.epsilon - b.epsilon).abs() <= 1e-8);
        }
    }

    #[test]
    fn xi_invariant_under_unitary_conjugation(seed in any::<u64>(), t in 1.0f64..1e4, w in 0.0f64..3.0) {
        let lam = lambda_schedule(t).unwrap();
        let ch = family_channel(&DisorderFamily::aklt(w), lam).unwrap();
        let u = random_unitary(&mut rng(seed), 2);
        let uu = kron(&u, &u.map(|z| z.conj()));
        let rot = QuantumChannel::from_matrix(2, &uu * &ch.matrix * uu.adjoint()).unwrap();
        let (a, b) = (xi_metric(&ch, 100).unwrap(), xi_metric(&rot, 100).unwrap());
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0));
    }

    #[test]
    fn xi_is_bounded_by_truncation(t in 1.0f64..1e4, w in 0.0f64..3.0, n in 1usize..150) {
        let ch = family_channel(&DisorderFamily::aklt(w), lambda_schedule(t).unwrap()).unwrap();
        let xi = xi_metric(&ch, n).unwrap();
        prop_assert!(xi >= 1.0 - 1e-12 && xi <= n as f64 + 1e-12);
    }

    #[test]
    fn schedule_is_increasing(a in 1.0f64..1e6, b in 1.0f64..1e6) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(lambda_schedule(lo).unwrap() <= lambda_schedule(hi).unwrap());
        prop_assert!(lambda_schedule(hi).unwrap() < 1.0);
    }

    #[test]
    fn tau_identities_for_any_beta(beta in 0.0f64..3.0) {
        let t = tau_table(beta).unwrap();
        prop_assert!(t.hopping_symmetry_defect() <= 1e-12);
        prop_assert!(t.creation_defect() <= 1e-14);
        prop_assert!(t.rates().is_ok());
    }

    #[test]
    fn mps_file_round_trip(seed in any::<u64>(), d in 1usize..4, bond in 1usize..4) {
        let t = random_mps(&mut rng(seed), d, bond);
        let back = parse_mps(&serde_json::to_string(&MpsFile::from_tensor(&t)).unwrap()).unwrap();
        prop_assert_eq!(back.mats, t.mats);
    }

    #[test]
    fn csv_round_trip(cells in proptest::collection::vec(proptest::collection::vec("[a-z0-9,\" ]{0,8}", 3), 0..6)) {
        let mut t = Table::new(&["a", "b", "c"]);
        for row in cells {
            t.push(row).unwrap();
        }
        prop_assert_eq!(Table::from_csv(&t.to_csv().unwrap()).unwrap(), t);
    }
}

#[test]
fn pauli_channel_spectrum() {
    let m = sorted_moduli(&transfer_matrix(&pauli_tensor([0.7, 0.1, 0.1, 0.1])));
    for (a, b) in m.iter().zip([1.0, 0.6, 0.6, 0.6]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
    }
}
