//! Randomized invariants with shrinking, restricted to cheap building
//! blocks (no spectral oracle builds inside the generators). The full
//! series-vs-oracle comparisons live in the acceptance target.

use proptest::prelude::*;
use qrm::combinatorics::{enumerate_v0, fwht, q_number, varphi, varphi_t, varphi_t_positions, varphi_t_remform, GraphVector};
use qrm::core::{mehler_k0_ln, rot_even, BitString, EvalPoint, Parity, SimplexPoint};
use qrm::series::{theta_lambda, xi_lambda};
use qrm::thermo::psi_lambda_pm;

fn sorted_simplex(max_lambda: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.0f64..=1.0, 0..=max_lambda).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        SimplexPoint::new(v).unwrap()
    })
}

fn bitstring(max_k: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(0u8..=1, 1..=max_k).prop_map(|v| BitString::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn theta_is_linear_and_odd_in_the_endpoints(
        mu in sorted_simplex(8),
        t in 0.05f64..4.0,
        g in 0.0f64..2.0,
        x1 in -3.0f64..3.0, y1 in -3.0f64..3.0,
        x2 in -3.0f64..3.0, y2 in -3.0f64..3.0,
    ) {
        let p1 = EvalPoint::new(x1, y1, t).unwrap();
        let p2 = EvalPoint::new(x2, y2, t).unwrap();
        let ps = EvalPoint::new(x1 + x2, y1 + y2, t).unwrap();
        let (a, b, s) = (
            theta_lambda(&p1, &mu, g),
            theta_lambda(&p2, &mu, g),
            theta_lambda(&ps, &mu, g),
        );
        let scale = a.abs().max(b.abs()).max(s.abs()).max(1.0);
        prop_assert!((a + b - s).abs() <= 1e-9 * scale);
        let refl = theta_lambda(&p1.reflected(), &mu, g);
        prop_assert!((refl + a).abs() <= 1e-9 * scale);
    }

    #[test]
    fn xi_is_nonpositive_on_the_ordered_simplex(
        mu in sorted_simplex(10),
        t in 0.05f64..4.0,
        g in 0.0f64..2.0,
    ) {
        let xi = xi_lambda(&mu, t, g);
        let lam = mu.lambda() as f64;
        let slack = 1e-12 * (1.0 + g * g / t.sinh() * (lam + 1.0).powi(2) * (2.0 * t.exp() + 4.0));
        prop_assert!(xi <= slack, "xi = {xi:.3e} above roundoff slack {slack:.3e}");
    }

    #[test]
    fn psi_is_nonnegative_and_under_its_envelope(
        mu in sorted_simplex(10),
        t in 0.05f64..4.0,
        g in 0.0f64..2.0,
    ) {
        let pref = g * g / t.sinh();
        let lam = mu.lambda() as f64;
        let slack = 1e-12 * (1.0 + pref * (lam + 1.0).powi(2) * (2.0 * t.exp() + 4.0));
        let minus = psi_lambda_pm(&mu, t, g, Parity::Minus);
        let plus = psi_lambda_pm(&mu, t, g, Parity::Plus);
        prop_assert!(minus >= -slack && plus >= -slack);
        if mu.lambda() % 2 == 0 {
            let bound = 2.0 * g * g * (0.5 * t).tanh();
            prop_assert!(minus <= bound + slack + 1e-10 * bound,
                "even-dimension psi_minus {minus:.6e} above {bound:.6e}");
        } else {
            let v = 2.0 * ((0.5 * t).cosh() - 1.0);
            let bound = pref * (2.0 * v) * (2.0 * v);
            prop_assert!(plus <= bound + slack + 1e-10 * bound,
                "odd-dimension psi_plus {plus:.6e} above {bound:.6e}");
        }
    }

    #[test]
    fn hyperbolic_rotations_compose_additively(
        a in -4.0f64..4.0,
        b in -4.0f64..4.0,
    ) {
        let prod = rot_even(a).matmul(&rot_even(b));
        let direct = rot_even(a + b);
        let scale = direct.max_abs().max(1.0);
        prop_assert!(prod.max_abs_diff(&direct) <= 1e-12 * scale);
        let det_slack = 1e-13 * a.cosh().powi(2).max(b.cosh().powi(2));
        prop_assert!((rot_even(a).det() - 1.0).abs() <= det_slack.max(1e-13));
    }

    #[test]
    fn mehler_kernel_satisfies_cauchy_schwarz(
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
        t in 0.05f64..4.0,
        g in 0.0f64..2.0,
    ) {
        let pxy = EvalPoint::new(x, y, t).unwrap();
        let pxx = EvalPoint::new(x, x, t).unwrap();
        let pyy = EvalPoint::new(y, y, t).unwrap();
        let lhs = 2.0 * mehler_k0_ln(&pxy, g);
        let rhs = mehler_k0_ln(&pxx, g) + mehler_k0_ln(&pyy, g);
        prop_assert!(lhs <= rhs + 1e-9, "ln-scale excess {:.3e}", lhs - rhs);
        // symmetry in the two endpoints
        let pyx = EvalPoint::new(y, x, t).unwrap();
        prop_assert!((mehler_k0_ln(&pxy, g) - mehler_k0_ln(&pyx, g)).abs() <= 1e-10);
    }

    #[test]
    fn bitstring_index_roundtrip_and_group_law(
        rho in bitstring(16),
        sigma in bitstring(16),
    ) {
        let back = BitString::from_index(rho.len(), rho.to_index());
        prop_assert_eq!(&back, &rho);
        prop_assert_eq!(rho.norm(), rho.bits().iter().filter(|&&b| b == 1).count());
        if rho.len() == sigma.len() {
            let s = rho.add_mod2(&sigma).unwrap();
            prop_assert_eq!(&s.add_mod2(&sigma).unwrap(), &rho);
            prop_assert_eq!(rho.add_mod2(&rho).unwrap().to_index(), 0u64);
        } else {
            prop_assert!(rho.add_mod2(&sigma).is_err());
        }
        let glued = rho.concat(&sigma);
        prop_assert_eq!(glued.len(), rho.len() + sigma.len());
        prop_assert_eq!(glued.norm(), rho.norm() + sigma.norm());
    }

    #[test]
    fn alternating_position_sum_forms_agree(
        rho in bitstring(12),
        t in 0.1f64..3.0,
    ) {
        let reference = varphi_t(&rho, t);
        let scale = reference.abs().max(1.0);
        prop_assert!((varphi_t_positions(&rho, t) - reference).abs() <= 1e-11 * scale);
        prop_assert!((varphi_t_remform(&rho, t) - reference).abs() <= 1e-11 * scale);
        // t = 1 collapses to the integer form and q_number to a length
        prop_assert!((varphi_t(&rho, 1.0) - varphi(&rho) as f64).abs() <= 1e-12);
        prop_assert!((q_number(rho.len(), 1.0) - rho.len() as f64).abs() <= 1e-12);
    }

    #[test]
    fn walsh_transform_is_an_involution_up_to_size(
        data in (0usize..=8).prop_flat_map(|k| {
            prop::collection::vec(-10.0f64..10.0, 1usize << k)
        }),
    ) {
        let n = data.len();
        let mut twice = data.clone();
        fwht(&mut twice);
        fwht(&mut twice);
        for (orig, out) in data.iter().zip(&twice) {
            prop_assert!((out - n as f64 * orig).abs() <= 1e-10 * n as f64 * orig.abs().max(1.0));
        }
    }

    #[test]
    fn even_graph_vectors_are_exactly_the_even_degree_ones(
        m in 1usize..=4,
        idx in 0usize..(1 << 10),
    ) {
        let len = GraphVector::len_for(m);
        let idx = idx % (1usize << len);
        let r = GraphVector::from_index(m, idx as u64);
        let even_by_degrees = r.degrees().iter().all(|d| d % 2 == 0);
        prop_assert_eq!(r.is_even(), even_by_degrees);
        let in_v0 = enumerate_v0(m).unwrap().contains(&r);
        prop_assert_eq!(r.is_even(), in_v0);
    }
}
