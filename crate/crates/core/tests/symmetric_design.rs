use approx::assert_relative_eq;
use awgnbc_core::channel::total_power;
use awgnbc_core::numerics::lambert_w0;
use awgnbc_core::symmetric::{
    asymptotic_gains, blocklength_upper_bound, f_inverse, f_of_beta, gamma_lower_bound, lb_sum_rate,
    no_feedback_sum_rate, noiseless_gains_fit, noiseless_sum_rate_bound, noisy_feedback_witness, optimal_gains,
    optimize_sum_rate, snr_matrix, solve_phi, sum_rate_from_snr, to_general_code, AsymptoticForm, SearchConfig,
};
use awgnbc_core::SymmetricParams;
use proptest::prelude::*;

#[test]
fn f_is_decreasing_and_inverts() {
    for k in [2usize, 4, 8] {
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&b| f_of_beta(b, k).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        for (&b, &y) in grid.iter().zip(&vals).step_by(7) {
            assert_relative_eq!(f_inverse(y, k).unwrap(), b, max_relative = 1e-10);
        }
    }
    assert!(f_of_beta(1.0, 2).is_err());
    assert!(f_inverse(-1.0, 2).is_err());
}

#[test]
fn phi_for_two_users() {
    // K = 2: (1+Pφ) = (1+(P/2)φ(2−φ))², checked by direct substitution.
    let s = solve_phi(10.0f64, 2).unwrap();
    assert_relative_eq!(s.phi, 1.610586077871747, max_relative = 1e-12);
    let lhs = 1.0 + 10.0 * s.phi;
    let rhs = (1.0 + 5.0 * s.phi * (2.0 - s.phi)).powi(2);
    assert!((lhs - rhs).abs() < 1e-9);
    let b = noiseless_sum_rate_bound(10.0, 2).unwrap();
    assert_relative_eq!(b.rate, 2.0482093991148664, max_relative = 1e-12);
}

#[test]
fn noiseless_bound_beats_no_feedback_and_matches_beta() {
    for k in [2usize, 4] {
        for p in [0.01, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let b = noiseless_sum_rate_bound::<f64>(p, k).unwrap();
            assert!(b.rate > no_feedback_sum_rate(p), "K={k} P={p}");
            assert_relative_eq!(-(k as f64) * b.beta.log2(), b.rate, max_relative = 1e-12);
            assert!((1.0..=k as f64).contains(&b.phi.phi));
        }
    }
}

#[test]
fn gamma_lower_bound_grows_with_rate() {
    let lo = no_feedback_sum_rate(10.0);
    let hi = noiseless_sum_rate_bound(10.0, 2).unwrap().rate;
    let g: Vec<f64> = (1..20).map(|i| gamma_lower_bound(lo + (hi - lo) * i as f64 / 20.0, 10.0, 2).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert!(g.iter().all(|&x| x > 0.0 && x < 1.0));
    assert!(gamma_lower_bound(hi + 1e-9, 10.0, 2).is_err());
}

#[test]
fn lambert_reference_values() {
    assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    assert_relative_eq!(lambert_w0(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-14);
    assert_relative_eq!(lambert_w0(1.0).unwrap(), 0.567_143_290_409_783_8, max_relative = 1e-14);
    assert_relative_eq!(lambert_w0(-(-1f64).exp()).unwrap(), -1.0, epsilon = 1e-7);
    assert!(lambert_w0(-0.5f64).is_err());
}

#[test]
fn blocklength_bound_reaches_the_rate() {
    let (p, k) = (10.0, 2);
    let lo = no_feedback_sum_rate(p);
    let hi = noiseless_sum_rate_bound(p, k).unwrap().rate;
    for fr in [0.05, 0.3, 0.6, 0.85] {
        let rate = lo + fr * (hi - lo);
        let glb = gamma_lower_bound(rate, p, k).unwrap();
        let gamma = glb + 0.2 * (1.0 - glb);
        let beta = f_inverse(gamma * p, k).unwrap();
        let b = blocklength_upper_bound(rate, p, k, gamma, beta).unwrap();
        let lt = b.bound as usize;
        assert!(lb_sum_rate(lt, k, p, gamma, beta) >= rate, "fr={fr}");
        // The real root sits where the lower-bound rate crosses R.
        assert_relative_eq!(lb_sum_rate_real(b.raw, k, p, gamma, beta), rate, max_relative = 1e-9);
        // Below the bound the guarantee is gone, unless the K+1 floor kicked in.
        if b.ceiled as usize > k + 1 {
            assert!(lb_sum_rate(lt - 1, k, p, gamma, beta) < rate, "fr={fr}");
        }
        // Enough feedback power for the noiseless-limit gains at that length.
        let sp = SymmetricParams::new(k, lt, beta, gamma, p, 0.0).unwrap();
        assert!(noiseless_gains_fit(&sp));
    }
}

/// `lb_sum_rate` with a real-valued `L̃`.
fn lb_sum_rate_real(lt: f64, k: usize, p: f64, gamma: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let a = (1.0 - b2) / (beta.powi(-2 * k as i32) * (1.0 + b2) - 1.0);
    let l = lt + k as f64 - 1.0;
    let snr = a * (1.0 - gamma) * l * p / k as f64 / b2.powf(lt);
    k as f64 * (1.0 + snr).log2() / (2.0 * l)
}

#[test]
fn fitting_noiseless_gains_stay_within_power() {
    for (k, lt, beta, s2) in [(2usize, 12usize, 0.6f64, 0.0f64), (2, 30, 0.8, 1e-3), (4, 21, 0.85, 1e-2)] {
        let e_gamma = {
            let p = SymmetricParams::new(k, lt, beta, 0.0, 10.0, s2).unwrap();
            let e = awgnbc_core::symmetric::feedback_power_e(lt, beta, k);
            k as f64 * (1.0 + s2) * e / (p.blocklength() as f64 * 10.0)
        };
        for gamma in [e_gamma * 1.001, (e_gamma * 1.5).min(1.0)] {
            let p = SymmetricParams::new(k, lt, beta, gamma, 10.0, s2).unwrap();
            assert!(noiseless_gains_fit(&p));
            let code = to_general_code(&p, &asymptotic_gains(&p, AsymptoticForm::NoiselessLimit)).unwrap();
            let used = total_power(&code, &p.channel().unwrap()).unwrap();
            assert!(used <= p.blocklength() as f64 * 10.0 * (1.0 + 1e-12), "{used}");
        }
        let tight = SymmetricParams::new(k, lt, beta, e_gamma * 0.99, 10.0, s2).unwrap();
        assert!(!noiseless_gains_fit(&tight));
    }
}

#[test]
fn noisy_witness_achieves_rate_through_the_matrix_route() {
    let mut checked = 0;
    for rate in [1.0, 1.8, 1.95, 2.0] {
        let w = noisy_feedback_witness(rate, 10.0, 2, 4000).unwrap();
        assert!(w.epsilon > 0.0 && w.beta0 > w.beta);
        assert!(w.achieved > rate);
        // Longer blocks push the residual below round-off in the matrix route.
        if w.ltilde0 <= 40 {
            let p = SymmetricParams::new(2, w.ltilde0, w.beta0, w.gamma, 10.0, w.epsilon).unwrap();
            let snr = snr_matrix(&p, &asymptotic_gains(&p, AsymptoticForm::NoiselessLimit)).unwrap();
            assert!(sum_rate_from_snr(snr, w.ltilde0, 2) > rate, "rate {rate}");
            checked += 1;
        }
    }
    assert!(checked >= 2);
}

fn quick() -> SearchConfig {
    SearchConfig { lmax: 14, beta_grid: 24, gamma_grid: 13, refine_rounds: 2, ..SearchConfig::default() }
}

#[test]
fn optimizer_beats_no_feedback_and_degrades_with_noise() {
    let floor = no_feedback_sum_rate(10.0);
    let rates: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&s2| optimize_sum_rate(10.0, 2, s2, &quick()).unwrap().achieved_sum_rate)
        .collect();
    assert!(rates.iter().all(|&r| r >= floor - 1e-12));
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{rates:?}");
}

#[test]
fn optimizer_point_reproduces_through_gains() {
    let d = optimize_sum_rate(10.0, 2, 1e-4, &quick()).unwrap();
    let p = SymmetricParams::new(2, d.ltilde, d.beta, d.gamma, 10.0, 1e-4).unwrap();
    let snr = snr_matrix(&p, &optimal_gains(&p).unwrap()).unwrap();
    assert_relative_eq!(sum_rate_from_snr(snr, d.ltilde, 2), d.achieved_sum_rate, max_relative = 1e-9);
    assert_eq!(d.trace.len(), 14);
    let again = optimize_sum_rate(10.0, 2, 1e-4, &quick()).unwrap();
    assert_eq!(d, again);
}

proptest! {
    #[test]
    fn f_inverse_round_trip(y in 1e-3f64..1e3, k in prop::sample::select(vec![2usize, 4])) {
        let b = f_inverse(y, k).unwrap();
        prop_assert!(((f_of_beta(b, k).unwrap() - y) / y).abs() < 1e-9);
    }
}
