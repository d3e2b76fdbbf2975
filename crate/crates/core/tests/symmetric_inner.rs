use approx::assert_relative_eq;
use awgnbc_core::channel::{snr_receiver, total_power};
use awgnbc_core::symmetric::{
    asymptotic_gains, assemble_f, build_c, build_f, build_q, feedback_power_e, hadamard, hadamard_column,
    interference_leakage, leakage_limit, leakage_of, optimal_gains, snr_bounds, snr_closed_form, snr_matrix,
    spread_ratio, structured_denominator, to_general_code, AsymptoticForm,
};
use awgnbc_core::{symmetric, FeedbackGains, SymmetricParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(k: usize, lt: usize, beta: f64, gamma: f64, s2: f64) -> SymmetricParams {
    SymmetricParams::new(k, lt, beta, gamma, 10.0, s2).unwrap()
}

#[test]
fn hadamard_rows_are_orthogonal() {
    for k in [2usize, 4, 8] {
        let h = hadamard::<f64>(k).unwrap();
        let hht = h.matmul(&h.transpose()).unwrap();
        for i in 0..k {
            for j in 0..k {
                assert_eq!(hht.get(i, j), if i == j { k as f64 } else { 0.0 });
            }
            assert_eq!(h.get(i, 0), 1.0);
        }
    }
}

#[test]
fn second_column_alternates() {
    let c = build_c(4, &hadamard_column::<f64>(2, 1).unwrap());
    assert_eq!(c, vec![1.0, -1.0, 1.0, -1.0]);
}

#[test]
fn q_dot_f_head_is_one() {
    let b = spread_ratio(0.7f64);
    let q = build_q(6, b);
    let f = build_f(3, b);
    assert_relative_eq!(q[2], 0.49, max_relative = 1e-15);
    assert_relative_eq!(f[2], 1.0 / 0.49, max_relative = 1e-15);
    // q_{i+t} f_t = q_i for every t.
    for t in 0..3 {
        assert_relative_eq!(q[1 + t] * f[t], q[1], max_relative = 1e-15);
    }
}

#[test]
fn assembled_filter_shape() {
    let p = params(2, 5, 0.5, 0.5, 0.0);
    let g = asymptotic_gains(&p, AsymptoticForm::NoiselessLimit);
    let f = assemble_f(5, 2, spread_ratio(0.5), &g).unwrap();
    assert!(f.is_strictly_lower());
    // Columns 0..3 are active; column 0 carries two copies of f, column 2 one.
    let nz: Vec<usize> = (0..5).map(|c| (0..5).filter(|&r| f.get(r, c) != 0.0).count()).collect();
    assert_eq!(nz, vec![4, 2, 2, 0, 0]);
}

#[test]
fn perturbed_filter_leaks() {
    let p = params(4, 20, 0.6, 0.5, 1e-3);
    let g = optimal_gains(&p).unwrap();
    let b = spread_ratio(p.beta);
    let q = build_q(20, b);
    let mut f = assemble_f(20, 4, b, &g).unwrap();
    assert!(interference_leakage(&p, &g).unwrap() <= leakage_limit(&q, &f));
    let v = f.get(5, 2);
    f.set(5, 2, v + 1e-3);
    let leak = leakage_of(&p, &q, &f).unwrap();
    assert!(leak > leakage_limit(&q, &f), "leak {leak:e}");
}

fn random_feasible(rng: &mut ChaCha8Rng, template: &FeedbackGains, budget: f64) -> FeedbackGains {
    let mut mu: Vec<Vec<f64>> =
        template.mu.iter().map(|c| c.iter().map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let e: f64 = mu.iter().flatten().map(|x| x * x).sum();
    let s = (budget / e).sqrt() * rng.random_range(0.0..1.0);
    mu.iter_mut().flatten().for_each(|x| *x *= s);
    FeedbackGains { mu, lambda: 0.0 }
}

#[test]
fn optimal_gains_beat_random_feasible_gains() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (k, lt, beta, gamma, s2) in [(2, 9, 0.5, 0.3, 1e-3), (4, 14, 0.7, 0.6, 1e-2), (2, 6, 0.3, 0.05, 0.0)] {
        let p = params(k, lt, beta, gamma, s2);
        let opt = optimal_gains(&p).unwrap();
        let best = structured_denominator(&p, &opt).unwrap();
        for _ in 0..1000 {
            let g = random_feasible(&mut rng, &opt, p.gain_budget());
            let d = structured_denominator(&p, &g).unwrap();
            assert!(d >= best * (1.0 - 1e-12), "{d} < {best}");
        }
    }
}

#[test]
fn general_embedding_is_symmetric_and_within_power() {
    let p = params(4, 12, 0.55, 0.4, 1e-3);
    let g = optimal_gains(&p).unwrap();
    let code = to_general_code(&p, &g).unwrap();
    let ch = p.channel().unwrap();
    let snrs: Vec<f64> = (0..4).map(|k| snr_receiver(&code, &ch, k).unwrap()).collect();
    for s in &snrs {
        assert_relative_eq!(*s, snrs[0], max_relative = 1e-12);
    }
    let lp = p.blocklength() as f64 * p.power;
    assert!(total_power(&code, &ch).unwrap() <= lp * (1.0 + 1e-12));
}

#[test]
fn e_is_the_filter_energy_and_grows_linearly() {
    for (k, beta) in [(2usize, 0.5f64), (4, 0.8)] {
        let lead = (1.0 - beta.powi(2 * k as i32)).powi(2)
            / ((k * k) as f64 * (1.0 - beta * beta) * beta.powi(2 * k as i32));
        for lt in [k + 1, 10, 31] {
            let p = params(k, lt, beta, 0.5, 0.0);
            let f = assemble_f(lt, k, spread_ratio(beta), &asymptotic_gains(&p, AsymptoticForm::NoiselessLimit)).unwrap();
            assert_relative_eq!(feedback_power_e(lt, beta, k), f.frobenius_sq(), max_relative = 1e-12);
        }
        let step = feedback_power_e(400 + k, beta, k) - feedback_power_e(400, beta, k);
        assert_relative_eq!(step, k as f64 * lead, max_relative = 1e-9);
    }
}

#[test]
fn bounds_bracket_the_closed_form() {
    for k in [2usize, 4] {
        for beta in [0.3, 0.6, 0.9] {
            for lt in (k + 1)..=200 {
                let p = params(k, lt, beta, 0.3, 0.0);
                let snr = snr_closed_form(&p).unwrap();
                let (lb, ub) = snr_bounds(&p).unwrap();
                assert!(lb <= snr * (1.0 + 1e-12), "K={k} beta={beta} L={lt}: lb {lb} > {snr}");
                assert!(snr <= ub * (1.0 + 1e-12), "K={k} beta={beta} L={lt}: {snr} > ub {ub}");
            }
        }
    }
}

#[test]
fn bound_gap_stays_open_for_long_blocks() {
    // lb/ub tends to (β^{−2K}−1+β^{2K−2})/(β^{−2K}(1+β²)−1), not to 1.
    let (beta, k) = (0.6f64, 2);
    let limit = (beta.powi(-4) - 1.0 + beta.powi(2)) / (beta.powi(-4) * (1.0 + beta * beta) - 1.0);
    let (lb, ub) = snr_bounds(&params(k, 500, beta, 0.3, 0.0)).unwrap();
    assert_relative_eq!(lb / ub, limit, max_relative = 1e-9);
    assert!(lb / ub < 0.75);
}

#[test]
fn asymptotic_gains_match_optimal_when_budget_is_loose() {
    let p = params(2, 40, 0.5, 0.9, 1e-3);
    let opt = optimal_gains(&p).unwrap();
    assert_eq!(opt.lambda, 0.0);
    let big = asymptotic_gains(&p, AsymptoticForm::LargeBlocklength);
    // Columns far from the tail see the same gains up to β^{2K·copies}.
    assert_relative_eq!(opt.mu[0][0], big.mu[0][0], max_relative = 1e-6);
    assert!(snr_matrix(&p, &opt).unwrap() >= snr_matrix(&p, &big).unwrap() * (1.0 - 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_gains_respect_budget(
        k in prop::sample::select(vec![2usize, 4]),
        lt in 1usize..40,
        beta in 0.05f64..0.95,
        gamma in 0.0f64..1.0,
        s2 in 0.0f64..0.1,
    ) {
        let p = params(k, lt, beta, gamma, s2);
        let g = optimal_gains(&p).unwrap();
        prop_assert!(g.energy() <= p.gain_budget() * (1.0 + 1e-12));
        let m = snr_matrix(&p, &g).unwrap();
        let s = p.snr_numerator() / structured_denominator(&p, &g).unwrap();
        prop_assert!(((m - s) / s).abs() < 1e-9);
    }

    #[test]
    fn f32_closed_form_tracks_f64(lt in 3usize..20, beta in 0.3f64..0.8) {
        let p64 = params(2, lt, beta, 0.5, 1e-3);
        let p32 = symmetric::SymmetricParams::<f32>::new(2, lt, beta as f32, 0.5, 10.0, 1e-3).unwrap();
        let a = snr_closed_form(&p64).unwrap();
        let b = snr_closed_form(&p32).unwrap() as f64;
        prop_assert!(((a - b) / a).abs() < 1e-4);
    }
}
