use awgnbc_core::montecarlo::{simulate, simulate_concatenated_ser, verify_nulling_empirical, SimConfig};
use awgnbc_core::single_feedback::build_sk_code;
use awgnbc_core::symmetric::{optimal_gains, to_general_code};
use awgnbc_core::{ChannelParams, FeedbackNoise, LinearFeedbackCode, Matrix, SymmetricParams};

fn awgn(p: f64, sz: f64) -> (LinearFeedbackCode, ChannelParams) {
    let code = LinearFeedbackCode::new(vec![vec![1.0]], vec![Matrix::zeros(1, 1)], vec![vec![1.0]], vec![p]).unwrap();
    (code, ChannelParams::new(p, vec![sz], vec![FeedbackNoise::Absent]).unwrap())
}

fn symmetric(lt: usize) -> (LinearFeedbackCode, ChannelParams) {
    let p = SymmetricParams::new(2, lt, 0.5, 0.5, 10.0, 1e-3).unwrap();
    (to_general_code(&p, &optimal_gains(&p).unwrap()).unwrap(), p.channel().unwrap())
}

/// `Q(x)` by composite Simpson over `[x, x+12]`.
fn q_oracle(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(x) + pdf(x + 12.0);
    for i in 1..n {
        s += pdf(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (code, ch) = symmetric(8);
    let cfg = SimConfig::new(20_000, 9, 2);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&code, &ch, &cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
    let other = simulate(&code, &ch, &SimConfig::new(20_000, 10, 2)).unwrap();
    assert_ne!(one.empirical_snr, other.empirical_snr);
}

#[test]
fn stderr_shrinks_like_inverse_root_n() {
    let (code, ch) = symmetric(6);
    let se = |n: usize| simulate(&code, &ch, &SimConfig::new(n, 3, 2)).unwrap().empirical_snr[0].stderr;
    let ladder = [5_000, 20_000, 80_000];
    let s: Vec<f64> = ladder.iter().map(|&n| se(n)).collect();
    for w in s.windows(2) {
        let r = w[0] / w[1];
        assert!((r - 2.0).abs() < 0.4, "ratio {r}");
    }
}

#[test]
fn errors_are_gaussian_and_snr_agrees() {
    for (code, ch) in [symmetric(8), awgn(10.0, 1.0)] {
        let r = simulate(&code, &ch, &SimConfig::new(100_000, 21, code.users())).unwrap();
        assert!(r.snr_consistent(3.0), "{:?} vs {:?}", r.empirical_snr, r.analytic_snr);
        assert!(r.power_ok(3.0));
        for k in &r.error_kurtosis {
            assert!(k.within(3.0, 3.0), "kurtosis {k:?}");
        }
    }
}

#[test]
fn sk_code_simulates_at_its_analytic_snr() {
    let sk = build_sk_code(10, 10.0, 1.0 + 1e-2, 0.0).unwrap();
    let code = sk.to_linear_code().unwrap();
    let ch = sk.channel(1.0, 1e-2).unwrap();
    let r = simulate(&code, &ch, &SimConfig::new(50_000, 5, 1)).unwrap();
    assert!(r.snr_consistent(3.0));
    assert!(r.power_ok(3.0));
}

#[test]
fn symbol_error_rates_match_q_function() {
    for (m, p) in [(2usize, 1.0), (4, 10.0), (8, 40.0)] {
        let (code, ch) = awgn(p, 1.0);
        let mut cfg = SimConfig::new(200_000, 77, 1);
        cfg.pam_order = vec![m];
        let r = simulate_concatenated_ser(&code, &ch, &cfg).unwrap();
        let s = r.symbol_error_rate.unwrap()[0];
        let mf = m as f64;
        let want = 2.0 * (1.0 - 1.0 / mf) * q_oracle((3.0 * p / (mf * mf - 1.0)).sqrt());
        assert!((s.predicted - want).abs() < 1e-10, "M={m}");
        assert!(s.ser.within(want, 3.0), "M={m}: {:?} vs {want}", s.ser);
    }
}

#[test]
fn high_snr_errors_are_rare() {
    let (code, ch) = awgn(1e3, 1.0);
    let mut cfg = SimConfig::new(50_000, 1, 1);
    cfg.hard_decision = true;
    let s = simulate(&code, &ch, &cfg).unwrap().symbol_error_rate.unwrap()[0];
    assert_eq!(s.ser.value, 0.0);
    assert!(s.predicted < 1e-100);
}

#[test]
fn nulling_holds_for_the_designed_filter() {
    for lt in [1, 4, 9] {
        let (code, ch) = symmetric(lt);
        let r = verify_nulling_empirical(&code, &ch, &SimConfig::new(40_000, 8, 2)).unwrap();
        assert!(r.passed, "L={lt}: {r:?}");
        assert_eq!(r.threshold, 4.0 / 40_000f64.sqrt());
    }
}

#[test]
fn broken_filter_is_caught() {
    let (code, ch) = symmetric(9);
    let mut f = code.filter(0).clone();
    let (r, c) = (5, 3);
    f.set(r, c, f.get(r, c) + 2.0);
    let broken = code.with_filter(0, f).unwrap();
    let rep = verify_nulling_empirical(&broken, &ch, &SimConfig::new(40_000, 8, 2)).unwrap();
    assert!(!rep.passed, "{rep:?}");
}

#[test]
fn bad_configs_are_rejected() {
    let (code, ch) = awgn(1.0, 1.0);
    assert!(simulate(&code, &ch, &SimConfig::new(0, 1, 1)).is_err());
    assert!(simulate(&code, &ch, &SimConfig::new(10, 1, 2)).is_err());
    let mut cfg = SimConfig::new(10, 1, 1);
    cfg.pam_order = vec![1];
    assert!(simulate(&code, &ch, &cfg).is_err());
}
