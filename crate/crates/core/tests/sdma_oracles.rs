use mmuav_core::codebook::CodebookKind;
use mmuav_core::rng::trial_rng;
use mmuav_core::sdma::{
    bound_rate, capacity_lf, log_det_rate, mmse_rates_no_sic, mmse_sic_sum_rate, sdma_rate_curve,
    CapacityParams, DecodingOrder, LfExpectation, SdmaScenario,
};
use mmuav_core::Complex64;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_channel<R: Rng>(rng: &mut R, u: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(u, u, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Σ log2(1 + ρ λ_i) over the eigenvalues of the Hermitian `H^H H`.
fn eigen_rate(h: &DMatrix<Complex64>, rho: f64) -> f64 {
    let g = h.adjoint() * h;
    g.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| (1.0 + rho * l.max(0.0)).log2())
        .sum()
}

#[test]
fn sic_sum_rate_equals_log_det() {
    let mut rng = trial_rng(2024, 0, 0);
    for u in [2, 4, 8] {
        for _ in 0..100 {
            let h = random_channel(&mut rng, u);
            let rho = 10f64.powf(rng.random_range(-1.0..3.0));
            let sic = mmse_sic_sum_rate(&h, rho, &DecodingOrder::default()).unwrap();
            let want = eigen_rate(&h, rho);
            assert!((sic.sum - want).abs() < 1e-9, "U={u}: {} vs {want}", sic.sum);
            assert!((log_det_rate(&h, rho).unwrap() - want).abs() < 1e-9);

            let mut perm: Vec<usize> = (0..u).collect();
            perm.shuffle(&mut rng);
            let other = mmse_sic_sum_rate(&h, rho, &DecodingOrder::Custom(perm)).unwrap();
            assert!((other.sum - sic.sum).abs() < 1e-9);
            let rev = mmse_sic_sum_rate(&h, rho, &DecodingOrder::Reverse).unwrap();
            assert!((rev.sum - sic.sum).abs() < 1e-9);
        }
    }
}

#[test]
fn hadamard_and_no_sic_ordering() {
    // Gram diagonal: det(I + ρ H^H H) <= Π (1 + ρ ||h_j||²)
    let mut rng = trial_rng(7, 0, 0);
    for _ in 0..100 {
        let h = random_channel(&mut rng, 4);
        let rho = 10.0;
        let sum = mmse_sic_sum_rate(&h, rho, &DecodingOrder::default()).unwrap().sum;
        let hadamard: f64 = (0..4)
            .map(|j| (1.0 + rho * h.column(j).norm_squared()).log2())
            .sum();
        assert!(sum <= hadamard + 1e-9);
        let linear: f64 = mmse_rates_no_sic(&h, rho).unwrap().iter().sum();
        assert!(linear <= sum + 1e-9);
    }
}

fn expint_e1(x: f64) -> f64 {
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        -0.577_215_664_901_532_9 - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[test]
fn lf_capacity_matches_exponential_integral() {
    let b = 5e6;
    let u = 4;
    for snr_db in [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0] {
        let rho = 10f64.powf(snr_db / 10.0);
        let a = rho / u as f64;
        let want = u as f64 * b * (1.0 / a).exp() * expint_e1(1.0 / a) / std::f64::consts::LN_2;
        let p = CapacityParams::new(b, rho, u).unwrap();
        let q = capacity_lf(&p, &LfExpectation::default()).unwrap();
        assert!(((q - want) / want).abs() < 1e-3, "{snr_db} dB: {q} vs {want}");
        let mc = capacity_lf(&p, &LfExpectation::MonteCarlo { samples: 200_000, seed: 3 }).unwrap();
        assert!(((mc - want) / want).abs() < 5e-3, "{snr_db} dB MC: {mc} vs {want}");
    }
}

#[test]
fn sdma_slope_tracks_bound() {
    let sc = SdmaScenario {
        n_bs: 32,
        n_ms: 32,
        branching: 2,
        n_users: 4,
        l_paths: 3,
        nlos_offset_db: 20.0,
        codebook: CodebookKind::BmwSs,
        min_group_separation: 4,
        grid_aligned: true,
    };
    let pts = sdma_rate_curve(&sc, &[30.0, 40.0], 20, 5).unwrap();
    let dlog = (1e4f64 / 1e3).log2();
    let slope = (pts[1].sum_rate - pts[0].sum_rate) / dlog;
    let bound_slope = (pts[1].bound_rate - pts[0].bound_rate) / dlog;
    assert!((slope - 4.0).abs() < 0.4, "slope {slope}");
    assert!((slope - bound_slope).abs() < 0.1 * bound_slope);
    assert!(pts.iter().all(|p| p.sum_rate <= p.bound_rate + 1e-6));
}

#[test]
fn bound_dominates_diagonal_rates() {
    let mut rng = trial_rng(9, 0, 0);
    let h = random_channel(&mut rng, 3);
    let b = bound_rate(&h, 5.0).unwrap();
    assert!(b.is_finite() && b > 0.0);
}
