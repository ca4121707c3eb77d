use std::sync::Arc;

use aaprox::anderson::AaConfig;
use aaprox::bregman::{
    bpg_step, bregman_descent_check, bregman_prox, run_bpg, run_guarded_aa_bpg_from_primal,
    run_guarded_aa_bpg_from_primal_observed, BregmanProblem, Kernel,
};
use aaprox::loss::{KlLoss, LeastSquaresLoss, QuadraticLoss, SmoothLoss};
use aaprox::pga::{run_guarded_aa_pga, run_pga, CompositeProblem, GuardEvent};
use aaprox::{DataMatrix, Regularizer, Vector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KERNELS: [Kernel; 6] = [
    Kernel::Energy,
    Kernel::Shannon,
    Kernel::Burg,
    Kernel::FermiDirac,
    Kernel::Hellinger,
    Kernel::Polynomial { alpha: 0.5 },
];

fn interior_sample(kernel: &Kernel, rng: &mut ChaCha8Rng, n: usize) -> Vector {
    DVector::from_fn(n, |_, _| match kernel {
        Kernel::Energy | Kernel::Polynomial { .. } => rng.gen_range(-3.0..3.0),
        Kernel::Shannon | Kernel::Burg => rng.gen_range(0.01..5.0),
        Kernel::FermiDirac => rng.gen_range(0.01..0.99),
        Kernel::Hellinger => rng.gen_range(-0.99..0.99),
    })
}

#[test]
fn mirror_map_round_trips_for_every_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kernel in KERNELS {
        for _ in 0..100 {
            let x = interior_sample(&kernel, &mut rng, 4);
            let back = kernel.conj_grad(&kernel.grad(&x).unwrap()).unwrap();
            assert!((&back - &x).amax() <= 1e-10, "{kernel:?} at {x}");
        }
    }
}

#[test]
fn kernel_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    for kernel in KERNELS {
        for _ in 0..20 {
            let x = interior_sample(&kernel, &mut rng, 3)
                .map(|v| v.clamp(-0.9, 4.0))
                .map(|v| match kernel {
                    Kernel::Shannon | Kernel::Burg | Kernel::FermiDirac => v.clamp(0.05, 0.95),
                    _ => v,
                });
            let g = kernel.grad(&x).unwrap();
            for j in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (kernel.value(&xp).unwrap() - kernel.value(&xm).unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0),
                    "{kernel:?}: {fd} vs {}",
                    g[j]
                );
            }
        }
    }
}

#[test]
fn fenchel_young_holds_with_equality() {
    // phi(x) + phi*(grad phi(x)) = <x, grad phi(x)>
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kernel in KERNELS {
        for _ in 0..50 {
            let x = interior_sample(&kernel, &mut rng, 3);
            let y = kernel.grad(&x).unwrap();
            let lhs = kernel.value(&x).unwrap() + kernel.conj_value(&y).unwrap();
            let rhs = x.dot(&y);
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0),
                "{kernel:?}: {lhs} vs {rhs}"
            );
        }
    }
}

#[test]
fn dual_distance_identity() {
    // D_phi(grad phi*(y), grad phi*(y')) = D_phi*(y', y), with phi* evaluated
    // directly: D_phi*(y', y) = phi*(y') - phi*(y) - <grad phi*(y), y' - y>.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kernel in [Kernel::Energy, Kernel::Shannon] {
        for _ in 0..100 {
            let y = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
            let yp = DVector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
            let x = kernel.conj_grad(&y).unwrap();
            let xp = kernel.conj_grad(&yp).unwrap();
            let primal = kernel.distance(&x, &xp).unwrap();
            let dual = kernel.conj_value(&yp).unwrap()
                - kernel.conj_value(&y).unwrap()
                - x.dot(&(&yp - &y));
            assert!(
                (primal - dual).abs() <= 1e-8,
                "{kernel:?}: {primal} vs {dual}"
            );
        }
    }
}

fn positive_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.01f64..5.0, 4),
        prop::collection::vec(0.01f64..5.0, 4),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_nonnegative_and_vanishes_on_the_diagonal((a, b) in positive_pair()) {
        let (x, y) = (DVector::from_vec(a), DVector::from_vec(b));
        for kernel in KERNELS {
            let (x, y) = match kernel {
                Kernel::FermiDirac | Kernel::Hellinger => (x.map(|v| v / 5.5), y.map(|v| v / 5.5)),
                _ => (x.clone(), y.clone()),
            };
            prop_assert!(kernel.distance(&x, &y).unwrap() >= 0.0);
            prop_assert!(kernel.distance(&y, &y).unwrap() <= 1e-12);
            if (&x - &y).amax() > 1e-3 {
                prop_assert!(kernel.distance(&x, &y).unwrap() > 0.0);
            }
        }
    }
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `argmin_{x >= 0} gamma lambda x + D(x, u)` per coordinate, from the
/// stationarity of the one-dimensional objective located by bisection on
/// its derivative `gamma lambda + log(x / u)`.
fn entropic_l1_oracle(u: &Vector, gamma_lambda: f64) -> Vector {
    u.map(|ui| bisect(|x| gamma_lambda + (x / ui).ln(), 1e-300, ui))
}

/// Entropic projection onto the simplex: bisection on the multiplier of
/// `sum(x) = 1`, each coordinate minimizing `D(x_i, u_i) + nu x_i` by its own
/// bisection.
fn entropic_simplex_oracle(u: &Vector) -> Vector {
    let inner = |nu: f64| {
        u.map(|ui| {
            bisect(
                |x| (x / ui).ln() + nu,
                1e-300,
                ui * (1.0 + (-nu).exp()).max(1.0) * 1e3,
            )
        })
    };
    let nu = bisect(|nu| 1.0 - inner(nu).sum(), -50.0, 50.0);
    inner(nu)
}

#[test]
fn entropic_l1_prox_matches_numeric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let u = DVector::from_fn(5, |_, _| rng.gen_range(0.05..4.0));
        let lambda = rng.gen_range(0.01..2.0);
        let gamma = rng.gen_range(0.1..2.0);
        let closed =
            bregman_prox(&Regularizer::L1 { lambda }, &Kernel::Shannon, gamma, &u).unwrap();
        let oracle = entropic_l1_oracle(&u, gamma * lambda);
        assert!((&closed - &oracle).amax() <= 1e-8, "{closed} vs {oracle}");
    }
}

#[test]
fn entropic_simplex_prox_matches_numeric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let u = DVector::from_fn(5, |_, _| rng.gen_range(0.05..4.0));
        let closed = bregman_prox(&Regularizer::Simplex, &Kernel::Shannon, 1.0, &u).unwrap();
        let oracle = entropic_simplex_oracle(&u);
        assert!((&closed - &oracle).amax() <= 1e-8, "{closed} vs {oracle}");
    }
}

fn nnls(seed: u64, m: usize, n: usize) -> (Arc<dyn SmoothLoss>, Regularizer) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let b = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
    (
        Arc::new(LeastSquaresLoss::new(DataMatrix::Dense(a), b, 0.0).unwrap()),
        Regularizer::NonNeg,
    )
}

#[test]
fn energy_kernel_bpg_is_pga() {
    let (f, h) = nnls(7, 40, 15);
    let bp = BregmanProblem::with_default_step(Arc::clone(&f), h, Kernel::Energy).unwrap();
    let cp = CompositeProblem::new(f, h).unwrap();
    let x0 = DVector::from_element(15, 0.5);
    let a = run_bpg(&bp, &x0, 0.0, 300).unwrap();
    let b = run_pga(&cp, &x0, bp.gamma(), 0.0, 300).unwrap();
    assert_eq!(a.iterations(), b.iterations());
    for (s, t) in a.trace.iter().zip(&b.trace) {
        assert!((s.objective - t.objective).abs() <= 1e-12 * t.objective.abs().max(1.0));
    }
    assert!((&a.x - &b.x).amax() <= 1e-12);
}

#[test]
fn energy_kernel_guarded_runs_agree() {
    let (f, h) = nnls(8, 40, 15);
    let bp = BregmanProblem::with_default_step(Arc::clone(&f), h, Kernel::Energy).unwrap();
    let cp = CompositeProblem::new(f, h).unwrap();
    let x0 = DVector::from_element(15, 0.5);
    let config = AaConfig::new(5);
    let a = run_guarded_aa_bpg_from_primal(&bp, &x0, &config, 0.0, 300).unwrap();
    let b = run_guarded_aa_pga(&cp, &x0, bp.gamma(), &config, 0.0, 300).unwrap();
    for (s, t) in a.trace.iter().zip(&b.trace) {
        assert!((s.objective - t.objective).abs() <= 1e-12 * t.objective.abs().max(1.0));
        assert_eq!(s.step_kind, t.step_kind);
    }
    assert!((&a.x - &b.x).amax() <= 1e-12);
}

fn kl_problem(seed: u64, m: usize, n: usize, h: Regularizer) -> BregmanProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(0.0..1.0));
    let b = DVector::from_fn(m, |_, _| rng.gen_range(0.0..1.0));
    let f = Arc::new(KlLoss::new(DataMatrix::Dense(a), b).unwrap());
    BregmanProblem::with_default_step(f, h, Kernel::Shannon).unwrap()
}

#[test]
fn memoryless_guarded_bpg_is_bpg() {
    let p = kl_problem(9, 30, 10, Regularizer::L1 { lambda: 0.01 });
    let x0 = DVector::from_element(10, 1.0);
    let a = run_bpg(&p, &x0, 0.0, 200).unwrap();
    let b = run_guarded_aa_bpg_from_primal(&p, &x0, &AaConfig::new(0), 0.0, 200).unwrap();
    for (s, t) in a.trace.iter().zip(&b.trace) {
        assert!((s.objective - t.objective).abs() <= 1e-12 * t.objective.abs());
    }
}

#[test]
fn bpg_step_always_passes_its_own_descent_check() {
    // Polynomial kernel with alpha = 1 is 1-strongly convex, so with
    // gamma = 1 / L the Bregman model dominates the Euclidean upper bound.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.transpose() * g;
    let b = DVector::from_fn(6, |_, _| rng.gen_range(-1.0..1.0));
    let f: Arc<dyn SmoothLoss> = Arc::new(QuadraticLoss::new(q, b).unwrap());
    let kernel = Kernel::Polynomial { alpha: 1.0 };
    let p = BregmanProblem::with_default_step(Arc::clone(&f), Regularizer::Zero, kernel).unwrap();
    for _ in 0..100 {
        let x = DVector::from_fn(6, |_, _| rng.gen_range(-2.0..2.0));
        let (_, x_bpg) = bpg_step(&p, &x).unwrap();
        let f_k = f.value(&x).unwrap();
        let grad = f.gradient(&x).unwrap();
        let f_test = f.value(&x_bpg).unwrap();
        assert!(bregman_descent_check(f_test, f_k, &grad, &x_bpg, &x, p.gamma(), &kernel).unwrap());
    }
    let (f, _) = nnls(11, 20, 8);
    let p = BregmanProblem::with_default_step(Arc::clone(&f), Regularizer::Zero, Kernel::Energy)
        .unwrap();
    for _ in 0..100 {
        let x = DVector::from_fn(8, |_, _| rng.gen_range(-2.0..2.0));
        let (_, x_bpg) = bpg_step(&p, &x).unwrap();
        let ok = bregman_descent_check(
            f.value(&x_bpg).unwrap(),
            f.value(&x).unwrap(),
            &f.gradient(&x).unwrap(),
            &x_bpg,
            &x,
            p.gamma(),
            &Kernel::Energy,
        )
        .unwrap();
        assert!(ok);
    }
}

#[test]
fn iterates_stay_in_the_kernel_domain() {
    let p = kl_problem(12, 40, 20, Regularizer::L1 { lambda: 0.001 });
    let x0 = DVector::from_element(20, 1.0);
    let mut seen = 0;
    let mut observer = |e: &GuardEvent<'_>| {
        seen += 1;
        if e.accepted {
            assert!(e.input.x_test.iter().all(|&v| v > 0.0));
        }
    };
    let r = run_guarded_aa_bpg_from_primal_observed(
        &p,
        &x0,
        &AaConfig::new(5),
        0.0,
        300,
        &mut observer,
    )
    .unwrap();
    assert!(seen > 0);
    assert!(r.x.iter().all(|&v| v > 0.0));
}

#[test]
fn burg_kernel_cannot_be_accelerated() {
    let (f, _) = nnls(13, 10, 4);
    let p = BregmanProblem::with_default_step(f, Regularizer::Zero, Kernel::Burg).unwrap();
    let x0 = DVector::from_element(4, 1.0);
    assert!(run_guarded_aa_bpg_from_primal(&p, &x0, &AaConfig::new(3), 0.0, 10).is_err());
}

#[test]
fn kl_regression_acceleration_halves_iterations() {
    let p = kl_problem(42, 100, 50, Regularizer::Zero);
    let x0 = DVector::from_element(50, 1.0);
    let aa = run_guarded_aa_bpg_from_primal(&p, &x0, &AaConfig::new(5), 0.0, 12_000).unwrap();
    let bpg = run_bpg(&p, &x0, 0.0, 24_000).unwrap();
    let f_star = aa
        .trace
        .iter()
        .chain(&bpg.trace)
        .map(|t| t.objective)
        .fold(f64::INFINITY, f64::min);
    let reach = |r: &aaprox::SolveReport| {
        r.trace
            .iter()
            .position(|t| t.objective - f_star <= 1e-8)
            .map(|i| i + 1)
    };
    let k_aa = reach(&aa).expect("accelerated run reaches 1e-8");
    let k_bpg = reach(&bpg).unwrap_or(usize::MAX);
    assert!(2 * k_aa <= k_bpg, "{k_aa} vs {k_bpg}");
}
