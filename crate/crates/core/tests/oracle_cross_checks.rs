//! The exact oracle against independent computations: power iteration,
//! truncated series, finite differences and enumeration or sampling of
//! observations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saclab_core::diagnostics::{semigradient_terms, Observation};
use saclab_core::mdp::{generate_ergodic_garnet, induced_chain};
use saclab_core::nalgebra::{DMatrix, DVector};
use saclab_core::oracle::{self, average_reward_at, exact_policy_gradient};
use saclab_core::policy::inverse_cdf;
use saclab_core::{FeatureMap, FiniteMdp, GarnetSpec, OracleBundle, PolicyParams, SoftmaxPolicy};

fn garnet(n: usize, na: usize, branching: usize, seed: u64) -> FiniteMdp {
    generate_ergodic_garnet(&GarnetSpec::new(n, na, branching), seed, 100).unwrap().0
}

fn random_theta(rng: &mut ChaCha8Rng, dim: usize) -> PolicyParams {
    PolicyParams::new((0..dim).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect()).unwrap()
}

fn transition_matrix(mdp: &FiniteMdp, theta: &PolicyParams) -> (DMatrix<f64>, DVector<f64>) {
    let n = mdp.n_states();
    let policy = SoftmaxPolicy::new(n, mdp.n_actions()).unwrap();
    let chain = induced_chain(mdp, &policy, theta).unwrap();
    (
        DMatrix::from_row_slice(n, n, chain.p_theta()),
        DVector::from_column_slice(chain.r_theta()),
    )
}

#[test]
fn stationary_distribution_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..5 {
        let mdp = garnet(6, 3, 2, 100 + seed);
        let theta = random_theta(&mut rng, 18);
        let (p, _) = transition_matrix(&mdp, &theta);
        // The lazy chain has the same stationary law and is aperiodic.
        let lazy = (&p + DMatrix::identity(6, 6)) * 0.5;
        let mut mu = DVector::from_element(6, 1.0 / 6.0);
        for _ in 0..20_000 {
            mu = lazy.transpose() * mu;
        }
        let chain = induced_chain(&mdp, &SoftmaxPolicy::new(6, 3).unwrap(), &theta).unwrap();
        let exact = oracle::stationary_distribution(&chain).unwrap();
        assert!((&mu - &exact).amax() < 1e-12, "seed {seed}: {mu} vs {exact}");
    }
}

#[test]
fn differential_values_match_truncated_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..5 {
        let mdp = garnet(5, 3, 3, 200 + seed);
        let theta = random_theta(&mut rng, 15);
        let (p, r) = transition_matrix(&mdp, &theta);
        let bundle = OracleBundle::compute(&mdp, &FeatureMap::centered_onehot(5).unwrap(), &theta).unwrap();
        // V = Σ_k (P^k r − J), then shifted so that μᵀV = 0.
        let mut term = r.clone();
        let mut series = DVector::zeros(5);
        for _ in 0..1000 {
            series += term.add_scalar(-bundle.j);
            term = &p * term;
        }
        let series = series.add_scalar(-bundle.mu.dot(&series));
        assert!((&series - &bundle.v).amax() < 1e-6, "seed {seed}");
    }
}

#[test]
fn exact_gradient_matches_finite_differences() {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..5 {
        let mdp = garnet(4 + seed as usize, 3, 2, 300 + seed);
        let dim = mdp.n_states() * 3;
        for _ in 0..10 {
            let theta = random_theta(&mut rng, dim);
            let exact = exact_policy_gradient(&mdp, &theta).unwrap();
            let mut fd = DVector::zeros(dim);
            for k in 0..dim {
                let mut up = theta.as_slice().to_vec();
                let mut down = up.clone();
                up[k] += h;
                down[k] -= h;
                fd[k] = (average_reward_at(&mdp, &PolicyParams::new(up).unwrap()).unwrap()
                    - average_reward_at(&mdp, &PolicyParams::new(down).unwrap()).unwrap())
                    / (2.0 * h);
            }
            let rel = (&exact - &fd).norm() / exact.norm();
            assert!(rel < 1e-6, "seed {seed}: relative error {rel:e}");
        }
    }
}

#[test]
fn policy_average_of_q_is_v() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for seed in 0..5 {
        let mdp = garnet(7, 4, 3, 400 + seed);
        let theta = random_theta(&mut rng, 28);
        let b = OracleBundle::compute(&mdp, &FeatureMap::centered_onehot(7).unwrap(), &theta).unwrap();
        let policy = SoftmaxPolicy::new(7, 4).unwrap();
        for s in 0..7 {
            let probs = policy.action_probs(&theta, s).unwrap();
            let avg: f64 = (0..4).map(|a| probs[a] * b.q[(s, a)]).sum();
            assert!((avg - b.v[s]).abs() < 1e-10);
        }
    }
}

#[test]
fn expected_semigradient_is_gbar() {
    let mdp = garnet(5, 3, 3, 500);
    let map = FeatureMap::random_bounded(5, 3, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let theta = random_theta(&mut rng, 15);
    let bundle = OracleBundle::compute(&mdp, &map, &theta).unwrap();
    let omega = [0.3, -0.7, 0.2];
    let policy = SoftmaxPolicy::new(5, 3).unwrap();

    // Exact enumeration over (s, a, s′).
    let mut enumerated = DVector::zeros(3);
    for s in 0..5 {
        let probs = policy.action_probs(&theta, s).unwrap();
        for (a, pa) in probs.iter().enumerate() {
            for (s_next, ps) in mdp.transition_row(s, a).iter().enumerate() {
                let obs = Observation { s, a, s_next };
                let t = semigradient_terms(&mdp, &map, obs, 0.0, &omega, &bundle).unwrap();
                enumerated += t.g * (bundle.mu[s] * pa * ps);
            }
        }
    }
    let gbar = semigradient_terms(&mdp, &map, Observation { s: 0, a: 0, s_next: 0 }, 0.0, &omega, &bundle)
        .unwrap()
        .gbar;
    assert!((&enumerated - &gbar).amax() < 1e-12);

    // Monte Carlo with stationary draws: every coordinate within 4 standard
    // errors.
    let n = 200_000;
    let mut sum = DVector::zeros(3);
    let mut sum_sq = DVector::zeros(3);
    let mu: Vec<f64> = bundle.mu.iter().copied().collect();
    for _ in 0..n {
        let s = inverse_cdf(&mu, rng.random());
        let a = inverse_cdf(&policy.action_probs(&theta, s).unwrap(), rng.random());
        let s_next = inverse_cdf(mdp.transition_row(s, a), rng.random());
        let g = semigradient_terms(&mdp, &map, Observation { s, a, s_next }, 0.0, &omega, &bundle)
            .unwrap()
            .g;
        sum_sq += g.component_mul(&g);
        sum += g;
    }
    for k in 0..3 {
        let mean = sum[k] / n as f64;
        let se = ((sum_sq[k] / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - gbar[k]).abs() <= 4.0 * se, "coordinate {k}: {mean} vs {}", gbar[k]);
    }
}
