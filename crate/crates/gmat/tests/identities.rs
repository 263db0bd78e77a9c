//! Cross-module identity checks: the exact log-det mutual information, the
//! characteristic-polynomial closed form, the Rayleigh-quotient form, and
//! the interference-channel duality must all agree on the same instances.

use gmat::channel::{csit_at, sample_episode, ChannelEpisode, FadingConfig};
use gmat::metrics::{
    mutual_information_2user_closed, mutual_information_exact, sum_mi_rayleigh_form,
};
use gmat::precoders::ic_dual_matrices;
use gmat::protocol::{
    assemble_effective_channel, make_lifting_constants, make_schedule, PrecoderSet, Schedule,
};
use gmat::{CMat, CVec, C64};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const LN_2: f64 = std::f64::consts::LN_2;

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
    .normalize()
}

fn two_user_episode(seed: u64) -> (Schedule, ChannelEpisode) {
    let schedule = make_schedule(2).unwrap();
    let cfg = FadingConfig {
        users: 2,
        tau_t: 0.0,
        tau_r: 0.0,
        seed,
    };
    let ep = sample_episode(&cfg, &schedule).unwrap();
    (schedule, ep)
}

fn exact_sum_mi(
    schedule: &Schedule,
    episode: &ChannelEpisode,
    w1: &CVec,
    w2: &CVec,
    rho: f64,
) -> f64 {
    let mut set = PrecoderSet::zeros(2, 1);
    set.set(0, 0, 1, w1.clone());
    set.set(0, 1, 0, w2.clone());
    let constants = make_lifting_constants(schedule, episode).unwrap();
    let mut chans: Vec<CMat> = Vec::new();
    for receiver in 0..2 {
        for owner in 0..2 {
            let h = assemble_effective_channel(
                schedule, receiver, owner, 0, episode, &set, &constants, false,
            )
            .unwrap();
            chans.push(h.into_matrix());
        }
    }
    mutual_information_exact(&chans[0], &[&chans[1]], rho).unwrap()
        + mutual_information_exact(&chans[3], &[&chans[2]], rho).unwrap()
}

#[test]
fn mi_identity_chain_across_snr() {
    // Exact log-det, theta/delta closed form and Rayleigh-quotient form
    // agree to 1e-9 relative over random instances and four SNR decades.
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..100 {
        let (schedule, ep) = two_user_episode(3000 + seed);
        let w1 = random_unit(&mut rng, 2);
        let w2 = random_unit(&mut rng, 2);
        for &rho in &[0.1, 1.0, 10.0, 1000.0] {
            let exact = exact_sum_mi(&schedule, &ep, &w1, &w2, rho);
            let (ia, ib) = mutual_information_2user_closed(&w1, &w2, &ep, rho).unwrap();
            let rayleigh = sum_mi_rayleigh_form(&w1, &w2, &ep, rho).unwrap();
            let scale = exact.abs().max(1.0);
            assert!(
                (exact - (ia + ib)).abs() <= 1e-9 * scale,
                "closed form off at seed {seed}, rho {rho}"
            );
            assert!(
                (exact - rayleigh).abs() <= 1e-9 * scale,
                "rayleigh form off at seed {seed}, rho {rho}"
            );
        }
    }
}

#[test]
fn ic_duality_matches_exact_sum_mi() {
    // log(1 + SINR_1) + log(1 + SINR_2) + log C from the dual interference
    // channel equals the exact sum mutual information, for arbitrary
    // (non-unit) precoders.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..100 {
        let (schedule, ep) = two_user_episode(4000 + seed);
        let scale1 = 0.25 + 2.0 * rng.random::<f64>();
        let scale2 = 0.25 + 2.0 * rng.random::<f64>();
        let w1 = random_unit(&mut rng, 2).map(|z| z * C64::from(scale1));
        let w2 = random_unit(&mut rng, 2).map(|z| z * C64::from(scale2));
        let rho = 10.0;
        let exact = exact_sum_mi(&schedule, &ep, &w1, &w2, rho);
        let dual = ic_dual_matrices(&ep, &w1, &w2, rho).unwrap();
        let dual_sum = dual.sum_log_terms(&w1, &w2) / LN_2;
        assert!(
            (exact - dual_sum).abs() <= 1e-9 * exact.abs().max(1.0),
            "seed {seed}: exact {exact} vs dual {dual_sum}"
        );
    }
}

#[test]
fn csit_discipline_precoders_depend_only_on_phase_one() {
    // Functional form of the delayed-CSIT rule: replacing all slots from
    // phase 2 onward with fresh draws leaves every precoder family's output
    // bit-identical, for K = 2 and K = 3.
    use gmat::precoders::{
        gmat_dsinr_precoder, gmat_mmse_optimize, ic_dual_from_view, mat_precoder, mrt_zf_precoders,
        MmseOptConfig,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for &users in &[2usize, 3] {
        let schedule = make_schedule(users).unwrap();
        let cfg = FadingConfig {
            users,
            tau_t: 0.3,
            tau_r: 0.1,
            seed: 55,
        };
        let ep = sample_episode(&cfg, &schedule).unwrap();
        let mut slots: Vec<CMat> = (0..ep.total_slots()).map(|t| ep.slot(t).clone()).collect();
        for slot in slots.iter_mut().skip(schedule.phase_start(2)) {
            *slot = CMat::from_fn(users, users, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
        }
        let altered = ChannelEpisode::from_slots(users, slots).unwrap();

        let va = csit_at(&ep, schedule.phase_start(2)).unwrap();
        let vb = csit_at(&altered, schedule.phase_start(2)).unwrap();

        assert_eq!(mat_precoder(&va, &schedule), mat_precoder(&vb, &schedule));

        let rho = 10.0;
        let da = gmat_dsinr_precoder(&va, &schedule, rho).unwrap();
        let db = gmat_dsinr_precoder(&vb, &schedule, rho).unwrap();
        assert_eq!(da.precoders, db.precoders);

        let mut opt = MmseOptConfig::new(rho);
        opt.max_iters = 25;
        let ma = gmat_mmse_optimize(&va, &schedule, &opt).unwrap();
        let mb = gmat_mmse_optimize(&vb, &schedule, &opt).unwrap();
        assert_eq!(ma, mb);

        if users == 2 {
            let ia = mrt_zf_precoders(&ic_dual_from_view(&va, rho).unwrap()).unwrap();
            let ib = mrt_zf_precoders(&ic_dual_from_view(&vb, rho).unwrap()).unwrap();
            assert_eq!(ia.mrt, ib.mrt);
            assert_eq!(ia.zf, ib.zf);
        }
    }
}
