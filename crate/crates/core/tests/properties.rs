use mmuav_core::array_channel::{
    coherence_time_s, doppler_spread_hz, steering_vector, synth_channel, ArrayGeometry, MobilityParams, Mpc,
};
use mmuav_core::codebook::{CodebookKind, HierCodebook};
use mmuav_core::sdma::{group_users, grid_los_channel, steering_codeword, UserLink};
use mmuav_core::Complex64;
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -1.0f64..1.0
}

fn mpc() -> impl Strategy<Value = Mpc> {
    (-2.0f64..2.0, -2.0f64..2.0, angle(), angle())
        .prop_map(|(re, im, a, b)| Mpc::new(Complex64::new(re, im), a, b).unwrap())
}

proptest! {
    #[test]
    fn steering_has_unit_norm(n in 1usize..128, omega in angle()) {
        let v = steering_vector(&ArrayGeometry::ula(n).unwrap(), omega).unwrap();
        prop_assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_is_linear_in_paths(a in prop::collection::vec(mpc(), 1..4), b in prop::collection::vec(mpc(), 1..4)) {
        let bs = ArrayGeometry::ula(8).unwrap();
        let ms = ArrayGeometry::ula(4).unwrap();
        let ha = synth_channel(&bs, &ms, &a).unwrap().h;
        let hb = synth_channel(&bs, &ms, &b).unwrap().h;
        let all: Vec<Mpc> = a.iter().chain(&b).copied().collect();
        let hab = synth_channel(&bs, &ms, &all).unwrap().h;
        prop_assert!((hab - ha - hb).norm() < 1e-10);
    }

    #[test]
    fn channel_rank_at_most_paths(paths in prop::collection::vec(mpc(), 1..4)) {
        let g = ArrayGeometry::ula(16).unwrap();
        let h = synth_channel(&g, &g, &paths).unwrap().h;
        let sv = h.singular_values();
        let top = sv.max();
        let significant = sv.iter().filter(|&&s| s > 1e-9 * top.max(1e-300)).count();
        prop_assert!(significant <= paths.len());
    }

    #[test]
    fn coherence_times_doppler_is_one(v in 0.1f64..100.0, lambda in 1e-3f64..1.0, theta in 0.0f64..1.5) {
        let m = MobilityParams::new(v, lambda, theta).unwrap();
        prop_assert!((coherence_time_s(&m) * doppler_spread_hz(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn codebook_json_round_trip(exp in 0u32..6, bmw in any::<bool>()) {
        let n = 2usize.pow(exp);
        let kind = if bmw { CodebookKind::BmwSs } else { CodebookKind::Deact };
        let cb = kind.build(n, 2).unwrap();
        let back = HierCodebook::from_json(&cb.to_json()).unwrap();
        prop_assert_eq!(back, cb);
    }

    #[test]
    fn schedule_is_a_valid_partition(groups in prop::collection::vec(0usize..6, 0..20)) {
        let g = ArrayGeometry::ula(2).unwrap();
        let ch = grid_los_channel(&g, &g, 0, 0, Complex64::new(1.0, 0.0)).unwrap();
        let cw = steering_codeword(&g, 0.0).unwrap();
        let links: Vec<UserLink> = groups
            .iter()
            .enumerate()
            .map(|(id, &group_index)| UserLink {
                user_id: id,
                channel: ch.clone(),
                tx_codeword: cw.clone(),
                rx_codeword: cw.clone(),
                group_index,
            })
            .collect();
        let slots = group_users(&links);
        let mut seen: Vec<usize> = slots.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..groups.len()).collect::<Vec<_>>());
        for slot in &slots {
            for (i, &a) in slot.iter().enumerate() {
                for &b in &slot[..i] {
                    prop_assert_ne!(groups[a], groups[b]);
                }
            }
        }
        // a slot count equal to the most crowded group is optimal for first-fit here
        let max_group = (0..6).map(|g| groups.iter().filter(|&&x| x == g).count()).max().unwrap_or(0);
        prop_assert_eq!(slots.len(), max_group);
    }
}
